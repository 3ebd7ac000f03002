#pragma once

// Simulation of first-passage times in a frozen environment.
//
// Three tiers:
//   direct   step-by-step walk
//   block    crossing by crossing: the right part is a reflected passage
//            time, the left part is a compound sum of simulated excursions
//   reduced  sum_k xi_k^2 (2 theta_k - 1), a surrogate for T_n - E T_n

#include <cstdint>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "rwsre/env.hpp"
#include "rwsre/errors.hpp"
#include "rwsre/parallel.hpp"
#include "rwsre/quenched.hpp"
#include "rwsre/random.hpp"
#include "rwsre/reflected.hpp"
#include "rwsre/stats.hpp"
#include "rwsre/theta.hpp"

namespace rwsre {

enum class Tier { direct, block, reduced };

inline std::string_view to_string(Tier t) {
  switch (t) {
    case Tier::direct: return "direct";
    case Tier::block: return "block";
    case Tier::reduced: return "reduced";
  }
  return "?";
}

inline Tier tier_from_string(std::string_view s) {
  if (s == "direct") return Tier::direct;
  if (s == "block") return Tier::block;
  if (s == "reduced") return Tier::reduced;
  throw ValidationError("unknown tier '" + std::string(s) + "' (direct|block|reduced)");
}

struct CrossingSample {
  std::int64_t k = 0;
  std::uint64_t t_left = 0;
  std::uint64_t t_right = 0;
  Tier tier = Tier::direct;
  [[nodiscard]] std::uint64_t total() const noexcept { return t_left + t_right; }
};

struct PassageRecord {
  std::int64_t target = 0;
  std::uint64_t T = 0;    // exact passage time (direct and block tiers)
  double centered = 0.0;  // T - E T (all tiers; the reduced tier only has this)
  std::int64_t nu = 0;
  std::int64_t S_last = 0;
  Tier tier = Tier::direct;
  SeedMeta seed;
};

namespace detail {

/// Walks from x0 until the first visit to target > x0 and returns the number
/// of steps. visit(pre, steps, post) sees every single step or 64-step chunk.
template <class Visit>
std::uint64_t run_until(const Environment& env, std::int64_t x0, std::int64_t target,
                        Stream& rng, Visit&& visit) {
  if (target >= env.right_boundary()) {
    throw ValidationError("target " + std::to_string(target) +
                          " beyond the generated right extent");
  }
  std::int64_t x = x0;
  std::int64_t idx = env.index_at_or_below(x);
  std::int64_t lo = env.S(idx);
  std::int64_t hi = env.S(idx + 1);
  std::uint64_t t = 0;
  while (x != target) {
    const std::int64_t pre = x;
    std::uint64_t steps = 1;
    if (x == lo) {
      x += rng.bernoulli(env.lambda(idx)) ? 1 : -1;
    } else if (x - lo >= 64 && hi - x >= 64 && target - x >= 64) {
      x += rng.steps64();
      steps = 64;
    } else {
      x += rng.bit() ? 1 : -1;
    }
    t += steps;
    visit(pre, steps, x);
    if (x < lo) {
      if (idx == env.min_index()) {
        throw WindowExhausted("walk left the generated window at S_" +
                              std::to_string(idx) + "; enlarge the left extent");
      }
      --idx;
      hi = lo;
      lo = env.S(idx);
    } else if (x == hi) {
      ++idx;
      lo = hi;
      hi = env.S(idx + 1);
    }
  }
  return t;
}

struct NoVisit {
  void operator()(std::int64_t, std::uint64_t, std::int64_t) const noexcept {}
};

inline void check_parity(std::uint64_t T, std::int64_t displacement) {
  if ((T - static_cast<std::uint64_t>(displacement)) % 2 != 0) {
    throw std::logic_error("passage time parity violated");
  }
}

/// Total length of the left excursions made from S_j during `visits`
/// visits to S_j, each followed by one step to the right.
inline std::uint64_t left_part(const Environment& env, std::int64_t j, std::uint64_t visits,
                               Stream& rng) {
  const double lam = env.lambda(j);
  const std::int64_t s = env.S(j);
  std::uint64_t t = 0;
  for (std::uint64_t v = 0; v < visits; ++v) {
    const std::uint64_t n_exc = rng.geometric_failures(lam);
    for (std::uint64_t e = 0; e < n_exc; ++e) {
      t += 1 + run_until(env, s - 1, s, rng, NoVisit{});
    }
  }
  return t;
}

}  // namespace detail

/// Step-by-step passage from 0 to n.
inline PassageRecord direct_passage(const Environment& env, std::int64_t n, Stream& rng) {
  PassageRecord r;
  r.target = n;
  r.tier = Tier::direct;
  r.nu = env.nu(n);
  r.S_last = env.S(r.nu - 1);
  r.T = n == 0 ? 0 : detail::run_until(env, 0, n, rng, detail::NoVisit{});
  detail::check_parity(r.T, n);
  return r;
}

/// Direct crossing from S_{k-1} to S_k with bookkeeping relative to a lower
/// barrier index p < k-1 (ignored when p is not given).
struct CrossingDetail {
  CrossingSample sample;
  std::uint64_t barrier_arrivals = 0;  // arrivals at S_p from the right
  std::uint64_t time_below = 0;        // time spent left of S_p
};

inline CrossingDetail direct_crossing_detail(const Environment& env, std::int64_t k,
                                             Stream& rng,
                                             std::optional<std::int64_t> p = std::nullopt) {
  const std::int64_t s0 = env.S(k - 1);
  const std::int64_t sp = p ? env.S(*p) : std::numeric_limits<std::int64_t>::min();
  CrossingDetail d;
  d.sample.k = k;
  d.sample.tier = Tier::direct;
  // A step belongs to the left part when it starts left of S_{k-1}, or at
  // S_{k-1} heading left. The same convention defines the time left of S_p.
  detail::run_until(env, s0, env.S(k), rng,
                    [&](std::int64_t pre, std::uint64_t steps, std::int64_t post) {
                      if (pre < s0 || (pre == s0 && post < pre)) {
                        d.sample.t_left += steps;
                      } else {
                        d.sample.t_right += steps;
                      }
                      if (p) {
                        if (pre < sp || (pre == sp && post < pre)) d.time_below += steps;
                        if (post == sp && pre > sp) ++d.barrier_arrivals;
                      }
                    });
  return d;
}

inline CrossingSample direct_crossing(const Environment& env, std::int64_t k, Stream& rng) {
  return direct_crossing_detail(env, k, rng).sample;
}

/// Crossing k from the excursion decomposition. The right part and the
/// number of returns to S_{k-1} come from one reflected walk, so their joint
/// law is exact.
inline CrossingSample block_crossing(const Environment& env, std::int64_t k, Stream& rng) {
  CrossingSample c;
  c.k = k;
  c.tier = Tier::block;
  const auto r = sample_reflected_passage_detail(env.xi(k), rng);
  c.t_right = r.time;
  c.t_left = detail::left_part(env, k - 1, 1 + r.zero_returns, rng);
  return c;
}

/// Passage from 0 to n assembled from block crossings and a final partial
/// block from S_{nu-1} to n.
inline PassageRecord block_passage(const Environment& env, std::int64_t n, Stream& rng) {
  PassageRecord r;
  r.target = n;
  r.tier = Tier::block;
  r.nu = env.nu(n);
  r.S_last = env.S(r.nu - 1);
  std::uint64_t T = 0;
  for (std::int64_t k = 1; k < r.nu; ++k) T += block_crossing(env, k, rng).total();
  const std::int64_t d = n - r.S_last;
  if (d > 0) {
    const auto u = sample_reflected_passage_detail(d, rng);
    T += u.time + detail::left_part(env, r.nu - 1, 1 + u.zero_returns, rng);
  }
  r.T = T;
  detail::check_parity(r.T, n);
  return r;
}

/// Centered surrogate sum_{k<nu} xi_k^2 (2 theta_k - 1) + (n - S_{nu-1})^2 (2 theta_0 - 1).
inline double reduced_passage(const Environment& env, std::int64_t n, Stream& rng,
                              const ThetaSampler& theta = {}) {
  const std::int64_t nu = env.nu(n);
  double sum = 0.0;
  for (std::int64_t k = 1; k < nu; ++k) {
    const double x = static_cast<double>(env.xi(k));
    sum += x * x * (2.0 * theta(rng) - 1.0);
  }
  const double d = static_cast<double>(n - env.S(nu - 1));
  return sum + d * d * (2.0 * theta(rng) - 1.0);
}

/// One passage record at the requested tier, centered by the exact mean.
inline PassageRecord sample_passage(const Environment& env, double mean_T, std::int64_t n,
                                    Tier tier, Stream& rng) {
  PassageRecord r;
  switch (tier) {
    case Tier::direct: r = direct_passage(env, n, rng); break;
    case Tier::block: r = block_passage(env, n, rng); break;
    case Tier::reduced:
      r.target = n;
      r.tier = Tier::reduced;
      r.nu = env.nu(n);
      r.S_last = env.S(r.nu - 1);
      r.centered = reduced_passage(env, n, rng);
      return r;
  }
  r.centered = static_cast<double>(r.T) - mean_T;
  return r;
}

/// Which limit theorem fixes the normalisation of T_n - E T_n.
enum class Regime { moderate, critical, strong };

inline Regime regime_of(const GapLaw& gap) {
  if (gap.beta() > 1.0) return Regime::moderate;
  if (gap.beta() == 1.0) return Regime::critical;
  return Regime::strong;
}

/// a_n^2 (beta > 1), a_{c_n}^2 (beta = 1) or n^2 (beta < 1).
inline double passage_scale(const GapLaw& gap, Regime regime, double n) {
  const ScalingSequences s(gap);
  switch (regime) {
    case Regime::moderate: return s.a(n) * s.a(n);
    case Regime::critical: {
      const double a = s.a(s.c(n));
      return a * a;
    }
    case Regime::strong: return n * n;
  }
  return 1.0;
}

/// Law of (T_n - E T_n) / scale under the frozen environment, from
/// `replicas` independent passages. Replica i uses the substream
/// (master, env_index, i, walk).
inline EmpiricalMeasure quenched_empirical_measure(const Environment& env, const Potentials& pot,
                                                   std::int64_t n, std::size_t replicas,
                                                   Tier tier, double scale,
                                                   std::uint64_t master, std::uint64_t env_index,
                                                   unsigned workers = 1) {
  if (replicas == 0) throw ValidationError("replicas must be >= 1");
  const double mean = tier == Tier::reduced ? 0.0 : mean_passage_time(pot, n);
  std::vector<double> out(replicas);
  parallel_for(replicas, workers, [&](std::size_t i) {
    Stream rng(master, env_index, i, Purpose::walk);
    out[i] = sample_passage(env, mean, n, tier, rng).centered / scale;
  });
  return EmpiricalMeasure(std::move(out));
}

}  // namespace rwsre
