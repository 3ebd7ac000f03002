#pragma once

// Limit objects: Poisson point processes with power-law intensity, stable
// subordinators, and the random laws G(zeta) and F(h) built from them.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <vector>

#include "rwsre/errors.hpp"
#include "rwsre/random.hpp"
#include "rwsre/theta.hpp"

namespace rwsre {

/// Finite point measure; atoms carry a size and optionally a time.
struct PointMeasure {
  struct Atom {
    double x = 0.0;
    std::optional<double> t;
    bool operator==(const Atom&) const = default;
  };
  std::vector<Atom> atoms;
  double cutoff = 0.0;
  /// Mass of sum x^2 over the omitted points below the cutoff (expected value).
  double omitted_x2 = 0.0;
  /// False stands for a measure without finite sum x^2 (G is then delta_0).
  bool square_summable = true;

  [[nodiscard]] std::size_t size() const noexcept { return atoms.size(); }
  [[nodiscard]] bool empty() const noexcept { return atoms.empty(); }
  [[nodiscard]] double sum_x2() const noexcept {
    double s = 0.0;
    for (const auto& a : atoms) s += a.x * a.x;
    return s;
  }
};

/// Points of a Poisson process on (0, inf) whose mean number above x is
/// c x^{-q}, down to size eps, in decreasing order.
inline PointMeasure sample_poisson_pp(double c, double q, double eps, Stream& rng) {
  if (!(c > 0.0) || !(q > 0.0) || !(eps > 0.0)) {
    throw ValidationError("sample_poisson_pp needs c > 0, q > 0, eps > 0");
  }
  PointMeasure m;
  m.cutoff = eps;
  double gamma = 0.0;
  for (;;) {
    gamma += rng.exponential();
    const double x = std::pow(gamma / c, -1.0 / q);
    if (x <= eps) break;
    m.atoms.push_back({x, std::nullopt});
  }
  // int_0^eps x^2 c q x^{-q-1} dx
  m.omitted_x2 = q < 2.0 ? c * q * std::pow(eps, 2.0 - q) / (2.0 - q)
                         : std::numeric_limits<double>::infinity();
  return m;
}

/// Sum of w_i (2 theta_i - 1) with the small weights replaced by a Gaussian
/// of the same variance. Weights below `keep` contribute only through their
/// total variance (2/3) sum w^2, plus any `extra_var`.
class ThetaSum {
 public:
  ThetaSum() = default;
  ThetaSum(const std::vector<double>& weights, double keep, double extra_var = 0.0) {
    double small = 0.0;
    for (double w : weights) {
      if (std::abs(w) >= keep) {
        big_.push_back(w);
      } else {
        small += w * w;
      }
    }
    small_sd_ = std::sqrt((2.0 / 3.0) * small + extra_var);
  }

  double operator()(Stream& rng, const ThetaSampler& theta = {}) const {
    double s = 0.0;
    for (double w : big_) s += w * (2.0 * theta(rng) - 1.0);
    if (small_sd_ > 0.0) s += small_sd_ * standard_normal(rng);
    return s;
  }

  [[nodiscard]] std::size_t explicit_terms() const noexcept { return big_.size(); }
  [[nodiscard]] double compensated_sd() const noexcept { return small_sd_; }
  [[nodiscard]] double variance() const noexcept {
    double v = small_sd_ * small_sd_;
    for (double w : big_) v += (2.0 / 3.0) * w * w;
    return v;
  }

  /// Box-Muller with a fixed consumption of two uniforms.
  static double standard_normal(Stream& rng) {
    const double u1 = rng.uniform_pos();
    const double u2 = rng.uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::vector<double> big_;
  double small_sd_ = 0.0;
};

/// One draw from G(zeta): sum_i x_i (2 theta_i - 1), or 0 when zeta is not
/// square summable.
inline double sample_G(const PointMeasure& zeta, Stream& rng, const ThetaSampler& theta = {}) {
  if (!zeta.square_summable) return 0.0;
  double s = 0.0;
  for (const auto& a : zeta.atoms) s += a.x * (2.0 * theta(rng) - 1.0);
  return s;
}

/// Nondecreasing pure-jump path h(t) = drift t + sum_{t_k <= t} x_k on [0, T].
struct CadlagPath {
  struct Jump {
    double t = 0.0;
    double x = 0.0;
  };
  std::vector<Jump> jumps;  // sorted by time
  double horizon = 1.0;
  /// Linear part standing in for the omitted small jumps (0 for exact paths).
  double drift = 0.0;
  /// Standard deviation of the omitted small-jump sum at the horizon.
  double omitted_sd = 0.0;

  [[nodiscard]] double value(double t) const noexcept {
    double s = drift * std::min(t, horizon);
    for (const auto& j : jumps) {
      if (j.t > t) break;
      s += j.x;
    }
    return s;
  }
  [[nodiscard]] double terminal() const noexcept { return value(horizon); }
};

/// beta-stable subordinator with Levy measure nu(x, inf) = x^{-beta} on
/// [0, T]: jumps (T u_i, (Gamma_i / T)^{-1/beta}) above eps. With
/// `compensate`, the omitted jumps are replaced by their mean rate
/// beta/(1-beta) eps^{1-beta}.
inline CadlagPath sample_subordinator(double beta, double horizon, double eps, Stream& rng,
                                      bool compensate = true) {
  if (!(beta > 0.0 && beta < 1.0)) throw ValidationError("subordinator needs beta in (0,1)");
  if (!(horizon > 0.0) || !(eps > 0.0)) {
    throw ValidationError("subordinator needs horizon > 0 and eps > 0");
  }
  CadlagPath p;
  p.horizon = horizon;
  double gamma = 0.0;
  for (;;) {
    gamma += rng.exponential();
    const double x = std::pow(gamma / horizon, -1.0 / beta);
    if (x <= eps) break;
    p.jumps.push_back({horizon * rng.uniform(), x});
  }
  std::sort(p.jumps.begin(), p.jumps.end(),
            [](const auto& a, const auto& b) { return a.t < b.t; });
  const double mean_small = beta / (1.0 - beta) * std::pow(eps, 1.0 - beta);
  const double var_small = beta / (2.0 - beta) * std::pow(eps, 2.0 - beta);
  if (compensate) {
    p.drift = mean_small;
    p.omitted_sd = std::sqrt(horizon * var_small);
  } else {
    p.omitted_sd = horizon * mean_small;  // bias bound
  }
  return p;
}

/// Subordinator path extended in independent pieces of length `horizon`
/// until it exceeds `level`.
inline CadlagPath sample_subordinator_covering(double beta, double level, double eps,
                                               Stream& rng, double horizon = 1.0,
                                               bool compensate = true) {
  CadlagPath p = sample_subordinator(beta, horizon, eps, rng, compensate);
  while (p.terminal() <= level) {
    const CadlagPath ext = sample_subordinator(beta, horizon, eps, rng, compensate);
    for (const auto& j : ext.jumps) p.jumps.push_back({p.horizon + j.t, j.x});
    p.horizon += horizon;
    p.omitted_sd = compensate ? std::sqrt(p.omitted_sd * p.omitted_sd +
                                          ext.omitted_sd * ext.omitted_sd)
                              : p.omitted_sd + ext.omitted_sd;
  }
  return p;
}

/// sup{h(t) : h(t) <= 1}.
inline double upsilon(const CadlagPath& path) {
  double cum = 0.0;
  for (const auto& j : path.jumps) {
    const double before = cum + path.drift * j.t;
    if (before > 1.0) return 1.0;  // crossed 1 continuously through the drift
    if (before + j.x > 1.0) return before;
    cum += j.x;
  }
  return std::min(1.0, path.terminal());
}

/// Atoms (x_k, t_k) of the path's jumps.
inline PointMeasure jump_measure(const CadlagPath& path) {
  PointMeasure m;
  m.atoms.reserve(path.jumps.size());
  for (const auto& j : path.jumps) m.atoms.push_back({j.x, j.t});
  return m;
}

/// Weights of F(h): (1 - Upsilon)^2 first, then x_k^2 for jumps with h(t_k) <= 1.
inline std::vector<double> f_weights(const CadlagPath& path, bool final_block = true) {
  std::vector<double> w;
  const double u = upsilon(path);
  if (final_block) w.push_back((1.0 - u) * (1.0 - u));
  double cum = 0.0;
  for (const auto& j : path.jumps) {
    cum += j.x;
    if (cum + path.drift * j.t > 1.0) break;
    w.push_back(j.x * j.x);
  }
  return w;
}

/// One draw from F(h): (1 - Upsilon)^2 (2 theta_0 - 1) + sum_{h(t_k) <= 1} x_k^2 (2 theta_k - 1).
inline double sample_F(const CadlagPath& path, Stream& rng, const ThetaSampler& theta = {}) {
  double s = 0.0;
  for (double w : f_weights(path)) s += w * (2.0 * theta(rng) - 1.0);
  return s;
}

struct HittingTime {
  double time = 0.0;
  bool exceeded = true;  // false: the level was not exceeded before the horizon
};

/// inf{s : h(s) > level}.
inline HittingTime inverse_subordinator_time(const CadlagPath& path, double level) {
  double cum = 0.0;
  double prev_t = 0.0;
  for (const auto& j : path.jumps) {
    if (path.drift > 0.0 && cum + path.drift * j.t > level) {
      return {std::max(prev_t, (level - cum) / path.drift), true};
    }
    cum += j.x;
    if (cum + path.drift * j.t > level) return {j.t, true};
    prev_t = j.t;
  }
  if (path.drift > 0.0 && cum + path.drift * path.horizon > level) {
    return {std::max(prev_t, (level - cum) / path.drift), true};
  }
  return {path.horizon, false};
}

/// Mean number of points above x is c x^{-q}: the two moderate/critical limits.
struct PoissonIntensity {
  double c = 1.0;
  double q = 1.0;
};

}  // namespace rwsre
