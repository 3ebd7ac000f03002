#pragma once

// Sparse random environments: gap and drift laws, the standing assumptions,
// scaling sequences and frozen environment realizations.
//
// A marked site S_k carries a drift lambda_k (probability of a right step);
// every other integer site is symmetric. Gaps xi_k = S_k - S_{k-1} are i.i.d.
// pareto-ceiling variables independent of the i.i.d. drifts.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rwsre/errors.hpp"
#include "rwsre/numerics.hpp"
#include "rwsre/random.hpp"

namespace rwsre {

/// Gap law xi = ceil(V) with P[V > v] = (v / scale)^{-beta} for v >= scale.
///
/// For scale = 1 this gives P[xi > k] = k^{-beta} at every positive integer.
class GapLaw {
 public:
  static constexpr const char* kKind = "pareto_ceiling";
  /// Largest gap ever produced; reached with probability ~ 2^{-53 beta}.
  static constexpr double kMaxGap = 9007199254740992.0;  // 2^53

  GapLaw() = default;
  GapLaw(double beta, double scale = 1.0) : beta_(beta), scale_(scale) {
    if (!(beta > 0.0 && beta < 4.0)) {
      throw ValidationError("gap_law.beta must lie in (0,4), got " + std::to_string(beta));
    }
    if (!(scale >= 1.0) || !std::isfinite(scale)) {
      throw ValidationError("gap_law.scale must be >= 1, got " + std::to_string(scale));
    }
  }

  [[nodiscard]] double beta() const noexcept { return beta_; }
  [[nodiscard]] double scale() const noexcept { return scale_; }

  /// P[xi > k] for an integer k >= 0.
  [[nodiscard]] double tail(std::int64_t k) const noexcept {
    if (k <= 0) return 1.0;
    return std::min(1.0, std::pow(static_cast<double>(k) / scale_, -beta_));
  }

  /// Continuous interpolation of the tail used to define a_n: (x/scale)^{-beta}.
  [[nodiscard]] double tail_continuous(double x) const noexcept {
    if (x <= scale_) return 1.0;
    return std::pow(x / scale_, -beta_);
  }

  [[nodiscard]] double pmf(std::int64_t k) const noexcept {
    if (k < 1) return 0.0;
    return tail(k - 1) - tail(k);
  }

  std::int64_t sample(Stream& rng) const noexcept {
    const double v = scale_ * std::pow(rng.uniform_pos(), -1.0 / beta_);
    return static_cast<std::int64_t>(std::ceil(std::min(v, kMaxGap)));
  }

  /// E[xi^s] for s > 0; +inf when s >= beta.
  [[nodiscard]] double moment(double s) const {
    if (s <= 0.0) return 1.0;
    if (s >= beta_) return std::numeric_limits<double>::infinity();
    // xi^s = 1 + sum_{k=1}^{xi-1} ((k+1)^s - k^s), so
    // E xi^s = 1 + sum_{k>=1} ((k+1)^s - k^s) P[xi > k].
    const std::int64_t cut = cutoff();
    double sum = 1.0;
    for (std::int64_t k = 1; k < cut; ++k) {
      const double kd = static_cast<double>(k);
      sum += (std::pow(kd + 1.0, s) - std::pow(kd, s)) * tail(k);
    }
    // (k+1)^s - k^s = sum_{j>=1} binom(s,j) k^{s-j}.
    double binom = 1.0;
    double tail_sum = 0.0;
    for (int j = 1; j <= 10; ++j) {
      binom *= (s - (j - 1)) / j;
      tail_sum += binom * numerics::power_sum(beta_ - s + j, static_cast<double>(cut),
                                              std::numeric_limits<double>::infinity());
    }
    return sum + std::pow(scale_, beta_) * tail_sum;
  }

  /// E[log xi].
  [[nodiscard]] double mean_log() const {
    // log xi = sum_{k=1}^{xi-1} log(1 + 1/k).
    const std::int64_t cut = cutoff();
    double sum = 0.0;
    for (std::int64_t k = 1; k < cut; ++k) {
      sum += std::log1p(1.0 / static_cast<double>(k)) * tail(k);
    }
    double tail_sum = 0.0;
    for (int j = 1; j <= 10; ++j) {
      const double c = ((j % 2) ? 1.0 : -1.0) / j;
      tail_sum += c * numerics::power_sum(beta_ + j, static_cast<double>(cut),
                                          std::numeric_limits<double>::infinity());
    }
    return sum + std::pow(scale_, beta_) * tail_sum;
  }

  /// E[xi 1{xi <= x}].
  [[nodiscard]] double truncated_mean(double x) const {
    const auto big_k = static_cast<std::int64_t>(std::floor(x));
    if (big_k < 1) return 0.0;
    // sum_{k=1}^{K} k p_k = sum_{k=0}^{K-1} P[xi > k] - K P[xi > K]
    const auto first_power = static_cast<std::int64_t>(std::floor(scale_)) + 1;
    const double ones = static_cast<double>(std::min(big_k, first_power));
    double sum = ones;
    if (big_k > first_power) {
      sum += std::pow(scale_, beta_) *
             numerics::power_sum(beta_, static_cast<double>(first_power),
                                 static_cast<double>(big_k));
    }
    return sum - static_cast<double>(big_k) * tail(big_k);
  }

  bool operator==(const GapLaw&) const = default;

 private:
  // First index handled by the analytic tail.
  [[nodiscard]] std::int64_t cutoff() const noexcept {
    return std::max<std::int64_t>(4096, static_cast<std::int64_t>(std::ceil(scale_)) + 1);
  }

  double beta_ = 1.0;
  double scale_ = 1.0;
};

struct DriftAtom {
  double lambda = 0.5;
  double p = 1.0;
  bool operator==(const DriftAtom&) const = default;
};

/// Finite discrete law of the drift lambda; rho = (1 - lambda) / lambda.
class DriftLaw {
 public:
  DriftLaw() = default;
  explicit DriftLaw(std::vector<DriftAtom> atoms) : atoms_(std::move(atoms)) {
    if (atoms_.empty()) throw ValidationError("drift_law.atoms must be non-empty");
    double total = 0.0;
    for (std::size_t i = 0; i < atoms_.size(); ++i) {
      const auto& a = atoms_[i];
      if (!(a.lambda > 0.0 && a.lambda < 1.0)) {
        throw ValidationError("drift_law.atoms[" + std::to_string(i) +
                              "].lambda must lie in (0,1)");
      }
      if (!(a.p > 0.0)) {
        throw ValidationError("drift_law.atoms[" + std::to_string(i) + "].p must be > 0");
      }
      total += a.p;
    }
    if (std::abs(total - 1.0) > 1e-9) {
      throw ValidationError("drift_law.atoms probabilities must sum to 1, got " +
                            std::to_string(total));
    }
  }

  /// Convenience: atoms given as (rho, p) pairs.
  static DriftLaw from_rho(std::initializer_list<std::pair<double, double>> rho_atoms) {
    std::vector<DriftAtom> atoms;
    for (auto [rho, p] : rho_atoms) atoms.push_back({1.0 / (1.0 + rho), p});
    return DriftLaw(std::move(atoms));
  }

  [[nodiscard]] std::span<const DriftAtom> atoms() const noexcept { return atoms_; }

  static double rho_of(double lambda) noexcept { return (1.0 - lambda) / lambda; }

  /// E[rho^s] as an exact finite sum.
  [[nodiscard]] double rho_moment(double s) const noexcept {
    double sum = 0.0;
    for (const auto& a : atoms_) sum += a.p * std::pow(rho_of(a.lambda), s);
    return sum;
  }

  [[nodiscard]] double mean_log_rho() const noexcept {
    double sum = 0.0;
    for (const auto& a : atoms_) sum += a.p * std::log(rho_of(a.lambda));
    return sum;
  }

  [[nodiscard]] double max_rho() const noexcept {
    double m = 0.0;
    for (const auto& a : atoms_) m = std::max(m, rho_of(a.lambda));
    return m;
  }

  /// True when rho == 1 almost surely (symmetric walk).
  [[nodiscard]] bool degenerate() const noexcept {
    return std::all_of(atoms_.begin(), atoms_.end(),
                       [](const DriftAtom& a) { return a.lambda == 0.5; });
  }

  double sample_lambda(Stream& rng) const noexcept {
    const double u = rng.uniform();
    double acc = 0.0;
    for (const auto& a : atoms_) {
      acc += a.p;
      if (u < acc) return a.lambda;
    }
    return atoms_.back().lambda;
  }

  bool operator==(const DriftLaw&) const = default;

 private:
  std::vector<DriftAtom> atoms_{DriftAtom{}};
};

/// Joint law of (xi, lambda); xi and lambda are independent.
struct EnvironmentSpec {
  GapLaw gap_law;
  DriftLaw drift_law;
  bool independent = true;
  bool operator==(const EnvironmentSpec&) const = default;
};

/// Root alpha > 0 of E[rho^alpha] = 1, or nothing when rho <= 1 a.s.
///
/// alpha -> E rho^alpha is convex with value 1 at 0, so the positive root is
/// found by bisection on the increasing branch to the right of the minimum.
inline std::optional<double> kesten_alpha(const DriftLaw& drift) {
  if (drift.degenerate()) {
    throw RegimeError("drift law has rho == 1 a.s. (degenerate simple random walk)");
  }
  if (drift.max_rho() <= 1.0) return std::nullopt;
  if (drift.mean_log_rho() >= 0.0) return std::nullopt;  // no root beyond 0
  auto f = [&](double a) { return drift.rho_moment(a); };
  double hi = 1.0;
  while (f(hi) < 1.0) {
    hi *= 2.0;
    if (hi > 1e6) return std::nullopt;
  }
  // Golden-section search for the minimiser on [0, hi].
  double lo = 0.0, up = hi;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  for (int i = 0; i < 200 && up - lo > 1e-13; ++i) {
    const double x1 = up - g * (up - lo);
    const double x2 = lo + g * (up - lo);
    if (f(x1) < f(x2)) {
      up = x2;
    } else {
      lo = x1;
    }
  }
  double left = 0.5 * (lo + up);
  double right = hi;
  while (right - left > 1e-13) {
    const double mid = 0.5 * (left + right);
    if (f(mid) < 1.0) {
      left = mid;
    } else {
      right = mid;
    }
  }
  return 0.5 * (left + right);
}

/// Speed of the walk from the moments entering the law of large numbers.
inline double speed_from_moments(double e_rho, double e_xi, double e_xi2, double e_rho_xi) {
  if (!(e_rho < 1.0) || !std::isfinite(e_rho_xi) || !std::isfinite(e_xi2)) return 0.0;
  return (1.0 - e_rho) * e_xi / ((1.0 - e_rho) * e_xi2 + 2.0 * e_rho_xi * e_xi);
}

inline double speed_v(const EnvironmentSpec& spec) {
  const double e_rho = spec.drift_law.rho_moment(1.0);
  const double e_xi = spec.gap_law.moment(1.0);
  const double e_xi2 = spec.gap_law.moment(2.0);
  return speed_from_moments(e_rho, e_xi, e_xi2, e_rho * e_xi);
}

struct RegimeReport {
  double e_log_rho = 0.0;
  std::optional<double> gamma_star;
  double e_rho_2gamma = 0.0;
  double e_xi_g_rho_3g = 0.0;  // +inf when infinite
  std::optional<double> kesten_alpha;
  double speed_v = 0.0;
  bool transient_right = false;
  double e_xi = 0.0;  // +inf when infinite
  std::string summary;

  /// True when every assumption needed by the limit theorems holds.
  [[nodiscard]] bool admissible() const noexcept {
    return transient_right && gamma_star.has_value();
  }
};

/// Number of points of the gamma grid scanned over (beta/4, min(1, beta)).
inline constexpr int kGammaGridPoints = 64;

inline RegimeReport validate_regime(const EnvironmentSpec& spec) {
  const auto& drift = spec.drift_law;
  if (drift.degenerate()) {
    throw RegimeError(
        "drift law has rho == 1 a.s.; E log rho < 0 excludes the degenerate simple walk");
  }
  RegimeReport r;
  r.e_log_rho = drift.mean_log_rho();
  r.transient_right = r.e_log_rho < 0.0;
  r.kesten_alpha = kesten_alpha(drift);
  r.speed_v = speed_v(spec);
  r.e_xi = spec.gap_law.moment(1.0);

  const double beta = spec.gap_law.beta();
  const double lo = beta / 4.0;
  const double hi = std::min(1.0, beta);
  double best_rho = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGammaGridPoints; ++i) {
    const double gamma = lo + (i + 1) * (hi - lo) / (kGammaGridPoints + 1);
    const double e_rho_2g = drift.rho_moment(2.0 * gamma);
    const double e_xi_g = spec.gap_law.moment(gamma);
    const double cross = e_xi_g * drift.rho_moment(3.0 * gamma);
    if (e_rho_2g < 1.0 && std::isfinite(cross)) {
      r.gamma_star = gamma;
      r.e_rho_2gamma = e_rho_2g;
      r.e_xi_g_rho_3g = cross;
      break;
    }
    if (e_rho_2g < best_rho) {
      best_rho = e_rho_2g;
      r.e_rho_2gamma = e_rho_2g;
      r.e_xi_g_rho_3g = cross;
    }
  }
  if (!r.transient_right) {
    r.summary = "E log rho < 0 violated (walk not transient to the right)";
  } else if (!r.gamma_star) {
    r.summary = "E rho^{2 gamma} < 1 not satisfiable for gamma in (beta/4, min(1,beta))";
  } else {
    r.summary = "ok";
  }
  return r;
}

/// Scaling sequences a_n, m_n, c_n and d_n for a gap law.
class ScalingSequences {
 public:
  explicit ScalingSequences(GapLaw gap) : gap_(gap) {}

  /// n P[xi > a_n] = 1 with the continuous tail: a_n = scale n^{1/beta}.
  [[nodiscard]] double a(double n) const noexcept {
    return gap_.scale() * std::pow(n, 1.0 / gap_.beta());
  }

  /// d_n = 1 / P[xi > n].
  [[nodiscard]] double d(double n) const noexcept {
    return 1.0 / gap_.tail(static_cast<std::int64_t>(std::floor(n)));
  }

  /// m_n = n E[xi 1{xi <= a_n}].
  [[nodiscard]] double m(double n) const { return n * gap_.truncated_mean(a(n)); }

  /// Asymptotic inverse of m by bisection: m(c_n) = n.
  [[nodiscard]] double c(double n) const {
    double lo = 1.0, hi = 2.0;
    if (m(lo) >= n) return lo;
    while (m(hi) < n) {
      lo = hi;
      hi *= 2.0;
    }
    for (int i = 0; i < 200 && hi - lo > 1e-10 * hi; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (m(mid) < n) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    return 0.5 * (lo + hi);
  }

  [[nodiscard]] const GapLaw& gap() const noexcept { return gap_; }

 private:
  GapLaw gap_;
};

/// Frozen environment on the window of marked sites k = min_index..max_index.
///
/// Index 0 is the origin S_0 = 0. xi(k) is the gap between S_{k-1} and S_k;
/// xi(min_index) is stored but lies outside the window (S_{min-1} is unknown
/// to the walk).
class Environment {
 public:
  Environment() = default;

  /// Builds an environment from per-index gaps and drifts, starting at
  /// index `min_index` <= 0.
  Environment(std::int64_t min_index, std::vector<std::int64_t> xi, std::vector<double> lambda,
              SeedMeta meta = {})
      : min_index_(min_index), xi_(std::move(xi)), lambda_(std::move(lambda)), meta_(meta) {
    if (min_index_ > 0) throw ValidationError("environment window must contain index 0");
    if (xi_.size() != lambda_.size()) {
      throw ValidationError("environment gap and drift columns differ in length");
    }
    if (static_cast<std::int64_t>(xi_.size()) <= -min_index_) {
      throw ValidationError("environment window must contain index 0");
    }
    rho_.resize(lambda_.size());
    for (std::size_t i = 0; i < lambda_.size(); ++i) {
      // lambda = 1 is allowed at the left edge only: a reflecting wall.
      const bool wall = i == 0 && lambda_[i] == 1.0;
      if (!(lambda_[i] > 0.0 && lambda_[i] < 1.0) && !wall) {
        throw ValidationError("environment drift outside (0,1) at index " +
                              std::to_string(min_index_ + static_cast<std::int64_t>(i)));
      }
      rho_[i] = DriftLaw::rho_of(lambda_[i]);
    }
    for (std::size_t i = 1; i < xi_.size(); ++i) {
      if (xi_[i] < 1) {
        throw ValidationError("environment gap < 1 at index " +
                              std::to_string(min_index_ + static_cast<std::int64_t>(i)));
      }
    }
    S_.assign(xi_.size(), 0);
    const auto origin = static_cast<std::size_t>(-min_index_);
    for (std::size_t i = origin + 1; i < xi_.size(); ++i) S_[i] = S_[i - 1] + xi_[i];
    for (std::size_t i = origin; i > 0; --i) S_[i - 1] = S_[i] - xi_[i];
    log_rho_prefix_.assign(xi_.size() + 1, 0.0);
    for (std::size_t i = 0; i < xi_.size(); ++i) {
      log_rho_prefix_[i + 1] = log_rho_prefix_[i] + (rho_[i] > 0.0 ? std::log(rho_[i]) : 0.0);
    }
  }

  [[nodiscard]] std::int64_t min_index() const noexcept { return min_index_; }
  [[nodiscard]] std::int64_t max_index() const noexcept {
    return min_index_ + static_cast<std::int64_t>(xi_.size()) - 1;
  }
  [[nodiscard]] std::int64_t n_right() const noexcept { return max_index(); }
  [[nodiscard]] std::int64_t left_extent() const noexcept { return -min_index_; }
  [[nodiscard]] bool contains(std::int64_t k) const noexcept {
    return k >= min_index_ && k <= max_index();
  }

  [[nodiscard]] std::int64_t S(std::int64_t k) const { return S_[slot(k)]; }
  [[nodiscard]] std::int64_t xi(std::int64_t k) const { return xi_[slot(k)]; }
  [[nodiscard]] double lambda(std::int64_t k) const { return lambda_[slot(k)]; }
  [[nodiscard]] double rho(std::int64_t k) const { return rho_[slot(k)]; }

  /// Leftmost and rightmost positions inside the window.
  [[nodiscard]] std::int64_t left_boundary() const noexcept { return S_.front(); }
  [[nodiscard]] std::int64_t right_boundary() const noexcept { return S_.back(); }

  /// Largest k with S_k <= x (x must not lie left of the window).
  [[nodiscard]] std::int64_t index_at_or_below(std::int64_t x) const {
    if (x < S_.front()) throw WindowExhausted("position left of the generated window");
    const auto it = std::upper_bound(S_.begin(), S_.end(), x);
    return min_index_ + static_cast<std::int64_t>(it - S_.begin()) - 1;
  }

  /// nu_n = inf{k > 0 : S_k > n}.
  [[nodiscard]] std::int64_t nu(std::int64_t n) const {
    if (n < 0) throw ValidationError("target must be nonnegative");
    if (n >= right_boundary()) {
      throw ValidationError("target " + std::to_string(n) +
                            " beyond the generated right extent " +
                            std::to_string(right_boundary()));
    }
    return index_at_or_below(n) + 1;
  }

  /// log Pi_{i,j} = sum_{k=i}^{j} log rho_k (0 when i > j).
  [[nodiscard]] double log_pi(std::int64_t i, std::int64_t j) const {
    if (i > j) return 0.0;
    if (i == min_index_ && rho_.front() == 0.0) return -std::numeric_limits<double>::infinity();
    return log_rho_prefix_[slot(j) + 1] - log_rho_prefix_[slot(i)];
  }

  /// Pi_{i,j}; exact products for short spans, log domain beyond 64 sites.
  [[nodiscard]] double pi(std::int64_t i, std::int64_t j) const {
    if (i > j) return 1.0;
    if (j - i < 64) {
      double p = 1.0;
      for (std::int64_t k = i; k <= j; ++k) p *= rho(k);
      return p;
    }
    return std::exp(log_pi(i, j));
  }

  [[nodiscard]] const SeedMeta& seed_meta() const noexcept { return meta_; }
  [[nodiscard]] std::span<const std::int64_t> xi_column() const noexcept { return xi_; }
  [[nodiscard]] std::span<const double> lambda_column() const noexcept { return lambda_; }
  [[nodiscard]] std::span<const std::int64_t> S_column() const noexcept { return S_; }

  bool operator==(const Environment& o) const {
    return min_index_ == o.min_index_ && xi_ == o.xi_ && lambda_ == o.lambda_ &&
           meta_ == o.meta_;
  }

 private:
  [[nodiscard]] std::size_t slot(std::int64_t k) const {
    if (!contains(k)) {
      throw WindowExhausted("site index " + std::to_string(k) + " outside window [" +
                            std::to_string(min_index_) + ", " + std::to_string(max_index()) +
                            "]");
    }
    return static_cast<std::size_t>(k - min_index_);
  }

  std::int64_t min_index_ = 0;
  std::vector<std::int64_t> xi_{0};
  std::vector<double> lambda_{0.5};
  std::vector<double> rho_{1.0};
  std::vector<std::int64_t> S_{0};
  std::vector<double> log_rho_prefix_{0.0, 0.0};
  SeedMeta meta_;
};

struct SampleOptions {
  std::int64_t min_left = 4;
  std::int64_t hard_cap = 1'000'000;
};

/// Draws (xi_k, lambda_k) for k = 1..n_right and extends to the left until the
/// product of rho over the left extension drops below w_tol.
///
/// The right and left halves use distinct substreams, so a smaller w_tol
/// only appends sites to the left and leaves everything else unchanged.
inline Environment sample_environment(const EnvironmentSpec& spec, std::int64_t n_right,
                                      double w_tol, std::uint64_t master_seed,
                                      std::uint64_t env_index = 0,
                                      const SampleOptions& opts = {}) {
  if (n_right < 1) throw ValidationError("n_right must be >= 1");
  if (!(w_tol > 0.0 && w_tol < 1.0)) throw ValidationError("w_tol must lie in (0,1)");
  if (spec.drift_law.degenerate()) {
    throw RegimeError("drift law has rho == 1 a.s.; nothing to simulate");
  }
  if (!(spec.drift_law.mean_log_rho() < 0.0)) {
    throw RegimeError("E log rho >= 0: environment is not transient to the right");
  }
  Stream left(master_seed, env_index, 0, Purpose::environment_left);
  std::vector<std::int64_t> xi_left;  // xi_0, xi_{-1}, ...
  std::vector<double> lam_left;       // lambda_0, lambda_{-1}, ...
  double log_prod = 0.0;
  const double log_tol = std::log(w_tol);
  for (std::int64_t j = 0;; ++j) {
    if (j > opts.hard_cap) {
      throw RegimeError("left extension exceeded hard cap of " +
                        std::to_string(opts.hard_cap) +
                        " sites; drift law too close to recurrence");
    }
    xi_left.push_back(spec.gap_law.sample(left));
    lam_left.push_back(spec.drift_law.sample_lambda(left));
    log_prod += std::log(DriftLaw::rho_of(lam_left.back()));
    if (j >= opts.min_left && log_prod < log_tol) break;
  }
  Stream right(master_seed, env_index, 0, Purpose::environment);
  const auto L = static_cast<std::int64_t>(xi_left.size()) - 1;
  std::vector<std::int64_t> xi;
  std::vector<double> lam;
  xi.reserve(static_cast<std::size_t>(L + 1 + n_right));
  lam.reserve(xi.capacity());
  for (std::int64_t j = L; j >= 0; --j) {
    xi.push_back(xi_left[static_cast<std::size_t>(j)]);
    lam.push_back(lam_left[static_cast<std::size_t>(j)]);
  }
  for (std::int64_t k = 1; k <= n_right; ++k) {
    xi.push_back(spec.gap_law.sample(right));
    lam.push_back(spec.drift_law.sample_lambda(right));
  }
  SeedMeta meta{master_seed, env_index, 0, static_cast<std::uint64_t>(Purpose::environment)};
  return Environment(-L, std::move(xi), std::move(lam), meta);
}

}  // namespace rwsre
