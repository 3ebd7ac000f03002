#pragma once

// Exact quenched quantities in a frozen environment: potentials, exit
// probabilities, crossing and excursion moments.
//
// The infinite left series are truncated at the left edge of the window. On
// the truncated window every formula below is exact for the walk that is
// pushed right deterministically at S_{min}; the difference to the untruncated
// environment is bounded by the Pi-product certificate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "rwsre/env.hpp"
#include "rwsre/errors.hpp"

namespace rwsre {

/// W_j, the left-series Z_j and truncation certificates for one environment.
class Potentials {
 public:
  Potentials() = default;

  Potentials(const Environment& env, double tol) : env_(&env) {
    const auto lo = env.min_index();
    const auto hi = env.max_index();
    const auto size = static_cast<std::size_t>(hi - lo + 1);
    W_.assign(size, 0.0);
    Z_.assign(size, 0.0);
    cert_.assign(size, 0.0);
    const double edge_pi = env.pi(lo, 0);
    if (edge_pi > tol) {
      throw ValidationError("left extent insufficient: Pi over the left window is " +
                            std::to_string(edge_pi) + " > tol " + std::to_string(tol));
    }
    double w_max = 0.0;
    for (auto j = lo + 1; j <= hi; ++j) {
      const auto s = slot(j);
      const double xi_j = static_cast<double>(env.xi(j));
      const double rho_j = env.rho(j);
      W_[s] = rho_j * xi_j + rho_j * W_[s - 1];
      // A_{j-1} uses xi_j and W_{j-1}.
      const double w = W_[s - 1];
      const double a = xi_j * w * w + xi_j * xi_j * w + (xi_j * xi_j * xi_j - xi_j) / 3.0;
      Z_[s] = a + env.rho(j - 1) * Z_[s - 1];
      w_max = std::max(w_max, W_[s]);
    }
    // W_j(true) - W_j = Pi_{min,j} (xi_min + W_{min-1}(true)); W_{min-1} is
    // replaced by the largest computed W as a surrogate.
    const double edge = std::max<double>(1.0, static_cast<double>(env.xi(lo))) + w_max;
    for (auto j = lo; j <= hi; ++j) cert_[slot(j)] = std::exp(env.log_pi(lo, j)) * edge;
    tol_ = tol;
  }

  [[nodiscard]] const Environment& env() const noexcept { return *env_; }
  [[nodiscard]] double tol() const noexcept { return tol_; }

  /// W_j = sum_{i <= j} xi_i Pi_{i,j}.
  [[nodiscard]] double W(std::int64_t j) const { return W_[slot(j)]; }

  /// Z_k = sum_{j < k} Pi_{j+1,k-1} (xi_{j+1} W_j^2 + xi_{j+1}^2 W_j + (xi_{j+1}^3 - xi_{j+1})/3).
  [[nodiscard]] double Z(std::int64_t k) const { return Z_[slot(k)]; }

  /// Certified bound on the truncation error of W_j.
  [[nodiscard]] double trunc_err(std::int64_t j) const { return cert_[slot(j)]; }

  [[nodiscard]] double pi(std::int64_t i, std::int64_t j) const { return env_->pi(i, j); }

  /// R_{i,j} = sum_{k=i}^{j} xi_k Pi_{i,k-1}.
  [[nodiscard]] double R(std::int64_t i, std::int64_t j) const {
    if (i > j) return 0.0;
    double sum = 0.0;
    double prod = 1.0;
    for (auto k = i; k <= j; ++k) {
      sum += static_cast<double>(env_->xi(k)) * prod;
      prod *= env_->rho(k);
    }
    return sum;
  }

 private:
  [[nodiscard]] std::size_t slot(std::int64_t k) const {
    if (!env_->contains(k)) {
      throw WindowExhausted("potential index " + std::to_string(k) + " outside window");
    }
    return static_cast<std::size_t>(k - env_->min_index());
  }

  const Environment* env_ = nullptr;
  std::vector<double> W_;
  std::vector<double> Z_;
  std::vector<double> cert_;
  double tol_ = 0.0;
};

inline Potentials compute_potentials(const Environment& env, double tol = 1e-10) {
  return Potentials(env, tol);
}

struct ExitProbabilities {
  double left = 0.0;   // hit S_i before S_j
  double right = 0.0;  // hit S_j before S_i
};

/// Exit probabilities from (S_i, S_j) for the walk started at S_k.
inline ExitProbabilities exit_probabilities(const Potentials& pot, std::int64_t i, std::int64_t k,
                                            std::int64_t j) {
  if (!(i < k && k < j)) throw ValidationError("exit_probabilities needs i < k < j");
  const double total = pot.R(i + 1, j);
  ExitProbabilities p;
  p.right = pot.R(i + 1, k) / total;
  p.left = pot.pi(i + 1, k) * pot.R(k + 1, j) / total;
  return p;
}

struct CrossingMean {
  double total = 0.0;
  double left = 0.0;
  double right = 0.0;
};

/// Mean time to cross from S_{k-1} to S_k, split into left and right parts.
inline CrossingMean crossing_mean(const Potentials& pot, std::int64_t k) {
  const double xi = static_cast<double>(pot.env().xi(k));
  CrossingMean m;
  m.left = 2.0 * xi * pot.W(k - 1);
  m.right = xi * xi;
  m.total = m.left + m.right;
  return m;
}

struct MeanVar {
  double mean = 0.0;
  double var = 0.0;
};

/// Length of one excursion from S_k that starts with a step to the left.
inline MeanVar excursion_moments(const Potentials& pot, std::int64_t k) {
  const double xi = static_cast<double>(pot.env().xi(k));
  const double w = pot.W(k - 1);
  MeanVar r;
  r.mean = 2.0 * (xi + w);
  // Linear coefficient is 4 - 8 xi; the commonly quoted 10 - 14 xi only
  // agrees when xi = 1.
  r.var = 8.0 * pot.Z(k) - 4.0 * w * w + (4.0 - 8.0 * xi) * w - 4.0 * xi * xi + 4.0 * xi;
  return r;
}

/// Excursion variance with the 10 - 14 xi coefficient, kept to test the gap.
inline double excursion_variance_printed(const Potentials& pot, std::int64_t k) {
  const double xi = static_cast<double>(pot.env().xi(k));
  const double w = pot.W(k - 1);
  return 8.0 * pot.Z(k) - 4.0 * w * w + (-14.0 * xi + 10.0) * w - 4.0 * xi * xi + 4.0 * xi;
}

/// Variance of the left part of crossing k, from the compound-sum identity.
inline double left_crossing_variance(const Potentials& pot, std::int64_t k) {
  const double xi = static_cast<double>(pot.env().xi(k));
  const double rho = pot.env().rho(k - 1);
  const auto f = excursion_moments(pot, k - 1);
  return xi * rho * f.var + (xi * rho + xi * xi * rho * rho) * f.mean * f.mean;
}

/// The closed form as printed in the source lemma. It does not agree with the
/// compound-sum identity and is kept only so the discrepancy stays testable.
inline double left_crossing_variance_printed(const Potentials& pot, std::int64_t k) {
  const auto& env = pot.env();
  const double xi = static_cast<double>(env.xi(k));
  const double xi_prev = static_cast<double>(env.xi(k - 1));
  const double lam = env.lambda(k - 1);
  const double rho = env.rho(k - 1);
  const double w1 = pot.W(k - 1);
  const double w2 = pot.W(k - 2);
  const double series = rho * pot.Z(k - 1);
  const double d = 2.0 * w1 - rho;
  return 8.0 * xi * series +
         xi * (1.0 - lam) *
             ((xi * (1.0 - lam) + 2.0 * lam) * d * d - 6.0 * (xi_prev - 1.0) * rho * w2 + rho);
}

/// Variance of the right part of a crossing with gap xi: (2/3)(xi^4 - xi^2).
inline double right_crossing_variance(double xi) {
  return (2.0 / 3.0) * (xi * xi * xi * xi - xi * xi);
}

inline double right_crossing_variance(const Environment& env, std::int64_t k) {
  return right_crossing_variance(static_cast<double>(env.xi(k)));
}

/// Per-index and cumulative moments for crossings k = 1..n.
struct QuenchedMoments {
  struct Row {
    std::int64_t k = 0;
    std::int64_t xi = 0;
    double lambda = 0.0;
    double W = 0.0;  // W_{k-1}
    double mean_left = 0.0;
    double mean_right = 0.0;
    double var_left = 0.0;
    double var_right = 0.0;
    double excursion_mean = 0.0;
    double excursion_var = 0.0;
    double cum_mean = 0.0;
    double cum_var_r = 0.0;
    double cum_var_l = 0.0;
    double trunc_err = 0.0;

    [[nodiscard]] double mean_T() const noexcept { return mean_left + mean_right; }
  };
  std::vector<Row> rows;

  [[nodiscard]] double mean_T() const { return rows.empty() ? 0.0 : rows.back().cum_mean; }
  [[nodiscard]] double var_right() const { return rows.empty() ? 0.0 : rows.back().cum_var_r; }
  [[nodiscard]] double var_left() const { return rows.empty() ? 0.0 : rows.back().cum_var_l; }
};

inline QuenchedMoments cumulative_moments(const Potentials& pot, std::int64_t n) {
  const auto& env = pot.env();
  if (n < 1 || n > env.max_index()) {
    throw ValidationError("cumulative_moments: n must lie in [1, n_right]");
  }
  QuenchedMoments q;
  q.rows.reserve(static_cast<std::size_t>(n));
  double cm = 0.0, cr = 0.0, cl = 0.0;
  for (std::int64_t k = 1; k <= n; ++k) {
    QuenchedMoments::Row r;
    r.k = k;
    r.xi = env.xi(k);
    r.lambda = env.lambda(k);
    r.W = pot.W(k - 1);
    const auto m = crossing_mean(pot, k);
    r.mean_left = m.left;
    r.mean_right = m.right;
    r.var_left = left_crossing_variance(pot, k);
    r.var_right = right_crossing_variance(env, k);
    const auto f = excursion_moments(pot, k);
    r.excursion_mean = f.mean;
    r.excursion_var = f.var;
    cm += m.total;
    cr += r.var_right;
    cl += r.var_left;
    r.cum_mean = cm;
    r.cum_var_r = cr;
    r.cum_var_l = cl;
    r.trunc_err = pot.trunc_err(k - 1);
    q.rows.push_back(r);
  }
  return q;
}

/// E T_m for any target m >= 0, marked or not.
///
/// The stretch from S_{nu-1} to m is crossed like a gap of length
/// m - S_{nu-1} with the same left potential W_{nu-1}.
inline double mean_passage_time(const Potentials& pot, std::int64_t m) {
  const auto& env = pot.env();
  const auto nu = env.nu(m);
  double sum = 0.0;
  for (std::int64_t k = 1; k < nu; ++k) sum += crossing_mean(pot, k).total;
  const double d = static_cast<double>(m - env.S(nu - 1));
  return sum + d * d + 2.0 * d * pot.W(nu - 1);
}

/// Arrivals at S_p from the right while crossing from S_{k-1} to S_k.
inline MeanVar barrier_visit_moments(const Potentials& pot, std::int64_t p, std::int64_t k) {
  if (!(p < k - 1)) throw ValidationError("barrier_visit_moments needs p < k-1");
  const double xi = static_cast<double>(pot.env().xi(k));
  const double mean = xi * pot.pi(p + 1, k - 1);
  return {mean, mean * (2.0 * pot.R(p + 1, k - 1) + mean - 1.0)};
}

/// Time spent left of S_p while crossing from S_{k-1} to S_k.
inline MeanVar censored_excess_moments(const Potentials& pot, std::int64_t p, std::int64_t k) {
  if (!(p < k - 1)) throw ValidationError("censored_excess_moments needs p < k-1");
  const auto& env = pot.env();
  const double xi = static_cast<double>(env.xi(k));
  const double count_mean = xi * pot.pi(p, k - 1);  // mean number of left excursions
  const auto f = excursion_moments(pot, p);
  const double spread = env.rho(p) * pot.R(p + 1, k - 1);
  MeanVar r;
  r.mean = 2.0 * xi * pot.pi(p + 1, k - 1) * pot.W(p);
  r.var = count_mean * f.var + count_mean * f.mean * f.mean * (1.0 + 2.0 * spread + count_mean);
  return r;
}

}  // namespace rwsre
