#pragma once

// Empirical distributions and two-sample tests.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/bessel.hpp>
#include <boost/math/special_functions/beta.hpp>

#include "rwsre/errors.hpp"

namespace rwsre {

/// Sorted sample with ECDF queries.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(std::vector<double> sample) : x_(std::move(sample)) {
    std::sort(x_.begin(), x_.end());
  }

  [[nodiscard]] std::size_t size() const noexcept { return x_.size(); }
  [[nodiscard]] bool empty() const noexcept { return x_.empty(); }
  [[nodiscard]] std::span<const double> values() const noexcept { return x_; }

  /// Fraction of the sample <= x.
  [[nodiscard]] double cdf(double x) const noexcept {
    if (x_.empty()) return 0.0;
    const auto it = std::upper_bound(x_.begin(), x_.end(), x);
    return static_cast<double>(it - x_.begin()) / static_cast<double>(x_.size());
  }

  [[nodiscard]] double quantile(double p) const {
    if (x_.empty()) throw ValidationError("quantile of an empty sample");
    const double pos = std::clamp(p, 0.0, 1.0) * static_cast<double>(x_.size() - 1);
    const auto i = static_cast<std::size_t>(pos);
    if (i + 1 >= x_.size()) return x_.back();
    const double f = pos - static_cast<double>(i);
    return x_[i] * (1.0 - f) + x_[i + 1] * f;
  }

  [[nodiscard]] double median() const { return quantile(0.5); }

  [[nodiscard]] double mean() const noexcept {
    double s = 0.0;
    for (double v : x_) s += v;
    return x_.empty() ? 0.0 : s / static_cast<double>(x_.size());
  }

  /// Integral of f against the measure.
  template <class F>
  [[nodiscard]] double integrate(F&& f) const {
    double s = 0.0;
    for (double v : x_) s += f(v);
    return x_.empty() ? 0.0 : s / static_cast<double>(x_.size());
  }

 private:
  std::vector<double> x_;
};

/// Running mean/variance/fourth moment (Welford-style, order dependent only
/// through floating point rounding; callers accumulate in a fixed order).
class Moments {
 public:
  void add(double x) noexcept {
    const double n1 = static_cast<double>(n_);
    ++n_;
    const double n = static_cast<double>(n_);
    const double delta = x - mean_;
    const double delta_n = delta / n;
    const double delta_n2 = delta_n * delta_n;
    const double term1 = delta * delta_n * n1;
    mean_ += delta_n;
    m4_ += term1 * delta_n2 * (n * n - 3 * n + 3) + 6 * delta_n2 * m2_ - 4 * delta_n * m3_;
    m3_ += term1 * delta_n * (n - 2) - 3 * delta_n * m2_;
    m2_ += term1;
  }

  [[nodiscard]] std::uint64_t count() const noexcept { return n_; }
  [[nodiscard]] double mean() const noexcept { return mean_; }
  [[nodiscard]] double variance() const noexcept {
    return n_ > 1 ? m2_ / static_cast<double>(n_ - 1) : 0.0;
  }
  [[nodiscard]] double se_mean() const noexcept {
    return n_ > 1 ? std::sqrt(variance() / static_cast<double>(n_)) : 0.0;
  }
  /// Large-sample standard error of the sample variance.
  [[nodiscard]] double se_variance() const noexcept {
    if (n_ < 4) return 0.0;
    const double n = static_cast<double>(n_);
    const double mu2 = m2_ / n;
    const double mu4 = m4_ / n;
    return std::sqrt(std::max(0.0, mu4 - mu2 * mu2) / n);
  }

 private:
  std::uint64_t n_ = 0;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
};

/// Two-sided normal quantile z with P[|N| > z] = 1 - confidence.
inline double normal_two_sided(double confidence) {
  const boost::math::normal_distribution<> n;
  return boost::math::quantile(n, 0.5 + 0.5 * confidence);
}

/// z for `m` simultaneous two-sided intervals at family-wise confidence
/// `confidence` (Sidak adjustment).
inline double sidak_z(double confidence, std::size_t m) {
  const double per = std::pow(confidence, 1.0 / static_cast<double>(std::max<std::size_t>(m, 1)));
  return normal_two_sided(per);
}

/// Kolmogorov distribution tail Q(lambda) = P[K > lambda].
inline double kolmogorov_q(double lambda) {
  if (lambda < 1e-3) return 1.0;
  if (lambda < 1.18) {
    // Theta-function form, accurate for small lambda.
    const double pi = std::numbers::pi;
    const double y = std::exp(-pi * pi / (8.0 * lambda * lambda));
    double s = 0.0;
    for (int k = 1; k < 200; k += 2) {
      const double t = std::pow(y, static_cast<double>(k) * k);
      s += t;
      if (t < 1e-18) break;
    }
    return 1.0 - std::sqrt(2.0 * pi) / lambda * s;
  }
  double s = 0.0;
  for (int j = 1; j < 200; ++j) {
    const double t = std::exp(-2.0 * j * j * lambda * lambda);
    s += (j % 2 ? t : -t);
    if (t < 1e-18) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
  double critical = 0.0;  // at the requested level, when computed
  std::size_t n1 = 0;
  std::size_t n2 = 0;
  [[nodiscard]] bool passes(double alpha) const noexcept { return p_value >= alpha; }
};

/// Sup distance between two empirical CDFs.
inline double ks_distance(std::span<const double> sorted_a, std::span<const double> sorted_b) {
  if (sorted_a.empty() || sorted_b.empty()) return 1.0;
  const double na = static_cast<double>(sorted_a.size());
  const double nb = static_cast<double>(sorted_b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < sorted_a.size() && j < sorted_b.size()) {
    const double x = std::min(sorted_a[i], sorted_b[j]);
    while (i < sorted_a.size() && sorted_a[i] <= x) ++i;
    while (j < sorted_b.size() && sorted_b[j] <= x) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

inline double ks_effective_n(std::size_t n1, std::size_t n2) {
  return static_cast<double>(n1) * static_cast<double>(n2) / static_cast<double>(n1 + n2);
}

/// Asymptotic p-value of a KS distance with Stephens' small-sample correction.
inline double ks_p_value(double d, double n_eff) {
  const double s = std::sqrt(n_eff);
  return kolmogorov_q((s + 0.12 + 0.11 / s) * d);
}

/// Distance at which the two-sample KS test rejects at level alpha.
inline double ks_critical(std::size_t n1, std::size_t n2, double alpha) {
  double lo = 0.0, hi = 5.0;
  for (int i = 0; i < 100; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (kolmogorov_q(mid) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  const double s = std::sqrt(ks_effective_n(n1, n2));
  return 0.5 * (lo + hi) / (s + 0.12 + 0.11 / s);
}

inline TestResult ks_two_sample(const EmpiricalMeasure& a, const EmpiricalMeasure& b,
                                double alpha = 0.01) {
  TestResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  r.statistic = ks_distance(a.values(), b.values());
  r.p_value = ks_p_value(r.statistic, ks_effective_n(r.n1, r.n2));
  r.critical = ks_critical(r.n1, r.n2, alpha);
  return r;
}

inline TestResult ks_two_sample(std::vector<double> a, std::vector<double> b,
                                double alpha = 0.01) {
  return ks_two_sample(EmpiricalMeasure(std::move(a)), EmpiricalMeasure(std::move(b)), alpha);
}

/// One-sample KS against a CDF. Ties are grouped and the left limit is taken
/// one ulp below, so a model atom matched by tied data is not penalized.
template <class Cdf>
TestResult ks_one_sample(const EmpiricalMeasure& a, Cdf&& cdf) {
  TestResult r;
  r.n1 = a.size();
  const auto v = a.values();
  const double n = static_cast<double>(v.size());
  double d = 0.0;
  for (std::size_t i = 0; i < v.size();) {
    std::size_t j = i;
    while (j < v.size() && v[j] == v[i]) ++j;
    const double below = cdf(std::nextafter(v[i], -std::numeric_limits<double>::infinity()));
    const double at = cdf(v[i]);
    d = std::max({d, std::abs(below - static_cast<double>(i) / n),
                  std::abs(static_cast<double>(j) / n - at)});
    i = j;
  }
  r.statistic = d;
  const double s = std::sqrt(n);
  r.p_value = kolmogorov_q((s + 0.12 + 0.11 / s) * d);
  return r;
}

/// Limiting distribution of the Cramer-von Mises statistic,
/// P[omega^2 <= x], by the Anderson-Darling Bessel series.
inline double cvm_limit_cdf(double x) {
  if (x <= 0.0) return 0.0;
  if (x > 5.0) return 1.0;
  double sum = 0.0;
  double binom = 1.0;  // (-1)^j binom(-1/2, j) = (2j)! / (4^j (j!)^2)
  for (int j = 0; j < 60; ++j) {
    if (j > 0) binom *= (2.0 * j - 1.0) / (2.0 * j);
    const double a = 4.0 * j + 1.0;
    const double z = a * a / (16.0 * x);
    if (z > 700.0) break;
    const double term =
        binom * std::sqrt(a) * std::exp(-z) * boost::math::cyl_bessel_k(0.25, z);
    sum += term;
    if (term < 1e-16 * sum) break;
  }
  return std::clamp(sum / (std::numbers::pi * std::sqrt(x)), 0.0, 1.0);
}

/// Two-sample Cramer-von Mises test (Anderson 1962 statistic, asymptotic p).
inline TestResult cvm_two_sample(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  TestResult r;
  r.n1 = a.size();
  r.n2 = b.size();
  const auto va = a.values();
  const auto vb = b.values();
  const double n = static_cast<double>(va.size());
  const double m = static_cast<double>(vb.size());
  if (va.empty() || vb.empty()) {
    r.statistic = 1.0;
    r.p_value = 0.0;
    return r;
  }
  // T = n m / (n+m)^2 * sum over pooled points of (F_n - G_m)^2.
  std::size_t i = 0, j = 0;
  double sum = 0.0;
  while (i < va.size() || j < vb.size()) {
    double x;
    if (j >= vb.size() || (i < va.size() && va[i] <= vb[j])) {
      x = va[i];
    } else {
      x = vb[j];
    }
    std::size_t ci = 0, cj = 0;
    while (i < va.size() && va[i] == x) {
      ++i;
      ++ci;
    }
    while (j < vb.size() && vb[j] == x) {
      ++j;
      ++cj;
    }
    const double diff = static_cast<double>(i) / n - static_cast<double>(j) / m;
    sum += static_cast<double>(ci + cj) * diff * diff;
  }
  const double t = n * m / ((n + m) * (n + m)) * sum;
  // Finite-sample centring and scaling of T (Anderson 1962).
  const double mean_t = 1.0 / 6.0 + 1.0 / (6.0 * (n + m));
  const double var_t = (1.0 / 45.0) * (n + m + 1.0) / ((n + m) * (n + m)) *
                       (4.0 * m * n * (n + m) - 3.0 * (m * m + n * n) - 2.0 * m * n) /
                       (4.0 * m * n);
  const double t_star = (t - mean_t) / std::sqrt(45.0 * var_t) + 1.0 / 6.0;
  r.statistic = t;
  r.p_value = 1.0 - cvm_limit_cdf(t_star);
  return r;
}

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  [[nodiscard]] bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Clopper-Pearson interval for a binomial proportion.
inline Interval binomial_ci(std::uint64_t successes, std::uint64_t trials, double confidence) {
  if (trials == 0) throw ValidationError("binomial_ci needs trials > 0");
  const double a = 1.0 - confidence;
  const double k = static_cast<double>(successes);
  const double n = static_cast<double>(trials);
  Interval r;
  r.lo = successes == 0 ? 0.0 : boost::math::ibeta_inv(k, n - k + 1.0, a / 2.0);
  r.hi = successes == trials ? 1.0 : boost::math::ibeta_inv(k + 1.0, n - k, 1.0 - a / 2.0);
  return r;
}

}  // namespace rwsre
