#pragma once

// Small numerical helpers: power sums with Euler-Maclaurin tails and
// bracketing bisection.

#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>

namespace rwsre::numerics {

/// sum_{k=a}^{b-1} k^{-t} for integers 1 <= a <= b (b may be +inf as
/// `std::numeric_limits<double>::infinity()` when t > 1).
///
/// Terms below `direct_limit` are summed directly; the remainder uses
/// Euler-Maclaurin with three Bernoulli corrections, which is accurate to
/// ~1e-16 relative once the lower end exceeds a few thousand.
inline double power_sum(double t, double a, double b) {
  constexpr double direct_limit = 4096.0;
  if (!(b > a)) return 0.0;
  double sum = 0.0;
  double k = a;
  const double stop = std::min(b, std::max(a, direct_limit));
  for (; k < stop; k += 1.0) sum += std::pow(k, -t);
  if (!(b > k)) return sum;

  auto integral = [t](double lo, double hi) {
    if (std::abs(t - 1.0) < 1e-14) {
      return std::isinf(hi) ? std::numeric_limits<double>::infinity() : std::log(hi / lo);
    }
    const double hi_term = std::isinf(hi) ? 0.0 : std::pow(hi, 1.0 - t);
    return (hi_term - std::pow(lo, 1.0 - t)) / (1.0 - t);
  };
  // f(x) = x^{-t}; f' = -t x^{-t-1}; f''' = -t(t+1)(t+2) x^{-t-3};
  // f^(5) = -t(t+1)(t+2)(t+3)(t+4) x^{-t-5}.
  auto em_terms = [t](double x) {
    const double f = std::pow(x, -t);
    const double d1 = -t * std::pow(x, -t - 1.0);
    const double d3 = -t * (t + 1) * (t + 2) * std::pow(x, -t - 3.0);
    const double d5 = -t * (t + 1) * (t + 2) * (t + 3) * (t + 4) * std::pow(x, -t - 5.0);
    return std::array<double, 4>{f, d1, d3, d5};
  };
  // sum_{j=k}^{b} f = int_k^b f + (f(k)+f(b))/2
  //   + B2/2! (f'(b)-f'(k)) + B4/4! (f'''(b)-f'''(k)) + B6/6! (f5(b)-f5(k)).
  const auto lo = em_terms(k);
  std::array<double, 4> hi{0.0, 0.0, 0.0, 0.0};
  if (!std::isinf(b)) hi = em_terms(b);
  double tail = integral(k, b) + 0.5 * (lo[0] + hi[0]);
  tail += (1.0 / 12.0) * (hi[1] - lo[1]);
  tail += (-1.0 / 720.0) * (hi[2] - lo[2]);
  tail += (1.0 / 30240.0) * (hi[3] - lo[3]);
  tail -= hi[0];  // exclude j = b
  return sum + tail;
}

/// Bisection for an increasing function on [lo, hi] with f(lo) <= target <= f(hi).
inline double bisect_increasing(const std::function<double(double)>& f, double target,
                                double lo, double hi, double tol = 1e-12,
                                int max_iter = 400) {
  for (int i = 0; i < max_iter && (hi - lo) > tol * std::max(1.0, std::abs(lo)); ++i) {
    const double mid = 0.5 * (lo + hi);
    if (f(mid) < target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace rwsre::numerics
