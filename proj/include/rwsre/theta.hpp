#pragma once

// The variable theta with Laplace transform 1/cosh(sqrt(s)).
//
// 2 theta is the exit time of Brownian motion from [-1, 1]. Its law is
// evaluated with the eigenfunction series for moderate and large t and with
// the method of images for small t; both converge extremely fast in their
// ranges.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <vector>

#include "rwsre/errors.hpp"
#include "rwsre/random.hpp"
#include "rwsre/reflected.hpp"

namespace rwsre {

namespace detail {
inline constexpr double kThetaSwitch = 0.5;  // eigen series above, images below
inline constexpr int kThetaTerms = 40;
}  // namespace detail

/// P[2 theta > t] by the eigenfunction series.
inline double theta_sf_series(double t, int terms = detail::kThetaTerms) {
  using std::numbers::pi;
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    const double a = 2.0 * k + 1.0;
    const double term = std::exp(-a * a * pi * pi * t / 8.0) / a;
    sum += (k % 2 ? -term : term);
    if (term < 1e-18 * std::abs(sum)) break;
  }
  return 4.0 / pi * sum;
}

/// P[2 theta <= t] by the image series.
inline double theta_cdf_images(double t, int terms = detail::kThetaTerms) {
  if (t <= 0.0) return 0.0;
  double sum = 0.0;
  for (int k = 0; k < terms; ++k) {
    const double term = std::erfc((2.0 * k + 1.0) / std::sqrt(2.0 * t));
    sum += (k % 2 ? -term : term);
    if (term < 1e-300 || term < 1e-18 * std::abs(sum)) break;
  }
  return 2.0 * sum;
}

/// P[2 theta <= t].
inline double theta_cdf(double t) {
  if (t <= 0.0) return 0.0;
  if (std::isinf(t)) return 1.0;
  if (t < detail::kThetaSwitch) return theta_cdf_images(t);
  return 1.0 - theta_sf_series(t);
}

/// P[2 theta > t].
inline double theta_sf(double t) {
  if (t <= 0.0) return 1.0;
  if (std::isinf(t)) return 0.0;
  if (t < detail::kThetaSwitch) return 1.0 - theta_cdf_images(t);
  return theta_sf_series(t);
}

/// Density of 2 theta.
inline double theta_pdf(double t) {
  using std::numbers::pi;
  if (t <= 0.0) return 0.0;
  double sum = 0.0;
  if (t < detail::kThetaSwitch) {
    for (int k = 0; k < detail::kThetaTerms; ++k) {
      const double a = 2.0 * k + 1.0;
      const double term = a * std::exp(-a * a / (2.0 * t));
      sum += (k % 2 ? -term : term);
      if (term < 1e-300) break;
    }
    return 2.0 * sum / (std::sqrt(2.0 * pi) * std::pow(t, 1.5));
  }
  for (int k = 0; k < detail::kThetaTerms; ++k) {
    const double a = 2.0 * k + 1.0;
    const double term = a * std::exp(-a * a * pi * pi * t / 8.0);
    sum += (k % 2 ? -term : term);
    if (term < 1e-18 * std::abs(sum)) break;
  }
  return pi / 2.0 * sum;
}

/// Quantile of 2 theta by bisection, driven by the survival function in the
/// upper half so that probabilities near 1 keep full relative precision.
inline double theta_quantile(double u, double tol = 1e-13) {
  if (!(u > 0.0)) return 0.0;
  if (!(u < 1.0)) return std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = 64.0;
  const bool upper = u > 0.5;
  const double target = upper ? 1.0 - u : u;
  for (int i = 0; i < 200 && hi - lo > tol * std::max(1.0, lo); ++i) {
    const double mid = 0.5 * (lo + hi);
    const bool below = upper ? theta_sf(mid) > target : theta_cdf(mid) < target;
    if (below) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

enum class ThetaMethod {
  series_inversion,  // exact bisection per draw
  table,             // tabulated quantile, exact in the extreme tails
  reflected_walk,    // U_m / (2 m^2); approximate, for cross-checks
};

namespace detail {

inline constexpr int kThetaTableSize = 65536;

/// Quantiles of 2 theta at u = i / kThetaTableSize.
inline const std::vector<double>& theta_table() {
  static const std::vector<double> table = [] {
    std::vector<double> q(kThetaTableSize + 1);
    q[0] = 0.0;
    q[kThetaTableSize] = 0.0;  // never used for interpolation
    for (int i = 1; i < kThetaTableSize; ++i) {
      q[static_cast<std::size_t>(i)] =
          theta_quantile(static_cast<double>(i) / kThetaTableSize, 1e-14);
    }
    return q;
  }();
  return table;
}

}  // namespace detail

struct ThetaSampler {
  ThetaMethod method = ThetaMethod::table;
  std::int64_t walk_level = 1000;
  double inversion_tol = 1e-13;

  /// One draw of theta (not 2 theta).
  double operator()(Stream& rng) const {
    switch (method) {
      case ThetaMethod::series_inversion:
        return 0.5 * theta_quantile(rng.uniform_pos() * (1.0 - 0x1.0p-60), inversion_tol);
      case ThetaMethod::table: {
        const double u = rng.uniform();
        const double x = u * detail::kThetaTableSize;
        const auto i = static_cast<int>(x);
        if (i < 1 || i >= detail::kThetaTableSize - 1) {
          return 0.5 * theta_quantile(u > 0.0 ? u : 0x1.0p-60, inversion_tol);
        }
        const auto& q = detail::theta_table();
        const double f = x - i;
        return 0.5 * (q[static_cast<std::size_t>(i)] * (1.0 - f) +
                      q[static_cast<std::size_t>(i) + 1] * f);
      }
      case ThetaMethod::reflected_walk: {
        const double m = static_cast<double>(walk_level);
        return static_cast<double>(sample_reflected_passage(walk_level, rng)) / (2.0 * m * m);
      }
    }
    return 0.0;
  }
};

/// Draw of theta with the default (tabulated) sampler.
inline double sample_theta(Stream& rng) { return ThetaSampler{}(rng); }

inline double sample_theta(const ThetaSampler& sampler, Stream& rng) { return sampler(rng); }

}  // namespace rwsre
