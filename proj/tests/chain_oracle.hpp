#pragma once

// Exact hitting quantities of the nearest-neighbour chain by direct linear
// solves on the integer sites of a window. Independent of the potential
// formulas under test.

#include <cstdint>
#include <vector>

#include "rwsre/env.hpp"

namespace oracle {

// Solves a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i.
inline std::vector<double> thomas(std::vector<double> a, std::vector<double> b,
                                  std::vector<double> c, std::vector<double> d) {
  const std::size_t n = b.size();
  for (std::size_t i = 1; i < n; ++i) {
    const double m = a[i] / b[i - 1];
    b[i] -= m * c[i - 1];
    d[i] -= m * d[i - 1];
  }
  std::vector<double> x(n);
  x[n - 1] = d[n - 1] / b[n - 1];
  for (std::size_t i = n - 1; i-- > 0;) x[i] = (d[i] - c[i] * x[i + 1]) / b[i];
  return x;
}

// Probability of a step to the right from integer site x.
inline double p_right(const rwsre::Environment& env, std::int64_t x) {
  const auto j = env.index_at_or_below(x);
  return env.S(j) == x ? env.lambda(j) : 0.5;
}

// P_x[hit hi before lo] for lo < x < hi; index x - lo.
inline std::vector<double> exit_right(const rwsre::Environment& env, std::int64_t lo,
                                      std::int64_t hi) {
  const auto n = static_cast<std::size_t>(hi - lo - 1);
  std::vector<double> a(n), b(n, 1.0), c(n), d(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = lo + 1 + static_cast<std::int64_t>(i);
    const double p = p_right(env, x);
    a[i] = -(1.0 - p);
    c[i] = -p;
    if (i + 1 == n) d[i] = p;  // boundary value 1 at hi
  }
  a[0] = 0.0;
  c[n - 1] = 0.0;
  auto v = thomas(a, b, c, d);
  v.insert(v.begin(), 0.0);
  v.push_back(1.0);
  return v;
}

struct Hitting {
  std::vector<double> mean;    // E_x tau, x = S_min .. target
  std::vector<double> second;  // E_x tau^2
};

// First and second moments of the hitting time of `target` from every site
// of [S_min, target]; the leftmost site must push right with probability one.
inline Hitting hitting_moments(const rwsre::Environment& env, std::int64_t target) {
  const auto lo = env.S(env.min_index());
  const auto n = static_cast<std::size_t>(target - lo);
  std::vector<double> a(n), b(n, 1.0), c(n), d(n, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double p = p_right(env, lo + static_cast<std::int64_t>(i));
    a[i] = i == 0 ? 0.0 : -(1.0 - p);
    c[i] = i + 1 == n ? 0.0 : -p;
  }
  Hitting h;
  h.mean = thomas(a, b, c, d);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = 2.0 * h.mean[i] - 1.0;
  h.second = thomas(a, b, c, d2);
  h.mean.push_back(0.0);
  h.second.push_back(0.0);
  return h;
}

}  // namespace oracle
