#pragma once

#include <cstdint>
#include <vector>

#include "rwsre/env.hpp"

namespace testutil {

// Environment on indices -left..right. The leftmost site pushes right with
// probability one, so the window is exact for the walk.
inline rwsre::Environment walled(std::int64_t left, std::vector<std::int64_t> xi,
                                 std::vector<double> lambda) {
  lambda.front() = 1.0;
  return rwsre::Environment(-left, std::move(xi), std::move(lambda));
}

// Random small environment: gaps in [1, max_gap], drifts in [lo, hi].
inline rwsre::Environment small_random(rwsre::Stream& rng, std::int64_t left, std::int64_t right,
                                       std::int64_t max_gap, double lo = 0.3, double hi = 0.85) {
  std::vector<std::int64_t> xi;
  std::vector<double> lam;
  for (std::int64_t k = -left; k <= right; ++k) {
    xi.push_back(1 + static_cast<std::int64_t>(rng.uniform() * static_cast<double>(max_gap)));
    lam.push_back(lo + (hi - lo) * rng.uniform());
  }
  return walled(left, std::move(xi), std::move(lam));
}

}  // namespace testutil
