#pragma once

// First passage of the reflected simple random walk |Y| to a level m.

#include <cstdint>

#include "rwsre/errors.hpp"
#include "rwsre/random.hpp"

namespace rwsre {

struct ReflectedPassage {
  std::uint64_t time = 0;         // U_m
  std::uint64_t zero_returns = 0;  // visits to 0 after time 0
};

/// Exact draw of U_m together with the number of returns to 0.
///
/// Away from 0 and m the walk advances 64 fair steps per random word. A chunk
/// started at distance >= 64 from both ends can touch an end only on its last
/// step, so first-passage times are unaffected.
inline ReflectedPassage sample_reflected_passage_detail(std::int64_t m, Stream& rng) {
  if (m < 1) throw ValidationError("reflected passage level must be >= 1");
  ReflectedPassage r;
  std::int64_t x = 0;
  while (x < m) {
    if (x == 0) {
      x = 1;
      ++r.time;
    } else if (x >= 64 && x <= m - 64) {
      x += rng.steps64();
      r.time += 64;
      if (x == 0) ++r.zero_returns;
    } else {
      x += rng.bit() ? 1 : -1;
      ++r.time;
      if (x == 0) ++r.zero_returns;
    }
  }
  return r;
}

inline std::uint64_t sample_reflected_passage(std::int64_t m, Stream& rng) {
  return sample_reflected_passage_detail(m, rng).time;
}

}  // namespace rwsre
