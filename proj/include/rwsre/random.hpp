#pragma once

// Deterministic random streams.
//
// Every random quantity in the library is drawn from a `Stream` that the
// caller owns. Substreams are keyed by (master seed, env index, replica
// index, purpose) through `derive_seed`, so results never depend on the order
// in which workers pick up tasks.

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

namespace rwsre {

/// SplitMix64 finalizer. Used both for seeding and for key mixing.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Purposes tag independent substreams drawn for the same (env, replica).
enum class Purpose : std::uint64_t {
  environment = 1,
  environment_left = 2,
  walk = 3,
  theta = 4,
  limit = 5,
  point_process = 6,
  subordinator = 7,
  inner = 8,
  generic = 99,
};

/// Substream key derivation, recorded in output metadata as
/// "splitmix64-chain-v1": k = sm(sm(sm(sm(master) ^ env) ^ replica) ^ purpose).
inline constexpr const char* kSubstreamScheme = "splitmix64-chain-v1";

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t env_index,
                                    std::uint64_t replica, Purpose purpose) noexcept {
  std::uint64_t k = splitmix64(master);
  k = splitmix64(k ^ env_index);
  k = splitmix64(k ^ replica);
  k = splitmix64(k ^ static_cast<std::uint64_t>(purpose));
  return k;
}

/// xoshiro256** generator with library-defined (platform independent)
/// conversions to uniform, exponential and geometric variates.
class Stream {
 public:
  explicit Stream(std::uint64_t seed = 0) noexcept { reseed(seed); }

  Stream(std::uint64_t master, std::uint64_t env_index, std::uint64_t replica,
         Purpose purpose) noexcept
      : Stream(derive_seed(master, env_index, replica, purpose)) {}

  void reseed(std::uint64_t seed) noexcept {
    seed_ = seed;
    std::uint64_t x = seed;
    for (auto& w : s_) {
      x += 0x9e3779b97f4a7c15ULL;
      w = splitmix64(x);
    }
    bit_buf_ = 0;
    bit_left_ = 0;
  }

  [[nodiscard]] std::uint64_t seed() const noexcept { return seed_; }

  std::uint64_t next() noexcept {
    const std::uint64_t result = std::rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = std::rotl(s_[3], 45);
    return result;
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1].
  double uniform_pos() noexcept {
    return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
  }

  /// One fair bit, served from a cached 64-bit word.
  bool bit() noexcept {
    if (bit_left_ == 0) {
      bit_buf_ = next();
      bit_left_ = 64;
    }
    const bool b = bit_buf_ & 1u;
    bit_buf_ >>= 1;
    --bit_left_;
    return b;
  }

  /// Bernoulli(p).
  bool bernoulli(double p) noexcept { return uniform() < p; }

  double exponential() noexcept { return -std::log(uniform_pos()); }

  /// Number of failures before the first success, success probability p.
  std::uint64_t geometric_failures(double p) noexcept {
    if (p >= 1.0) return 0;
    if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
    const double g = std::floor(std::log(uniform_pos()) / std::log1p(-p));
    if (g >= 9.2e18) return std::numeric_limits<std::uint64_t>::max();
    return static_cast<std::uint64_t>(g);
  }

  /// Sum of 64 fair +-1 steps.
  int steps64() noexcept { return 2 * std::popcount(next()) - 64; }

 private:
  std::uint64_t s_[4]{};
  std::uint64_t seed_ = 0;
  std::uint64_t bit_buf_ = 0;
  int bit_left_ = 0;
};

/// Provenance of a random draw, carried into every output record.
struct SeedMeta {
  std::uint64_t master = 0;
  std::uint64_t env_index = 0;
  std::uint64_t replica = 0;
  std::uint64_t purpose = 0;
  std::string scheme = kSubstreamScheme;

  [[nodiscard]] std::uint64_t key() const noexcept {
    return derive_seed(master, env_index, replica, static_cast<Purpose>(purpose));
  }
  bool operator==(const SeedMeta&) const = default;
};

}  // namespace rwsre
