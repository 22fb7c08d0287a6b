#pragma once

// Counter-based random numbers. Every (master seed, shot, mode) triple owns
// an independent Philox4x32-10 key, so a triplet's seed never depends on
// which worker draws it or in what order.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <utility>

namespace twinwave {

inline constexpr const char* rng_algorithm = "philox4x32-10/splitmix64-key";

inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// 64-bit substream key for (seed, shot, mode).
inline constexpr std::uint64_t substream_key(std::uint64_t seed, std::uint64_t shot, std::uint64_t mode) {
  return splitmix64(splitmix64(splitmix64(seed) ^ shot) ^ mode);
}

class Philox4x32 {
 public:
  using Block = std::array<std::uint32_t, 4>;

  explicit Philox4x32(std::uint64_t key) : key_{static_cast<std::uint32_t>(key), static_cast<std::uint32_t>(key >> 32)} {}

  /// Ten-round Philox bijection of `counter` under the stream key.
  Block block(std::uint64_t counter) const {
    return bijection({static_cast<std::uint32_t>(counter), static_cast<std::uint32_t>(counter >> 32), 0u, 0u});
  }

  /// Full 128-bit counter form (known-answer tests).
  Block bijection(Block ctr) const {
    std::array<std::uint32_t, 2> k = key_;
    for (int round = 0; round < 10; ++round) {
      const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
      const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
      ctr = {static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ k[0], static_cast<std::uint32_t>(p1),
             static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ k[1], static_cast<std::uint32_t>(p0)};
      k[0] += kWeyl0;
      k[1] += kWeyl1;
    }
    return ctr;
  }

 private:
  static constexpr std::uint32_t kMul0 = 0xD2511F53u;
  static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
  static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
  static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;
  std::array<std::uint32_t, 2> key_;
};

/// Sequential view of one Philox substream: uniforms and normals.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : gen_(key) {}
  RandomStream(std::uint64_t seed, std::uint64_t shot, std::uint64_t mode) : gen_(substream_key(seed, shot, mode)) {}

  /// Uniform in (0, 1) with 53 random bits; never returns exactly 0 or 1.
  double uniform() {
    const auto b = gen_.block(counter_++);
    const std::uint64_t bits = (static_cast<std::uint64_t>(b[0]) << 21) ^ (static_cast<std::uint64_t>(b[1]) >> 11);
    return (static_cast<double>(bits & ((1ULL << 53) - 1)) + 0.5) * 0x1.0p-53;
  }

  /// Pair of independent standard normals (Box-Muller).
  std::pair<double, double> normal_pair() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

  double exponential(double mean) { return -mean * std::log(uniform()); }

 private:
  Philox4x32 gen_;
  std::uint64_t counter_ = 0;
};

}  // namespace twinwave
