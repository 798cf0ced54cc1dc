#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace ossa {

// SplitMix64 (Steele, Lea, Flood 2014). Every draw is defined by 64-bit
// unsigned wrap-around arithmetic, so generated datasets are identical on
// every platform.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi]; multiply-shift reduction.
  std::uint64_t uniform_int(std::uint64_t lo, std::uint64_t hi) {
    std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();
    return lo + static_cast<std::uint64_t>((static_cast<unsigned __int128>(next()) * span) >> 64);
  }

  // Index drawn proportionally to non-negative weights; the weights must
  // have a positive sum.
  std::size_t weighted(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    double target = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      last_positive = i;
      acc += weights[i];
      if (target < acc) return i;
    }
    return last_positive;
  }

  static constexpr std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Seed for an independent stream identified by (seed, keys...).
  static constexpr std::uint64_t stream(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
    std::uint64_t h = mix(seed + 0x9E3779B97F4A7C15ULL);
    for (std::uint64_t k : keys) h = mix(h ^ (k + 0x9E3779B97F4A7C15ULL + (h << 6) + (h >> 2)));
    return h;
  }

 private:
  std::uint64_t state_;
};

}  // namespace ossa
