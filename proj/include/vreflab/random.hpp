#pragma once

// Counter-based Gaussian draws: draw k of sample i is a pure function of
// (seed, i, k), so Monte Carlo results do not depend on evaluation order.

#include <cmath>
#include <cstdint>
#include <numbers>

namespace vreflab {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

class CounterStream {
 public:
  CounterStream(std::uint64_t seed, std::uint64_t sample) noexcept
      : key_(splitmix64(splitmix64(seed) ^ splitmix64(sample + 0x632BE59BD9B4E019ULL))) {}

  /// Uniform in (0, 1) from counter k.
  double uniform(std::uint64_t k) const noexcept {
    const std::uint64_t bits = splitmix64(key_ ^ splitmix64(k));
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal for draw index k (Box-Muller on counters 2k, 2k+1).
  double normal(std::uint64_t k) const noexcept {
    const double u1 = uniform(2 * k);
    const double u2 = uniform(2 * k + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

 private:
  std::uint64_t key_;
};

}  // namespace vreflab
