#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace stsvd {

// Counter-based normal generator: value i of stream s under seed k is a pure
// function of (k, s, i), so fills are reproducible regardless of the order or
// thread in which entries are generated.

enum class RandomStream : std::uint64_t {
  Sketch = 0x736b6574636800ULL,
  Noise = 0x6e6f69736500ULL,
  Bench = 0x62656e636800ULL,
  Test = 0x7465737400ULL,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Uniform in (0, 1], never zero so the log in Box-Muller is finite.
constexpr double unit_open_closed(std::uint64_t bits) noexcept {
  return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
}

inline double standard_normal_at(std::uint64_t seed, RandomStream stream,
                                 std::uint64_t index) noexcept {
  const std::uint64_t key = splitmix64(seed ^ static_cast<std::uint64_t>(stream));
  const std::uint64_t a = splitmix64(key ^ splitmix64(2 * index));
  const std::uint64_t b = splitmix64(key ^ splitmix64(2 * index + 1));
  const double u1 = unit_open_closed(a);
  const double u2 = unit_open_closed(b);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace stsvd
