#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace brownlab {

// SplitMix64 finalizer; used as a counter-based generator so that draw k of a
// run depends only on (seed, k) and never on scheduling.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t index, std::uint64_t lane = 0) {
  return splitmix64(splitmix64(seed ^ splitmix64(index)) + lane);
}

// Uniform on the open interval (0, 1).
constexpr double to_unit(std::uint64_t bits) { return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53; }

inline double counter_uniform(std::uint64_t seed, std::uint64_t index, std::uint64_t lane) {
  return to_unit(stream_key(seed, index, lane));
}

}  // namespace brownlab
