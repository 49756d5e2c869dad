#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace adgda {

// Purpose tags for the counter-based stream split. Every random draw in a run
// comes from a stream keyed by (seed, node, round, purpose), so results do not
// depend on the order in which nodes are processed.
enum class StreamPurpose : std::uint64_t {
  kMinibatch = 1,
  kCompression = 2,
  kPlacement = 3,
  kDataGeneration = 4,
  kInit = 5,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t node, std::uint64_t round,
                                   StreamPurpose purpose) noexcept {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ node);
  h = splitmix64(h ^ (round * 0x632be59bd9b4e019ULL));
  return splitmix64(h ^ static_cast<std::uint64_t>(purpose));
}

using Rng = std::mt19937_64;

inline Rng make_stream(std::uint64_t seed, std::uint64_t node, std::uint64_t round,
                       StreamPurpose purpose) {
  return Rng(stream_key(seed, node, round, purpose));
}

// std::uniform_real_distribution is implementation-defined; this keeps the
// draws identical across standard libraries.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double standard_normal(Rng& rng) {
  // Box-Muller, one variate per call.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t x = rng();
  while (x >= limit) x = rng();
  return x % n;
}

}  // namespace adgda
