#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace gssl {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Independent stream for a named consumer of a run seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : tag) h = (h ^ c) * 1099511628211ULL;
  return splitmix64(seed ^ splitmix64(h));
}

inline std::uint64_t derive_seed(std::uint64_t seed, std::string_view tag, std::uint64_t k) {
  return splitmix64(derive_seed(seed, tag) + k);
}

/// Uniform in [0, 1) built from the top 53 bits, so results do not depend on
/// the standard library's distribution implementation.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

/// Uniform integer in [0, n), n > 0.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  return static_cast<std::uint64_t>(uniform01(rng) * static_cast<double>(n)) % n;
}

/// Standard normal draw (Box-Muller, one value per call).
inline double normal01(Rng& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

}  // namespace gssl
