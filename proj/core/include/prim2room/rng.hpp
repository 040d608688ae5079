#pragma once

#include <cstdint>
#include <random>

namespace p2r {

/// splitmix64 step; used to derive independent per-purpose seeds from one
/// user-facing 64-bit seed.
inline uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d4a2b5bf8b2f09ULL;
  return z ^ (z >> 31);
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt) {
  return mix_seed(seed ^ mix_seed(salt));
}

inline uint64_t mix_seed(uint64_t seed, uint64_t salt_a, uint64_t salt_b) {
  return mix_seed(mix_seed(seed, salt_a), salt_b);
}

inline std::mt19937_64 make_rng(uint64_t seed) { return std::mt19937_64(seed); }

}  // namespace p2r
