#pragma once
// Seed derivation for reproducible sub-streams.

#include <cstdint>

namespace posbias {

// splitmix64 step; used to derive independent seeds from (seed, tag) pairs so
// that stages and trials get decorrelated deterministic streams.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace posbias
