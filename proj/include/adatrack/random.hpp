#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace adatrack {

/// splitmix64 finaliser.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and stream labels.
inline std::uint64_t deriveSeed(std::uint64_t base, std::initializer_list<std::uint64_t> labels) {
  std::uint64_t s = mix64(base);
  for (std::uint64_t l : labels) s = mix64(s ^ mix64(l + 0x632be59bd9b4e019ULL));
  return s;
}

using Rng = std::mt19937_64;

}  // namespace adatrack
