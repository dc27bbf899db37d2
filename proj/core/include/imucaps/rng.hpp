#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace imucaps {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed: h = splitmix64(seed), then
/// h = splitmix64(h ^ index) for each index in order.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::initializer_list<std::uint64_t> indices) noexcept {
  std::uint64_t h = splitmix64(seed);
  for (auto index : indices) h = splitmix64(h ^ index);
  return h;
}

inline double uniform(Engine& engine, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine);
}

}  // namespace imucaps
