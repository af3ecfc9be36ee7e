#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace channelion::rng {

using Engine = std::mt19937_64;

/// SplitMix64 finaliser; bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derive a child seed from a parent seed and a path of indices. Equal
/// paths give equal seeds; distinct paths give statistically independent
/// streams.
constexpr std::uint64_t derive(std::uint64_t seed,
                               std::initializer_list<std::uint64_t> path) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

/// Independent generator for work item `index` under `seed`. Results never
/// depend on which worker executes the item.
inline Engine substream(std::uint64_t seed, std::uint64_t index) {
  return Engine(derive(seed, {index}));
}

}  // namespace channelion::rng
