// Seed-stream derivation. Every random choice in the project draws from an
// explicitly passed std::mt19937_64; streams are derived from a master seed
// plus a path of tags so that independent components never share a stream.
#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace qfed {

// splitmix64 finalizer; good avalanche, cheap, stable across platforms.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derive a child seed from a master seed and a tag path, e.g.
// derive_seed(master, {kShuffle, round, client}).
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> path) {
  std::uint64_t s = mix64(master);
  for (std::uint64_t tag : path) s = mix64(s ^ mix64(tag));
  return s;
}

inline std::mt19937_64 make_rng(std::uint64_t seed) {
  return std::mt19937_64(seed);
}

inline std::mt19937_64 make_rng(std::uint64_t master,
                                std::initializer_list<std::uint64_t> path) {
  return std::mt19937_64(derive_seed(master, path));
}

}  // namespace qfed
