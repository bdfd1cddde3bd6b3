#pragma once

// Deterministic random-number plumbing. Every stochastic routine in the
// library takes an explicit Rng so results are reproducible from a seed.

#include <cstdint>
#include <random>
#include <vector>

#include "rayreg/errors.hpp"

namespace rayreg {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Seed for an independent stream `index` under a master seed. Streams for
// different indices are decorrelated by the mixer, so replications can run
// in any order or in parallel.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) noexcept {
  return mix64(mix64(master) ^ index);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

// Uniform variate on the open interval (0,1) with 53 random bits. Unlike
// std::uniform_real_distribution the mapping is fixed, so streams are
// identical across standard libraries.
inline double uniform_open01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

// Unbiased integer in [0, n) by rejection.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = Rng::max() - (Rng::max() % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

// First `count` entries of a uniformly random permutation of 0..n-1 (partial
// Fisher-Yates). The prefix for count m is a prefix of the one for m+1.
inline std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
  std::vector<std::size_t> pool(n);
  for (std::size_t i = 0; i < n; ++i) pool[i] = i;
  if (count > n) throw DomainError("sample_without_replacement: count exceeds population");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_index(rng, n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(count);
  return pool;
}

}  // namespace rayreg
