#pragma once

// SplitMix64 generator plus seed-derivation helpers.
//
// Chosen because the whole pipeline must be reproducible bit-for-bit across
// platforms and across reimplementations: one 64-bit state, no floating
// point in the core, trivially portable.
//
// Steele, Lea, Flood, "Fast splittable pseudorandom number generators",
// OOPSLA 2014; public-domain reference by Vigna.

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <string_view>
#include <vector>

namespace coaudit {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform draw in [0, 1).
  double next_unit() {
    return static_cast<double>(next() >> 11) * 0x1.0p-53;
  }

  // Uniform draw in [0, bound) via modulo reduction. The tiny modulo bias is
  // accepted deliberately: the reduction is the easiest rule to pin across
  // languages, and bounds here are far below 2^32.
  std::uint64_t next_below(std::uint64_t bound) {
    return next() % bound;
  }

 private:
  std::uint64_t state_;
};

// Folds an ordered list of 64-bit parts into one seed. Each part passes
// through a full SplitMix64 output step, so swapping or reordering parts
// changes the result.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t acc = 0x243F6A8885A308D3ULL;  // pi fractional bits
  for (std::uint64_t p : parts) {
    SplitMix64 g(acc ^ p);
    acc = g.next();
  }
  return acc;
}

// FNV-1a, 64-bit. Stable string hash for pair_id -> seed derivation.
inline std::uint64_t stable_hash64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Uniform sample without replacement of k indices from a sorted pool,
// via partial Fisher-Yates. Result is sorted ascending.
inline std::vector<std::size_t> sample_without_replacement(
    std::vector<std::size_t> pool, std::size_t k, std::uint64_t seed) {
  SplitMix64 rng(seed);
  const std::size_t n = pool.size();
  for (std::size_t i = 0; i < k && i + 1 < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.next_below(n - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k < n ? k : n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace coaudit
