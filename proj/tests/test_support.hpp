#pragma once

// Shared helpers for the test suites: profile builders and pseudo-random
// profile generation on a pinned SplitMix64 stream.

#include <string>
#include <vector>

#include "coaudit/metrics.hpp"
#include "coaudit/prng.hpp"

namespace coaudit::testing {

inline ResponseProfile make_profile(std::vector<double> original,
                                    std::vector<double> perturbed) {
  ResponseProfile p;
  for (std::size_t i = 0; i < original.size(); ++i) {
    p.pair_ids.push_back("p" + std::to_string(i));
  }
  p.original = std::move(original);
  p.perturbed = std::move(perturbed);
  return p;
}

// Scores in [-scale, scale]; occasionally correlated perturbations so both
// near-coherent and incoherent profiles appear.
inline ResponseProfile random_profile(std::uint64_t seed, std::size_t n, double scale = 10.0) {
  SplitMix64 rng(seed);
  std::vector<double> original(n), perturbed(n);
  const bool correlated = (rng.next() & 1) != 0;
  const double shift = scale * (2.0 * rng.next_unit() - 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    original[i] = scale * (2.0 * rng.next_unit() - 1.0);
    perturbed[i] = correlated ? original[i] + shift + 0.1 * scale * (2.0 * rng.next_unit() - 1.0)
                              : scale * (2.0 * rng.next_unit() - 1.0);
  }
  return make_profile(std::move(original), std::move(perturbed));
}

}  // namespace coaudit::testing
