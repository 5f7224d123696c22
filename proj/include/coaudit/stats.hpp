#pragma once

// Percentile bootstrap over audit pairs, seed aggregation, and AUROC.
//
// Resampling always operates on pair indices and applies the same resampled
// index multiset to every aligned profile, so a contrast statistic sees the
// same pairs on both of its sides within a replicate.

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "coaudit/metrics.hpp"

namespace coaudit {

struct BootstrapConfig {
  std::size_t replicates = 100;
  double confidence = 0.95;
  std::uint64_t boot_seed = 0;

  void validate() const;
};

struct IntervalEstimate {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::string method = "percentile_bootstrap";
};

struct LabeledScore {
  double score = 0.0;
  int label = 0;  // binary
};

// One or more index-aligned profiles sharing pair_id order; the statistic is
// any deterministic functional of the bundle.
using ProfileBundle = std::vector<ResponseProfile>;
using ProfileStatistic = std::function<double(const ProfileBundle&)>;

// Percentile bootstrap: point = statistic on the full bundle; interval from
// B replicates, each resampling pair indices with replacement via a
// SplitMix64 stream derived from (boot_seed, replicate_index).
IntervalEstimate bootstrap_ci(const ProfileBundle& bundle, const ProfileStatistic& statistic,
                              const BootstrapConfig& config);

// Probability a random positive outranks a random negative, ties 1/2
// (Mann-Whitney form). Throws ValidationError on single-class input.
double auroc(const std::vector<LabeledScore>& items);

// Seed aggregation: point = mean of per-seed statistic values; each
// bootstrap replicate draws one index resample and applies it to every
// seed's bundle before recomputing and averaging. All bundles must share
// the pair_id order.
IntervalEstimate aggregate_seeds(const std::vector<double>& per_seed_values,
                                 const std::vector<ProfileBundle>& per_seed_bundles,
                                 const ProfileStatistic& statistic,
                                 const BootstrapConfig& config);

// Resamples every profile in the bundle at the given pair indices.
ProfileBundle resample_bundle(const ProfileBundle& bundle,
                              const std::vector<std::size_t>& indices);

}  // namespace coaudit
