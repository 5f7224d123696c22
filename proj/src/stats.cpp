#include "coaudit/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "coaudit/errors.hpp"
#include "coaudit/prng.hpp"

namespace coaudit {

namespace {

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::size_t> indices(n);
  for (auto& idx : indices) idx = static_cast<std::size_t>(rng.next_below(n));
  return indices;
}

void check_alignment(const ProfileBundle& bundle) {
  if (bundle.empty()) throw ValidationError("bootstrap: empty bundle");
  for (const auto& p : bundle) {
    p.validate();
    if (p.pair_ids != bundle.front().pair_ids) {
      throw ValidationError("bootstrap: bundle profiles not pair_id aligned");
    }
  }
}

IntervalEstimate percentile_interval(double point, std::vector<double> replicates,
                                     double confidence) {
  const double tail = (1.0 - confidence) / 2.0;
  IntervalEstimate est;
  est.point = point;
  est.lower = empirical_quantile(replicates, tail);
  est.upper = empirical_quantile(replicates, 1.0 - tail);
  return est;
}

}  // namespace

void BootstrapConfig::validate() const {
  if (replicates < 1) throw ValidationError("bootstrap config: replicates < 1");
  if (!(confidence > 0.0 && confidence < 1.0)) {
    throw ValidationError("bootstrap config: confidence outside (0,1)");
  }
}

ProfileBundle resample_bundle(const ProfileBundle& bundle,
                              const std::vector<std::size_t>& indices) {
  ProfileBundle out;
  out.reserve(bundle.size());
  for (const auto& p : bundle) {
    ResponseProfile r;
    r.pair_ids.reserve(indices.size());
    r.original.reserve(indices.size());
    r.perturbed.reserve(indices.size());
    for (std::size_t idx : indices) {
      r.pair_ids.push_back(p.pair_ids[idx]);
      r.original.push_back(p.original[idx]);
      r.perturbed.push_back(p.perturbed[idx]);
    }
    out.push_back(std::move(r));
  }
  return out;
}

IntervalEstimate bootstrap_ci(const ProfileBundle& bundle, const ProfileStatistic& statistic,
                              const BootstrapConfig& config) {
  config.validate();
  check_alignment(bundle);

  const double point = statistic(bundle);
  const std::size_t n = bundle.front().size();
  std::vector<double> replicates;
  replicates.reserve(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const auto indices = resample_indices(n, mix_seed({config.boot_seed, r}));
    try {
      replicates.push_back(statistic(resample_bundle(bundle, indices)));
    } catch (const std::exception& e) {
      throw ValidationError("bootstrap: statistic failed on replicate " + std::to_string(r) +
                            ": " + e.what());
    }
  }
  return percentile_interval(point, std::move(replicates), config.confidence);
}

double auroc(const std::vector<LabeledScore>& items) {
  std::size_t positives = 0;
  for (const auto& item : items) {
    if (item.label != 0 && item.label != 1) throw ValidationError("auroc: non-binary label");
    if (!std::isfinite(item.score)) throw ValidationError("auroc: non-finite score");
    positives += static_cast<std::size_t>(item.label);
  }
  const std::size_t negatives = items.size() - positives;
  if (positives == 0 || negatives == 0) throw ValidationError("auroc: single-class input");

  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });

  // Rank-sum with average ranks on ties.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < order.size()) {
    std::size_t j = i;
    while (j < order.size() && items[order[j]].score == items[order[i]].score) ++j;
    const double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (items[order[k]].label == 1) positive_rank_sum += avg_rank;
    }
    i = j;
  }
  const double p = static_cast<double>(positives);
  const double u = positive_rank_sum - p * (p + 1.0) / 2.0;
  return u / (p * static_cast<double>(negatives));
}

IntervalEstimate aggregate_seeds(const std::vector<double>& per_seed_values,
                                 const std::vector<ProfileBundle>& per_seed_bundles,
                                 const ProfileStatistic& statistic,
                                 const BootstrapConfig& config) {
  config.validate();
  if (per_seed_values.empty() || per_seed_values.size() != per_seed_bundles.size()) {
    throw ValidationError("aggregate_seeds: per-seed values and bundles misaligned");
  }
  for (const auto& bundle : per_seed_bundles) {
    check_alignment(bundle);
    if (bundle.front().pair_ids != per_seed_bundles.front().front().pair_ids) {
      throw ValidationError("aggregate_seeds: pair_id sets differ across seeds");
    }
  }

  const double point =
      std::accumulate(per_seed_values.begin(), per_seed_values.end(), 0.0) /
      static_cast<double>(per_seed_values.size());

  const std::size_t n = per_seed_bundles.front().front().size();
  std::vector<double> replicates;
  replicates.reserve(config.replicates);
  for (std::size_t r = 0; r < config.replicates; ++r) {
    const auto indices = resample_indices(n, mix_seed({config.boot_seed, r}));
    double sum = 0.0;
    for (const auto& bundle : per_seed_bundles) {
      sum += statistic(resample_bundle(bundle, indices));
    }
    replicates.push_back(sum / static_cast<double>(per_seed_bundles.size()));
  }
  return percentile_interval(point, std::move(replicates), config.confidence);
}

}  // namespace coaudit
