#include "coaudit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "coaudit/errors.hpp"

namespace coaudit {

namespace {

bool all_finite(const std::vector<double>& v) {
  return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

double clamp01(double x) { return std::clamp(x, 0.0, 1.0); }

double mean(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

// Mean squared paired displacement (the metric denominators, squared).
double paired_ms(const ResponseProfile& p) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p.perturbed[i] - p.original[i];
    acc += d * d;
  }
  return acc / static_cast<double>(p.size());
}

// Indices sorting `values` non-decreasingly, ties broken by pair_id so the
// witness is deterministic. Metric values do not depend on the tiebreak.
std::vector<std::size_t> sorting_permutation(const std::vector<double>& values,
                                             const std::vector<std::string>& ids) {
  std::vector<std::size_t> perm(values.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::stable_sort(perm.begin(), perm.end(), [&](std::size_t a, std::size_t b) {
    if (values[a] != values[b]) return values[a] < values[b];
    return ids[a] < ids[b];
  });
  return perm;
}

double transport_ms(const ResponseProfile& p, const WCMWitness& w) {
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double d = p.perturbed[w.sort_perturbed[i]] - p.original[w.sort_original[i]];
    acc += d * d;
  }
  return acc / static_cast<double>(p.size());
}

}  // namespace

void ResponseProfile::validate() const {
  if (pair_ids.empty()) throw ValidationError("response profile: empty");
  if (original.size() != pair_ids.size() || perturbed.size() != pair_ids.size()) {
    throw ValidationError("response profile: length mismatch between pair_ids, original, perturbed");
  }
  if (!all_finite(original) || !all_finite(perturbed)) {
    throw ValidationError("response profile: non-finite score");
  }
}

void QuantileGrid::validate() const {
  if (levels.empty()) throw ValidationError("quantile grid: empty");
  double prev = 0.0;
  for (double q : levels) {
    if (!(q > 0.0 && q < 1.0)) {
      throw ValidationError("quantile grid: level outside (0,1)");
    }
    if (q <= prev) throw ValidationError("quantile grid: levels not strictly increasing");
    prev = q;
  }
}

const char* metric_name(MetricKind kind) {
  switch (kind) {
    case MetricKind::QBM: return "QBM";
    case MetricKind::WCM: return "WCM";
    case MetricKind::TI_WCM: return "TI_WCM";
  }
  return "?";
}

MetricKind metric_from_name(const std::string& name) {
  if (name == "QBM" || name == "qbm") return MetricKind::QBM;
  if (name == "WCM" || name == "wcm") return MetricKind::WCM;
  if (name == "TI_WCM" || name == "tiwcm" || name == "ti_wcm") return MetricKind::TI_WCM;
  throw ValidationError("unknown metric: " + name);
}

double empirical_quantile(const std::vector<double>& values, double level) {
  if (values.empty()) throw ValidationError("empirical_quantile: empty input");
  if (!(level > 0.0 && level < 1.0)) throw ValidationError("empirical_quantile: level outside (0,1)");
  if (!all_finite(values)) throw ValidationError("empirical_quantile: non-finite value");

  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();
  const double h = static_cast<double>(n - 1) * level;
  const std::size_t lo = static_cast<std::size_t>(h);
  const double frac = h - static_cast<double>(lo);
  if (lo + 1 >= n) return sorted[n - 1];
  return sorted[lo] + frac * (sorted[lo + 1] - sorted[lo]);
}

ProfileDiagnostics profile_diagnostics(const ResponseProfile& profile) {
  profile.validate();
  ProfileDiagnostics d;
  d.n = profile.size();
  d.mean_original = mean(profile.original);
  d.mean_perturbed = mean(profile.perturbed);
  d.paired_rms = std::sqrt(paired_ms(profile));

  std::vector<double> so = profile.original;
  std::vector<double> sp = profile.perturbed;
  std::sort(so.begin(), so.end());
  std::sort(sp.begin(), sp.end());
  double acc = 0.0;
  for (std::size_t i = 0; i < so.size(); ++i) {
    const double diff = sp[i] - so[i];
    acc += diff * diff;
  }
  d.transport_rms = std::sqrt(acc / static_cast<double>(so.size()));
  return d;
}

MetricValue qbm(const ResponseProfile& profile, const QuantileGrid& grid) {
  profile.validate();
  grid.validate();
  const double denom_ms = paired_ms(profile);
  if (denom_ms == 0.0) return {MetricKind::QBM, 0.0, true};

  double acc = 0.0;
  for (double level : grid.levels) {
    const double d = empirical_quantile(profile.perturbed, level) -
                     empirical_quantile(profile.original, level);
    acc += d * d;
  }
  const double ratio = std::sqrt(acc / static_cast<double>(grid.size()) / denom_ms);
  return {MetricKind::QBM, clamp01(1.0 - ratio), false};
}

std::pair<MetricValue, WCMWitness> wcm(const ResponseProfile& profile) {
  profile.validate();
  WCMWitness witness{sorting_permutation(profile.original, profile.pair_ids),
                     sorting_permutation(profile.perturbed, profile.pair_ids)};
  const double denom_ms = paired_ms(profile);
  if (denom_ms == 0.0) return {{MetricKind::WCM, 0.0, true}, witness};
  const double ratio = std::sqrt(transport_ms(profile, witness) / denom_ms);
  return {{MetricKind::WCM, clamp01(1.0 - ratio), false}, witness};
}

MetricValue ti_wcm(const ResponseProfile& profile) {
  const ProfileDiagnostics d = profile_diagnostics(profile);
  if (d.paired_rms == 0.0) return {MetricKind::TI_WCM, 0.0, true};
  const double mean_gap = d.mean_original - d.mean_perturbed;
  // The radicand is non-negative analytically; the max guards rounding.
  const double radicand = std::max(0.0, d.transport_rms * d.transport_rms - mean_gap * mean_gap);
  const double ratio = std::sqrt(radicand) / d.paired_rms;
  return {MetricKind::TI_WCM, clamp01(1.0 - ratio), false};
}

MetricValue wcm_bruteforce_oracle(const ResponseProfile& profile) {
  profile.validate();
  const std::size_t n = profile.size();
  if (n > 8) throw ValidationError("wcm_bruteforce_oracle: N > 8");
  const double denom = paired_ms(profile) * static_cast<double>(n);
  if (denom == 0.0) return {MetricKind::WCM, 0.0, true};

  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  double best = std::numeric_limits<double>::infinity();
  do {
    double cost = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double diff = profile.perturbed[perm[i]] - profile.original[i];
      cost += diff * diff;
    }
    best = std::min(best, cost);
  } while (std::next_permutation(perm.begin(), perm.end()));

  return {MetricKind::WCM, clamp01(1.0 - std::sqrt(best / denom)), false};
}

ContrastValue contrast(const MetricValue& mechanistic, const MetricValue& spurious) {
  if (mechanistic.kind != spurious.kind) {
    throw ValidationError("contrast: metric kind mismatch");
  }
  return {mechanistic.kind, mechanistic.value, spurious.value,
          spurious.value - mechanistic.value};
}

}  // namespace coaudit
