#pragma once

// Coherence metrics over paired raw-score profiles.
//
// All three metrics compare the paired (input-wise) output displacement with
// a distributional displacement and report one minus the ratio, clamped to
// [0,1]. QBM uses quantile displacement on a fixed grid, WCM the optimal
// (sorted-matching) transport displacement, TI-WCM the transport displacement
// with the mean shift removed.

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

namespace coaudit {

// Paired original/perturbed raw scores over one auditing set, index-aligned
// by pair_id.
struct ResponseProfile {
  std::vector<std::string> pair_ids;
  std::vector<double> original;
  std::vector<double> perturbed;

  std::size_t size() const { return pair_ids.size(); }

  // Throws ValidationError on length mismatch, emptiness, or non-finite
  // scores.
  void validate() const;
};

// Strictly increasing quantile levels, each in the open interval (0,1).
struct QuantileGrid {
  std::vector<double> levels;

  std::size_t size() const { return levels.size(); }
  void validate() const;

  // Grid id used in reports: "K3" for three levels and so on.
  std::string id() const { return "K" + std::to_string(levels.size()); }
};

enum class MetricKind { QBM, WCM, TI_WCM };

const char* metric_name(MetricKind kind);
MetricKind metric_from_name(const std::string& name);

struct MetricValue {
  MetricKind kind = MetricKind::WCM;
  double value = 0.0;
  // Set when the paired displacement is zero: the perturbation did not move
  // any output, the identity coupling is optimal, and the metric is 0 by
  // convention.
  bool degenerate = false;
};

// Shared per-profile diagnostics. All RMS quantities carry the 1/N factor.
struct ProfileDiagnostics {
  double mean_original = 0.0;
  double mean_perturbed = 0.0;
  double paired_rms = 0.0;     // l2 displacement of the natural pairing
  double transport_rms = 0.0;  // W2 displacement of the monotone matching
  std::size_t n = 0;
};

// The two sorting permutations realizing the monotone matching. Composing
// them gives an optimal assignment for the WCM numerator.
struct WCMWitness {
  std::vector<std::size_t> sort_original;
  std::vector<std::size_t> sort_perturbed;
};

struct ContrastValue {
  MetricKind kind = MetricKind::WCM;
  double mechanistic = 0.0;
  double spurious = 0.0;
  double delta = 0.0;  // spurious - mechanistic
};

// Linear-interpolation order-statistic quantile: h = (N-1) * level,
// result = v[floor(h)] + frac(h) * (v[floor(h)+1] - v[floor(h)]).
// Positively homogeneous and translation-equivariant, which the metric
// invariances below rely on.
double empirical_quantile(const std::vector<double>& values, double level);

ProfileDiagnostics profile_diagnostics(const ResponseProfile& profile);

MetricValue qbm(const ResponseProfile& profile, const QuantileGrid& grid);

std::pair<MetricValue, WCMWitness> wcm(const ResponseProfile& profile);

MetricValue ti_wcm(const ResponseProfile& profile);

// Literal minimum over all N! assignments. Test oracle only; requires N <= 8.
MetricValue wcm_bruteforce_oracle(const ResponseProfile& profile);

ContrastValue contrast(const MetricValue& mechanistic, const MetricValue& spurious);

}  // namespace coaudit
