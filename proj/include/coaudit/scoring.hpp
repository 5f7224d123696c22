#pragma once

// Black-box scoring contract and response-profile assembly.
//
// The audit only ever sees a scalar raw score per (context, sequence) item.
// Three adapter kinds are provided: a deterministic built-in synthetic model
// for desk-scale validation, a file-exchange adapter, and a subprocess
// line-protocol adapter.

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "coaudit/intervention.hpp"
#include "coaudit/metrics.hpp"

namespace coaudit {

enum class VariantTag { Original, Mechanistic, Spurious };

const char* variant_name(VariantTag tag);  // "orig" | "mech" | "spur"

struct ScoreItem {
  std::string pair_id;
  VariantTag variant = VariantTag::Original;
  std::string context;
  std::string sequence;
};

// Batch-scoring capability. Implementations must be deterministic and
// order-preserving; violations surface as AdapterError from score_batch().
class ScoringAdapter {
 public:
  virtual ~ScoringAdapter() = default;
  virtual std::vector<double> score_batch_impl(const std::vector<ScoreItem>& items) = 0;
};

// Scores a batch and enforces the adapter contract: one finite real per
// item. Throws AdapterError with item attribution otherwise.
std::vector<double> score_batch(ScoringAdapter& adapter, const std::vector<ScoreItem>& items);

enum class ReadSet { PriorOnly, ComplementOnly, Mixed };

ReadSet read_set_from_name(const std::string& name);

// Ground-truth oracle family: score = alpha * g(prior positions)
// + beta * g(complement positions) + noise, where g averages a fixed
// pseudo-random symbol embedding in [-1,1] and the mask token embeds to 0.
// The read_set presets pin (alpha, beta) to (1,0), (0,1), or leave them as
// given.
struct SyntheticModelSpec {
  ReadSet read_set = ReadSet::Mixed;
  double alpha = 1.0;
  double beta = 0.0;
  double noise_sigma = 0.0;
  std::uint64_t model_seed = 0;

  // Effective weights after applying the read_set preset.
  double effective_alpha() const;
  double effective_beta() const;
};

class SyntheticAdapter : public ScoringAdapter {
 public:
  SyntheticAdapter(SyntheticModelSpec spec, std::map<std::string, std::vector<std::size_t>> priors,
                   char mask_token = 'X');

  std::vector<double> score_batch_impl(const std::vector<ScoreItem>& items) override;

  // Single-item evaluation, exposed for oracle tests.
  double score(const std::string& pair_id, const std::string& sequence) const;

  // Embedding lookup e(symbol, column), column = position mod 16.
  double embedding(char symbol, std::size_t column) const;

 private:
  SyntheticModelSpec spec_;
  std::map<std::string, std::vector<std::size_t>> priors_;
  char mask_token_;
  std::vector<double> table_;  // 256 x 16, row-major by symbol
};

// Writes a JSON Lines request file, then polls for a CSV response file
// (header pair_id,variant,score; any row order). Both files are removed
// after a successful exchange.
class FileExchangeAdapter : public ScoringAdapter {
 public:
  FileExchangeAdapter(std::string request_path, std::string response_path,
                      int poll_interval_ms = 50, int timeout_ms = 60000);

  std::vector<double> score_batch_impl(const std::vector<ScoreItem>& items) override;

 private:
  std::string request_path_;
  std::string response_path_;
  int poll_interval_ms_;
  int timeout_ms_;
};

// Spawns `command` (via /bin/sh -c) once per batch, writes one JSON object
// per line to its stdin, and reads one "pair_id,variant,score" line per item
// from its stdout. Nonzero exit or a malformed line aborts the audit with
// the offending line quoted.
class SubprocessAdapter : public ScoringAdapter {
 public:
  explicit SubprocessAdapter(std::string command);

  std::vector<double> score_batch_impl(const std::vector<ScoreItem>& items) override;

 private:
  std::string command_;
};

// Serializes one item as the wire-format JSON object shared by the file and
// subprocess adapters.
std::string score_item_json(const ScoreItem& item);

struct ProfilePair {
  ResponseProfile mechanistic;
  ResponseProfile spurious;
};

// Scores originals once and both variants, ordered by ascending pair_id.
ProfilePair build_response_profiles(ScoringAdapter& adapter, const std::vector<AuditUnit>& units,
                                    const std::vector<MatchedVariantPair>& pairs);

// Single-class convenience wrapper.
ResponseProfile build_response_profile(ScoringAdapter& adapter, const std::vector<AuditUnit>& units,
                                       const std::vector<MatchedVariantPair>& pairs,
                                       VariantTag selector);

}  // namespace coaudit
