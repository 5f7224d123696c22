#pragma once

// Config-driven audit orchestration: ingest records and priors, build
// matched perturbation pairs per (model seed, operator), score, compute
// metrics with bootstrap intervals, and emit deterministic CSV/JSON reports.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "coaudit/intervention.hpp"
#include "coaudit/metrics.hpp"
#include "coaudit/scoring.hpp"
#include "coaudit/stats.hpp"

namespace coaudit {

struct AdapterSpec {
  std::string kind = "synthetic";  // synthetic | file_exchange | subprocess

  // synthetic
  SyntheticModelSpec synthetic;
  std::vector<std::uint64_t> model_seeds{0};

  // file_exchange
  std::string request_path;
  std::string response_path;
  int poll_interval_ms = 50;
  int timeout_ms = 60000;

  // subprocess
  std::string command;
};

struct AuditConfig {
  std::string model_id = "model";
  std::string audit_set_path;
  std::string priors_path;
  std::string class_table_path;  // optional; default partition when empty
  std::string output_dir;

  std::vector<OperatorKind> operators{OperatorKind::Mask};
  std::vector<MetricKind> metrics{MetricKind::QBM, MetricKind::WCM, MetricKind::TI_WCM};
  std::vector<QuantileGrid> grids{QuantileGrid{{0.25, 0.50, 0.75}}};
  BootstrapConfig bootstrap;
  std::uint64_t master_seed = 0;
  char mask_token = 'X';
  AdapterSpec adapter;

  void validate() const;
  ClassTable load_class_table() const;

  // Parses the JSON config; relative paths resolve against the config file's
  // directory.
  static AuditConfig load_json(const std::string& path);
  nlohmann::json to_json() const;
};

struct AbsoluteRow {
  std::string model;
  std::string seed;      // decimal seed value, or "all" for the aggregate
  std::string op;        // mask | class_substitution | all
  std::string cls;       // mechanistic | spurious
  std::string metric;
  std::string grid;      // "K3", ... for QBM; "-" otherwise
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  bool degenerate = false;
};

struct ContrastRow {
  std::string model;
  std::string op;
  std::string metric;
  double delta = 0.0;  // spurious - mechanistic
  double lower = 0.0;
  double upper = 0.0;
};

struct AurocRow {
  std::string model;
  std::string seed;
  double value = 0.0;
  double lower = 0.0;
  double upper = 0.0;
};

struct MetricReport {
  std::vector<AbsoluteRow> absolute;
  std::vector<ContrastRow> contrasts;
  std::vector<AurocRow> auroc;
  CoverageStats coverage;
  nlohmann::json config_echo;
};

struct SensitivityRow {
  std::string grid;
  std::string model;
  IntervalEstimate mechanistic;
  IntervalEstimate spurious;
  IntervalEstimate delta;
};

// JSON Lines {"pair_id","context","sequence"[,"label"]}. Errors carry line
// numbers; duplicate pair_ids cite both lines. When `alphabet` is non-empty,
// sequences are checked against it.
std::vector<AuditRecord> load_audit_set(const std::string& path, const std::string& alphabet = "");

// JSON Lines {"record_id","indices":[0-based ints]}. Indices are sorted and
// deduplicated on load; semantic validation happens per record later.
std::vector<StructuralPrior> load_priors(const std::string& path);

// Per-pair perturbation seed. Mixing in the operator and model-seed tags
// means adding operators or seeds never perturbs existing scopes.
std::uint64_t derive_sub_seed(std::uint64_t master_seed, const std::string& pair_id,
                              OperatorKind op, std::uint64_t seed_tag);

MetricReport run_audit(const AuditConfig& config);
MetricReport run_audit(const AuditConfig& config, const std::vector<AuditRecord>& records,
                       const std::vector<StructuralPrior>& priors);

// QBM across the K3/K5/K9 grids on the pooled (operator "all") profiles.
std::vector<SensitivityRow> qbm_sensitivity(const AuditConfig& config);
std::vector<SensitivityRow> qbm_sensitivity(const AuditConfig& config,
                                            const std::vector<AuditRecord>& records,
                                            const std::vector<StructuralPrior>& priors);
std::vector<QuantileGrid> sensitivity_grids();

// Writes absolute_metrics.csv, contrasts.csv, plot_deltas.csv, summary.json.
// Reals carry 9 significant digits, '\n' line endings, C locale.
void emit_report(const MetricReport& report, const std::string& out_dir);
void emit_sensitivity(const std::vector<SensitivityRow>& rows, const std::string& out_dir);

// Generates a demo dataset (audit set, priors, class table, ready-to-run
// config) from a small JSON spec.
void generate_synthetic_dataset(const std::string& spec_path, const std::string& out_dir);

// Fixed-format real: %.9g with C locale.
std::string format_real(double value);

}  // namespace coaudit
