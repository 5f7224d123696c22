#include "coaudit/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>

#include "coaudit/errors.hpp"
#include "coaudit/prng.hpp"

namespace coaudit {

namespace fs = std::filesystem;

namespace {

std::uint64_t op_tag(OperatorKind op) {
  return op == OperatorKind::Mask ? 1 : 2;
}

std::uint64_t metric_tag(MetricKind m) {
  switch (m) {
    case MetricKind::QBM: return 1;
    case MetricKind::WCM: return 2;
    case MetricKind::TI_WCM: return 3;
  }
  return 0;
}

MetricValue eval_metric(const ResponseProfile& profile, MetricKind kind,
                        const QuantileGrid& grid) {
  switch (kind) {
    case MetricKind::QBM: return qbm(profile, grid);
    case MetricKind::WCM: return wcm(profile).first;
    case MetricKind::TI_WCM: return ti_wcm(profile);
  }
  throw ValidationError("eval_metric: unknown metric");
}

ProfileStatistic metric_statistic(MetricKind kind, QuantileGrid grid) {
  return [kind, grid](const ProfileBundle& bundle) {
    return eval_metric(bundle.at(0), kind, grid).value;
  };
}

// Bundle convention for contrasts: [0] mechanistic, [1] spurious.
ProfileStatistic delta_statistic(MetricKind kind, QuantileGrid grid) {
  return [kind, grid](const ProfileBundle& bundle) {
    return eval_metric(bundle.at(1), kind, grid).value -
           eval_metric(bundle.at(0), kind, grid).value;
  };
}

// AUROC rides the same resampling machinery: scores in `original`, labels in
// `perturbed`.
ResponseProfile labeled_profile(const ResponseProfile& scores,
                                const std::map<std::string, int>& labels) {
  ResponseProfile out;
  out.pair_ids = scores.pair_ids;
  out.original = scores.original;
  out.perturbed.reserve(scores.size());
  for (const auto& id : scores.pair_ids) {
    out.perturbed.push_back(static_cast<double>(labels.at(id)));
  }
  return out;
}

double auroc_of_bundle(const ProfileBundle& bundle) {
  const ResponseProfile& p = bundle.at(0);
  std::vector<LabeledScore> items;
  items.reserve(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    items.push_back({p.original[i], static_cast<int>(p.perturbed[i])});
  }
  return auroc(items);
}

struct SeedProfiles {
  std::uint64_t seed = 0;
  // Keyed by operator name plus the pooled "all" entry.
  std::vector<std::pair<std::string, ProfilePair>> by_op;

  const ProfilePair& at(const std::string& op) const {
    for (const auto& [name, pair] : by_op) {
      if (name == op) return pair;
    }
    throw ValidationError("missing operator profiles: " + op);
  }
};

ResponseProfile concat(const ResponseProfile& a, const ResponseProfile& b) {
  ResponseProfile out = a;
  out.pair_ids.insert(out.pair_ids.end(), b.pair_ids.begin(), b.pair_ids.end());
  out.original.insert(out.original.end(), b.original.begin(), b.original.end());
  out.perturbed.insert(out.perturbed.end(), b.perturbed.begin(), b.perturbed.end());
  return out;
}

std::unique_ptr<ScoringAdapter> make_adapter(const AuditConfig& config,
                                             const std::vector<AuditUnit>& units,
                                             std::uint64_t model_seed) {
  if (config.adapter.kind == "synthetic") {
    SyntheticModelSpec spec = config.adapter.synthetic;
    spec.model_seed = model_seed;
    std::map<std::string, std::vector<std::size_t>> priors;
    for (const auto& unit : units) priors.emplace(unit.record.pair_id, unit.prior.indices);
    return std::make_unique<SyntheticAdapter>(spec, std::move(priors), config.mask_token);
  }
  if (config.adapter.kind == "file_exchange") {
    return std::make_unique<FileExchangeAdapter>(config.adapter.request_path,
                                                 config.adapter.response_path,
                                                 config.adapter.poll_interval_ms,
                                                 config.adapter.timeout_ms);
  }
  if (config.adapter.kind == "subprocess") {
    return std::make_unique<SubprocessAdapter>(config.adapter.command);
  }
  throw ValidationError("unknown adapter kind: " + config.adapter.kind);
}

std::vector<SeedProfiles> compute_profiles(const AuditConfig& config,
                                           const std::vector<AuditUnit>& units,
                                           const ClassTable& table) {
  std::vector<SeedProfiles> result;
  for (std::uint64_t seed : config.adapter.model_seeds) {
    auto adapter = make_adapter(config, units, seed);
    SeedProfiles sp;
    sp.seed = seed;
    ProfilePair pooled;
    for (OperatorKind op : config.operators) {
      PerturbationOperatorSpec spec;
      spec.kind = op;
      spec.mask_token = config.mask_token;
      spec.class_table = table;

      std::vector<MatchedVariantPair> pairs;
      pairs.reserve(units.size());
      for (const auto& unit : units) {
        pairs.push_back(build_matched_pair(
            unit.record, unit.prior, spec,
            derive_sub_seed(config.master_seed, unit.record.pair_id, op, seed)));
      }
      ProfilePair profiles = build_response_profiles(*adapter, units, pairs);
      pooled.mechanistic = pooled.mechanistic.pair_ids.empty()
                               ? profiles.mechanistic
                               : concat(pooled.mechanistic, profiles.mechanistic);
      pooled.spurious = pooled.spurious.pair_ids.empty()
                            ? profiles.spurious
                            : concat(pooled.spurious, profiles.spurious);
      sp.by_op.emplace_back(operator_name(op), std::move(profiles));
    }
    sp.by_op.emplace_back("all", std::move(pooled));
    result.push_back(std::move(sp));
  }
  return result;
}

BootstrapConfig scoped_bootstrap(const BootstrapConfig& base,
                                 std::initializer_list<std::uint64_t> tags) {
  BootstrapConfig cfg = base;
  std::vector<std::uint64_t> parts{base.boot_seed};
  parts.insert(parts.end(), tags.begin(), tags.end());
  std::uint64_t acc = parts.front();
  for (std::size_t i = 1; i < parts.size(); ++i) acc = mix_seed({acc, parts[i]});
  cfg.boot_seed = acc;
  return cfg;
}

nlohmann::json coverage_json(const CoverageStats& c) {
  return {{"total", c.total},
          {"missing_prior", c.missing_prior},
          {"invalid_prior", c.invalid_prior},
          {"not_realizable", c.not_realizable},
          {"retained", c.retained}};
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::uint64_t derive_sub_seed(std::uint64_t master_seed, const std::string& pair_id,
                              OperatorKind op, std::uint64_t seed_tag) {
  return mix_seed({master_seed, stable_hash64(pair_id), op_tag(op), seed_tag});
}

void AuditConfig::validate() const {
  if (operators.empty()) throw ValidationError("config: empty operator list");
  if (metrics.empty()) throw ValidationError("config: empty metric list");
  if (grids.empty()) throw ValidationError("config: empty grid list");
  for (const auto& grid : grids) grid.validate();
  bootstrap.validate();
  if (adapter.model_seeds.empty()) throw ValidationError("config: empty model_seeds");
}

ClassTable AuditConfig::load_class_table() const {
  return class_table_path.empty() ? ClassTable::default_amino_acids()
                                  : ClassTable::load_json(class_table_path);
}

AuditConfig AuditConfig::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: parse error in " + path + ": " + e.what());
  }

  const fs::path base = fs::path(path).parent_path();
  auto resolve = [&](const std::string& p) {
    if (p.empty()) return p;
    fs::path fp(p);
    return fp.is_absolute() ? fp.string() : (base / fp).string();
  };

  AuditConfig cfg;
  try {
    cfg.model_id = j.value("model_id", cfg.model_id);
    cfg.audit_set_path = resolve(j.at("audit_set").get<std::string>());
    cfg.priors_path = resolve(j.at("priors").get<std::string>());
    cfg.class_table_path = resolve(j.value("class_table", std::string{}));
    cfg.output_dir = resolve(j.value("output_dir", std::string{}));
    if (j.contains("operators")) {
      cfg.operators.clear();
      for (const auto& name : j.at("operators")) {
        cfg.operators.push_back(operator_from_name(name.get<std::string>()));
      }
    }
    if (j.contains("metrics")) {
      cfg.metrics.clear();
      for (const auto& name : j.at("metrics")) {
        cfg.metrics.push_back(metric_from_name(name.get<std::string>()));
      }
    }
    if (j.contains("grids")) {
      cfg.grids.clear();
      for (const auto& levels : j.at("grids")) {
        cfg.grids.push_back(QuantileGrid{levels.get<std::vector<double>>()});
      }
    }
    if (j.contains("bootstrap")) {
      const auto& b = j.at("bootstrap");
      cfg.bootstrap.replicates = b.value("replicates", cfg.bootstrap.replicates);
      cfg.bootstrap.confidence = b.value("confidence", cfg.bootstrap.confidence);
      cfg.bootstrap.boot_seed = b.value("boot_seed", cfg.bootstrap.boot_seed);
    }
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    const std::string mask = j.value("mask_token", std::string{"X"});
    if (mask.size() != 1) throw ValidationError("config: mask_token must be one character");
    cfg.mask_token = mask[0];

    const auto& a = j.at("adapter");
    cfg.adapter.kind = a.at("kind").get<std::string>();
    if (cfg.adapter.kind == "synthetic") {
      cfg.adapter.synthetic.read_set =
          read_set_from_name(a.value("read_set", std::string{"mixed"}));
      cfg.adapter.synthetic.alpha = a.value("alpha", 1.0);
      cfg.adapter.synthetic.beta = a.value("beta", 0.0);
      cfg.adapter.synthetic.noise_sigma = a.value("noise_sigma", 0.0);
      cfg.adapter.model_seeds = a.value("model_seeds", std::vector<std::uint64_t>{0});
    } else if (cfg.adapter.kind == "file_exchange") {
      cfg.adapter.request_path = resolve(a.at("request").get<std::string>());
      cfg.adapter.response_path = resolve(a.at("response").get<std::string>());
      cfg.adapter.poll_interval_ms = a.value("poll_ms", 50);
      cfg.adapter.timeout_ms = a.value("timeout_ms", 60000);
      cfg.adapter.model_seeds = {a.value("seed", std::uint64_t{0})};
    } else if (cfg.adapter.kind == "subprocess") {
      cfg.adapter.command = a.at("command").get<std::string>();
      cfg.adapter.model_seeds = {a.value("seed", std::uint64_t{0})};
    } else {
      throw ValidationError("config: unknown adapter kind " + cfg.adapter.kind);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("config: " + std::string(e.what()));
  }

  cfg.validate();
  if (!fs::exists(cfg.audit_set_path)) throw ValidationError("config: audit_set not found: " + cfg.audit_set_path);
  if (!fs::exists(cfg.priors_path)) throw ValidationError("config: priors not found: " + cfg.priors_path);
  if (!cfg.class_table_path.empty() && !fs::exists(cfg.class_table_path)) {
    throw ValidationError("config: class_table not found: " + cfg.class_table_path);
  }
  return cfg;
}

nlohmann::json AuditConfig::to_json() const {
  nlohmann::json ops = nlohmann::json::array();
  for (OperatorKind op : operators) ops.push_back(operator_name(op));
  nlohmann::json mets = nlohmann::json::array();
  for (MetricKind m : metrics) mets.push_back(metric_name(m));
  nlohmann::json gs = nlohmann::json::array();
  for (const auto& g : grids) gs.push_back(g.levels);
  return {{"model_id", model_id},
          {"audit_set", audit_set_path},
          {"priors", priors_path},
          {"class_table", class_table_path},
          {"operators", ops},
          {"metrics", mets},
          {"grids", gs},
          {"bootstrap",
           {{"replicates", bootstrap.replicates},
            {"confidence", bootstrap.confidence},
            {"boot_seed", bootstrap.boot_seed}}},
          {"master_seed", master_seed},
          {"mask_token", std::string(1, mask_token)},
          {"adapter_kind", adapter.kind},
          {"model_seeds", adapter.model_seeds}};
}

std::vector<AuditRecord> load_audit_set(const std::string& path, const std::string& alphabet) {
  std::ifstream in(path);
  if (!in) throw IoError("audit set: cannot open " + path);

  std::vector<AuditRecord> records;
  std::map<std::string, std::size_t> first_line;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("audit set line " + std::to_string(line_no) + ": " + e.what());
    }
    AuditRecord record;
    try {
      record.pair_id = j.at("pair_id").get<std::string>();
      record.context = j.at("context").get<std::string>();
      record.sequence = j.at("sequence").get<std::string>();
      if (j.contains("label")) {
        const int label = j.at("label").get<int>();
        if (label != 0 && label != 1) {
          throw ValidationError("audit set line " + std::to_string(line_no) +
                                ": label must be 0 or 1");
        }
        record.label = label;
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("audit set line " + std::to_string(line_no) + ": " + e.what());
    }

    auto [it, inserted] = first_line.emplace(record.pair_id, line_no);
    if (!inserted) {
      throw ValidationError("audit set: duplicate pair_id \"" + record.pair_id + "\" on lines " +
                            std::to_string(it->second) + " and " + std::to_string(line_no));
    }
    if (!alphabet.empty()) {
      for (char c : record.sequence) {
        if (alphabet.find(c) == std::string::npos) {
          throw ValidationError("audit set line " + std::to_string(line_no) + ": symbol '" +
                                std::string(1, c) + "' outside the alphabet");
        }
      }
    }
    records.push_back(std::move(record));
  }
  if (records.empty()) throw ValidationError("empty_audit_set: " + path);
  return records;
}

std::vector<StructuralPrior> load_priors(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("priors: cannot open " + path);

  std::vector<StructuralPrior> priors;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("priors line " + std::to_string(line_no) + ": " + e.what());
    }
    StructuralPrior prior;
    try {
      prior.record_id = j.at("record_id").get<std::string>();
      for (const auto& v : j.at("indices")) {
        const long long idx = v.get<long long>();
        if (idx < 0) {
          throw ValidationError("priors line " + std::to_string(line_no) + ": negative_index");
        }
        prior.indices.push_back(static_cast<std::size_t>(idx));
      }
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError("priors line " + std::to_string(line_no) + ": " + e.what());
    }
    std::sort(prior.indices.begin(), prior.indices.end());
    prior.indices.erase(std::unique(prior.indices.begin(), prior.indices.end()),
                        prior.indices.end());
    priors.push_back(std::move(prior));
  }
  return priors;
}

MetricReport run_audit(const AuditConfig& config) {
  const ClassTable table = config.load_class_table();
  const auto records = load_audit_set(config.audit_set_path, table.alphabet());
  const auto priors = load_priors(config.priors_path);
  return run_audit(config, records, priors);
}

MetricReport run_audit(const AuditConfig& config, const std::vector<AuditRecord>& records,
                       const std::vector<StructuralPrior>& priors) {
  config.validate();
  const ClassTable table = config.load_class_table();

  auto [units, coverage] = filter_auditing_set(records, priors);
  if (units.empty()) throw ValidationError("auditing set empty after filtering");

  const std::vector<SeedProfiles> seeds = compute_profiles(config, units, table);

  std::vector<std::string> op_names;
  for (OperatorKind op : config.operators) op_names.push_back(operator_name(op));
  op_names.push_back("all");

  MetricReport report;
  report.coverage = coverage;
  report.config_echo = config.to_json();

  for (const std::string& op : op_names) {
    const std::uint64_t otag = stable_hash64(op);
    for (MetricKind metric : config.metrics) {
      const bool uses_grid = metric == MetricKind::QBM;
      const std::size_t n_grids = uses_grid ? config.grids.size() : 1;
      for (std::size_t gi = 0; gi < n_grids; ++gi) {
        const QuantileGrid& grid = config.grids[uses_grid ? gi : 0];
        const std::string grid_id = uses_grid ? grid.id() : "-";
        const auto stat = metric_statistic(metric, grid);

        std::vector<double> mech_values, spur_values, delta_values;
        std::vector<ProfileBundle> mech_bundles, spur_bundles, delta_bundles;
        bool mech_degenerate = true, spur_degenerate = true;

        for (const SeedProfiles& sp : seeds) {
          const ProfilePair& pair = sp.at(op);
          const MetricValue mech = eval_metric(pair.mechanistic, metric, grid);
          const MetricValue spur = eval_metric(pair.spurious, metric, grid);
          mech_degenerate = mech_degenerate && mech.degenerate;
          spur_degenerate = spur_degenerate && spur.degenerate;

          const BootstrapConfig cfg = scoped_bootstrap(
              config.bootstrap, {otag, metric_tag(metric), gi, sp.seed});
          const IntervalEstimate mech_ci = bootstrap_ci({pair.mechanistic}, stat, cfg);
          const IntervalEstimate spur_ci =
              bootstrap_ci({pair.spurious}, stat, scoped_bootstrap(cfg, {1}));

          const std::string seed_str = std::to_string(sp.seed);
          report.absolute.push_back({config.model_id, seed_str, op, "mechanistic",
                                     metric_name(metric), grid_id, mech.value, mech_ci.lower,
                                     mech_ci.upper, mech.degenerate});
          report.absolute.push_back({config.model_id, seed_str, op, "spurious",
                                     metric_name(metric), grid_id, spur.value, spur_ci.lower,
                                     spur_ci.upper, spur.degenerate});

          mech_values.push_back(mech.value);
          spur_values.push_back(spur.value);
          delta_values.push_back(contrast(mech, spur).delta);
          mech_bundles.push_back({pair.mechanistic});
          spur_bundles.push_back({pair.spurious});
          delta_bundles.push_back({pair.mechanistic, pair.spurious});
        }

        const BootstrapConfig agg_cfg =
            scoped_bootstrap(config.bootstrap, {otag, metric_tag(metric), gi, 0xA11});
        const IntervalEstimate mech_agg = aggregate_seeds(mech_values, mech_bundles, stat, agg_cfg);
        const IntervalEstimate spur_agg =
            aggregate_seeds(spur_values, spur_bundles, stat, scoped_bootstrap(agg_cfg, {1}));
        report.absolute.push_back({config.model_id, "all", op, "mechanistic",
                                   metric_name(metric), grid_id, mech_agg.point, mech_agg.lower,
                                   mech_agg.upper, mech_degenerate});
        report.absolute.push_back({config.model_id, "all", op, "spurious", metric_name(metric),
                                   grid_id, spur_agg.point, spur_agg.lower, spur_agg.upper,
                                   spur_degenerate});

        // Contrast rows are seed-aggregated; for QBM the primary grid only,
        // matching the contrasts CSV schema.
        if (!uses_grid || gi == 0) {
          const IntervalEstimate delta_agg =
              aggregate_seeds(delta_values, delta_bundles, delta_statistic(metric, grid),
                              scoped_bootstrap(agg_cfg, {2}));
          report.contrasts.push_back({config.model_id, op, metric_name(metric), delta_agg.point,
                                      delta_agg.lower, delta_agg.upper});
        }
      }
    }
  }

  // AUROC, only when labels are supplied and both classes are present.
  std::map<std::string, int> labels;
  std::size_t pos = 0, neg = 0;
  for (const auto& unit : units) {
    if (unit.record.label.has_value()) {
      labels.emplace(unit.record.pair_id, *unit.record.label);
      (*unit.record.label == 1 ? pos : neg) += 1;
    }
  }
  if (labels.size() == units.size() && pos > 0 && neg > 0) {
    std::vector<double> values;
    std::vector<ProfileBundle> bundles;
    for (const SeedProfiles& sp : seeds) {
      const ResponseProfile lp = labeled_profile(sp.at("all").mechanistic, labels);
      const BootstrapConfig cfg = scoped_bootstrap(config.bootstrap, {0xA0C, sp.seed});
      const IntervalEstimate ci = bootstrap_ci({lp}, auroc_of_bundle, cfg);
      report.auroc.push_back({config.model_id, std::to_string(sp.seed), ci.point, ci.lower,
                              ci.upper});
      values.push_back(ci.point);
      bundles.push_back({lp});
    }
    const IntervalEstimate agg = aggregate_seeds(
        values, bundles, auroc_of_bundle, scoped_bootstrap(config.bootstrap, {0xA0C, 0xA11}));
    report.auroc.push_back({config.model_id, "all", agg.point, agg.lower, agg.upper});
  }

  return report;
}

std::vector<QuantileGrid> sensitivity_grids() {
  QuantileGrid k3{{0.25, 0.50, 0.75}};
  QuantileGrid k5{{1.0 / 6, 2.0 / 6, 3.0 / 6, 4.0 / 6, 5.0 / 6}};
  QuantileGrid k9{{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9}};
  return {k3, k5, k9};
}

std::vector<SensitivityRow> qbm_sensitivity(const AuditConfig& config) {
  const ClassTable table = config.load_class_table();
  const auto records = load_audit_set(config.audit_set_path, table.alphabet());
  const auto priors = load_priors(config.priors_path);
  return qbm_sensitivity(config, records, priors);
}

std::vector<SensitivityRow> qbm_sensitivity(const AuditConfig& config,
                                            const std::vector<AuditRecord>& records,
                                            const std::vector<StructuralPrior>& priors) {
  config.validate();
  const ClassTable table = config.load_class_table();
  auto [units, coverage] = filter_auditing_set(records, priors);
  if (units.empty()) throw ValidationError("auditing set empty after filtering");
  const std::vector<SeedProfiles> seeds = compute_profiles(config, units, table);

  std::vector<SensitivityRow> rows;
  std::size_t gi = 0;
  for (const QuantileGrid& grid : sensitivity_grids()) {
    const auto stat = metric_statistic(MetricKind::QBM, grid);
    std::vector<double> mech_values, spur_values, delta_values;
    std::vector<ProfileBundle> mech_bundles, spur_bundles, delta_bundles;
    for (const SeedProfiles& sp : seeds) {
      const ProfilePair& pair = sp.at("all");
      mech_values.push_back(eval_metric(pair.mechanistic, MetricKind::QBM, grid).value);
      spur_values.push_back(eval_metric(pair.spurious, MetricKind::QBM, grid).value);
      delta_values.push_back(spur_values.back() - mech_values.back());
      mech_bundles.push_back({pair.mechanistic});
      spur_bundles.push_back({pair.spurious});
      delta_bundles.push_back({pair.mechanistic, pair.spurious});
    }
    const BootstrapConfig cfg = scoped_bootstrap(config.bootstrap, {0x5E45, gi});
    SensitivityRow row;
    row.grid = grid.id();
    row.model = config.model_id;
    row.mechanistic = aggregate_seeds(mech_values, mech_bundles, stat, cfg);
    row.spurious = aggregate_seeds(spur_values, spur_bundles, stat, scoped_bootstrap(cfg, {1}));
    row.delta = aggregate_seeds(delta_values, delta_bundles,
                                delta_statistic(MetricKind::QBM, grid),
                                scoped_bootstrap(cfg, {2}));
    rows.push_back(std::move(row));
    ++gi;
  }
  return rows;
}

void emit_report(const MetricReport& report, const std::string& out_dir) {
  fs::create_directories(out_dir);

  std::string abs = "model,seed,operator,class,metric,grid,value,lo,hi,degenerate\n";
  for (const auto& r : report.absolute) {
    abs += r.model + ',' + r.seed + ',' + r.op + ',' + r.cls + ',' + r.metric + ',' + r.grid +
           ',' + format_real(r.value) + ',' + format_real(r.lower) + ',' + format_real(r.upper) +
           ',' + (r.degenerate ? "true" : "false") + '\n';
  }
  write_file((fs::path(out_dir) / "absolute_metrics.csv").string(), abs);

  std::string con = "model,operator,metric,delta,lo,hi\n";
  for (const auto& r : report.contrasts) {
    con += r.model + ',' + r.op + ',' + r.metric + ',' + format_real(r.delta) + ',' +
           format_real(r.lower) + ',' + format_real(r.upper) + '\n';
  }
  write_file((fs::path(out_dir) / "contrasts.csv").string(), con);

  std::string plot = "model,metric,delta,lo,hi\n";
  for (const auto& r : report.contrasts) {
    if (r.op == "all") {
      plot += r.model + ',' + r.metric + ',' + format_real(r.delta) + ',' +
              format_real(r.lower) + ',' + format_real(r.upper) + '\n';
    }
  }
  write_file((fs::path(out_dir) / "plot_deltas.csv").string(), plot);

  nlohmann::json auroc_rows = nlohmann::json::array();
  for (const auto& r : report.auroc) {
    auroc_rows.push_back({{"model", r.model},
                          {"seed", r.seed},
                          {"value", format_real(r.value)},
                          {"lo", format_real(r.lower)},
                          {"hi", format_real(r.upper)}});
  }
  const nlohmann::json summary{{"config", report.config_echo},
                               {"coverage", coverage_json(report.coverage)},
                               {"auroc", auroc_rows}};
  write_file((fs::path(out_dir) / "summary.json").string(), summary.dump(2) + "\n");
}

void emit_sensitivity(const std::vector<SensitivityRow>& rows, const std::string& out_dir) {
  fs::create_directories(out_dir);
  std::string csv =
      "grid,model,qbm_mech,mech_lo,mech_hi,qbm_spur,spur_lo,spur_hi,delta,delta_lo,delta_hi\n";
  for (const auto& r : rows) {
    csv += r.grid + ',' + r.model + ',' + format_real(r.mechanistic.point) + ',' +
           format_real(r.mechanistic.lower) + ',' + format_real(r.mechanistic.upper) + ',' +
           format_real(r.spurious.point) + ',' + format_real(r.spurious.lower) + ',' +
           format_real(r.spurious.upper) + ',' + format_real(r.delta.point) + ',' +
           format_real(r.delta.lower) + ',' + format_real(r.delta.upper) + '\n';
  }
  write_file((fs::path(out_dir) / "qbm_sensitivity.csv").string(), csv);
}

void generate_synthetic_dataset(const std::string& spec_path, const std::string& out_dir) {
  std::ifstream in(spec_path);
  if (!in) throw IoError("synth spec: cannot open " + spec_path);
  nlohmann::json spec;
  try {
    in >> spec;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("synth spec: parse error: " + std::string(e.what()));
  }

  const std::size_t n_records = spec.value("n_records", std::size_t{50});
  const std::size_t seq_length = spec.value("sequence_length", std::size_t{40});
  const std::size_t prior_size = spec.value("prior_size", std::size_t{8});
  const std::uint64_t seed = spec.value("seed", std::uint64_t{1});
  const bool with_labels = spec.value("labels", true);
  if (prior_size == 0 || prior_size >= seq_length) {
    throw ValidationError("synth spec: prior_size must satisfy 0 < prior_size < sequence_length");
  }

  const ClassTable table = ClassTable::default_amino_acids();
  const std::string alphabet = table.alphabet();

  fs::create_directories(out_dir);

  std::vector<AuditRecord> records;
  std::map<std::string, std::vector<std::size_t>> priors;
  std::vector<std::size_t> all_positions(seq_length);
  std::iota(all_positions.begin(), all_positions.end(), std::size_t{0});

  char id_buf[32];
  for (std::size_t i = 0; i < n_records; ++i) {
    std::snprintf(id_buf, sizeof id_buf, "p%06zu", i);
    AuditRecord record;
    record.pair_id = id_buf;
    record.context = "ctx" + std::to_string(i);
    SplitMix64 rng(mix_seed({seed, stable_hash64(record.pair_id), 7}));
    record.sequence.reserve(seq_length);
    for (std::size_t k = 0; k < seq_length; ++k) {
      record.sequence += alphabet[rng.next_below(alphabet.size())];
    }
    priors.emplace(record.pair_id,
                   sample_without_replacement(all_positions, prior_size,
                                              mix_seed({seed, stable_hash64(record.pair_id), 8})));
    records.push_back(std::move(record));
  }

  if (with_labels) {
    SyntheticModelSpec model;
    model.read_set = ReadSet::Mixed;
    model.alpha = spec.value("alpha", 1.0);
    model.beta = spec.value("beta", 0.1);
    model.noise_sigma = spec.value("noise_sigma", 0.05);
    model.model_seed = seed;
    SyntheticAdapter reference(model, priors);
    std::vector<double> scores;
    for (const auto& r : records) scores.push_back(reference.score(r.pair_id, r.sequence));
    const double median = empirical_quantile(scores, 0.5);
    for (std::size_t i = 0; i < records.size(); ++i) {
      records[i].label = scores[i] > median ? 1 : 0;
    }
  }

  std::string audit_lines;
  for (const auto& r : records) {
    nlohmann::json j{{"pair_id", r.pair_id}, {"context", r.context}, {"sequence", r.sequence}};
    if (r.label.has_value()) j["label"] = *r.label;
    audit_lines += j.dump() + '\n';
  }
  write_file((fs::path(out_dir) / "audit.jsonl").string(), audit_lines);

  std::string prior_lines;
  for (const auto& r : records) {
    prior_lines +=
        nlohmann::json{{"record_id", r.pair_id}, {"indices", priors.at(r.pair_id)}}.dump() + '\n';
  }
  write_file((fs::path(out_dir) / "priors.jsonl").string(), prior_lines);

  nlohmann::json classes;
  for (const auto& [name, symbols] : table.classes()) {
    nlohmann::json arr = nlohmann::json::array();
    for (char c : symbols) arr.push_back(std::string(1, c));
    classes[name] = arr;
  }
  write_file((fs::path(out_dir) / "class_table.json").string(), classes.dump(2) + "\n");

  const nlohmann::json config{
      {"model_id", spec.value("model_id", std::string{"synthetic"})},
      {"audit_set", "audit.jsonl"},
      {"priors", "priors.jsonl"},
      {"class_table", "class_table.json"},
      {"operators", spec.value("operators", std::vector<std::string>{"mask"})},
      {"metrics", {"QBM", "WCM", "TI_WCM"}},
      {"grids", {{0.25, 0.50, 0.75}}},
      {"bootstrap",
       {{"replicates", spec.value("replicates", std::size_t{100})},
        {"confidence", 0.95},
        {"boot_seed", seed}}},
      {"master_seed", seed},
      {"adapter",
       {{"kind", "synthetic"},
        {"read_set", spec.value("read_set", std::string{"mixed"})},
        {"alpha", spec.value("alpha", 1.0)},
        {"beta", spec.value("beta", 0.1)},
        {"noise_sigma", spec.value("noise_sigma", 0.05)},
        {"model_seeds", spec.value("model_seeds", std::vector<std::uint64_t>{1, 2, 3})}}}};
  write_file((fs::path(out_dir) / "config.json").string(), config.dump(2) + "\n");
}

}  // namespace coaudit
