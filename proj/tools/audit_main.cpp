// `audit` command-line tool: run full audits, evaluate metrics ad hoc,
// sweep QBM quantile grids, and generate demo datasets.

#include <exception>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "coaudit/errors.hpp"
#include "coaudit/metrics.hpp"
#include "coaudit/pipeline.hpp"

namespace {

using namespace coaudit;

// Reads a two-column CSV (header pair_id,score) keyed by pair_id.
std::map<std::string, double> load_score_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line) || line != "pair_id,score") {
    throw ValidationError(path + ": expected header pair_id,score");
  }
  std::map<std::string, double> scores;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::size_t comma = line.find(',');
    if (comma == std::string::npos) {
      throw ValidationError(path + " line " + std::to_string(line_no) + ": missing comma");
    }
    const std::string id = line.substr(0, comma);
    double value = 0.0;
    try {
      value = std::stod(line.substr(comma + 1));
    } catch (const std::exception&) {
      throw ValidationError(path + " line " + std::to_string(line_no) + ": bad score");
    }
    if (!scores.emplace(id, value).second) {
      throw ValidationError(path + " line " + std::to_string(line_no) + ": duplicate pair_id " + id);
    }
  }
  if (scores.empty()) throw ValidationError(path + ": no scores");
  return scores;
}

int run_metrics_command(const std::string& original_path, const std::string& perturbed_path,
                        const std::string& metric, const std::string& grid_arg) {
  const auto original = load_score_csv(original_path);
  const auto perturbed = load_score_csv(perturbed_path);

  ResponseProfile profile;
  for (const auto& [id, score] : original) {
    auto it = perturbed.find(id);
    if (it == perturbed.end()) {
      throw ValidationError("pair_id " + id + " missing from " + perturbed_path);
    }
    profile.pair_ids.push_back(id);
    profile.original.push_back(score);
    profile.perturbed.push_back(it->second);
  }
  if (perturbed.size() != original.size()) {
    throw ValidationError("score files do not cover the same pair_ids");
  }

  QuantileGrid grid{{0.25, 0.50, 0.75}};
  if (!grid_arg.empty()) {
    grid.levels.clear();
    std::istringstream ss(grid_arg);
    std::string token;
    while (std::getline(ss, token, ',')) grid.levels.push_back(std::stod(token));
  }

  MetricValue value;
  const MetricKind kind = metric_from_name(metric);
  switch (kind) {
    case MetricKind::QBM: value = qbm(profile, grid); break;
    case MetricKind::WCM: value = wcm(profile).first; break;
    case MetricKind::TI_WCM: value = ti_wcm(profile); break;
  }
  std::cout << metric_name(kind) << " = " << format_real(value.value)
            << (value.degenerate ? " (degenerate)" : "") << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Interventional coherence audit for black-box scalar predictors"};
  app.require_subcommand(1);

  std::string config_path, out_dir, spec_path;
  std::string original_path, perturbed_path, metric = "wcm", grid_arg;
  std::uint64_t seed_override = 0;
  bool seed_given = false;

  auto* run = app.add_subcommand("run", "Run a full audit from a config file");
  run->add_option("--config", config_path, "Audit config JSON")->required();
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--seed", seed_override, "Override master_seed")
      ->each([&](const std::string&) { seed_given = true; });

  auto* met = app.add_subcommand("metrics", "Evaluate one metric on two aligned score files");
  met->add_option("--original", original_path, "CSV pair_id,score")->required();
  met->add_option("--perturbed", perturbed_path, "CSV pair_id,score")->required();
  met->add_option("--metric", metric, "qbm | wcm | tiwcm")->required();
  met->add_option("--grid", grid_arg, "Comma-separated quantile levels (qbm only)");

  auto* sens = app.add_subcommand("sensitivity", "QBM quantile-grid sweep (K3/K5/K9)");
  sens->add_option("--config", config_path, "Audit config JSON")->required();
  sens->add_option("--out", out_dir, "Output directory")->required();

  auto* synth = app.add_subcommand("synth", "Generate a synthetic demo dataset");
  synth->add_option("--spec", spec_path, "Generator spec JSON")->required();
  synth->add_option("--out", out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      AuditConfig config = AuditConfig::load_json(config_path);
      if (seed_given) config.master_seed = seed_override;
      emit_report(run_audit(config), out_dir);
    } else if (met->parsed()) {
      return run_metrics_command(original_path, perturbed_path, metric, grid_arg);
    } else if (sens->parsed()) {
      const AuditConfig config = AuditConfig::load_json(config_path);
      emit_sensitivity(qbm_sensitivity(config), out_dir);
    } else if (synth->parsed()) {
      generate_synthetic_dataset(spec_path, out_dir);
    }
  } catch (const ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return 2;
  } catch (const AdapterError& e) {
    std::cerr << "adapter error: " << e.what() << "\n";
    return 3;
  } catch (const IoError& e) {
    std::cerr << "i/o error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
