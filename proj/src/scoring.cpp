#include "coaudit/scoring.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "coaudit/errors.hpp"
#include "coaudit/prng.hpp"

namespace coaudit {

namespace {

constexpr std::size_t kEmbeddingColumns = 16;

double parse_score(const std::string& text, const std::string& where) {
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(text, &consumed);
  } catch (const std::exception&) {
    throw AdapterError("malformed score \"" + text + "\" in " + where);
  }
  if (consumed != text.size()) {
    throw AdapterError("malformed score \"" + text + "\" in " + where);
  }
  return value;
}

struct ResponseLine {
  std::string pair_id;
  std::string variant;
  double score;
};

ResponseLine parse_response_line(const std::string& line, const std::string& where) {
  const std::size_t c1 = line.find(',');
  const std::size_t c2 = line.find(',', c1 == std::string::npos ? c1 : c1 + 1);
  if (c1 == std::string::npos || c2 == std::string::npos) {
    throw AdapterError("malformed response line \"" + line + "\" in " + where);
  }
  return {line.substr(0, c1), line.substr(c1 + 1, c2 - c1 - 1),
          parse_score(line.substr(c2 + 1), where)};
}

}  // namespace

const char* variant_name(VariantTag tag) {
  switch (tag) {
    case VariantTag::Original: return "orig";
    case VariantTag::Mechanistic: return "mech";
    case VariantTag::Spurious: return "spur";
  }
  return "?";
}

std::vector<double> score_batch(ScoringAdapter& adapter, const std::vector<ScoreItem>& items) {
  if (items.empty()) throw ValidationError("score_batch: empty batch");
  std::vector<double> scores = adapter.score_batch_impl(items);
  if (scores.size() != items.size()) {
    throw AdapterError("count_mismatch: adapter returned " + std::to_string(scores.size()) +
                       " scores for " + std::to_string(items.size()) + " items");
  }
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!std::isfinite(scores[i])) {
      throw AdapterError("non_finite_score for item " + items[i].pair_id + "/" +
                         variant_name(items[i].variant));
    }
  }
  return scores;
}

ReadSet read_set_from_name(const std::string& name) {
  if (name == "prior_only") return ReadSet::PriorOnly;
  if (name == "complement_only") return ReadSet::ComplementOnly;
  if (name == "mixed") return ReadSet::Mixed;
  throw ValidationError("unknown read_set: " + name);
}

double SyntheticModelSpec::effective_alpha() const {
  switch (read_set) {
    case ReadSet::PriorOnly: return 1.0;
    case ReadSet::ComplementOnly: return 0.0;
    case ReadSet::Mixed: return alpha;
  }
  return alpha;
}

double SyntheticModelSpec::effective_beta() const {
  switch (read_set) {
    case ReadSet::PriorOnly: return 0.0;
    case ReadSet::ComplementOnly: return 1.0;
    case ReadSet::Mixed: return beta;
  }
  return beta;
}

SyntheticAdapter::SyntheticAdapter(SyntheticModelSpec spec,
                                   std::map<std::string, std::vector<std::size_t>> priors,
                                   char mask_token)
    : spec_(spec), priors_(std::move(priors)), mask_token_(mask_token) {
  if (!(spec_.noise_sigma >= 0.0) || !std::isfinite(spec_.alpha) || !std::isfinite(spec_.beta)) {
    throw ValidationError("synthetic model: invalid alpha/beta/noise_sigma");
  }
  table_.resize(256 * kEmbeddingColumns);
  SplitMix64 rng(spec_.model_seed);
  for (double& cell : table_) cell = 2.0 * rng.next_unit() - 1.0;
}

double SyntheticAdapter::embedding(char symbol, std::size_t column) const {
  if (symbol == mask_token_) return 0.0;
  return table_[static_cast<unsigned char>(symbol) * kEmbeddingColumns +
                column % kEmbeddingColumns];
}

double SyntheticAdapter::score(const std::string& pair_id, const std::string& sequence) const {
  auto it = priors_.find(pair_id);
  if (it == priors_.end()) {
    throw ValidationError("synthetic model: no prior for " + pair_id);
  }
  const std::vector<std::size_t>& prior = it->second;

  double prior_sum = 0.0;
  double complement_sum = 0.0;
  auto pit = prior.begin();
  for (std::size_t i = 0; i < sequence.size(); ++i) {
    const double e = embedding(sequence[i], i % kEmbeddingColumns);
    if (pit != prior.end() && *pit == i) {
      prior_sum += e;
      ++pit;
    } else {
      complement_sum += e;
    }
  }
  const std::size_t complement_size = sequence.size() - prior.size();
  const double g_prior = prior.empty() ? 0.0 : prior_sum / static_cast<double>(prior.size());
  const double g_complement =
      complement_size == 0 ? 0.0 : complement_sum / static_cast<double>(complement_size);

  // Sum of 12 uniforms minus 6: mean 0, variance 1, no transcendentals, so
  // the value is bit-stable across platforms.
  SplitMix64 noise_rng(mix_seed({spec_.model_seed, stable_hash64(pair_id)}));
  double noise = -6.0;
  for (int k = 0; k < 12; ++k) noise += noise_rng.next_unit();

  return spec_.effective_alpha() * g_prior + spec_.effective_beta() * g_complement +
         spec_.noise_sigma * noise;
}

std::vector<double> SyntheticAdapter::score_batch_impl(const std::vector<ScoreItem>& items) {
  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) scores.push_back(score(item.pair_id, item.sequence));
  return scores;
}

std::string score_item_json(const ScoreItem& item) {
  nlohmann::json j{{"pair_id", item.pair_id},
                   {"variant", variant_name(item.variant)},
                   {"context", item.context},
                   {"sequence", item.sequence}};
  return j.dump();
}

FileExchangeAdapter::FileExchangeAdapter(std::string request_path, std::string response_path,
                                         int poll_interval_ms, int timeout_ms)
    : request_path_(std::move(request_path)),
      response_path_(std::move(response_path)),
      poll_interval_ms_(poll_interval_ms),
      timeout_ms_(timeout_ms) {}

std::vector<double> FileExchangeAdapter::score_batch_impl(const std::vector<ScoreItem>& items) {
  {
    std::ofstream out(request_path_, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("file adapter: cannot write " + request_path_);
    for (const auto& item : items) out << score_item_json(item) << '\n';
  }

  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::milliseconds(timeout_ms_);
  while (!std::filesystem::exists(response_path_)) {
    if (std::chrono::steady_clock::now() > deadline) {
      throw AdapterError("file adapter: timed out waiting for " + response_path_);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(poll_interval_ms_));
  }

  std::ifstream in(response_path_, std::ios::binary);
  if (!in) throw IoError("file adapter: cannot read " + response_path_);
  std::string line;
  if (!std::getline(in, line) || line != "pair_id,variant,score") {
    throw AdapterError("file adapter: missing header in " + response_path_);
  }
  std::map<std::pair<std::string, std::string>, double> by_key;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const ResponseLine row = parse_response_line(line, response_path_);
    if (!by_key.emplace(std::make_pair(row.pair_id, row.variant), row.score).second) {
      throw AdapterError("file adapter: duplicate response for " + row.pair_id + "/" +
                         row.variant);
    }
  }

  std::vector<double> scores;
  scores.reserve(items.size());
  for (const auto& item : items) {
    auto it = by_key.find({item.pair_id, variant_name(item.variant)});
    if (it == by_key.end()) {
      throw AdapterError("file adapter: missing response for " + item.pair_id + "/" +
                         variant_name(item.variant));
    }
    scores.push_back(it->second);
  }

  std::error_code ec;
  std::filesystem::remove(request_path_, ec);
  std::filesystem::remove(response_path_, ec);
  return scores;
}

SubprocessAdapter::SubprocessAdapter(std::string command) : command_(std::move(command)) {}

std::vector<double> SubprocessAdapter::score_batch_impl(const std::vector<ScoreItem>& items) {
  // The request is staged in a temporary file fed to the child's stdin, so
  // arbitrarily large batches cannot deadlock on pipe buffers.
  const std::string request_path =
      (std::filesystem::temp_directory_path() /
       ("coaudit_batch_" + std::to_string(stable_hash64(command_) ^ items.size()) + ".jsonl"))
          .string();
  {
    std::ofstream out(request_path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("subprocess adapter: cannot write " + request_path);
    for (const auto& item : items) out << score_item_json(item) << '\n';
  }

  const std::string shell = command_ + " < '" + request_path + "'";
  FILE* child = popen(shell.c_str(), "r");
  if (child == nullptr) throw AdapterError("subprocess adapter: failed to spawn: " + command_);

  std::string output;
  char buffer[4096];
  std::size_t got;
  while ((got = fread(buffer, 1, sizeof buffer, child)) > 0) output.append(buffer, got);
  const int status = pclose(child);

  std::error_code ec;
  std::filesystem::remove(request_path, ec);

  if (status != 0) {
    throw AdapterError("subprocess adapter: child exited with status " +
                       std::to_string(status) + ": " + command_);
  }

  std::vector<double> scores;
  scores.reserve(items.size());
  std::istringstream lines(output);
  std::string line;
  for (const auto& item : items) {
    if (!std::getline(lines, line)) {
      throw AdapterError("subprocess adapter: output ended after " +
                         std::to_string(scores.size()) + " of " +
                         std::to_string(items.size()) + " lines");
    }
    const ResponseLine row = parse_response_line(line, "subprocess output");
    if (row.pair_id != item.pair_id || row.variant != variant_name(item.variant)) {
      throw AdapterError("subprocess adapter: line \"" + line + "\" does not match expected " +
                         item.pair_id + "/" + variant_name(item.variant));
    }
    scores.push_back(row.score);
  }
  if (std::getline(lines, line) && !line.empty()) {
    throw AdapterError("subprocess adapter: unexpected trailing line \"" + line + "\"");
  }
  return scores;
}

ProfilePair build_response_profiles(ScoringAdapter& adapter, const std::vector<AuditUnit>& units,
                                    const std::vector<MatchedVariantPair>& pairs) {
  if (units.size() != pairs.size()) {
    throw ValidationError("build_response_profiles: units/pairs size mismatch");
  }

  std::vector<std::size_t> order(units.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return units[a].record.pair_id < units[b].record.pair_id;
  });

  std::vector<ScoreItem> batch;
  batch.reserve(units.size() * 3);
  for (std::size_t i : order) {
    const AuditRecord& r = units[i].record;
    if (pairs[i].record_id != r.pair_id) {
      throw ValidationError("build_response_profiles: missing variant for " + r.pair_id);
    }
    batch.push_back({r.pair_id, VariantTag::Original, r.context, r.sequence});
  }
  for (std::size_t i : order) {
    const AuditRecord& r = units[i].record;
    batch.push_back({r.pair_id, VariantTag::Mechanistic, r.context, pairs[i].mechanistic_sequence});
  }
  for (std::size_t i : order) {
    const AuditRecord& r = units[i].record;
    batch.push_back({r.pair_id, VariantTag::Spurious, r.context, pairs[i].spurious_sequence});
  }

  const std::vector<double> scores = score_batch(adapter, batch);
  const std::size_t n = units.size();
  ProfilePair out;
  for (std::size_t k = 0; k < n; ++k) {
    const std::string& id = units[order[k]].record.pair_id;
    out.mechanistic.pair_ids.push_back(id);
    out.mechanistic.original.push_back(scores[k]);
    out.mechanistic.perturbed.push_back(scores[n + k]);
    out.spurious.pair_ids.push_back(id);
    out.spurious.original.push_back(scores[k]);
    out.spurious.perturbed.push_back(scores[2 * n + k]);
  }
  return out;
}

ResponseProfile build_response_profile(ScoringAdapter& adapter, const std::vector<AuditUnit>& units,
                                       const std::vector<MatchedVariantPair>& pairs,
                                       VariantTag selector) {
  const ProfilePair both = build_response_profiles(adapter, units, pairs);
  if (selector == VariantTag::Mechanistic) return both.mechanistic;
  if (selector == VariantTag::Spurious) return both.spurious;
  throw ValidationError("build_response_profile: selector must be mech or spur");
}

}  // namespace coaudit
