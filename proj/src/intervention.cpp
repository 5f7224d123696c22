#include "coaudit/intervention.hpp"

#include <algorithm>
#include <fstream>
#include <utility>

#include <json.hpp>

#include "coaudit/errors.hpp"
#include "coaudit/prng.hpp"

namespace coaudit {

namespace {

// Sub-stream tags for build_matched_pair. The spurious-scope draw and the
// two substitution streams are independent, so adding draws to one never
// perturbs another.
constexpr std::uint64_t kStreamMech = 0;
constexpr std::uint64_t kStreamSpur = 1;

std::vector<std::size_t> prior_complement(const AuditRecord& record,
                                          const StructuralPrior& prior) {
  std::vector<std::size_t> complement;
  complement.reserve(record.sequence.size() - prior.indices.size());
  auto it = prior.indices.begin();
  for (std::size_t i = 0; i < record.sequence.size(); ++i) {
    if (it != prior.indices.end() && *it == i) {
      ++it;
    } else {
      complement.push_back(i);
    }
  }
  return complement;
}

}  // namespace

ClassTable::ClassTable(std::map<std::string, std::string> classes)
    : classes_(std::move(classes)) {
  if (classes_.empty()) throw ValidationError("class table: empty");
  for (const auto& [name, symbols] : classes_) {
    if (symbols.empty()) throw ValidationError("class table: empty class " + name);
    for (char c : symbols) {
      if (!symbol_class_.emplace(c, name).second) {
        throw ValidationError(std::string("class table: symbol '") + c +
                              "' appears in more than one class");
      }
    }
  }
}

ClassTable ClassTable::default_amino_acids() {
  return ClassTable({{"hydrophobic", "AVLIMFWY"},
                     {"polar", "STNQC"},
                     {"positive", "KRH"},
                     {"negative", "DE"},
                     {"special", "GP"}});
}

ClassTable ClassTable::load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("class table: cannot open " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("class table: parse error in " + path + ": " + e.what());
  }
  if (!j.is_object()) throw ValidationError("class table: expected a JSON object");
  std::map<std::string, std::string> classes;
  for (const auto& [name, arr] : j.items()) {
    if (!arr.is_array()) throw ValidationError("class table: class " + name + " is not an array");
    std::string symbols;
    for (const auto& s : arr) {
      const std::string sym = s.get<std::string>();
      if (sym.size() != 1) {
        throw ValidationError("class table: symbol \"" + sym + "\" is not a single character");
      }
      symbols += sym[0];
    }
    classes.emplace(name, symbols);
  }
  return ClassTable(std::move(classes));
}

const std::string& ClassTable::class_of(char symbol) const {
  auto it = symbol_class_.find(symbol);
  if (it == symbol_class_.end()) {
    throw ValidationError(std::string("class table: symbol '") + symbol + "' not covered");
  }
  return classes_.at(it->second);
}

std::string ClassTable::siblings(char symbol) const {
  std::string out;
  for (char c : class_of(symbol)) {
    if (c != symbol) out += c;
  }
  return out;
}

std::string ClassTable::alphabet() const {
  std::string all;
  for (const auto& [name, symbols] : classes_) all += symbols;
  std::sort(all.begin(), all.end());
  return all;
}

const char* operator_name(OperatorKind kind) {
  return kind == OperatorKind::Mask ? "mask" : "class_substitution";
}

OperatorKind operator_from_name(const std::string& name) {
  if (name == "mask") return OperatorKind::Mask;
  if (name == "class_substitution") return OperatorKind::ClassSubstitution;
  throw ValidationError("unknown operator: " + name);
}

std::string prior_violation(const AuditRecord& record, const StructuralPrior& prior) {
  if (prior.record_id != record.pair_id) return "id_mismatch";
  if (record.sequence.size() < 2) return "sequence_too_short";
  if (prior.indices.empty()) return "empty_prior";
  for (std::size_t idx : prior.indices) {
    if (idx >= record.sequence.size()) return "index_out_of_range";
  }
  if (prior.indices.size() >= record.sequence.size()) return "full_prior";
  return "";
}

const StructuralPrior& validate_prior(const AuditRecord& record, const StructuralPrior& prior) {
  const std::string reason = prior_violation(record, prior);
  if (!reason.empty()) {
    throw ValidationError("prior for " + record.pair_id + ": " + reason);
  }
  return prior;
}

RealizabilityCheck check_realizable(const AuditRecord& record, const StructuralPrior& prior) {
  const std::size_t complement = record.sequence.size() - prior.indices.size();
  if (complement < prior.indices.size()) return {false, "complement_too_small"};
  return {true, ""};
}

std::vector<std::size_t> sample_spurious_scope(const AuditRecord& record,
                                               const StructuralPrior& prior,
                                               std::uint64_t sub_seed) {
  if (!check_realizable(record, prior).realizable) {
    throw ValidationError("spurious scope for " + record.pair_id + ": complement_too_small");
  }
  return sample_without_replacement(prior_complement(record, prior), prior.indices.size(),
                                    sub_seed);
}

std::string apply_mask(const std::string& sequence, const std::vector<std::size_t>& scope,
                       char mask_token) {
  std::string out = sequence;
  for (std::size_t idx : scope) {
    if (idx >= out.size()) throw ValidationError("mask: scope index out of range");
    out[idx] = mask_token;
  }
  return out;
}

SubstitutionResult apply_class_substitution(const std::string& sequence,
                                            const std::vector<std::size_t>& scope,
                                            const ClassTable& table, std::uint64_t sub_seed) {
  SubstitutionResult result{sequence, {}};
  std::vector<std::size_t> ordered = scope;
  std::sort(ordered.begin(), ordered.end());
  SplitMix64 rng(sub_seed);
  for (std::size_t idx : ordered) {
    if (idx >= sequence.size()) throw ValidationError("substitution: scope index out of range");
    const std::string candidates = table.siblings(sequence[idx]);
    if (candidates.empty()) {
      result.no_op_positions.push_back(idx);
      continue;
    }
    result.sequence[idx] = candidates[rng.next_below(candidates.size())];
  }
  return result;
}

MatchedVariantPair build_matched_pair(const AuditRecord& record, const StructuralPrior& prior,
                                      const PerturbationOperatorSpec& spec,
                                      std::uint64_t sub_seed) {
  validate_prior(record, prior);
  MatchedVariantPair pair;
  pair.record_id = record.pair_id;
  pair.operator_kind = spec.kind;
  pair.sub_seed = sub_seed;
  pair.mechanistic_scope = prior.indices;
  pair.spurious_scope = sample_spurious_scope(record, prior, sub_seed);

  if (spec.kind == OperatorKind::Mask) {
    pair.mechanistic_sequence = apply_mask(record.sequence, pair.mechanistic_scope, spec.mask_token);
    pair.spurious_sequence = apply_mask(record.sequence, pair.spurious_scope, spec.mask_token);
  } else {
    pair.mechanistic_sequence =
        apply_class_substitution(record.sequence, pair.mechanistic_scope, spec.class_table,
                                 mix_seed({sub_seed, kStreamMech}))
            .sequence;
    pair.spurious_sequence =
        apply_class_substitution(record.sequence, pair.spurious_scope, spec.class_table,
                                 mix_seed({sub_seed, kStreamSpur}))
            .sequence;
  }
  return pair;
}

std::pair<std::vector<AuditUnit>, CoverageStats> filter_auditing_set(
    const std::vector<AuditRecord>& records, const std::vector<StructuralPrior>& priors) {
  std::map<std::string, const StructuralPrior*> by_id;
  for (const auto& p : priors) by_id.emplace(p.record_id, &p);

  std::vector<AuditUnit> retained;
  CoverageStats stats;
  stats.total = records.size();
  for (const auto& record : records) {
    auto it = by_id.find(record.pair_id);
    if (it == by_id.end()) {
      ++stats.missing_prior;
      continue;
    }
    if (!prior_violation(record, *it->second).empty()) {
      ++stats.invalid_prior;
      continue;
    }
    if (!check_realizable(record, *it->second).realizable) {
      ++stats.not_realizable;
      continue;
    }
    retained.push_back({record, *it->second});
  }
  stats.retained = retained.size();
  return {std::move(retained), stats};
}

}  // namespace coaudit
