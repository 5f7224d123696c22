#pragma once

// Componentized inputs, structural priors, and the matched
// mechanistic/spurious perturbation construction.
//
// The mechanistic variant perturbs exactly the prior-selected positions; the
// spurious control perturbs a uniformly sampled subset of the complement with
// the same cardinality, under the same operator rule. Indices are 0-based
// throughout, including in prior files.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace coaudit {

// One componentized input: a fixed context plus a perturbable symbol
// sequence, identified by a stable pair_id.
struct AuditRecord {
  std::string pair_id;
  std::string context;   // held fixed under every intervention
  std::string sequence;  // components, one symbol per position
  std::optional<int> label;  // optional binary label, used only for AUROC
};

// Per-record set of prior-selected component positions. Must be a proper
// non-empty subset of {0..M-1}.
struct StructuralPrior {
  std::string record_id;
  std::vector<std::size_t> indices;  // sorted, unique
};

// Partition of the symbol alphabet into named classes.
class ClassTable {
 public:
  ClassTable() = default;
  // Throws ValidationError unless the classes are disjoint and non-empty.
  explicit ClassTable(std::map<std::string, std::string> classes);

  // Default amino-acid partition. Non-canonical; override via the class
  // table file when the application defines its own grouping.
  static ClassTable default_amino_acids();

  static ClassTable load_json(const std::string& path);

  // Symbols sharing a class with `symbol`, excluding `symbol` itself.
  // Throws ValidationError when the symbol is not covered.
  const std::string& class_of(char symbol) const;
  std::string siblings(char symbol) const;

  std::string alphabet() const;  // sorted union of all classes
  const std::map<std::string, std::string>& classes() const { return classes_; }

 private:
  std::map<std::string, std::string> classes_;  // class name -> symbols
  std::map<char, std::string> symbol_class_;    // symbol -> class name
};

enum class OperatorKind { Mask, ClassSubstitution };

const char* operator_name(OperatorKind kind);
OperatorKind operator_from_name(const std::string& name);

struct PerturbationOperatorSpec {
  OperatorKind kind = OperatorKind::Mask;
  char mask_token = 'X';
  ClassTable class_table;  // required for ClassSubstitution
};

// Mechanistic and spurious variants of one record, sharing operator and
// scope cardinality.
struct MatchedVariantPair {
  std::string record_id;
  OperatorKind operator_kind = OperatorKind::Mask;
  std::vector<std::size_t> mechanistic_scope;  // == prior indices
  std::vector<std::size_t> spurious_scope;     // subset of the complement
  std::string mechanistic_sequence;
  std::string spurious_sequence;
  std::uint64_t sub_seed = 0;
};

struct RealizabilityCheck {
  bool realizable = false;
  std::string reason;  // "complement_too_small" when not realizable
};

struct CoverageStats {
  std::size_t total = 0;
  std::size_t missing_prior = 0;
  std::size_t invalid_prior = 0;
  std::size_t not_realizable = 0;
  std::size_t retained = 0;
};

struct AuditUnit {
  AuditRecord record;
  StructuralPrior prior;
};

// Returns "" when valid; otherwise the violated clause: "id_mismatch",
// "empty_prior", "full_prior", "index_out_of_range", "sequence_too_short".
std::string prior_violation(const AuditRecord& record, const StructuralPrior& prior);

// Throws ValidationError naming the violated clause.
const StructuralPrior& validate_prior(const AuditRecord& record, const StructuralPrior& prior);

RealizabilityCheck check_realizable(const AuditRecord& record, const StructuralPrior& prior);

// Uniform sample of |prior| positions from the prior complement, driven by
// SplitMix64 seeded with sub_seed. Deterministic.
std::vector<std::size_t> sample_spurious_scope(const AuditRecord& record,
                                               const StructuralPrior& prior,
                                               std::uint64_t sub_seed);

std::string apply_mask(const std::string& sequence, const std::vector<std::size_t>& scope,
                       char mask_token);

struct SubstitutionResult {
  std::string sequence;
  std::vector<std::size_t> no_op_positions;  // scoped positions with singleton classes
};

// Replaces each scoped symbol by a uniform draw from its class excluding the
// original; singleton classes keep the symbol and record a no-op. Draws
// consume the stream in ascending position order.
SubstitutionResult apply_class_substitution(const std::string& sequence,
                                            const std::vector<std::size_t>& scope,
                                            const ClassTable& table, std::uint64_t sub_seed);

MatchedVariantPair build_matched_pair(const AuditRecord& record, const StructuralPrior& prior,
                                      const PerturbationOperatorSpec& spec,
                                      std::uint64_t sub_seed);

// Keeps records with a valid, realizable prior; exclusions are counted, not
// thrown.
std::pair<std::vector<AuditUnit>, CoverageStats> filter_auditing_set(
    const std::vector<AuditRecord>& records, const std::vector<StructuralPrior>& priors);

}  // namespace coaudit
