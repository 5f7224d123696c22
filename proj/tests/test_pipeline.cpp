#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "coaudit/errors.hpp"
#include "coaudit/pipeline.hpp"
#include "coaudit/prng.hpp"

using namespace coaudit;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("coaudit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<AuditRecord> make_records(std::size_t n, std::size_t m, bool identical = false) {
  const std::string alphabet = ClassTable::default_amino_acids().alphabet();
  std::vector<AuditRecord> records;
  for (std::size_t i = 0; i < n; ++i) {
    AuditRecord r;
    r.pair_id = "p" + std::to_string(1000 + i);
    r.context = "ctx";
    SplitMix64 rng(identical ? 1 : stable_hash64(r.pair_id));
    for (std::size_t k = 0; k < m; ++k) r.sequence += alphabet[rng.next_below(alphabet.size())];
    r.label = static_cast<int>(stable_hash64(r.pair_id) & 1);
    records.push_back(std::move(r));
  }
  return records;
}

std::vector<StructuralPrior> make_priors(const std::vector<AuditRecord>& records,
                                         std::size_t prior_size) {
  std::vector<StructuralPrior> priors;
  for (const auto& r : records) {
    StructuralPrior p;
    p.record_id = r.pair_id;
    for (std::size_t i = 0; i < prior_size; ++i) p.indices.push_back(i);
    priors.push_back(std::move(p));
  }
  return priors;
}

AuditConfig base_config() {
  AuditConfig cfg;
  cfg.model_id = "synthA";
  cfg.operators = {OperatorKind::Mask, OperatorKind::ClassSubstitution};
  cfg.bootstrap.replicates = 20;
  cfg.bootstrap.boot_seed = 4;
  cfg.master_seed = 9;
  cfg.adapter.kind = "synthetic";
  cfg.adapter.synthetic.read_set = ReadSet::Mixed;
  cfg.adapter.synthetic.alpha = 1.0;
  cfg.adapter.synthetic.beta = 0.2;
  cfg.adapter.synthetic.noise_sigma = 0.05;
  cfg.adapter.model_seeds = {1, 2};
  return cfg;
}

const AbsoluteRow& find_row(const MetricReport& report, const std::string& seed,
                            const std::string& op, const std::string& cls,
                            const std::string& metric) {
  for (const auto& r : report.absolute) {
    if (r.seed == seed && r.op == op && r.cls == cls && r.metric == metric) return r;
  }
  throw std::runtime_error("row not found: " + seed + "/" + op + "/" + cls + "/" + metric);
}

}  // namespace

TEST_CASE("load_audit_set: happy path and errors") {
  const auto dir = temp_dir("load_audit");

  write(dir / "ok.jsonl",
        R"({"pair_id":"a","context":"c1","sequence":"AVLI"})"
        "\n"
        R"({"pair_id":"b","context":"c2","sequence":"STNQ","label":1})"
        "\n");
  const auto records = load_audit_set((dir / "ok.jsonl").string());
  REQUIRE(records.size() == 2);
  CHECK(records[0].pair_id == "a");
  CHECK_FALSE(records[0].label.has_value());
  CHECK(records[1].label == 1);

  write(dir / "dup.jsonl",
        "{\"pair_id\":\"a\",\"context\":\"c\",\"sequence\":\"AV\"}\n"
        "{\"pair_id\":\"b\",\"context\":\"c\",\"sequence\":\"AV\"}\n"
        "{\"pair_id\":\"a\",\"context\":\"c\",\"sequence\":\"LI\"}\n");
  CHECK_THROWS_WITH_AS(load_audit_set((dir / "dup.jsonl").string()),
                       doctest::Contains("lines 1 and 3"), ValidationError);

  write(dir / "empty.jsonl", "");
  CHECK_THROWS_WITH_AS(load_audit_set((dir / "empty.jsonl").string()),
                       doctest::Contains("empty_audit_set"), ValidationError);

  write(dir / "alpha.jsonl", R"({"pair_id":"a","context":"c","sequence":"AZ"})"
                             "\n");
  CHECK_THROWS_WITH_AS(load_audit_set((dir / "alpha.jsonl").string(), "ACDEFG"),
                       doctest::Contains("line 1"), ValidationError);

  write(dir / "label.jsonl", R"({"pair_id":"a","context":"c","sequence":"AV","label":2})"
                             "\n");
  CHECK_THROWS_AS(load_audit_set((dir / "label.jsonl").string()), ValidationError);
}

TEST_CASE("load_priors: happy path and errors") {
  const auto dir = temp_dir("load_priors");
  write(dir / "ok.jsonl", R"({"record_id":"t1","indices":[4,2,3,2]})"
                          "\n");
  const auto priors = load_priors((dir / "ok.jsonl").string());
  REQUIRE(priors.size() == 1);
  CHECK(priors[0].indices == std::vector<std::size_t>{2, 3, 4});  // sorted, deduped

  write(dir / "neg.jsonl", R"({"record_id":"t1","indices":[-1]})"
                           "\n");
  CHECK_THROWS_WITH_AS(load_priors((dir / "neg.jsonl").string()),
                       doctest::Contains("negative_index"), ValidationError);
}

TEST_CASE("derive_sub_seed: stable under operator/seed additions") {
  const auto s1 = derive_sub_seed(1, "p1", OperatorKind::Mask, 0);
  CHECK(s1 == derive_sub_seed(1, "p1", OperatorKind::Mask, 0));
  CHECK(s1 != derive_sub_seed(1, "p1", OperatorKind::ClassSubstitution, 0));
  CHECK(s1 != derive_sub_seed(1, "p1", OperatorKind::Mask, 1));
  CHECK(s1 != derive_sub_seed(1, "p2", OperatorKind::Mask, 0));
  CHECK(s1 != derive_sub_seed(2, "p1", OperatorKind::Mask, 0));
}

TEST_CASE("run_audit: degenerate handling for read-set oracles") {
  auto cfg = base_config();
  cfg.operators = {OperatorKind::Mask};
  cfg.adapter.synthetic.read_set = ReadSet::PriorOnly;
  cfg.adapter.model_seeds = {1};

  const auto records = make_records(12, 30);
  const auto priors = make_priors(records, 6);
  const auto report = run_audit(cfg, records, priors);

  for (const auto& metric : {"QBM", "WCM", "TI_WCM"}) {
    for (const auto& seed : {"1", "all"}) {
      const auto& spur = find_row(report, seed, "mask", "spurious", metric);
      CHECK(spur.degenerate);
      CHECK(spur.value == 0.0);
      const auto& mech = find_row(report, seed, "mask", "mechanistic", metric);
      CHECK_FALSE(mech.degenerate);
    }
  }

  // symmetric case
  cfg.adapter.synthetic.read_set = ReadSet::ComplementOnly;
  const auto report2 = run_audit(cfg, records, priors);
  for (const auto& metric : {"QBM", "WCM", "TI_WCM"}) {
    const auto& mech = find_row(report2, "all", "mask", "mechanistic", metric);
    CHECK(mech.degenerate);
    CHECK(mech.value == 0.0);
  }
}

TEST_CASE("run_audit: completeness, contrast consistency, ranges") {
  auto cfg = base_config();
  cfg.grids.push_back(QuantileGrid{{0.1, 0.3, 0.5, 0.7, 0.9}});
  const auto records = make_records(15, 24);
  const auto priors = make_priors(records, 5);
  const auto report = run_audit(cfg, records, priors);

  // (seeds + all) x (ops + all) x classes x (QBM per grid + WCM + TI_WCM)
  const std::size_t expected = (2 + 1) * (2 + 1) * 2 * (2 + 1 + 1);
  CHECK(report.absolute.size() == expected);
  CHECK(report.contrasts.size() == (2 + 1) * 3);

  for (const auto& r : report.absolute) {
    CHECK(r.value >= 0.0);
    CHECK(r.value <= 1.0);
    CHECK(r.lower <= r.upper);
  }
  for (const auto& c : report.contrasts) {
    CHECK(c.delta >= -1.0);
    CHECK(c.delta <= 1.0);
    const auto& mech = find_row(report, "all", c.op, "mechanistic", c.metric);
    const auto& spur = find_row(report, "all", c.op, "spurious", c.metric);
    CHECK(c.delta == doctest::Approx(spur.value - mech.value).epsilon(1e-15));
  }

  // AUROC block present: one row per seed plus the aggregate
  CHECK(report.auroc.size() == 3);
  for (const auto& a : report.auroc) {
    CHECK(a.value >= 0.0);
    CHECK(a.value <= 1.0);
  }

  // coverage: everything retained
  CHECK(report.coverage.retained == 15);
}

TEST_CASE("run_audit: operator-all rows match recomputation from pooled profiles") {
  auto cfg = base_config();
  cfg.adapter.model_seeds = {1};
  const auto records = make_records(10, 24);
  const auto priors = make_priors(records, 5);
  const auto report = run_audit(cfg, records, priors);

  // pooling two operators halves nothing: the "all" value must lie between
  // neither bound in general, but it is exactly the metric of the pooled
  // profile; rebuild it via a single-operator trick: run each op separately
  // and concatenate by hand.
  auto cfg_mask = cfg;
  cfg_mask.operators = {OperatorKind::Mask};
  auto cfg_sub = cfg;
  cfg_sub.operators = {OperatorKind::ClassSubstitution};
  // with one operator the "all" row equals the single-operator row
  const auto rep_mask = run_audit(cfg_mask, records, priors);
  CHECK(find_row(rep_mask, "1", "all", "mechanistic", "WCM").value ==
        doctest::Approx(find_row(rep_mask, "1", "mask", "mechanistic", "WCM").value)
            .epsilon(1e-12));

  // and pooled mask+substitution differs from mask alone in general
  CHECK(find_row(report, "1", "all", "mechanistic", "WCM").value !=
        find_row(report, "1", "mask", "mechanistic", "WCM").value);
}

TEST_CASE("emit_report: deterministic bytes and headers-only case") {
  auto cfg = base_config();
  cfg.adapter.model_seeds = {1};
  const auto records = make_records(10, 24);
  const auto priors = make_priors(records, 5);
  const auto report = run_audit(cfg, records, priors);

  const auto d1 = temp_dir("emit1");
  const auto d2 = temp_dir("emit2");
  emit_report(report, d1.string());
  emit_report(run_audit(cfg, records, priors), d2.string());
  for (const auto* name : {"absolute_metrics.csv", "contrasts.csv", "plot_deltas.csv",
                           "summary.json"}) {
    CHECK(slurp(d1 / name) == slurp(d2 / name));
  }

  const std::string abs = slurp(d1 / "absolute_metrics.csv");
  CHECK(abs.rfind("model,seed,operator,class,metric,grid,value,lo,hi,degenerate\n", 0) == 0);
  CHECK(abs.find("\r") == std::string::npos);

  const auto d3 = temp_dir("emit3");
  emit_report(MetricReport{}, d3.string());
  CHECK(slurp(d3 / "contrasts.csv") == "model,operator,metric,delta,lo,hi\n");
  CHECK(slurp(d3 / "plot_deltas.csv") == "model,metric,delta,lo,hi\n");
}

TEST_CASE("qbm_sensitivity: K3 matches the default run; uniform shift gives 0") {
  auto cfg = base_config();
  cfg.operators = {OperatorKind::Mask};
  cfg.adapter.model_seeds = {1, 2};
  const auto records = make_records(14, 24);
  const auto priors = make_priors(records, 5);

  const auto rows = qbm_sensitivity(cfg, records, priors);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].grid == "K3");
  CHECK(rows[1].grid == "K5");
  CHECK(rows[2].grid == "K9");

  const auto report = run_audit(cfg, records, priors);
  const auto& mech_all = find_row(report, "all", "all", "mechanistic", "QBM");
  CHECK(rows[0].mechanistic.point == doctest::Approx(mech_all.value).epsilon(1e-12));

  // identical records + identical priors + zero noise -> the mask shifts
  // every score by the same constant -> QBM_mech = 0 on every grid
  auto shift_cfg = cfg;
  shift_cfg.adapter.synthetic.noise_sigma = 0.0;
  const auto same_records = make_records(8, 24, /*identical=*/true);
  const auto same_priors = make_priors(same_records, 5);
  for (const auto& row : qbm_sensitivity(shift_cfg, same_records, same_priors)) {
    CHECK(row.mechanistic.point == doctest::Approx(0.0));
  }
}

TEST_CASE("config: JSON loading with relative paths and validation") {
  const auto dir = temp_dir("config");
  write(dir / "audit.jsonl", R"({"pair_id":"a","context":"c","sequence":"AVLIMF"})"
                             "\n");
  write(dir / "priors.jsonl", R"({"record_id":"a","indices":[0,1]})"
                              "\n");
  write(dir / "config.json", R"({
    "model_id": "m",
    "audit_set": "audit.jsonl",
    "priors": "priors.jsonl",
    "operators": ["mask"],
    "master_seed": 3,
    "adapter": {"kind": "synthetic", "read_set": "mixed", "alpha": 1.0, "model_seeds": [1]}
  })");

  const auto cfg = AuditConfig::load_json((dir / "config.json").string());
  CHECK(cfg.model_id == "m");
  CHECK(fs::path(cfg.audit_set_path).is_absolute());
  CHECK(cfg.operators.size() == 1);
  CHECK(cfg.grids.size() == 1);  // default grid

  write(dir / "bad.json", R"({"audit_set":"missing.jsonl","priors":"priors.jsonl",
    "adapter":{"kind":"synthetic"}})");
  CHECK_THROWS_AS(AuditConfig::load_json((dir / "bad.json").string()), ValidationError);
}

TEST_CASE("generate_synthetic_dataset: runnable output") {
  const auto dir = temp_dir("synthgen");
  write(dir / "spec.json",
        R"({"n_records": 12, "sequence_length": 20, "prior_size": 4, "seed": 2,
            "model_seeds": [1, 2], "replicates": 10})");
  generate_synthetic_dataset((dir / "spec.json").string(), (dir / "out").string());

  for (const auto* name : {"audit.jsonl", "priors.jsonl", "class_table.json", "config.json"}) {
    CHECK(fs::exists(dir / "out" / name));
  }
  const auto cfg = AuditConfig::load_json((dir / "out" / "config.json").string());
  const auto report = run_audit(cfg);
  CHECK(report.coverage.retained == 12);
  CHECK_FALSE(report.absolute.empty());
}
