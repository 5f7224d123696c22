#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include "coaudit/errors.hpp"
#include "coaudit/prng.hpp"
#include "coaudit/scoring.hpp"

using namespace coaudit;
namespace fs = std::filesystem;

namespace {

struct StubAdapter : ScoringAdapter {
  std::vector<double> scores;
  std::vector<double> score_batch_impl(const std::vector<ScoreItem>&) override { return scores; }
};

std::vector<AuditUnit> two_units() {
  std::vector<AuditUnit> units;
  units.push_back({{"a", "ctx", "AVLIMFWYST", std::nullopt}, {"a", {2, 3, 4}}});
  units.push_back({{"b", "ctx", "STNQCAVLIM", std::nullopt}, {"b", {0, 1, 2}}});
  return units;
}

std::vector<MatchedVariantPair> pairs_for(const std::vector<AuditUnit>& units,
                                          OperatorKind op, std::uint64_t master) {
  PerturbationOperatorSpec spec{op, 'X', ClassTable::default_amino_acids()};
  std::vector<MatchedVariantPair> pairs;
  for (const auto& u : units) {
    pairs.push_back(build_matched_pair(u.record, u.prior, spec,
                                       mix_seed({master, stable_hash64(u.record.pair_id)})));
  }
  return pairs;
}

std::map<std::string, std::vector<std::size_t>> priors_of(const std::vector<AuditUnit>& units) {
  std::map<std::string, std::vector<std::size_t>> m;
  for (const auto& u : units) m.emplace(u.record.pair_id, u.prior.indices);
  return m;
}

}  // namespace

TEST_CASE("score_batch: contract enforcement") {
  StubAdapter adapter;
  std::vector<ScoreItem> items{{"a", VariantTag::Original, "c", "AV"},
                               {"b", VariantTag::Original, "c", "LI"},
                               {"c", VariantTag::Original, "c", "MF"}};

  adapter.scores = {1.0, 2.0, 3.0};
  CHECK(score_batch(adapter, items) == std::vector<double>{1.0, 2.0, 3.0});

  adapter.scores = {1.0, 2.0};
  CHECK_THROWS_WITH_AS(score_batch(adapter, items),
                       doctest::Contains("count_mismatch"), AdapterError);

  adapter.scores = {1.0, std::nan(""), 3.0};
  CHECK_THROWS_WITH_AS(score_batch(adapter, items), doctest::Contains("non_finite_score"),
                       AdapterError);

  CHECK_THROWS_AS(score_batch(adapter, {}), ValidationError);
}

TEST_CASE("synthetic model: determinism and read-set identities") {
  const auto units = two_units();
  const auto priors = priors_of(units);

  SyntheticModelSpec spec;
  spec.read_set = ReadSet::PriorOnly;
  spec.noise_sigma = 0.1;
  spec.model_seed = 11;
  SyntheticAdapter prior_only(spec, priors);

  spec.read_set = ReadSet::ComplementOnly;
  SyntheticAdapter complement_only(spec, priors);

  const auto pairs = pairs_for(units, OperatorKind::Mask, 5);
  for (std::size_t i = 0; i < units.size(); ++i) {
    const auto& r = units[i].record;
    // spurious perturbation preserves prior components -> prior_only blind to it
    CHECK(prior_only.score(r.pair_id, pairs[i].spurious_sequence) ==
          prior_only.score(r.pair_id, r.sequence));
    // mechanistic perturbation preserves the complement -> symmetric case
    CHECK(complement_only.score(r.pair_id, pairs[i].mechanistic_sequence) ==
          complement_only.score(r.pair_id, r.sequence));
    // but each model does react to its own read set
    CHECK(prior_only.score(r.pair_id, pairs[i].mechanistic_sequence) !=
          prior_only.score(r.pair_id, r.sequence));
    CHECK(prior_only.score(r.pair_id, r.sequence) == prior_only.score(r.pair_id, r.sequence));
  }
}

TEST_CASE("synthetic model: mask token embeds to zero") {
  const auto units = two_units();
  SyntheticModelSpec spec;
  spec.model_seed = 3;
  SyntheticAdapter adapter(spec, priors_of(units));
  for (std::size_t col = 0; col < 16; ++col) {
    CHECK(adapter.embedding('X', col) == 0.0);
    CHECK(adapter.embedding('A', col) >= -1.0);
    CHECK(adapter.embedding('A', col) <= 1.0);
  }
}

TEST_CASE("build_response_profiles: alignment and ordering") {
  const auto units = two_units();
  SyntheticModelSpec spec;
  spec.read_set = ReadSet::Mixed;
  spec.alpha = 1.0;
  spec.beta = 0.5;
  spec.model_seed = 21;
  SyntheticAdapter adapter(spec, priors_of(units));

  const auto pairs = pairs_for(units, OperatorKind::Mask, 17);
  const auto both = build_response_profiles(adapter, units, pairs);
  CHECK(both.mechanistic.pair_ids == std::vector<std::string>{"a", "b"});
  CHECK(both.spurious.pair_ids == both.mechanistic.pair_ids);
  CHECK(both.mechanistic.original == both.spurious.original);
  both.mechanistic.validate();
  both.spurious.validate();

  // every masked prior position shifts the prior-reading part of the score
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(both.mechanistic.perturbed[i] != both.mechanistic.original[i]);
  }

  const auto single = build_response_profile(adapter, units, pairs, VariantTag::Spurious);
  CHECK(single.perturbed == both.spurious.perturbed);
}

TEST_CASE("file-exchange adapter round trip") {
  const fs::path dir = fs::temp_directory_path() / "coaudit_file_adapter_test";
  fs::create_directories(dir);
  const std::string req = (dir / "req.jsonl").string();
  const std::string resp = (dir / "resp.csv").string();
  fs::remove(req);
  fs::remove(resp);

  FileExchangeAdapter adapter(req, resp, 5, 5000);
  std::vector<ScoreItem> items{{"a", VariantTag::Original, "c", "AV"},
                               {"b", VariantTag::Mechanistic, "c", "XV"}};

  std::thread responder([&] {
    while (!fs::exists(req)) std::this_thread::sleep_for(std::chrono::milliseconds(2));
    std::ofstream out(resp + ".tmp", std::ios::binary);
    out << "pair_id,variant,score\nb,mech,2.5\na,orig,1.5\n";
    out.close();
    fs::rename(resp + ".tmp", resp);
  });
  const auto scores = score_batch(adapter, items);
  responder.join();
  CHECK(scores == std::vector<double>{1.5, 2.5});
  CHECK_FALSE(fs::exists(req));
  CHECK_FALSE(fs::exists(resp));
}

TEST_CASE("file-exchange adapter: missing response row") {
  const fs::path dir = fs::temp_directory_path() / "coaudit_file_adapter_test2";
  fs::create_directories(dir);
  const std::string req = (dir / "req.jsonl").string();
  const std::string resp = (dir / "resp.csv").string();
  {
    std::ofstream out(resp, std::ios::binary);
    out << "pair_id,variant,score\na,orig,1.5\n";
  }
  FileExchangeAdapter adapter(req, resp, 5, 1000);
  std::vector<ScoreItem> items{{"a", VariantTag::Original, "c", "AV"},
                               {"b", VariantTag::Original, "c", "LI"}};
  CHECK_THROWS_WITH_AS(score_batch(adapter, items), doctest::Contains("missing response"),
                       AdapterError);
}

TEST_CASE("subprocess adapter: line protocol") {
  // Child echoes sequence length as the score.
  SubprocessAdapter adapter(
      "python3 -c \"import sys,json\n"
      "for line in sys.stdin:\n"
      "    o=json.loads(line)\n"
      "    print('%s,%s,%d'%(o['pair_id'],o['variant'],len(o['sequence'])))\"");
  std::vector<ScoreItem> items{{"a", VariantTag::Original, "c", "AVL"},
                               {"b", VariantTag::Spurious, "c", "AVLIM"}};
  CHECK(score_batch(adapter, items) == std::vector<double>{3.0, 5.0});
}

TEST_CASE("subprocess adapter: nonzero exit and malformed output") {
  SubprocessAdapter failing("cat > /dev/null; exit 3");
  std::vector<ScoreItem> items{{"a", VariantTag::Original, "c", "AV"}};
  CHECK_THROWS_WITH_AS(score_batch(failing, items), doctest::Contains("status"), AdapterError);

  SubprocessAdapter garbled("cat > /dev/null; echo not-a-csv-line");
  CHECK_THROWS_WITH_AS(score_batch(garbled, items), doctest::Contains("not-a-csv-line"),
                       AdapterError);
}
