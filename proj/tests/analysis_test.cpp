#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "wahlmeter/analysis.hpp"
#include "wahlmeter/corpus.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

using namespace wahlmeter;

namespace {

const std::string kDataDir = WAHLMETER_DATA_DIR;

struct Fixture {
  AlignmentMatrix matrix;
  PartyRegister reg;
  ModelRegistry registry;
  ThetaTable theta;

  Fixture()
      : matrix(AlignmentMatrix::import_fixture_csv(kDataDir + "/alignment_fixture.csv", 38)),
        reg(PartyRegister::load(kDataDir + "/parties.json")),
        registry(ModelRegistry::load(kDataDir + "/registry.json")),
        theta(theta_table_from_alignments(matrix, reg)) {}
};

const Fixture& fixture() {
  static Fixture f;
  return f;
}

}  // namespace

TEST_CASE("size buckets split at 8B and 40B") {
  CHECK(size_bucket(7) == "<=8B");
  CHECK(size_bucket(8) == "<=8B");
  CHECK(size_bucket(8.5) == "9-40B");
  CHECK(size_bucket(32) == "9-40B");
  CHECK(size_bucket(40) == "9-40B");
  CHECK(size_bucket(70) == ">40B");
}

TEST_CASE("aggregate report reproduces the fixture statistics") {
  const AggregateStats stats = aggregate_report(fixture().theta, fixture().registry);

  // expected values recomputed independently from the published table
  CHECK(stats.mean_theta_by_language.at(Language::de) * 100 ==
        Catch::Approx(13.467871).margin(1e-4));
  CHECK(stats.mean_theta_by_language.at(Language::en) * 100 ==
        Catch::Approx(14.981666).margin(1e-4));
  CHECK(stats.mean_theta_by_size_bucket.at("<=8B") * 100 == Catch::Approx(9.410227).margin(1e-4));
  CHECK(stats.mean_theta_by_size_bucket.at("9-40B") * 100 == Catch::Approx(14.178696).margin(1e-4));
  CHECK(stats.mean_theta_by_size_bucket.at(">40B") * 100 == Catch::Approx(21.492651).margin(1e-4));
  CHECK(stats.mean_abs_language_shift * 100 == Catch::Approx(3.488514).margin(1e-4));
  REQUIRE(stats.release_effect.has_value());
  CHECK(*stats.release_effect * 100 == Catch::Approx(3.116667).margin(1e-4));
  REQUIRE(stats.origin_gap.has_value());
  CHECK(*stats.origin_gap * 100 == Catch::Approx(1.808720).margin(1e-4));
  CHECK(stats.median_model == "R1 32B");
  CHECK(stats.mean_theta_by_model.at("Mistral 7B") * 100 == Catch::Approx(3.754312).margin(1e-4));
}

TEST_CASE("language shift is zero when both languages agree") {
  ThetaTable table;
  table.set("only", Language::de, ThetaScore{-0.1});
  table.set("only", Language::en, ThetaScore{-0.1});
  const ModelRegistry registry({{"only", "fam", 7.0, "2024-01-01", "US", std::nullopt}}, {});
  const AggregateStats stats = aggregate_report(table, registry);
  CHECK(stats.mean_abs_language_shift == 0.0);
  CHECK(stats.median_model == "only");
  CHECK_FALSE(stats.release_effect.has_value());
  CHECK(stats.mean_theta_by_size_bucket.count(">40B") == 0);  // empty buckets stay absent
}

TEST_CASE("aggregate report names missing metadata and incomplete tables") {
  ThetaTable table;
  table.set("ghost", Language::de, ThetaScore{-0.1});
  table.set("ghost", Language::en, ThetaScore{-0.2});
  const ModelRegistry empty_registry({}, {});
  CHECK_THROWS_MATCHES(aggregate_report(table, empty_registry), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::missing_model_metadata;
                       }));

  ThetaTable half;
  half.set("half", Language::de, ThetaScore{-0.1});
  const ModelRegistry registry({{"half", "fam", 7.0, "2024-01-01", "US", std::nullopt}}, {});
  CHECK_THROWS_MATCHES(aggregate_report(half, registry), Error,
                       Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::incomplete_theta_table;
                       }));
}

TEST_CASE("triangle inequality between mean shift and shifted means") {
  const AggregateStats stats = aggregate_report(fixture().theta, fixture().registry);
  const double mean_diff = std::abs(stats.mean_theta_by_language.at(Language::en) -
                                    stats.mean_theta_by_language.at(Language::de));
  CHECK(stats.mean_abs_language_shift >= mean_diff - 1e-12);

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (int trial = 0; trial < 50; ++trial) {
    ThetaTable table;
    std::vector<ModelCard> cards;
    for (int m = 0; m < 5; ++m) {
      const std::string id = "m" + std::to_string(m);
      table.set(id, Language::de, ThetaScore{dist(rng)});
      table.set(id, Language::en, ThetaScore{dist(rng)});
      cards.push_back({id, "fam", 7.0, "2024-01-01", "US", std::nullopt});
    }
    const AggregateStats s = aggregate_report(table, ModelRegistry(cards, {}));
    CHECK(s.mean_abs_language_shift >= std::abs(s.mean_theta_by_language.at(Language::en) -
                                                s.mean_theta_by_language.at(Language::de)) -
                                           1e-12);
  }
}

TEST_CASE("party stats reproduce the published per-party means") {
  const PartyStats stats = party_alignment_stats(fixture().matrix);
  CHECK(stats.at("Die Linke", Language::en).mean == Catch::Approx(67.293233).margin(1e-4));
  CHECK(stats.at("Die Linke", Language::de).mean == Catch::Approx(68.045113).margin(1e-4));
  CHECK(stats.at("AfD", Language::en).mean == Catch::Approx(36.278195).margin(1e-4));
  CHECK(stats.at("CDU/CSU", Language::de).mean == Catch::Approx(47.180451).margin(1e-4));
  // highest distribution means across all parties
  CHECK(stats.at("Die PARTEI", Language::de).mean == Catch::Approx(71.428571).margin(1e-4));
  CHECK(stats.at("Tierschutzpartei", Language::en).mean == Catch::Approx(72.556391).margin(1e-4));
}

TEST_CASE("box summaries obey the 1.5 IQR rule exactly") {
  const PartyStats stats = party_alignment_stats(fixture().matrix);
  for (const auto& [key, box] : stats.entries) {
    const double iqr = box.q3 - box.q1;
    const double lo = box.q1 - 1.5 * iqr;
    const double hi = box.q3 + 1.5 * iqr;
    for (double outlier : box.outliers) {
      CHECK((outlier < lo || outlier > hi));
    }
    CHECK(box.whisker_low >= lo - 1e-12);
    CHECK(box.whisker_high <= hi + 1e-12);
    CHECK(box.mean >= box.min - 1e-9);
    CHECK(box.mean <= box.max + 1e-9);
    CHECK(box.q1 <= box.median);
    CHECK(box.median <= box.q3);
  }
}

TEST_CASE("single-model distributions collapse to a point") {
  AlignmentMatrix matrix(38);
  matrix.set("solo", "SPD", Language::de, AlignmentScore(40, 76));
  const PartyStats stats = party_alignment_stats(matrix);
  const BoxSummary& box = stats.at("SPD", Language::de);
  CHECK(box.mean == Catch::Approx(box.min).margin(1e-12));
  CHECK(box.q1 == box.q3);
  CHECK(box.median == box.min);
  CHECK(box.outliers.empty());
}

TEST_CASE("empty matrices are rejected") {
  CHECK_THROWS_MATCHES(party_alignment_stats(AlignmentMatrix()), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::empty_matrix; }));
  CHECK_THROWS_MATCHES(box_summary({}), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::empty_input; }));
}

TEST_CASE("language change report reproduces the Llama 2 figures") {
  const LanguageChangeReport report = language_change_report(fixture().matrix);
  CHECK(report.mean_abs_change.at("Llama 2 7B") == Catch::Approx(5.701754).margin(1e-4));
  CHECK(report.mean_abs_change.at("Llama 2 70B") == Catch::Approx(6.578947).margin(1e-4));
  CHECK(report.deltas.at({"Llama 2 7B", "CDU/CSU"}) == Catch::Approx(-13.157895).margin(1e-4));
}

TEST_CASE("identical rows in both languages produce zero change") {
  AlignmentMatrix matrix(38);
  matrix.set("same", "SPD", Language::de, AlignmentScore(40, 76));
  matrix.set("same", "SPD", Language::en, AlignmentScore(40, 76));
  const LanguageChangeReport report = language_change_report(matrix);
  CHECK(report.mean_abs_change.at("same") == 0.0);
  CHECK(report.deltas.at({"same", "SPD"}) == 0.0);
}

TEST_CASE("missing language in the matrix is reported") {
  AlignmentMatrix matrix(38);
  matrix.set("half", "SPD", Language::de, AlignmentScore(40, 76));
  CHECK_THROWS_MATCHES(language_change_report(matrix), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::missing_language; }));
}
