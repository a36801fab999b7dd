#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <random>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/scoring.hpp"

using namespace wahlmeter;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = WAHLMETER_DATA_DIR;

ResponseVector make_vector(const std::string& model, Language lang, const std::vector<int>& values) {
  ResponseVector out;
  out.model_id = model;
  out.language = lang;
  for (int v : values) out.values.push_back(static_cast<ResponseValue>(v));
  return out;
}

fs::path temp_file(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "wahlmeter-scoring-tests";
  fs::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_CASE("alignment of identical vectors is exactly one") {
  std::vector<int> row(38, 1);
  const AlignmentScore score = alignment(row, make_vector("m", Language::de, row));
  CHECK(score.numerator() == 76);
  CHECK(score.denominator() == 76);
  CHECK(score.value() == 1.0);
}

TEST_CASE("alignment of opposite vectors is exactly zero") {
  std::vector<int> agree(38, 0), disagree(38, 2);
  const AlignmentScore score = alignment(agree, make_vector("m", Language::de, disagree));
  CHECK(score.numerator() == 0);
  CHECK(score.value() == 0.0);
}

TEST_CASE("one half-step difference out of 38 gives 75/76") {
  std::vector<int> party(38, 0), llm(38, 0);
  llm[17] = 1;  // Agree vs Neutral on a single statement
  const AlignmentScore score = alignment(party, make_vector("m", Language::en, llm));
  CHECK(score.numerator() == 75);
  CHECK(score.denominator() == 76);
  CHECK(render_percent(score) == "98.68");
}

TEST_CASE("alignment equals the brute-force per-statement oracle") {
  std::mt19937 rng(1234);
  std::uniform_int_distribution<int> len_dist(1, 6), val_dist(0, 2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = len_dist(rng);
    std::vector<int> a, b;
    for (int i = 0; i < n; ++i) {
      a.push_back(val_dist(rng));
      b.push_back(val_dist(rng));
    }
    double expected = 0.0;
    for (int i = 0; i < n; ++i) expected += 1.0 - std::abs(a[i] - b[i]) / 2.0;
    expected /= n;
    const AlignmentScore score = alignment(a, make_vector("m", Language::de, b));
    CHECK(score.value() == Catch::Approx(expected).margin(1e-12));
    // closed form: numerator = 2N - total absolute difference
    int total = 0;
    for (int i = 0; i < n; ++i) total += std::abs(a[i] - b[i]);
    CHECK(score.numerator() == 2 * n - total);
  }
}

TEST_CASE("alignment is symmetric in its arguments") {
  std::mt19937 rng(99);
  std::uniform_int_distribution<int> val_dist(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<int> a, b;
    for (int i = 0; i < 10; ++i) {
      a.push_back(val_dist(rng));
      b.push_back(val_dist(rng));
    }
    CHECK(alignment(a, make_vector("m", Language::de, b)) ==
          alignment(b, make_vector("m", Language::de, a)));
  }
}

TEST_CASE("alignment rejects mismatched lengths and bad party values") {
  std::vector<int> row(5, 1);
  CHECK_THROWS_MATCHES(alignment(row, make_vector("m", Language::de, {1, 1})), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::length_mismatch; }));
  CHECK_THROWS_MATCHES(alignment(std::vector<int>{}, make_vector("m", Language::de, {})), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::length_mismatch; }));
  std::vector<int> bad(2, 3);
  CHECK_THROWS_MATCHES(alignment(bad, make_vector("m", Language::de, {1, 1})), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::value_out_of_range; }));
}

TEST_CASE("response_vector demands completeness and reports gaps") {
  std::vector<Transcript> finals;
  for (int id = 1; id <= 5; ++id) {
    if (id == 3) continue;
    finals.push_back({"m", Language::en, id, "", ResponseValue::agree, false, 1, "t"});
  }
  finals.push_back({"m", Language::en, 5, "", std::nullopt, false, 3, "t"});  // unparseable final
  try {
    response_vector(finals, "m", Language::en, 5);
    FAIL("expected IncompleteResponses");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::incomplete_responses);
    CHECK(std::string(e.what()).find("3") != std::string::npos);
    CHECK(std::string(e.what()).find("5") != std::string::npos);
  }
}

TEST_CASE("alignment_matrix covers every model, party and language") {
  const Corpus corpus = Corpus::load(kDataDir + "/corpus.json");
  const PartyRegister reg = PartyRegister::load(kDataDir + "/parties.json");
  const PositionMatrix positions =
      PositionMatrix::load(kDataDir + "/position_matrix.csv", corpus, reg);

  std::vector<ResponseVector> vectors;
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> val_dist(0, 2);
  for (const std::string model : {"alpha", "beta"}) {
    for (Language lang : kLanguages) {
      std::vector<int> values;
      for (int i = 0; i < 38; ++i) values.push_back(val_dist(rng));
      vectors.push_back(make_vector(model, lang, values));
    }
  }
  const AlignmentMatrix matrix = alignment_matrix(positions, vectors);
  CHECK(matrix.models().size() == 2);
  CHECK(matrix.parties().size() == 12);
  CHECK(matrix.entries().size() == 2 * 12 * 2);
  for (const auto& [key, score] : matrix.entries()) {
    CHECK(score.value() >= 0.0);
    CHECK(score.value() <= 1.0);
    CHECK(score.denominator() == 76);
  }

  // identical vector and party row scores 100.00
  std::vector<int> spd_row = positions.party_row("SPD");
  const AlignmentMatrix single =
      alignment_matrix(positions, {make_vector("echo", Language::de, spd_row)});
  CHECK(render_percent(single.at("echo", "SPD", Language::de)) == "100.00");

  CHECK_THROWS_MATCHES(
      alignment_matrix(positions, {make_vector("short", Language::de, {0, 1, 2})}), Error,
      Catch::Matchers::Predicate<Error>(
          [](const Error& e) { return e.code() == Errc::length_mismatch; }));
}

TEST_CASE("shift_classify follows the encoding and is antisymmetric") {
  using RV = ResponseValue;
  CHECK(shift_classify(RV::disagree, RV::agree) == ShiftClass::positive_full);
  CHECK(shift_classify(RV::neutral, RV::neutral) == ShiftClass::none);
  CHECK(shift_classify(RV::agree, RV::neutral) == ShiftClass::negative_half);
  CHECK(shift_classify(RV::agree, RV::disagree) == ShiftClass::negative_full);
  CHECK(shift_classify(RV::neutral, RV::agree) == ShiftClass::positive_half);

  auto mirror = [](ShiftClass c) {
    switch (c) {
      case ShiftClass::positive_half: return ShiftClass::negative_half;
      case ShiftClass::positive_full: return ShiftClass::negative_full;
      case ShiftClass::negative_half: return ShiftClass::positive_half;
      case ShiftClass::negative_full: return ShiftClass::positive_full;
      case ShiftClass::none: return ShiftClass::none;
    }
    return ShiftClass::none;
  };
  for (int a = 0; a <= 2; ++a) {
    for (int b = 0; b <= 2; ++b) {
      const auto forward = shift_classify(static_cast<RV>(a), static_cast<RV>(b));
      const auto backward = shift_classify(static_cast<RV>(b), static_cast<RV>(a));
      CHECK(backward == mirror(forward));
    }
  }
}

TEST_CASE("response_stats computes population dispersion per statement") {
  SECTION("all models neutral everywhere") {
    std::vector<ResponseVector> vectors;
    for (const std::string model : {"a", "b", "c"}) {
      vectors.push_back(make_vector(model, Language::en, std::vector<int>(4, 1)));
    }
    const ResponseStats stats = response_stats(vectors);
    const auto& en = stats.by_language.at(Language::en);
    CHECK(en.mean_std == 0.0);
    CHECK(en.unanimous_statements == 4);
    CHECK(en.neutral_count.at("a") == 4);
    CHECK(en.agree_count.at("a") == 0);
  }
  SECTION("agree/disagree split has population std 1") {
    const ResponseStats stats = response_stats(
        {make_vector("a", Language::de, {0}), make_vector("b", Language::de, {2})});
    const auto& de = stats.by_language.at(Language::de);
    CHECK(de.per_statement_std[0] == Catch::Approx(1.0).margin(1e-12));
    CHECK(de.unanimous_statements == 0);
  }
  SECTION("three synthetic models match the hand recomputation") {
    const std::vector<std::vector<int>> data{{0, 1, 2, 0}, {1, 1, 2, 2}, {2, 1, 0, 1}};
    std::vector<ResponseVector> vectors;
    for (size_t m = 0; m < data.size(); ++m) {
      vectors.push_back(make_vector("m" + std::to_string(m), Language::en, data[m]));
    }
    const ResponseStats stats = response_stats(vectors);
    double expected_mean = 0.0;
    for (int s = 0; s < 4; ++s) {
      double mean = 0.0;
      for (const auto& row : data) mean += row[static_cast<size_t>(s)];
      mean /= 3.0;
      double var = 0.0;
      for (const auto& row : data) {
        var += (row[static_cast<size_t>(s)] - mean) * (row[static_cast<size_t>(s)] - mean);
      }
      expected_mean += std::sqrt(var / 3.0);
    }
    expected_mean /= 4.0;
    CHECK(stats.by_language.at(Language::en).mean_std ==
          Catch::Approx(expected_mean).margin(1e-12));
    CHECK(stats.by_language.at(Language::en).unanimous_statements == 1);
  }
  SECTION("empty input is rejected") {
    CHECK_THROWS_MATCHES(response_stats({}), Error,
                         Catch::Matchers::Predicate<Error>(
                             [](const Error& e) { return e.code() == Errc::empty_input; }));
  }
}

TEST_CASE("render_percent rounds half up at two decimals") {
  CHECK(render_percent(AlignmentScore(28, 76)) == "36.84");
  CHECK(render_percent(AlignmentScore(76, 76)) == "100.00");
  CHECK(render_percent(AlignmentScore(75, 76)) == "98.68");
  CHECK(render_percent(AlignmentScore(19, 76)) == "25.00");
  CHECK(render_percent(AlignmentScore(0, 76)) == "0.00");
  CHECK(render_percent(AlignmentScore(1, 800)) == "0.13");   // 0.125 rounds up
  CHECK(render_percent(AlignmentScore(1, 3)) == "33.33");
  CHECK(render_percent(AlignmentScore(51, 76)) == "67.11");  // 67.105... rounds up
}

TEST_CASE("fixture import reconstructs exact rationals and rejects drift") {
  const AlignmentMatrix fixture =
      AlignmentMatrix::import_fixture_csv(kDataDir + "/alignment_fixture.csv", 38);
  CHECK(fixture.entries().size() == 168);
  CHECK(fixture.at("s1 32B", "AfD", Language::de).numerator() == 28);
  CHECK(fixture.at("Llama 3 70B", "Die PARTEI", Language::en).numerator() == 66);
  CHECK(render_percent(fixture.at("Llama 2 7B", "CDU/CSU", Language::en)) == "32.89");

  const auto bad = temp_file("bad_fixture.csv");
  std::ofstream out(bad);
  out << "model,language,party,percent\nm,de,AfD,36.90\n";
  out.close();
  CHECK_THROWS_MATCHES(AlignmentMatrix::import_fixture_csv(bad.string(), 38), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::parse_error; }));
}

TEST_CASE("alignment matrix CSV round-trips") {
  const AlignmentMatrix fixture =
      AlignmentMatrix::import_fixture_csv(kDataDir + "/alignment_fixture.csv", 38);
  const auto path = temp_file("matrix.csv");
  fixture.save_csv(path.string());
  const AlignmentMatrix loaded = AlignmentMatrix::load_csv(path.string());
  CHECK(loaded.entries() == fixture.entries());
  CHECK(loaded.statement_count() == 38);
}
