// Acceptance suite: every criterion runs against the bundled fixture and
// registry via run_acceptance, one test case per criterion so a failing
// criterion is visible in isolation.

#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "wahlmeter/acceptance.hpp"

using namespace wahlmeter;

namespace {

const std::vector<CriterionResult>& results() {
  static const std::vector<CriterionResult> cached = [] {
    const std::string data = WAHLMETER_DATA_DIR;
    AcceptanceConfig config;
    config.fixture_csv = data + "/alignment_fixture.csv";
    config.registry_json = data + "/registry.json";
    config.parties_json = data + "/parties.json";
    config.corpus_json = data + "/corpus.json";
    config.position_matrix_csv = data + "/position_matrix.csv";
    config.scratch_dir =
        (std::filesystem::temp_directory_path() / "wahlmeter-acceptance-test").string();
    return run_acceptance(config);
  }();
  return cached;
}

void require_criterion(const std::string& id) {
  for (const auto& r : results()) {
    if (r.id != id) continue;
    INFO(r.description << ": " << r.detail);
    CHECK(r.passed);
    return;
  }
  FAIL("criterion " << id << " missing from the suite");
}

}  // namespace

TEST_CASE("C1 mean theta magnitude by language") { require_criterion("C1"); }
TEST_CASE("C2 size-bucket means of theta magnitude") { require_criterion("C2"); }
TEST_CASE("C3 Llama 2 7B language shift") { require_criterion("C3"); }
TEST_CASE("C4 mean absolute language shift") { require_criterion("C4"); }
TEST_CASE("C5 release effect over matched pairs") { require_criterion("C5"); }
TEST_CASE("C6 origin gap and median model") { require_criterion("C6"); }
TEST_CASE("C7 per-party mean alignments") { require_criterion("C7"); }
TEST_CASE("C8 Llama 2 alignment changes") { require_criterion("C8"); }
TEST_CASE("C9 Llama 3 70B English extremes") { require_criterion("C9"); }
TEST_CASE("C10 fixture exactness") { require_criterion("C10"); }
TEST_CASE("C11a alignment oracle property") { require_criterion("C11a"); }
TEST_CASE("C11b apportionment oracle property") { require_criterion("C11b"); }
TEST_CASE("C11c theta quantization bound") { require_criterion("C11c"); }
TEST_CASE("C11d extraction round-trip property") { require_criterion("C11d"); }
TEST_CASE("C11e replay byte-determinism") { require_criterion("C11e"); }
