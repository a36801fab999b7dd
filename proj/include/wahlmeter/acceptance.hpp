#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wahlmeter/analysis.hpp"
#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/figures.hpp"
#include "wahlmeter/gateway.hpp"
#include "wahlmeter/report.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

namespace wahlmeter {

struct CriterionResult {
  std::string id;
  std::string description;
  bool passed = false;
  std::string detail;  // computed vs target at tolerance
};

struct AcceptanceConfig {
  std::string fixture_csv;
  std::string registry_json;
  std::string parties_json;
  std::string corpus_json;
  std::string position_matrix_csv;
  std::string scratch_dir;  // working space for the end-to-end determinism check
};

namespace acceptance_detail {

inline std::string fmt(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

inline bool within(double computed, double target, double tolerance, std::string& detail) {
  const bool ok = std::abs(computed - target) <= tolerance + 1e-12;
  detail += fmt(computed) + " (target " + fmt(target) + " +-" + fmt(tolerance) + ") ";
  return ok;
}

/// Term-by-term recomputation of the alignment mean, kept independent of the
/// rational closed form it checks.
inline double alignment_oracle(const std::vector<int>& a, const std::vector<int>& b) {
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    sum += 1.0 - std::abs(a[i] - b[i]) / 2.0;
  }
  return sum / static_cast<double>(a.size());
}

/// Highest-quotient reference: rank every share/(2k+1) quotient and take the
/// top `total`, ties resolved by larger share then seat order.
inline std::array<int, 5> seats_oracle(const SharesVector& shares, int total) {
  struct Entry {
    double quotient;
    double share;
    int party;
  };
  std::vector<Entry> entries;
  for (int party = 0; party < 5; ++party) {
    for (int k = 0; k < total; ++k) {
      entries.push_back({shares.shares[static_cast<size_t>(party)] / (2.0 * k + 1.0),
                         shares.shares[static_cast<size_t>(party)], party});
    }
  }
  std::stable_sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.quotient != b.quotient) return a.quotient > b.quotient;
    if (a.share != b.share) return a.share > b.share;
    return a.party < b.party;
  });
  std::array<int, 5> seats{};
  for (int i = 0; i < total; ++i) ++seats[static_cast<size_t>(entries[static_cast<size_t>(i)].party)];
  return seats;
}

inline bool directories_equal(const std::filesystem::path& a, const std::filesystem::path& b,
                              std::string& detail) {
  namespace fs = std::filesystem;
  std::vector<std::string> names_a, names_b;
  for (const auto& entry : fs::recursive_directory_iterator(a)) {
    if (entry.is_regular_file()) names_a.push_back(fs::relative(entry.path(), a).string());
  }
  for (const auto& entry : fs::recursive_directory_iterator(b)) {
    if (entry.is_regular_file()) names_b.push_back(fs::relative(entry.path(), b).string());
  }
  std::sort(names_a.begin(), names_a.end());
  std::sort(names_b.begin(), names_b.end());
  if (names_a != names_b) {
    detail += "file sets differ ";
    return false;
  }
  for (const auto& name : names_a) {
    std::ifstream fa(a / name, std::ios::binary), fb(b / name, std::ios::binary);
    std::stringstream sa, sb;
    sa << fa.rdbuf();
    sb << fb.rdbuf();
    if (sa.str() != sb.str()) {
      detail += name + " differs ";
      return false;
    }
  }
  return true;
}

/// Synthetic bilingual replay archive exercising retries and the last-span
/// extraction rule; timestamps are fixed so replays are byte-stable.
inline std::string write_probe_archive(const std::filesystem::path& dir, const Corpus& corpus) {
  std::vector<Transcript> records;
  for (Language lang : kLanguages) {
    for (const auto& statement : corpus.statements()) {
      const int pick = (statement.id * 2 + (lang == Language::en ? 1 : 0)) % 3;
      std::string token;
      if (pick == 0) token = lang == Language::de ? "Ja" : "Yes";
      if (pick == 1) token = "Neutral";
      if (pick == 2) token = lang == Language::de ? "Nein" : "No";
      Transcript t;
      t.model_id = "probe-model";
      t.language = lang;
      t.statement_id = statement.id;
      t.raw_text = "Draft: <ANSWER>Neutral</ANSWER> ... final <ANSWER>" + token + "</ANSWER>";
      if (pick == 1) t.raw_text = "<ANSWER>" + token + "</ANSWER>";
      t.extracted = extract_answer(t.raw_text);
      t.attempt = 1;
      t.timestamp = "2025-06-01T00:00:00Z";
      records.push_back(std::move(t));
    }
  }
  const std::string path = (dir / "probe-archive.jsonl").string();
  write_transcripts(path, records);
  return path;
}

inline void pipeline_run(const std::filesystem::path& out_dir, const std::string& archive,
                         const Corpus& corpus, const PartyRegister& reg,
                         const PositionMatrix& positions) {
  namespace fs = std::filesystem;
  fs::create_directories(out_dir);
  ReplayBackend backend = ReplayBackend::from_file(archive);
  std::vector<ResponseVector> vectors;
  for (Language lang : kLanguages) {
    auto transcripts = run_evaluation(backend, corpus, "probe-model", lang);
    write_transcripts((out_dir / ("transcripts-probe-model-" + std::string(to_string(lang)) + ".jsonl")).string(),
                      transcripts);
    vectors.push_back(response_vector(final_transcripts(transcripts), "probe-model", lang, corpus.size()));
  }
  AlignmentMatrix matrix = alignment_matrix(positions, vectors);
  matrix.save_csv((out_dir / "alignment.csv").string());
  ThetaTable theta = theta_table_from_alignments(matrix, reg);
  write_theta_csv((out_dir / "theta.csv").string(), theta);
  std::array<std::string, 5> labels;
  for (size_t i = 0; i < 5; ++i) labels[i] = std::string(kBundestagSeating[i].key);
  std::map<Language, SeatAllocation> allocations;
  for (Language lang : kLanguages) {
    SeatAllocation alloc = allocate_seats(bundestag_shares(matrix, "probe-model", lang, reg), 630);
    allocations[lang] = alloc;
    write_seats_csv((out_dir / ("seats-probe-model-" + std::string(to_string(lang)) + ".csv")).string(),
                    alloc, labels);
  }
  const PartyStats stats = party_alignment_stats(matrix);
  std::vector<FigureFile> figures;
  const std::string fig_dir = (out_dir / "figures").string();
  fs::create_directories(fig_dir);
  figures.push_back(write_svg(fig_dir, "answers_heatmap.svg", render_answer_heatmap(vectors)));
  figures.push_back(write_svg(fig_dir, "hemicycle_de.svg",
                              render_hemicycle(allocations[Language::de], labels)));
  figures.push_back(write_svg(fig_dir, "theta_bars.svg", render_theta_bars(theta)));
  figures.push_back(write_svg(fig_dir, "alignment_bars_en.svg",
                              render_alignment_bars(matrix, Language::en)));
  figures.push_back(write_svg(fig_dir, "box_whisker.svg", render_box_whisker(stats)));
  ReportInputs report;
  report.matrix = &matrix;
  report.theta = &theta;
  report.party_stats = &stats;
  report.mean_allocations = allocations;
  report.figures = figures;
  write_markdown_report((out_dir / "report.md").string(), report);
}

}  // namespace acceptance_detail

/// Runs every acceptance criterion against the bundled fixture and registry.
/// Targets and tolerances are pinned here; the suite prints one line per
/// criterion and the process exit code reflects the aggregate verdict.
inline std::vector<CriterionResult> run_acceptance(const AcceptanceConfig& config) {
  namespace ad = acceptance_detail;
  namespace fs = std::filesystem;
  std::vector<CriterionResult> results;

  const AlignmentMatrix fixture = AlignmentMatrix::import_fixture_csv(config.fixture_csv, 38);
  const ModelRegistry registry = ModelRegistry::load(config.registry_json);
  const PartyRegister reg = PartyRegister::load(config.parties_json);
  const ThetaTable theta = theta_table_from_alignments(fixture, reg);
  const AggregateStats aggregates = aggregate_report(theta, registry);

  {
    CriterionResult r{"C1", "mean theta magnitude by language (shares form)", true, ""};
    r.passed = ad::within(aggregates.mean_theta_by_language.at(Language::de) * 100, 13.5, 0.2, r.detail) &&
               ad::within(aggregates.mean_theta_by_language.at(Language::en) * 100, 15.0, 0.2, r.detail);
    results.push_back(r);
  }
  {
    CriterionResult r{"C2", "size-bucket means of per-model theta magnitude", true, ""};
    bool ok = true;
    ok &= ad::within(aggregates.mean_theta_by_size_bucket.at(std::string(kBucketSmall)) * 100, 9.0,
                     0.5, r.detail);
    ok &= ad::within(aggregates.mean_theta_by_size_bucket.at(std::string(kBucketMedium)) * 100, 14.0,
                     0.5, r.detail);
    ok &= ad::within(aggregates.mean_theta_by_size_bucket.at(std::string(kBucketLarge)) * 100, 22.0,
                     0.5, r.detail);
    r.passed = ok;
    results.push_back(r);
  }
  {
    CriterionResult r{"C3", "Llama 2 7B language shift of theta magnitude", true, ""};
    const double shift = (std::abs(theta.at("Llama 2 7B", Language::en).value) -
                          std::abs(theta.at("Llama 2 7B", Language::de).value)) *
                         100;
    r.passed = ad::within(shift, 6.8, 0.1, r.detail);
    results.push_back(r);
  }
  {
    CriterionResult r{"C4", "mean absolute language shift over all models", true, ""};
    r.passed = ad::within(aggregates.mean_abs_language_shift * 100, 3.5, 0.1, r.detail);
    results.push_back(r);
  }
  {
    CriterionResult r{"C5", "release effect over matched pairs", true, ""};
    r.passed = aggregates.release_effect.has_value() &&
               ad::within(*aggregates.release_effect * 100, 3.0, 0.5, r.detail);
    results.push_back(r);
  }
  {
    CriterionResult r{"C6", "origin gap and median model", true, ""};
    bool ok = aggregates.origin_gap.has_value() &&
              ad::within(*aggregates.origin_gap * 100, 1.8, 0.15, r.detail);
    if (aggregates.median_model != "R1 32B") {
      ok = false;
      r.detail += "median " + aggregates.median_model + " (target R1 32B) ";
    } else {
      r.detail += "median R1 32B ";
    }
    r.passed = ok;
    results.push_back(r);
  }
  {
    CriterionResult r{"C7", "per-party mean alignments", true, ""};
    const PartyStats party_stats = party_alignment_stats(fixture);
    struct Target {
      const char* party;
      double en;
      double de;
    };
    static constexpr std::array<Target, 5> targets{{{"Die Linke", 67.3, 68.0},
                                                    {"GRÜNE", 66.4, 67.1},
                                                    {"SPD", 65.2, 66.7},
                                                    {"AfD", 36.3, 38.9},
                                                    {"CDU/CSU", 43.4, 47.2}}};
    bool ok = true;
    for (const auto& target : targets) {
      r.detail += std::string(target.party) + ": ";
      ok &= ad::within(party_stats.at(target.party, Language::en).mean, target.en, 0.05, r.detail);
      ok &= ad::within(party_stats.at(target.party, Language::de).mean, target.de, 0.05, r.detail);
    }
    r.passed = ok;
    results.push_back(r);
  }
  {
    CriterionResult r{"C8", "Llama 2 mean absolute alignment changes", true, ""};
    const LanguageChangeReport change = language_change_report(fixture);
    bool ok = true;
    ok &= ad::within(change.mean_abs_change.at("Llama 2 7B"), 5.7, 0.05, r.detail);
    ok &= ad::within(change.mean_abs_change.at("Llama 2 70B"), 6.6, 0.05, r.detail);
    ok &= ad::within(change.deltas.at({"Llama 2 7B", "CDU/CSU"}), -13.2, 0.05, r.detail);
    r.passed = ok;
    results.push_back(r);
  }
  {
    CriterionResult r{"C9", "Llama 3 70B English extremes", true, ""};
    std::string max_party, min_party;
    AlignmentScore max_score(0, 76), min_score(76, 76);
    for (const auto& party : fixture.parties()) {
      const auto& s = fixture.at("Llama 3 70B", party, Language::en);
      if (s.numerator() > max_score.numerator()) {
        max_score = s;
        max_party = party;
      }
      if (s.numerator() < min_score.numerator()) {
        min_score = s;
        min_party = party;
      }
    }
    const bool ok = max_party == "Die PARTEI" && render_percent(max_score) == "86.84" &&
                    min_party == "AfD" && render_percent(min_score) == "25.00";
    r.detail = "max " + max_party + " " + render_percent(max_score) +
               " (target Die PARTEI 86.84), min " + min_party + " " + render_percent(min_score) +
               " (target AfD 25.00)";
    r.passed = ok;
    results.push_back(r);
  }
  {
    CriterionResult r{"C10", "all fixture values reconstruct as k/76", true, ""};
    // import_fixture_csv already rejects anything farther than 0.005 pp from
    // a multiple of 1/76, so reaching this point proves the property; assert
    // the expected grid size on top.
    const size_t expected = 7 * 12 * 2;
    r.passed = fixture.entries().size() == expected;
    r.detail = std::to_string(fixture.entries().size()) + " values (expected " +
               std::to_string(expected) + "), each within 0.005 pp of k/76";
    results.push_back(r);
  }
  {
    CriterionResult r{"C11a", "alignment equals term-by-term oracle (1000 random pairs)", true, ""};
    std::mt19937 rng(20250601);
    std::uniform_int_distribution<int> len_dist(1, 8), val_dist(0, 2);
    bool ok = true;
    double worst = 0.0;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      const int n = len_dist(rng);
      std::vector<int> a(static_cast<size_t>(n));
      ResponseVector b;
      b.model_id = "prop";
      b.language = Language::en;
      for (int i = 0; i < n; ++i) {
        a[static_cast<size_t>(i)] = val_dist(rng);
        b.values.push_back(static_cast<ResponseValue>(val_dist(rng)));
      }
      std::vector<int> b_int;
      for (ResponseValue v : b.values) b_int.push_back(static_cast<int>(v));
      const double expected = ad::alignment_oracle(a, b_int);
      const double got = alignment(a, b).value();
      worst = std::max(worst, std::abs(expected - got));
      ok = std::abs(expected - got) <= 1e-12;
    }
    r.passed = ok;
    r.detail = "max deviation " + ad::fmt(worst * 1e12) + "e-12";
    results.push_back(r);
  }
  {
    CriterionResult r{"C11b", "Sainte-Lague equals highest-quotient oracle (grid, totals <= 50)",
                      true, ""};
    bool ok = true;
    int checked = 0;
    // every non-negative integer weight vector over 5 parties summing to 10
    for (int w0 = 0; w0 <= 10 && ok; ++w0)
      for (int w1 = 0; w0 + w1 <= 10 && ok; ++w1)
        for (int w2 = 0; w0 + w1 + w2 <= 10 && ok; ++w2)
          for (int w3 = 0; w0 + w1 + w2 + w3 <= 10 && ok; ++w3) {
            const int w4 = 10 - w0 - w1 - w2 - w3;
            const std::array<double, 5> weights{static_cast<double>(w0), static_cast<double>(w1),
                                                static_cast<double>(w2), static_cast<double>(w3),
                                                static_cast<double>(w4)};
            const SharesVector shares = make_shares(weights);
            std::array<int, 5> previous{};
            for (int total = 1; total <= 50 && ok; ++total) {
              const SeatAllocation alloc = allocate_seats(shares, total);
              ok = alloc.seats == ad::seats_oracle(shares, total);
              for (size_t i = 0; i < 5 && ok; ++i) {
                ok = alloc.seats[i] >= previous[i];  // house monotonicity
              }
              previous = alloc.seats;
              ++checked;
            }
          }
    r.passed = ok;
    r.detail = std::to_string(checked) + " allocations checked";
    results.push_back(r);
  }
  {
    CriterionResult r{"C11c", "theta quantization bound at 630 seats (1000 random vectors)", true, ""};
    std::mt19937 rng(19490523);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    double worst = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
      std::array<double, 5> weights{};
      double sum = 0.0;
      for (double& w : weights) {
        w = dist(rng);
        sum += w;
      }
      if (sum == 0.0) continue;
      const SharesVector shares = make_shares(weights);
      const double continuous = theta_from_shares(shares).value;
      const double quantized = theta_from_seats(allocate_seats(shares, 630)).value;
      worst = std::max(worst, std::abs(continuous - quantized));
    }
    r.passed = worst <= 0.0025;
    r.detail = "max |theta(seats) - theta(shares)| = " + ad::fmt(worst * 100) + " pp (bound 0.25)";
    results.push_back(r);
  }
  {
    CriterionResult r{"C11d", "extract_answer round-trips all tokens (200 wrappings)", true, ""};
    std::mt19937 rng(811);
    const std::array<std::pair<std::string, ResponseValue>, 5> tokens{{
        {"Ja", ResponseValue::agree},
        {"Yes", ResponseValue::agree},
        {"Neutral", ResponseValue::neutral},
        {"Nein", ResponseValue::disagree},
        {"No", ResponseValue::disagree},
    }};
    const std::array<std::string, 6> prose{"The statement is complex.", "Considering both sides,",
                                           "I believe", "after reflection", "in short", "Overall"};
    std::uniform_int_distribution<size_t> prose_dist(0, prose.size() - 1);
    std::uniform_int_distribution<int> coin(0, 1), casing(0, 2), pad(0, 2);
    bool ok = true;
    for (int trial = 0; trial < 200 && ok; ++trial) {
      for (const auto& [token, expected] : tokens) {
        std::string text = prose[prose_dist(rng)];
        if (coin(rng) == 1) {
          // an earlier draft answer must lose to the final span
          text += " <ANSWER>" + tokens[static_cast<size_t>(casing(rng))].first + "</ANSWER> ";
        }
        std::string cased = token;
        if (casing(rng) == 1) {
          for (char& c : cased) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        } else if (casing(rng) == 2) {
          for (char& c : cased) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        }
        text += " " + prose[prose_dist(rng)] + " <ANSWER>" + std::string(pad(rng), ' ') + cased +
                std::string(pad(rng), ' ') + "</ANSWER> " + prose[prose_dist(rng)];
        const auto got = extract_answer(text);
        if (!got.has_value() || *got != expected) {
          ok = false;
          break;
        }
      }
    }
    r.passed = ok;
    r.detail = "5 tokens x 200 generated wrappings";
    results.push_back(r);
  }
  {
    CriterionResult r{"C11e", "replay end-to-end run is byte-deterministic", true, ""};
    const Corpus corpus = Corpus::load(config.corpus_json);
    const PositionMatrix positions = PositionMatrix::load(config.position_matrix_csv, corpus, reg);
    const fs::path scratch = config.scratch_dir.empty()
                                 ? fs::temp_directory_path() / "wahlmeter-acceptance"
                                 : fs::path(config.scratch_dir);
    fs::remove_all(scratch);
    fs::create_directories(scratch);
    const std::string archive = ad::write_probe_archive(scratch, corpus);
    ad::pipeline_run(scratch / "run_a", archive, corpus, reg, positions);
    ad::pipeline_run(scratch / "run_b", archive, corpus, reg, positions);
    r.passed = ad::directories_equal(scratch / "run_a", scratch / "run_b", r.detail);
    r.detail += "two full replay runs compared byte for byte";
    results.push_back(r);
  }
  return results;
}

inline bool all_passed(const std::vector<CriterionResult>& results) {
  for (const auto& r : results) {
    if (!r.passed) return false;
  }
  return true;
}

}  // namespace wahlmeter
