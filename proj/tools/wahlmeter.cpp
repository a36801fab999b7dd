// Command-line front end: evaluate -> score -> spectrum -> verify pipeline
// over plain files in a content-addressed run directory.
//
// Exit codes: 0 success, 1 usage/config/IO error, 2 manual review needed,
// 3 verification failure.

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "wahlmeter/acceptance.hpp"
#include "wahlmeter/analysis.hpp"
#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/figures.hpp"
#include "wahlmeter/gateway.hpp"
#include "wahlmeter/http_backend.hpp"
#include "wahlmeter/report.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

namespace fs = std::filesystem;
using namespace wahlmeter;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitManualReview = 2;
constexpr int kExitVerifyFailure = 3;

struct BackendConfig {
  std::string base_url;
  std::string model;
  int concurrency = 4;
  int retry_limit = 3;
  double temperature = 0.0;
  std::optional<long> seed;
};

struct RunConfig {
  std::string corpus = "data/corpus.json";
  std::string parties = "data/parties.json";
  std::optional<std::string> position_matrix;
  std::vector<BackendConfig> backends;
  std::vector<Language> languages{Language::de, Language::en};
  std::string out = "runs";
  int total_seats = 630;
};

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::parse_error, "cannot open config " + path);
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    fail(Errc::parse_error, "config JSON: " + std::string(e.what()));
  }
  RunConfig config;
  config.corpus = doc.value("corpus", config.corpus);
  config.parties = doc.value("parties", config.parties);
  if (doc.contains("position_matrix")) config.position_matrix = doc.at("position_matrix").get<std::string>();
  config.out = doc.value("out", config.out);
  config.total_seats = doc.value("seats", config.total_seats);
  if (doc.contains("languages")) {
    config.languages.clear();
    for (const auto& lang : doc.at("languages")) {
      config.languages.push_back(language_from_string(lang.get<std::string>()));
    }
  }
  for (const auto& b : doc.value("backends", nlohmann::json::array())) {
    BackendConfig backend;
    backend.base_url = b.value("base_url", "");
    backend.model = b.at("model").get<std::string>();
    backend.concurrency = b.value("concurrency", 4);
    backend.retry_limit = b.value("retry_limit", 3);
    backend.temperature = b.value("temperature", 0.0);
    if (b.contains("seed") && !b.at("seed").is_null()) backend.seed = b.at("seed").get<long>();
    config.backends.push_back(std::move(backend));
  }
  if (config.languages.empty()) fail(Errc::parse_error, "config needs at least one language");
  if (config.total_seats < 1) fail(Errc::parse_error, "config seats must be >= 1");
  for (const auto& b : config.backends) {
    if (b.model.empty()) fail(Errc::parse_error, "every backend needs a model id");
  }
  return config;
}

std::vector<Language> parse_languages(const std::string& csv_list) {
  std::vector<Language> out;
  std::stringstream ss(csv_list);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(language_from_string(item));
  }
  if (out.empty()) fail(Errc::parse_error, "--lang needs at least one of de,en");
  return out;
}

std::string slugify(const std::string& name) {
  std::string out;
  for (char c : name) {
    out += std::isalnum(static_cast<unsigned char>(c)) ? static_cast<char>(std::tolower(static_cast<unsigned char>(c))) : '-';
  }
  return out;
}

std::uint64_t fnv1a(std::string_view data, std::uint64_t hash = 1469598103934665603ULL) {
  for (unsigned char c : data) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  return hash;
}

std::string file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::parse_error, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void require_fresh(const fs::path& path, bool force) {
  if (!fs::exists(path)) return;
  if (!force) fail(Errc::io_error, path.string() + " exists; pass --force to overwrite");
  fs::remove_all(path);
}

std::array<std::string, 5> bundestag_labels() {
  std::array<std::string, 5> labels;
  for (size_t i = 0; i < 5; ++i) labels[i] = std::string(kBundestagSeating[i].key);
  return labels;
}

// ---- evaluate ----------------------------------------------------------

int cmd_evaluate(const std::string& config_path, const std::string& replay_dir,
                 const std::string& lang_csv, const std::string& out_override, bool force) {
  RunConfig config = load_run_config(config_path);
  if (!lang_csv.empty()) config.languages = parse_languages(lang_csv);
  if (!out_override.empty()) config.out = out_override;
  if (config.backends.empty()) fail(Errc::parse_error, "config declares no backends");

  ReplayBackend replay;
  const bool replay_mode = !replay_dir.empty();
  std::uint64_t run_hash = fnv1a(file_bytes(config.corpus));
  if (replay_mode) {
    bool any = false;
    for (const auto& entry : fs::directory_iterator(replay_dir)) {
      if (entry.path().extension() == ".jsonl") {
        replay.add_file(entry.path().string());
        run_hash = fnv1a(file_bytes(entry.path().string()), run_hash);
        any = true;
      }
    }
    if (!any) fail(Errc::replay_miss, "no .jsonl archives in " + replay_dir);
  }
  const Corpus corpus = Corpus::load(config.corpus);
  for (const auto& backend : config.backends) {
    run_hash = fnv1a(backend.model, run_hash);
    run_hash = fnv1a(backend.base_url, run_hash);
  }
  for (Language lang : config.languages) run_hash = fnv1a(to_string(lang), run_hash);

  char run_id[32];
  std::snprintf(run_id, sizeof run_id, "%016llx", static_cast<unsigned long long>(run_hash));
  const fs::path run_dir = fs::path(config.out) / run_id;
  require_fresh(run_dir, force);
  fs::create_directories(run_dir);

  std::vector<std::string> review;
  for (const auto& backend_config : config.backends) {
    std::unique_ptr<HttpChatBackend> http;
    ChatBackend* backend = &replay;
    BackendSettings settings;
    settings.temperature = backend_config.temperature;
    settings.seed = backend_config.seed;
    settings.retry_limit = backend_config.retry_limit;
    settings.concurrency = backend_config.concurrency;
    if (!replay_mode) {
      if (backend_config.base_url.empty()) {
        fail(Errc::endpoint_error, backend_config.model + ": no base_url and no --replay directory");
      }
      http = std::make_unique<HttpChatBackend>(backend_config.base_url, api_key_from_env(), settings);
      backend = http.get();
    }
    for (Language lang : config.languages) {
      auto transcripts = run_evaluation(*backend, corpus, backend_config.model, lang, settings);
      const std::string name =
          "transcripts-" + slugify(backend_config.model) + "-" + std::string(to_string(lang)) + ".jsonl";
      write_transcripts((run_dir / name).string(), transcripts);
      for (const auto& t : final_transcripts(transcripts)) {
        if (!t.extracted.has_value()) {
          review.push_back(backend_config.model + "\t" + std::string(to_string(lang)) + "\t" +
                           std::to_string(t.statement_id));
        }
      }
    }
  }

  if (!review.empty()) {
    std::ofstream review_file(run_dir / "manual-review.txt");
    for (const auto& line : review) review_file << line << '\n';
    std::cout << run_dir.string() << '\n';
    std::cerr << review.size() << " answer(s) need manual review; see "
              << (run_dir / "manual-review.txt").string() << '\n';
    return kExitManualReview;
  }
  std::cout << run_dir.string() << '\n';
  return kExitOk;
}

// ---- score -------------------------------------------------------------

int cmd_score(const std::string& run_dir, const std::string& corpus_path,
              const std::string& parties_path, const std::string& matrix_path,
              const std::string& out_dir, bool force) {
  const Corpus corpus = Corpus::load(corpus_path);
  const PartyRegister reg = PartyRegister::load(parties_path);
  const PositionMatrix positions = PositionMatrix::load(matrix_path, corpus, reg);

  std::vector<Transcript> all;
  for (const auto& entry : fs::directory_iterator(run_dir)) {
    const std::string name = entry.path().filename().string();
    if (name.rfind("transcripts-", 0) == 0 && entry.path().extension() == ".jsonl") {
      for (auto& t : read_transcripts(entry.path().string())) all.push_back(std::move(t));
    }
  }
  if (all.empty()) fail(Errc::empty_input, "no transcript archives in " + run_dir);
  const std::vector<Transcript> finals = final_transcripts(all);

  std::set<std::pair<std::string, Language>> keys;
  for (const auto& t : finals) keys.insert({t.model_id, t.language});
  std::vector<ResponseVector> vectors;
  std::vector<std::string> incomplete;
  for (const auto& [model, lang] : keys) {
    try {
      vectors.push_back(response_vector(finals, model, lang, corpus.size()));
    } catch (const Error& e) {
      if (e.code() != Errc::incomplete_responses) throw;
      incomplete.push_back(e.what());
    }
  }
  if (!incomplete.empty()) {
    for (const auto& line : incomplete) std::cerr << line << '\n';
    std::cerr << "resolve with: wahlmeter manual-resolve --run " << run_dir
              << " --model <id> --lang <de|en> --statement <id> --answer <agree|neutral|disagree>\n";
    return kExitManualReview;
  }

  const AlignmentMatrix matrix = alignment_matrix(positions, vectors);
  fs::create_directories(out_dir);
  const fs::path csv_path = fs::path(out_dir) / "alignment.csv";
  const fs::path md_path = fs::path(out_dir) / "alignment_percent.md";
  if (!force && (fs::exists(csv_path) || fs::exists(md_path))) {
    fail(Errc::io_error, out_dir + " already holds score output; pass --force to overwrite");
  }
  matrix.save_csv(csv_path.string());
  write_alignment_percent_markdown(md_path.string(), matrix);
  std::cout << csv_path.string() << '\n';
  return kExitOk;
}

// ---- spectrum ----------------------------------------------------------

int cmd_spectrum(const std::string& alignment_csv, const std::string& fixture_csv,
                 const std::string& registry_path, const std::string& parties_path,
                 const std::string& run_dir, const std::string& corpus_path, int seats,
                 const std::string& out_dir, bool force) {
  if (alignment_csv.empty() == fixture_csv.empty()) {
    fail(Errc::parse_error, "pass exactly one of --alignment or --fixture");
  }
  const AlignmentMatrix matrix = fixture_csv.empty()
                                     ? AlignmentMatrix::load_csv(alignment_csv)
                                     : AlignmentMatrix::import_fixture_csv(fixture_csv);
  const ModelRegistry registry = ModelRegistry::load(registry_path);
  const PartyRegister reg = PartyRegister::load(parties_path);

  const ThetaTable theta = theta_table_from_alignments(matrix, reg);
  const AggregateStats aggregates = aggregate_report(theta, registry);
  const PartyStats party_stats = party_alignment_stats(matrix);
  const LanguageChangeReport language_change = language_change_report(matrix);

  require_fresh(out_dir, force);
  fs::create_directories(out_dir);
  const fs::path out(out_dir);
  write_theta_csv((out / "theta.csv").string(), theta);
  write_aggregates_csv((out / "aggregates.csv").string(), aggregates);
  write_party_stats_csv((out / "party_stats.csv").string(), party_stats);
  write_language_change_csv((out / "language_change.csv").string(), language_change);
  write_language_change_deltas_csv((out / "language_change_deltas.csv").string(), language_change);

  const auto labels = bundestag_labels();
  const fs::path seats_dir = out / "seats";
  fs::create_directories(seats_dir);
  for (const auto& model : matrix.models()) {
    for (Language lang : kLanguages) {
      if (!matrix.has_language(model, lang)) continue;
      const SeatAllocation alloc = allocate_seats(bundestag_shares(matrix, model, lang, reg), seats);
      write_seats_csv((seats_dir / ("seats-" + slugify(model) + "-" + std::string(to_string(lang)) + ".csv")).string(),
                      alloc, labels);
    }
  }

  // Mean-of-models allocation per language, from the exact rational means.
  std::map<Language, SeatAllocation> mean_allocations;
  for (Language lang : kLanguages) {
    std::array<double, 5> weights{};
    bool complete = true;
    for (const auto& seat : kBundestagSeating) {
      long long numerator_sum = 0;
      for (const auto& model : matrix.models()) {
        if (!matrix.contains(model, std::string(seat.key), lang)) {
          complete = false;
          break;
        }
        numerator_sum += matrix.at(model, std::string(seat.key), lang).numerator();
      }
      if (!complete) break;
      weights[static_cast<size_t>(seat.order - 1)] = static_cast<double>(numerator_sum);
    }
    if (!complete) continue;
    const SeatAllocation alloc = allocate_seats(make_shares(weights), seats);
    mean_allocations[lang] = alloc;
    write_seats_csv((seats_dir / ("seats-mean-" + std::string(to_string(lang)) + ".csv")).string(),
                    alloc, labels);
  }

  const fs::path fig_dir = out / "figures";
  fs::create_directories(fig_dir);
  std::vector<FigureFile> figures;
  for (const auto& [lang, alloc] : mean_allocations) {
    figures.push_back(write_svg(fig_dir.string(),
                                "hemicycle_" + std::string(to_string(lang)) + ".svg",
                                render_hemicycle(alloc, labels)));
  }
  figures.push_back(write_svg(fig_dir.string(), "theta_bars.svg", render_theta_bars(theta)));
  for (Language lang : kLanguages) {
    figures.push_back(write_svg(fig_dir.string(),
                                "alignment_bars_" + std::string(to_string(lang)) + ".svg",
                                render_alignment_bars(matrix, lang)));
  }
  figures.push_back(write_svg(fig_dir.string(), "box_whisker.svg", render_box_whisker(party_stats)));

  if (!run_dir.empty()) {
    if (corpus_path.empty()) fail(Errc::parse_error, "--run needs --corpus for the answer heat-map");
    const Corpus corpus = Corpus::load(corpus_path);
    std::vector<Transcript> all;
    for (const auto& entry : fs::directory_iterator(run_dir)) {
      const std::string name = entry.path().filename().string();
      if (name.rfind("transcripts-", 0) == 0 && entry.path().extension() == ".jsonl") {
        for (auto& t : read_transcripts(entry.path().string())) all.push_back(std::move(t));
      }
    }
    const std::vector<Transcript> finals = final_transcripts(all);
    std::set<std::pair<std::string, Language>> keys;
    for (const auto& t : finals) keys.insert({t.model_id, t.language});
    std::vector<ResponseVector> vectors;
    for (const auto& [model, lang] : keys) {
      vectors.push_back(response_vector(finals, model, lang, corpus.size()));
    }
    figures.push_back(write_svg(fig_dir.string(), "answers_heatmap.svg", render_answer_heatmap(vectors)));
  }

  ReportInputs report;
  report.matrix = &matrix;
  report.theta = &theta;
  report.aggregates = &aggregates;
  report.party_stats = &party_stats;
  report.language_change = &language_change;
  report.mean_allocations = mean_allocations;
  report.figures = figures;
  report.total_seats = seats;
  write_markdown_report((out / "report.md").string(), report);
  write_alignment_percent_markdown((out / "alignment_percent.md").string(), matrix);
  std::cout << (out / "report.md").string() << '\n';
  return kExitOk;
}

// ---- verify ------------------------------------------------------------

int cmd_verify(const AcceptanceConfig& config) {
  const auto results = run_acceptance(config);
  for (const auto& r : results) {
    std::cout << r.id << ' ' << (r.passed ? "PASS" : "FAIL") << "  " << r.description << ": "
              << r.detail << '\n';
  }
  const bool ok = all_passed(results);
  std::cout << (ok ? "all criteria passed" : "verification FAILED") << '\n';
  return ok ? kExitOk : kExitVerifyFailure;
}

// ---- manual-resolve ----------------------------------------------------

int cmd_manual_resolve(const std::string& run_dir, const std::string& model,
                       const std::string& lang_name, int statement_id, const std::string& answer) {
  const Language lang = language_from_string(lang_name);
  ResponseValue value;
  if (answer == "agree") {
    value = ResponseValue::agree;
  } else if (answer == "neutral") {
    value = ResponseValue::neutral;
  } else if (answer == "disagree") {
    value = ResponseValue::disagree;
  } else {
    fail(Errc::parse_error, "--answer must be agree, neutral or disagree");
  }
  const fs::path archive =
      fs::path(run_dir) / ("transcripts-" + slugify(model) + "-" + lang_name + ".jsonl");
  if (!fs::exists(archive)) fail(Errc::parse_error, "no archive " + archive.string());
  int max_attempt = 0;
  bool seen = false;
  for (const auto& t : read_transcripts(archive.string())) {
    if (t.statement_id == statement_id) {
      max_attempt = std::max(max_attempt, t.attempt);
      seen = true;
    }
  }
  if (!seen) fail(Errc::parse_error, "statement " + std::to_string(statement_id) + " not in archive");
  Transcript t;
  t.model_id = model;
  t.language = lang;
  t.statement_id = statement_id;
  t.raw_text = "";
  t.extracted = value;
  t.override_flag = true;
  t.attempt = max_attempt + 1;
  t.timestamp = now_utc_iso8601();
  append_transcript(archive.string(), t);
  std::cout << "recorded override for (" << model << ", " << lang_name << ", " << statement_id
            << ") -> " << answer << '\n';
  return kExitOk;
}

// ---- theta from explicit seats ------------------------------------------

int cmd_theta(const std::string& seats_csv, const std::string& svg_out) {
  const SeatAllocation alloc = read_seats_csv(seats_csv);
  const ThetaScore theta = theta_from_seats(alloc);
  char buf[64];
  std::snprintf(buf, sizeof buf, "theta_signed=%.9f theta_percent=%.2f direction=%s",
                theta.value, theta.percent_magnitude(), std::string(theta.direction()).c_str());
  std::cout << buf << '\n';
  if (!svg_out.empty()) {
    const fs::path path(svg_out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + svg_out);
    out << render_hemicycle(alloc, bundestag_labels());
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Wahl-O-Mat political-alignment evaluation harness for chat models"};
  app.require_subcommand(1);

  std::string config_path, replay_dir, lang_csv, out_dir;
  bool force = false;
  auto* evaluate = app.add_subcommand("evaluate", "run the questionnaire against configured backends");
  evaluate->add_option("--config", config_path, "run configuration JSON")->required();
  evaluate->add_option("--replay", replay_dir, "serve answers from recorded .jsonl archives");
  evaluate->add_option("--lang", lang_csv, "comma separated languages (de,en)");
  evaluate->add_option("--out", out_dir, "runs root directory");
  evaluate->add_flag("--force", force, "overwrite an existing run directory");

  std::string run_dir, corpus_path = "data/corpus.json", parties_path = "data/parties.json";
  std::string matrix_path = "data/position_matrix.csv", score_out = "out";
  auto* score = app.add_subcommand("score", "compute the alignment matrix from transcripts");
  score->add_option("--run", run_dir, "run directory with transcript archives")->required();
  score->add_option("--corpus", corpus_path, "corpus JSON");
  score->add_option("--parties", parties_path, "party register JSON");
  score->add_option("--matrix", matrix_path, "party position matrix CSV");
  score->add_option("--out", score_out, "output directory");
  score->add_flag("--force", force, "overwrite existing output");

  std::string alignment_csv, fixture_csv, registry_path = "data/registry.json";
  std::string spectrum_run, spectrum_corpus, spectrum_out = "out/spectrum";
  int seats = 630;
  auto* spectrum = app.add_subcommand("spectrum", "theta scores, seats, aggregates, figures");
  spectrum->add_option("--alignment", alignment_csv, "alignment CSV from `score`");
  spectrum->add_option("--fixture", fixture_csv, "published percent table CSV");
  spectrum->add_option("--registry", registry_path, "model registry JSON");
  spectrum->add_option("--parties", parties_path, "party register JSON");
  spectrum->add_option("--run", spectrum_run, "run directory (enables the answer heat-map)");
  spectrum->add_option("--corpus", spectrum_corpus, "corpus JSON (with --run)");
  spectrum->add_option("--seats", seats, "theoretical parliament size");
  spectrum->add_option("--out", spectrum_out, "output directory");
  spectrum->add_flag("--force", force, "overwrite existing output");

  AcceptanceConfig acceptance;
  acceptance.fixture_csv = "data/alignment_fixture.csv";
  acceptance.registry_json = "data/registry.json";
  acceptance.parties_json = "data/parties.json";
  acceptance.corpus_json = "data/corpus.json";
  acceptance.position_matrix_csv = "data/position_matrix.csv";
  auto* verify = app.add_subcommand("verify", "run the acceptance criteria against the bundled fixture");
  verify->add_option("--fixture", acceptance.fixture_csv, "fixture percent table CSV");
  verify->add_option("--registry", acceptance.registry_json, "model registry JSON");
  verify->add_option("--parties", acceptance.parties_json, "party register JSON");
  verify->add_option("--corpus", acceptance.corpus_json, "corpus JSON");
  verify->add_option("--matrix", acceptance.position_matrix_csv, "position matrix CSV");
  verify->add_option("--scratch", acceptance.scratch_dir, "scratch directory");

  std::string resolve_model, resolve_lang, resolve_answer;
  int resolve_statement = 0;
  auto* resolve = app.add_subcommand("manual-resolve", "record an operator answer for an unparseable transcript");
  resolve->add_option("--run", run_dir, "run directory")->required();
  resolve->add_option("--model", resolve_model, "model id")->required();
  resolve->add_option("--lang", resolve_lang, "language (de|en)")->required();
  resolve->add_option("--statement", resolve_statement, "statement id")->required();
  resolve->add_option("--answer", resolve_answer, "agree|neutral|disagree")->required();

  std::string seats_csv, svg_out;
  auto* theta = app.add_subcommand("theta", "theta score of an explicit seat allocation CSV");
  theta->add_option("--seats-csv", seats_csv, "CSV with party,seats rows")->required();
  theta->add_option("--svg", svg_out, "also draw the hemicycle to this file");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return e.get_exit_code() == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (evaluate->parsed()) return cmd_evaluate(config_path, replay_dir, lang_csv, out_dir, force);
    if (score->parsed()) {
      return cmd_score(run_dir, corpus_path, parties_path, matrix_path, score_out, force);
    }
    if (spectrum->parsed()) {
      return cmd_spectrum(alignment_csv, fixture_csv, registry_path, parties_path, spectrum_run,
                          spectrum_corpus, seats, spectrum_out, force);
    }
    if (verify->parsed()) return cmd_verify(acceptance);
    if (resolve->parsed()) {
      return cmd_manual_resolve(run_dir, resolve_model, resolve_lang, resolve_statement,
                                resolve_answer);
    }
    if (theta->parsed()) return cmd_theta(seats_csv, svg_out);
  } catch (const Error& e) {
    std::cerr << e.what() << '\n';
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitUsage;
  }
  return kExitUsage;
}
