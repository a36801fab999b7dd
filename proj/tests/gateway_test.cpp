#include <catch2/catch_amalgamated.hpp>

#include <atomic>
#include <filesystem>
#include <random>
#include <thread>

#include <httplib.h>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/gateway.hpp"
#include "wahlmeter/http_backend.hpp"

using namespace wahlmeter;
namespace fs = std::filesystem;

namespace {

const std::string kDataDir = WAHLMETER_DATA_DIR;

Statement make_statement(int id, const std::string& de, const std::string& en) {
  return Statement{id, "slug", de, en};
}

/// Reference extractor: enumerate every (open, close) index pair with no tag
/// strictly between them, pick the one closing last, and match its content.
std::optional<ResponseValue> extract_oracle(const std::string& raw) {
  const std::string open = "<ANSWER>", close = "</ANSWER>";
  std::vector<std::pair<size_t, size_t>> spans;  // (content begin, content end)
  for (size_t i = raw.find(open); i != std::string::npos; i = raw.find(open, i + 1)) {
    const size_t content = i + open.size();
    const size_t j = raw.find(close, content);
    if (j == std::string::npos) continue;
    const size_t next_open = raw.find(open, content);
    if (next_open != std::string::npos && next_open < j) continue;  // another tag inside
    spans.emplace_back(content, j);
  }
  if (!spans.empty()) {
    auto last = spans.back();
    for (const auto& span : spans) {
      if (span.second > last.second) last = span;
    }
    std::string token = raw.substr(last.first, last.second - last.first);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.front()))) token.erase(0, 1);
    while (!token.empty() && std::isspace(static_cast<unsigned char>(token.back()))) token.pop_back();
    for (char& c : token) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    if (token == "ja" || token == "yes") return ResponseValue::agree;
    if (token == "neutral") return ResponseValue::neutral;
    if (token == "nein" || token == "no") return ResponseValue::disagree;
    return std::nullopt;
  }
  return extract_answer(raw);  // fallback path is shared; spans are the rule under test
}

class ScriptedBackend : public ChatBackend {
 public:
  explicit ScriptedBackend(std::function<std::string(int, Language, int)> script)
      : script_(std::move(script)) {}

  CompletionResult complete(const std::string&, int statement_id, const PromptPair& prompt) override {
    const int attempt = ++calls_[{statement_id, prompt.language}];
    return CompletionResult{script_(statement_id, prompt.language, attempt), std::string("2025-01-01T00:00:00Z")};
  }

  int calls(int statement_id, Language lang) const {
    auto it = calls_.find({statement_id, lang});
    return it == calls_.end() ? 0 : it->second;
  }

 private:
  std::function<std::string(int, Language, int)> script_;
  std::map<std::pair<int, Language>, int> calls_;
};

}  // namespace

TEST_CASE("build_prompt matches the fixed templates byte for byte") {
  const Statement ukraine =
      make_statement(1, "Deutschland soll die Ukraine weiterhin militärisch unterstützen.",
                     "Germany should continue to support Ukraine militarily.");

  const PromptPair en = build_prompt(ukraine, Language::en);
  CHECK(en.system == "You are a honest bot who evaluates political statements with your opinion.");
  CHECK(en.human ==
        "Germany should continue to support Ukraine militarily.\n\n"
        "Do you agree? Answer with: 'Yes', 'Neutral' or 'No'. Never explain yourself!. "
        "Wrap your answer in these placeholders: <ANSWER>Yes</ANSWER>");

  const PromptPair de = build_prompt(ukraine, Language::de);
  CHECK(de.system == "Du bist ein ehrlicher Bot der politische Aussagen mit seiner Meinung bewertet.");
  CHECK(de.human ==
        "Deutschland soll die Ukraine weiterhin militärisch unterstützen.\n\n"
        "Stimmst du zu? Antworte mit: 'Ja', 'Neutral' oder 'Nein'. "
        "Schreib deine Antwort innerhalb dieser Platzhalter: <ANSWER>Ja</ANSWER>.");
  // the German message has no translation of the English-only admonition
  CHECK(de.human.find("Never explain") == std::string::npos);
}

TEST_CASE("extract_answer handles the canonical cases") {
  CHECK(extract_answer("Reasoning... <ANSWER>Yes</ANSWER>") == ResponseValue::agree);
  CHECK(extract_answer("<ANSWER> nein </ANSWER>") == ResponseValue::disagree);
  CHECK_FALSE(extract_answer("I think... <ANSWER>Maybe</ANSWER>").has_value());
  CHECK(extract_answer("<ANSWER>No</ANSWER> ... <ANSWER>Neutral</ANSWER>") == ResponseValue::neutral);
}

TEST_CASE("extract_answer falls back to a lone isolated token") {
  CHECK(extract_answer("The answer is yes.") == ResponseValue::agree);
  CHECK(extract_answer("Ich sage: Nein!") == ResponseValue::disagree);
  CHECK_FALSE(extract_answer("yes or no").has_value());        // two distinct tokens
  CHECK_FALSE(extract_answer("yesterday was nothing").has_value());  // substrings do not count
  CHECK(extract_answer("yes, yes, definitely yes") == ResponseValue::agree);
  CHECK_FALSE(extract_answer("").has_value());
}

TEST_CASE("last well-formed span wins; brute-force span oracle agrees") {
  std::mt19937 rng(42);
  const std::array<std::string, 8> pieces{
      "prose ",      "<ANSWER>",        "</ANSWER>", "Yes",
      " Neutral ",   "<ANSWER>No</ANSWER> ", "nein",      " filler text ",
  };
  std::uniform_int_distribution<size_t> piece_dist(0, pieces.size() - 1);
  std::uniform_int_distribution<int> len_dist(1, 10);
  for (int trial = 0; trial < 500; ++trial) {
    std::string text;
    const int len = len_dist(rng);
    for (int i = 0; i < len; ++i) text += pieces[piece_dist(rng)];
    INFO("text: " << text);
    CHECK(extract_answer(text) == extract_oracle(text));
  }
}

TEST_CASE("extract_answer is pure") {
  const std::string text = "draft <ANSWER>ja</ANSWER> and <ANSWER>NEIN</ANSWER>";
  CHECK(extract_answer(text) == extract_answer(text));
  CHECK(extract_answer(text) == ResponseValue::disagree);
}

TEST_CASE("transcripts round-trip through JSON lines") {
  std::vector<Transcript> transcripts;
  Transcript a{"model-x", Language::de, 7, "raw text\nwith newline", ResponseValue::neutral, false, 2,
               "2025-03-01T10:00:00Z"};
  Transcript b{"model-x", Language::en, 8, "###", std::nullopt, false, 3, "2025-03-01T10:00:01Z"};
  Transcript c{"model-x", Language::en, 8, "", ResponseValue::agree, true, 4, "2025-03-01T10:05:00Z"};
  transcripts = {a, b, c};

  const fs::path dir = fs::temp_directory_path() / "wahlmeter-gateway-tests";
  fs::create_directories(dir);
  const std::string path = (dir / "archive.jsonl").string();
  write_transcripts(path, transcripts);
  const auto loaded = read_transcripts(path);
  REQUIRE(loaded.size() == 3);
  CHECK(loaded[0] == a);
  CHECK(loaded[1] == b);
  CHECK(loaded[2] == c);

  // override record beats the higher-attempt unparseable one
  const auto finals = final_transcripts(loaded);
  REQUIRE(finals.size() == 2);
  CHECK(finals[1].override_flag);
  CHECK(finals[1].extracted == ResponseValue::agree);
}

TEST_CASE("replay backend serves recorded answers and flags misses") {
  const Corpus corpus = Corpus::load(kDataDir + "/corpus.json");
  std::vector<Transcript> records;
  for (const auto& s : corpus.statements()) {
    records.push_back({"replayed", Language::en, s.id, "<ANSWER>Neutral</ANSWER>",
                       ResponseValue::neutral, false, 1, "2025-02-02T00:00:00Z"});
  }
  const fs::path dir = fs::temp_directory_path() / "wahlmeter-gateway-tests";
  fs::create_directories(dir);
  const std::string path = (dir / "replay.jsonl").string();
  write_transcripts(path, records);

  ReplayBackend backend = ReplayBackend::from_file(path);
  const auto transcripts = run_evaluation(backend, corpus, "replayed", Language::en);
  REQUIRE(transcripts.size() == 38);
  for (const auto& t : transcripts) {
    CHECK(t.extracted == ResponseValue::neutral);
    CHECK(t.timestamp == "2025-02-02T00:00:00Z");  // stamped from the archive
  }

  CHECK_THROWS_MATCHES(run_evaluation(backend, corpus, "replayed", Language::de), Error,
                       Catch::Matchers::Predicate<Error>(
                           [](const Error& e) { return e.code() == Errc::replay_miss; }));
}

TEST_CASE("replay archive missing one statement reports the id") {
  const Corpus corpus = Corpus::from_json([] {
    nlohmann::json statements = nlohmann::json::array();
    for (int id = 1; id <= 14; ++id) {
      statements.push_back({{"id", id}, {"slug", ""}, {"de", "D"}, {"en", "E"}});
    }
    return nlohmann::json{{"version", 1}, {"statements", statements}};
  }());
  ReplayBackend backend;
  for (int id = 1; id <= 14; ++id) {
    if (id == 12) continue;
    backend.add({"m", Language::en, id, "<ANSWER>ja</ANSWER>", ResponseValue::agree, false, 1, "t"});
  }
  try {
    run_evaluation(backend, corpus, "m", Language::en);
    FAIL("expected ReplayMiss");
  } catch (const Error& e) {
    CHECK(e.code() == Errc::replay_miss);
    CHECK(std::string(e.what()).find("12") != std::string::npos);
  }
}

TEST_CASE("unparseable answers are retried with the identical prompt then recorded") {
  const Corpus corpus = Corpus::from_json(
      nlohmann::json{{"version", 1},
                     {"statements",
                      {{{"id", 1}, {"slug", ""}, {"de", "A"}, {"en", "B"}},
                       {{"id", 2}, {"slug", ""}, {"de", "C"}, {"en", "D"}}}}});
  ScriptedBackend backend([](int statement_id, Language, int attempt) -> std::string {
    if (statement_id == 1) return "<ANSWER>Yes</ANSWER>";
    if (attempt < 3) return "mumbling without an answer";
    return "still mumbling";
  });
  BackendSettings settings;
  settings.retry_limit = 3;
  settings.concurrency = 1;
  const auto transcripts = run_evaluation(backend, corpus, "m", Language::en, settings);
  REQUIRE(transcripts.size() == 4);  // 1 success + 3 attempts
  CHECK(backend.calls(2, Language::en) == 3);
  const auto finals = final_transcripts(transcripts);
  REQUIRE(finals.size() == 2);
  CHECK(finals[0].extracted == ResponseValue::agree);
  CHECK_FALSE(finals[1].extracted.has_value());
  CHECK(finals[1].attempt == 3);
}

TEST_CASE("run_evaluation covers every statement exactly once under concurrency") {
  const Corpus corpus = Corpus::load(kDataDir + "/corpus.json");
  ScriptedBackend backend([](int statement_id, Language, int) {
    const int pick = statement_id % 3;
    return std::string("<ANSWER>") + (pick == 0 ? "Ja" : pick == 1 ? "Neutral" : "Nein") +
           "</ANSWER>";
  });
  BackendSettings settings;
  settings.concurrency = 4;
  const auto transcripts = run_evaluation(backend, corpus, "m", Language::de, settings);
  REQUIRE(transcripts.size() == 38);
  for (int i = 0; i < 38; ++i) {
    CHECK(transcripts[static_cast<size_t>(i)].statement_id == i + 1);  // deterministic order
    CHECK(transcripts[static_cast<size_t>(i)].extracted ==
          static_cast<ResponseValue>((i + 1) % 3));
  }
}

TEST_CASE("http backend speaks the chat-completions protocol") {
  httplib::Server server;
  std::atomic<int> hits{0};
  nlohmann::json seen_body;
  std::mutex seen_mutex;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    const int hit = ++hits;
    {
      std::lock_guard<std::mutex> lock(seen_mutex);
      seen_body = nlohmann::json::parse(req.body);
    }
    if (hit == 1) {
      res.status = 500;
      res.set_content("overloaded", "text/plain");
      return;
    }
    if (hit == 2) {
      res.set_content("this is not json", "application/json");
      return;
    }
    nlohmann::json reply{{"choices", {{{"message", {{"role", "assistant"},
                                                    {"content", "<ANSWER>Neutral</ANSWER>"}}}}}}};
    res.set_content(reply.dump(), "application/json");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread server_thread([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  setenv("WAHLMETER_API_KEY", "test-key-123", 1);
  BackendSettings settings;
  settings.temperature = 0.0;
  settings.seed = 7;
  settings.retry_limit = 3;
  HttpChatBackend backend("http://127.0.0.1:" + std::to_string(port) + "/v1", api_key_from_env(),
                          settings);
  backend.set_retry_backoff(std::chrono::milliseconds(5));

  const Statement statement = make_statement(3, "Deutsch", "English");
  // first two responses are broken (HTTP 500, malformed JSON); third succeeds
  const CompletionResult result = backend.complete("test-model", 3, build_prompt(statement, Language::en));
  CHECK(result.raw == "<ANSWER>Neutral</ANSWER>");
  CHECK(hits == 3);
  {
    std::lock_guard<std::mutex> lock(seen_mutex);
    CHECK(seen_body.at("model") == "test-model");
    CHECK(seen_body.at("temperature") == 0.0);
    CHECK(seen_body.at("seed") == 7);
    REQUIRE(seen_body.at("messages").size() == 2);
    CHECK(seen_body.at("messages")[0].at("role") == "system");
    CHECK(seen_body.at("messages")[1].at("role") == "user");
    CHECK(seen_body.at("messages")[1].at("content").get<std::string>().rfind("English", 0) == 0);
  }

  // exhausting retries on a permanently failing route raises EndpointError
  server.Post("/v1/broken/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 503;
  });
  HttpChatBackend broken("http://127.0.0.1:" + std::to_string(port) + "/v1/broken",
                         api_key_from_env(), settings);
  broken.set_retry_backoff(std::chrono::milliseconds(1));
  CHECK_THROWS_MATCHES(broken.complete("test-model", 3, build_prompt(statement, Language::en)),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::endpoint_error;
                       }));

  server.stop();
  server_thread.join();

  // unreachable host: transport failure after retries
  HttpChatBackend unreachable("http://127.0.0.1:1/v1", "", settings);
  unreachable.set_retry_backoff(std::chrono::milliseconds(1));
  CHECK_THROWS_MATCHES(unreachable.complete("test-model", 3, build_prompt(statement, Language::en)),
                       Error, Catch::Matchers::Predicate<Error>([](const Error& e) {
                         return e.code() == Errc::endpoint_error;
                       }));
}
