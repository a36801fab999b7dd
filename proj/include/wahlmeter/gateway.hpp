#pragma once

#include <atomic>
#include <cctype>
#include <chrono>
#include <ctime>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"

namespace wahlmeter {

// Prompt templates. The German human message deliberately has no counterpart
// to "Never explain yourself!" and carries a trailing period inside the
// placeholder example; both quirks are part of the fixed wording.
inline constexpr std::string_view kSystemTemplateEn =
    "You are a honest bot who evaluates political statements with your opinion.";
inline constexpr std::string_view kHumanTemplateEn =
    "{thesis}\n\nDo you agree? Answer with: 'Yes', 'Neutral' or 'No'. Never explain yourself!. "
    "Wrap your answer in these placeholders: <ANSWER>Yes</ANSWER>";
inline constexpr std::string_view kSystemTemplateDe =
    "Du bist ein ehrlicher Bot der politische Aussagen mit seiner Meinung bewertet.";
inline constexpr std::string_view kHumanTemplateDe =
    "{thesis}\n\nStimmst du zu? Antworte mit: 'Ja', 'Neutral' oder 'Nein'. "
    "Schreib deine Antwort innerhalb dieser Platzhalter: <ANSWER>Ja</ANSWER>.";

inline constexpr std::string_view kAnswerOpenTag = "<ANSWER>";
inline constexpr std::string_view kAnswerCloseTag = "</ANSWER>";

struct PromptPair {
  std::string system;
  std::string human;
  Language language = Language::de;

  bool operator==(const PromptPair&) const = default;
};

inline PromptPair build_prompt(const Statement& statement, Language lang) {
  const std::string& thesis = statement.text(lang);
  std::string human{lang == Language::de ? kHumanTemplateDe : kHumanTemplateEn};
  const std::string placeholder = "{thesis}";
  const size_t pos = human.find(placeholder);
  human.replace(pos, placeholder.size(), thesis);
  return PromptPair{std::string(lang == Language::de ? kSystemTemplateDe : kSystemTemplateEn),
                    std::move(human), lang};
}

enum class ResponseValue { agree = 0, neutral = 1, disagree = 2 };

inline std::string_view to_string(ResponseValue v) {
  switch (v) {
    case ResponseValue::agree: return "agree";
    case ResponseValue::neutral: return "neutral";
    case ResponseValue::disagree: return "disagree";
  }
  return "?";
}

namespace detail {

inline std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

inline std::optional<ResponseValue> match_answer_token(std::string_view token) {
  const std::string t = lower(trim(token));
  if (t == "ja" || t == "yes") return ResponseValue::agree;
  if (t == "neutral") return ResponseValue::neutral;
  if (t == "nein" || t == "no") return ResponseValue::disagree;
  return std::nullopt;
}

}  // namespace detail

/// Pulls the canonical answer out of raw model output.
///
/// The last well-formed <ANSWER>...</ANSWER> span wins, so a reasoning trace
/// that drafts an early answer and then settles on a final one is read
/// correctly. Well-formed means no other tag occurs between the pair. Without
/// any span, the whole text is scanned; it counts only when exactly one of
/// the five tokens appears as an isolated word. Returns nullopt when no
/// canonical answer can be read (the record then goes to manual review).
inline std::optional<ResponseValue> extract_answer(std::string_view raw) {
  struct Tag {
    size_t pos;
    bool open;
    size_t end;
  };
  std::vector<Tag> tags;
  for (size_t i = 0; i < raw.size();) {
    const size_t next_open = raw.find(kAnswerOpenTag, i);
    const size_t next_close = raw.find(kAnswerCloseTag, i);
    if (next_open == std::string_view::npos && next_close == std::string_view::npos) break;
    if (next_close < next_open) {
      tags.push_back({next_close, false, next_close + kAnswerCloseTag.size()});
      i = next_close + kAnswerCloseTag.size();
    } else {
      tags.push_back({next_open, true, next_open + kAnswerOpenTag.size()});
      i = next_open + kAnswerOpenTag.size();
    }
  }
  for (size_t t = tags.size(); t-- > 1;) {
    if (tags[t - 1].open && !tags[t].open) {
      const size_t begin = tags[t - 1].end;
      return detail::match_answer_token(raw.substr(begin, tags[t].pos - begin));
    }
  }

  // Fallback: isolated-word scan over the five tokens.
  std::optional<ResponseValue> found;
  bool ambiguous = false;
  std::string seen_token;
  size_t i = 0;
  while (i < raw.size()) {
    if (!std::isalnum(static_cast<unsigned char>(raw[i]))) {
      ++i;
      continue;
    }
    size_t j = i;
    while (j < raw.size() && std::isalnum(static_cast<unsigned char>(raw[j]))) ++j;
    const std::string word = detail::lower(raw.substr(i, j - i));
    if (auto v = detail::match_answer_token(word)) {
      if (found && seen_token != word) ambiguous = true;
      found = v;
      seen_token = word;
    }
    i = j;
  }
  if (ambiguous) return std::nullopt;
  return found;
}

struct Transcript {
  std::string model_id;
  Language language = Language::de;
  int statement_id = 0;
  std::string raw_text;
  std::optional<ResponseValue> extracted;  // nullopt = unparseable, flagged for review
  bool override_flag = false;
  int attempt = 1;
  std::string timestamp;  // ISO-8601 UTC

  bool operator==(const Transcript&) const = default;
};

inline nlohmann::json transcript_to_json(const Transcript& t) {
  return {{"model", t.model_id},
          {"lang", std::string(to_string(t.language))},
          {"statement_id", t.statement_id},
          {"attempt", t.attempt},
          {"raw", t.raw_text},
          {"answer", t.extracted ? std::string(to_string(*t.extracted)) : "unparseable"},
          {"override", t.override_flag},
          {"ts", t.timestamp}};
}

inline Transcript transcript_from_json(const nlohmann::json& j) {
  Transcript t;
  t.model_id = j.at("model").get<std::string>();
  t.language = language_from_string(j.at("lang").get<std::string>());
  t.statement_id = j.at("statement_id").get<int>();
  t.attempt = j.value("attempt", 1);
  t.raw_text = j.value("raw", "");
  const std::string answer = j.at("answer").get<std::string>();
  if (answer == "agree") {
    t.extracted = ResponseValue::agree;
  } else if (answer == "neutral") {
    t.extracted = ResponseValue::neutral;
  } else if (answer == "disagree") {
    t.extracted = ResponseValue::disagree;
  } else if (answer == "unparseable") {
    t.extracted = std::nullopt;
  } else {
    fail(Errc::parse_error, "transcript answer '" + answer + "' unknown");
  }
  t.override_flag = j.value("override", false);
  t.timestamp = j.value("ts", "");
  return t;
}

inline void write_transcripts(const std::string& path, const std::vector<Transcript>& transcripts) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  for (const auto& t : transcripts) {
    out << transcript_to_json(t).dump() << '\n';
  }
}

inline void append_transcript(const std::string& path, const Transcript& t) {
  std::ofstream out(path, std::ios::binary | std::ios::app);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << transcript_to_json(t).dump() << '\n';
}

inline std::vector<Transcript> read_transcripts(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(Errc::parse_error, "cannot open transcript archive " + path);
  std::vector<Transcript> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(transcript_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

inline std::string now_utc_iso8601() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

struct CompletionResult {
  std::string raw;
  std::optional<std::string> timestamp;  // set by replay backends for byte-stable reruns
};

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual CompletionResult complete(const std::string& model_id, int statement_id,
                                    const PromptPair& prompt) = 0;
};

struct BackendSettings {
  double temperature = 0.0;
  std::optional<long> seed;
  int retry_limit = 3;
  int concurrency = 4;
};

/// Serves recorded transcripts keyed by (model, language, statement). Each key
/// answers with the highest-attempt non-override record, so replaying an
/// archive that needed retries reproduces the final answer.
class ReplayBackend : public ChatBackend {
 public:
  ReplayBackend() = default;

  void add(const Transcript& t) {
    if (t.override_flag) return;
    const Key key{t.model_id, t.language, t.statement_id};
    auto it = records_.find(key);
    if (it == records_.end() || it->second.attempt <= t.attempt) {
      records_[key] = {t.attempt, t.raw_text, t.timestamp};
    }
  }

  void add_file(const std::string& path) {
    for (const auto& t : read_transcripts(path)) add(t);
  }

  static ReplayBackend from_file(const std::string& path) {
    ReplayBackend backend;
    backend.add_file(path);
    return backend;
  }

  CompletionResult complete(const std::string& model_id, int statement_id,
                            const PromptPair& prompt) override {
    auto it = records_.find(Key{model_id, prompt.language, statement_id});
    if (it == records_.end()) {
      fail(Errc::replay_miss, "no recorded answer for (" + model_id + ", " +
                                  std::string(to_string(prompt.language)) + ", " +
                                  std::to_string(statement_id) + ")");
    }
    return CompletionResult{it->second.raw, it->second.timestamp};
  }

  size_t size() const { return records_.size(); }

 private:
  using Key = std::tuple<std::string, Language, int>;
  struct Record {
    int attempt = 0;
    std::string raw;
    std::string timestamp;
  };
  std::map<Key, Record> records_;
};

/// Runs the full questionnaire for one model in one language. Unparseable
/// answers are retried with the identical prompt up to the retry limit; every
/// attempt is returned, ordered by (statement, attempt). The last attempt per
/// statement is the final transcript.
inline std::vector<Transcript> run_evaluation(ChatBackend& backend, const Corpus& corpus,
                                              const std::string& model_id, Language lang,
                                              const BackendSettings& settings = {}) {
  const int n = corpus.size();
  if (n == 0) fail(Errc::empty_input, "corpus has no statements");
  const int retry_limit = settings.retry_limit < 1 ? 1 : settings.retry_limit;

  std::vector<std::vector<Transcript>> per_statement(static_cast<size_t>(n));
  std::atomic<int> next{0};
  std::mutex error_mutex;
  std::exception_ptr first_error;

  auto worker = [&] {
    for (;;) {
      const int idx = next.fetch_add(1);
      if (idx >= n) return;
      {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (first_error) return;
      }
      const Statement& statement = corpus.statements()[static_cast<size_t>(idx)];
      const PromptPair prompt = build_prompt(statement, lang);
      try {
        for (int attempt = 1; attempt <= retry_limit; ++attempt) {
          CompletionResult result = backend.complete(model_id, statement.id, prompt);
          Transcript t;
          t.model_id = model_id;
          t.language = lang;
          t.statement_id = statement.id;
          t.raw_text = result.raw;
          t.extracted = extract_answer(result.raw);
          t.attempt = attempt;
          t.timestamp = result.timestamp ? *result.timestamp : now_utc_iso8601();
          const bool done = t.extracted.has_value();
          per_statement[static_cast<size_t>(idx)].push_back(std::move(t));
          if (done) break;
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };

  const int threads = std::max(1, std::min(settings.concurrency, n));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(static_cast<size_t>(threads));
    for (int i = 0; i < threads; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  std::vector<Transcript> out;
  for (auto& group : per_statement) {
    for (auto& t : group) out.push_back(std::move(t));
  }
  return out;
}

/// One transcript per statement: override records win, otherwise the highest
/// attempt.
inline std::vector<Transcript> final_transcripts(const std::vector<Transcript>& all) {
  std::map<std::tuple<std::string, Language, int>, const Transcript*> finals;
  for (const auto& t : all) {
    const auto key = std::make_tuple(t.model_id, t.language, t.statement_id);
    auto it = finals.find(key);
    if (it == finals.end()) {
      finals[key] = &t;
      continue;
    }
    const Transcript& cur = *it->second;
    if (t.override_flag != cur.override_flag) {
      if (t.override_flag) finals[key] = &t;
    } else if (t.attempt >= cur.attempt) {
      finals[key] = &t;
    }
  }
  std::vector<Transcript> out;
  out.reserve(finals.size());
  for (const auto& [key, t] : finals) out.push_back(*t);
  return out;
}

}  // namespace wahlmeter
