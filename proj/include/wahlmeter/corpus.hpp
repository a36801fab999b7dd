#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "wahlmeter/csv.hpp"
#include "wahlmeter/error.hpp"

namespace wahlmeter {

enum class Language { de, en };

inline constexpr std::array<Language, 2> kLanguages{Language::de, Language::en};

inline std::string_view to_string(Language lang) {
  return lang == Language::de ? "de" : "en";
}

inline Language language_from_string(std::string_view s) {
  if (s == "de") return Language::de;
  if (s == "en") return Language::en;
  fail(Errc::parse_error, "unknown language tag '" + std::string(s) + "'");
}

/// Strips trailing spaces/tabs/CR at every line end and at the end of the text.
/// Leading whitespace and interior spacing are preserved verbatim.
inline std::string trim_line_ends(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  size_t start = 0;
  while (start <= text.size()) {
    const size_t nl = text.find('\n', start);
    std::string_view line = text.substr(start, nl == std::string_view::npos ? text.size() - start : nl - start);
    while (!line.empty() && (line.back() == ' ' || line.back() == '\t' || line.back() == '\r')) {
      line.remove_suffix(1);
    }
    out.append(line);
    if (nl == std::string_view::npos) break;
    out += '\n';
    start = nl + 1;
  }
  return out;
}

struct Statement {
  int id = 0;
  std::string slug;
  std::string text_de;
  std::string text_en;

  const std::string& text(Language lang) const {
    return lang == Language::de ? text_de : text_en;
  }

  bool operator==(const Statement&) const = default;
};

/// Ordered, validated statement corpus. Immutable after construction.
class Corpus {
 public:
  Corpus(int version, std::vector<Statement> statements)
      : version_(version), statements_(std::move(statements)) {
    validate();
  }

  static Corpus from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("version") || !doc.contains("statements")) {
      fail(Errc::parse_error, "corpus document needs 'version' and 'statements'");
    }
    std::vector<Statement> statements;
    for (const auto& item : doc.at("statements")) {
      Statement s;
      s.id = item.at("id").get<int>();
      s.slug = trim_line_ends(item.value("slug", ""));
      s.text_de = trim_line_ends(item.value("de", ""));
      s.text_en = trim_line_ends(item.value("en", ""));
      statements.push_back(std::move(s));
    }
    return Corpus(doc.at("version").get<int>(), std::move(statements));
  }

  static Corpus load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse_error, "cannot open corpus file " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, "corpus JSON: " + std::string(e.what()));
    }
    return from_json(doc);
  }

  nlohmann::json to_json() const {
    nlohmann::json statements = nlohmann::json::array();
    for (const auto& s : statements_) {
      statements.push_back({{"id", s.id}, {"slug", s.slug}, {"de", s.text_de}, {"en", s.text_en}});
    }
    return {{"version", version_}, {"statements", statements}};
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << to_json().dump(2) << '\n';
  }

  int version() const { return version_; }
  int size() const { return static_cast<int>(statements_.size()); }
  const std::vector<Statement>& statements() const { return statements_; }

  const Statement& statement(int id) const {
    if (id < 1 || id > size()) fail(Errc::parse_error, "statement id out of range: " + std::to_string(id));
    return statements_[static_cast<size_t>(id - 1)];
  }

  bool operator==(const Corpus&) const = default;

 private:
  void validate() {
    std::sort(statements_.begin(), statements_.end(),
              [](const Statement& a, const Statement& b) { return a.id < b.id; });
    std::set<int> seen;
    for (const auto& s : statements_) {
      if (!seen.insert(s.id).second) {
        fail(Errc::duplicate_id, "duplicate statement id " + std::to_string(s.id));
      }
    }
    for (size_t i = 0; i < statements_.size(); ++i) {
      const auto& s = statements_[i];
      if (s.id != static_cast<int>(i) + 1) {
        fail(Errc::parse_error, "statement ids must be contiguous 1..N; found " + std::to_string(s.id));
      }
      if (s.text_de.empty() || s.text_en.empty()) {
        fail(Errc::missing_translation, "statement " + std::to_string(s.id) +
                                            " lacks " + (s.text_de.empty() ? "German" : "English") + " text");
      }
    }
  }

  int version_ = 1;
  std::vector<Statement> statements_;
};

struct PartyProfile {
  std::string key;
  std::string display_name;
  std::string tag;  // informal free-text descriptor, no numeric meaning
  bool in_bundestag = false;
  std::optional<int> seat_order;             // 1..5, present iff in_bundestag
  std::optional<double> spectrum_position;   // in {-1,-0.5,0,0.5,1}, present iff in_bundestag

  bool operator==(const PartyProfile&) const = default;
};

struct BundestagSeat {
  std::string_view key;
  int order;
  double position;
};

/// Fixed left-to-right seating of the five parliament parties.
inline constexpr std::array<BundestagSeat, 5> kBundestagSeating{{
    {"Die Linke", 1, -1.0},
    {"SPD", 2, -0.5},
    {"GRÜNE", 3, 0.0},
    {"CDU/CSU", 4, 0.5},
    {"AfD", 5, 1.0},
}};

inline const BundestagSeat* bundestag_seat_for(std::string_view key) {
  for (const auto& seat : kBundestagSeating) {
    if (seat.key == key) return &seat;
  }
  return nullptr;
}

class PartyRegister {
 public:
  explicit PartyRegister(std::vector<PartyProfile> parties) : parties_(std::move(parties)) {
    validate();
  }

  static PartyRegister from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("parties")) {
      fail(Errc::parse_error, "party register needs a 'parties' array");
    }
    std::vector<PartyProfile> parties;
    for (const auto& item : doc.at("parties")) {
      PartyProfile p;
      p.key = item.at("key").get<std::string>();
      p.display_name = item.value("name", p.key);
      p.tag = item.value("tag", "");
      p.in_bundestag = item.value("in_bundestag", false);
      if (item.contains("seat_order") && !item.at("seat_order").is_null()) {
        p.seat_order = item.at("seat_order").get<int>();
      }
      if (item.contains("spectrum") && !item.at("spectrum").is_null()) {
        p.spectrum_position = item.at("spectrum").get<double>();
      }
      parties.push_back(std::move(p));
    }
    return PartyRegister(std::move(parties));
  }

  static PartyRegister load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse_error, "cannot open party register " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, "party register JSON: " + std::string(e.what()));
    }
    return from_json(doc);
  }

  nlohmann::json to_json() const {
    nlohmann::json parties = nlohmann::json::array();
    for (const auto& p : parties_) {
      nlohmann::json item{{"key", p.key}, {"name", p.display_name}, {"in_bundestag", p.in_bundestag}};
      if (!p.tag.empty()) item["tag"] = p.tag;
      if (p.seat_order) item["seat_order"] = *p.seat_order;
      if (p.spectrum_position) item["spectrum"] = *p.spectrum_position;
      parties.push_back(std::move(item));
    }
    return {{"parties", parties}};
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << to_json().dump(2) << '\n';
  }

  const std::vector<PartyProfile>& parties() const { return parties_; }

  const PartyProfile* find(std::string_view key) const {
    for (const auto& p : parties_) {
      if (p.key == key) return &p;
    }
    return nullptr;
  }

  /// The in_bundestag subset ordered left to right by seat order.
  std::vector<const PartyProfile*> bundestag_parties() const {
    std::vector<const PartyProfile*> out;
    for (const auto& p : parties_) {
      if (p.in_bundestag) out.push_back(&p);
    }
    std::sort(out.begin(), out.end(),
              [](const PartyProfile* a, const PartyProfile* b) { return *a->seat_order < *b->seat_order; });
    return out;
  }

  bool operator==(const PartyRegister&) const = default;

 private:
  void validate() const {
    std::set<std::string> keys;
    std::set<int> orders;
    for (const auto& p : parties_) {
      if (!keys.insert(p.key).second) fail(Errc::parse_error, "duplicate party key " + p.key);
      if (p.seat_order.has_value() != p.in_bundestag || p.spectrum_position.has_value() != p.in_bundestag) {
        fail(Errc::inconsistent_bundestag_flags,
             p.key + ": seat_order and spectrum must be present exactly when in_bundestag");
      }
      if (!p.in_bundestag) continue;
      if (p.spectrum_position) {
        static constexpr std::array<double, 5> allowed{-1.0, -0.5, 0.0, 0.5, 1.0};
        if (std::find(allowed.begin(), allowed.end(), *p.spectrum_position) == allowed.end()) {
          fail(Errc::unknown_spectrum_value,
               p.key + ": spectrum " + std::to_string(*p.spectrum_position) + " not in {-1,-0.5,0,0.5,1}");
        }
      }
      const BundestagSeat* seat = bundestag_seat_for(p.key);
      if (seat == nullptr) {
        fail(Errc::inconsistent_bundestag_flags, p.key + " is not a Bundestag party");
      }
      if (*p.seat_order != seat->order || *p.spectrum_position != seat->position) {
        fail(Errc::inconsistent_bundestag_flags,
             p.key + ": expected seat_order " + std::to_string(seat->order) + " and spectrum " +
                 std::to_string(seat->position));
      }
      if (!orders.insert(*p.seat_order).second) {
        fail(Errc::inconsistent_bundestag_flags, "duplicate seat_order " + std::to_string(*p.seat_order));
      }
    }
  }

  std::vector<PartyProfile> parties_;
};

/// Party stances toward every statement, values in {0,1,2}. Complete over the
/// register's party set and the corpus' statement ids by construction.
class PositionMatrix {
 public:
  PositionMatrix(std::vector<std::string> parties, std::map<std::string, std::vector<int>> cells,
                 int statement_count)
      : parties_(std::move(parties)), cells_(std::move(cells)), statement_count_(statement_count) {}

  static PositionMatrix load(const std::string& path, const Corpus& corpus, const PartyRegister& reg) {
    auto rows = csv::read_file(path);
    if (rows.empty() || rows.front() != std::vector<std::string>{"party", "statement_id", "value"}) {
      fail(Errc::parse_error, "position matrix must start with header party,statement_id,value");
    }
    const int n = corpus.size();
    std::map<std::string, std::vector<int>> cells;
    std::map<std::string, std::vector<bool>> present;
    for (const auto& p : reg.parties()) {
      cells[p.key].assign(static_cast<size_t>(n), 0);
      present[p.key].assign(static_cast<size_t>(n), false);
    }
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() != 3) fail(Errc::parse_error, "position matrix row " + std::to_string(i) + " malformed");
      const std::string& party = row[0];
      if (reg.find(party) == nullptr) {
        fail(Errc::parse_error, "position matrix references unknown party " + party);
      }
      int sid = 0, value = -1;
      try {
        sid = std::stoi(row[1]);
        value = std::stoi(row[2]);
      } catch (const std::exception&) {
        fail(Errc::parse_error, "position matrix row " + std::to_string(i) + ": bad number");
      }
      if (sid < 1 || sid > n) {
        fail(Errc::parse_error, "position matrix references unknown statement " + std::to_string(sid));
      }
      if (value < 0 || value > 2) {
        fail(Errc::value_out_of_range, party + "/" + std::to_string(sid) + ": value " +
                                           std::to_string(value) + " not in {0,1,2}");
      }
      if (present[party][static_cast<size_t>(sid - 1)]) {
        fail(Errc::parse_error, "duplicate cell " + party + "/" + std::to_string(sid));
      }
      present[party][static_cast<size_t>(sid - 1)] = true;
      cells[party][static_cast<size_t>(sid - 1)] = value;
    }
    for (const auto& p : reg.parties()) {
      const auto& have = present[p.key];
      for (int sid = 1; sid <= n; ++sid) {
        if (!have[static_cast<size_t>(sid - 1)]) {
          fail(Errc::missing_cell, "missing cell (" + p.key + ", " + std::to_string(sid) + ")");
        }
      }
    }
    std::vector<std::string> parties;
    for (const auto& p : reg.parties()) parties.push_back(p.key);
    return PositionMatrix(std::move(parties), std::move(cells), n);
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << "party,statement_id,value\n";
    for (const auto& party : parties_) {
      const auto& row = cells_.at(party);
      for (int sid = 1; sid <= statement_count_; ++sid) {
        out << csv::escape(party) << ',' << sid << ',' << row[static_cast<size_t>(sid - 1)] << '\n';
      }
    }
  }

  int value(std::string_view party, int statement_id) const {
    return party_row(party)[static_cast<size_t>(statement_id - 1)];
  }

  const std::vector<int>& party_row(std::string_view party) const {
    auto it = cells_.find(std::string(party));
    if (it == cells_.end()) fail(Errc::missing_cell, "party " + std::string(party) + " not in position matrix");
    return it->second;
  }

  bool has_party(std::string_view party) const { return cells_.count(std::string(party)) != 0; }
  const std::vector<std::string>& parties() const { return parties_; }
  int statement_count() const { return statement_count_; }

  bool operator==(const PositionMatrix&) const = default;

 private:
  std::vector<std::string> parties_;
  std::map<std::string, std::vector<int>> cells_;
  int statement_count_ = 0;
};

struct ModelCard {
  std::string id;
  std::string family;
  double params_billions = 0.0;
  std::string release_date;  // ISO-8601 calendar date
  std::string origin;
  std::optional<std::int64_t> downloads_monthly;

  bool operator==(const ModelCard&) const = default;
};

/// Matched model pairs used by the aggregate report; carried as data so a
/// different model set can declare its own comparisons.
struct MatchedPairs {
  std::vector<std::pair<std::string, std::string>> release_pairs;  // (older, newer)
  std::optional<std::pair<std::string, std::string>> origin_pair;  // gap = first - second

  bool operator==(const MatchedPairs&) const = default;
};

class ModelRegistry {
 public:
  ModelRegistry(std::vector<ModelCard> models, MatchedPairs pairs)
      : models_(std::move(models)), pairs_(std::move(pairs)) {
    validate();
  }

  static ModelRegistry from_json(const nlohmann::json& doc) {
    if (!doc.is_object() || !doc.contains("models")) {
      fail(Errc::parse_error, "model registry needs a 'models' array");
    }
    std::vector<ModelCard> models;
    for (const auto& item : doc.at("models")) {
      ModelCard card;
      card.id = item.at("id").get<std::string>();
      card.family = item.value("family", "");
      card.params_billions = item.at("params_b").get<double>();
      card.release_date = item.at("release").get<std::string>();
      card.origin = item.value("origin", "");
      if (item.contains("downloads_monthly") && !item.at("downloads_monthly").is_null()) {
        card.downloads_monthly = item.at("downloads_monthly").get<std::int64_t>();
      }
      models.push_back(std::move(card));
    }
    MatchedPairs pairs;
    if (doc.contains("analysis")) {
      const auto& a = doc.at("analysis");
      for (const auto& pair : a.value("release_pairs", nlohmann::json::array())) {
        pairs.release_pairs.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
      }
      if (a.contains("origin_pair")) {
        pairs.origin_pair = {a.at("origin_pair").at(0).get<std::string>(),
                             a.at("origin_pair").at(1).get<std::string>()};
      }
    }
    return ModelRegistry(std::move(models), std::move(pairs));
  }

  static ModelRegistry load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(Errc::parse_error, "cannot open model registry " + path);
    nlohmann::json doc;
    try {
      in >> doc;
    } catch (const nlohmann::json::exception& e) {
      fail(Errc::parse_error, "model registry JSON: " + std::string(e.what()));
    }
    return from_json(doc);
  }

  nlohmann::json to_json() const {
    nlohmann::json models = nlohmann::json::array();
    for (const auto& m : models_) {
      nlohmann::json item{{"id", m.id},
                          {"family", m.family},
                          {"params_b", m.params_billions},
                          {"release", m.release_date},
                          {"origin", m.origin}};
      if (m.downloads_monthly) item["downloads_monthly"] = *m.downloads_monthly;
      models.push_back(std::move(item));
    }
    nlohmann::json doc{{"models", models}};
    if (!pairs_.release_pairs.empty() || pairs_.origin_pair) {
      nlohmann::json a;
      a["release_pairs"] = nlohmann::json::array();
      for (const auto& [older, newer] : pairs_.release_pairs) {
        a["release_pairs"].push_back({older, newer});
      }
      if (pairs_.origin_pair) a["origin_pair"] = {pairs_.origin_pair->first, pairs_.origin_pair->second};
      doc["analysis"] = std::move(a);
    }
    return doc;
  }

  void save(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << to_json().dump(2) << '\n';
  }

  const std::vector<ModelCard>& models() const { return models_; }
  const MatchedPairs& pairs() const { return pairs_; }

  const ModelCard* find(std::string_view id) const {
    for (const auto& m : models_) {
      if (m.id == id) return &m;
    }
    return nullptr;
  }

  const ModelCard& require(std::string_view id) const {
    const ModelCard* card = find(id);
    if (card == nullptr) fail(Errc::missing_model_metadata, "model " + std::string(id) + " not in registry");
    return *card;
  }

  bool operator==(const ModelRegistry&) const = default;

 private:
  void validate() const {
    std::set<std::string> ids;
    for (const auto& m : models_) {
      if (!ids.insert(m.id).second) fail(Errc::parse_error, "duplicate model id " + m.id);
      if (!(m.params_billions > 0)) {
        fail(Errc::value_out_of_range, m.id + ": params_b must be positive");
      }
      if (m.release_date.size() != 10 || m.release_date[4] != '-' || m.release_date[7] != '-') {
        fail(Errc::parse_error, m.id + ": release date must be YYYY-MM-DD");
      }
    }
  }

  std::vector<ModelCard> models_;
  MatchedPairs pairs_;
};

}  // namespace wahlmeter
