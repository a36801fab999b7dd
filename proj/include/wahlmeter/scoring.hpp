#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/csv.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/gateway.hpp"

namespace wahlmeter {

/// Exact alignment value k/(2N). Per-statement distances |A-B| are integers in
/// 0..2, so every score is an integer multiple of 1/(2N); keeping the integer
/// pair avoids any floating-point drift between pipeline stages.
class AlignmentScore {
 public:
  AlignmentScore() = default;

  AlignmentScore(int numerator, int denominator) : num_(numerator), den_(denominator) {
    if (den_ <= 0 || num_ < 0 || num_ > den_) {
      fail(Errc::value_out_of_range,
           "alignment " + std::to_string(num_) + "/" + std::to_string(den_) + " outside [0,1]");
    }
  }

  int numerator() const { return num_; }
  int denominator() const { return den_; }
  double value() const { return static_cast<double>(num_) / static_cast<double>(den_); }
  double percent() const { return value() * 100.0; }

  bool operator==(const AlignmentScore&) const = default;

 private:
  int num_ = 0;
  int den_ = 1;
};

/// Two-decimal percent with round-half-up, computed in integer arithmetic so
/// the printed value is exact for every rational input.
inline std::string render_percent(const AlignmentScore& score) {
  const std::int64_t p = 10000LL * score.numerator();
  const std::int64_t q = score.denominator();
  const std::int64_t scaled = (2 * p + q) / (2 * q);
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld.%02lld", static_cast<long long>(scaled / 100),
                static_cast<long long>(scaled % 100));
  return buf;
}

struct ResponseVector {
  std::string model_id;
  Language language = Language::de;
  std::vector<ResponseValue> values;  // index = statement id - 1, complete by construction

  bool operator==(const ResponseVector&) const = default;
};

/// Builds the complete response vector for (model, language) from final
/// transcripts. Unparseable finals and missing statements abort with the
/// offending ids; scoring never skips statements because the metric divides
/// by the full statement count.
inline ResponseVector response_vector(const std::vector<Transcript>& finals,
                                      const std::string& model_id, Language lang,
                                      int statement_count) {
  std::vector<std::optional<ResponseValue>> values(static_cast<size_t>(statement_count));
  for (const auto& t : finals) {
    if (t.model_id != model_id || t.language != lang) continue;
    if (t.statement_id < 1 || t.statement_id > statement_count) {
      fail(Errc::parse_error, "transcript statement " + std::to_string(t.statement_id) +
                                  " not in corpus 1.." + std::to_string(statement_count));
    }
    values[static_cast<size_t>(t.statement_id - 1)] = t.extracted;
  }
  std::string missing;
  for (int sid = 1; sid <= statement_count; ++sid) {
    if (!values[static_cast<size_t>(sid - 1)].has_value()) {
      if (!missing.empty()) missing += ", ";
      missing += std::to_string(sid);
    }
  }
  if (!missing.empty()) {
    fail(Errc::incomplete_responses, "(" + model_id + ", " + std::string(to_string(lang)) +
                                         ") unresolved statements: " + missing);
  }
  ResponseVector out;
  out.model_id = model_id;
  out.language = lang;
  out.values.reserve(static_cast<size_t>(statement_count));
  for (const auto& v : values) out.values.push_back(*v);
  return out;
}

/// Alignment(p, l) = (1/N) * sum_s [1 - |A_s - B_s| / 2], returned exactly as
/// (2N - sum |A-B|) / (2N).
inline AlignmentScore alignment(std::span<const int> party_row, const ResponseVector& llm) {
  if (party_row.empty() || party_row.size() != llm.values.size()) {
    fail(Errc::length_mismatch, "party row has " + std::to_string(party_row.size()) +
                                    " entries, response vector " + std::to_string(llm.values.size()));
  }
  int total_distance = 0;
  for (size_t i = 0; i < party_row.size(); ++i) {
    const int a = party_row[i];
    if (a < 0 || a > 2) fail(Errc::value_out_of_range, "party response " + std::to_string(a));
    const int b = static_cast<int>(llm.values[i]);
    total_distance += a > b ? a - b : b - a;
  }
  const int two_n = 2 * static_cast<int>(party_row.size());
  return AlignmentScore(two_n - total_distance, two_n);
}

/// Score grid over (model, party, language), complete over its declared axes.
class AlignmentMatrix {
 public:
  using Key = std::tuple<std::string, std::string, Language>;

  AlignmentMatrix() = default;
  explicit AlignmentMatrix(int statement_count) : statement_count_(statement_count) {}

  void set(const std::string& model, const std::string& party, Language lang, AlignmentScore score) {
    if (entries_.emplace(Key{model, party, lang}, score).second) {
      if (std::find(models_.begin(), models_.end(), model) == models_.end()) models_.push_back(model);
      if (std::find(parties_.begin(), parties_.end(), party) == parties_.end()) parties_.push_back(party);
    } else {
      entries_[Key{model, party, lang}] = score;
    }
  }

  bool contains(const std::string& model, const std::string& party, Language lang) const {
    return entries_.count(Key{model, party, lang}) != 0;
  }

  const AlignmentScore& at(const std::string& model, const std::string& party, Language lang) const {
    auto it = entries_.find(Key{model, party, lang});
    if (it == entries_.end()) {
      fail(Errc::empty_matrix, "no alignment for (" + model + ", " + party + ", " +
                                   std::string(to_string(lang)) + ")");
    }
    return it->second;
  }

  bool has_language(const std::string& model, Language lang) const {
    for (const auto& party : parties_) {
      if (contains(model, party, lang)) return true;
    }
    return false;
  }

  const std::vector<std::string>& models() const { return models_; }
  const std::vector<std::string>& parties() const { return parties_; }
  const std::map<Key, AlignmentScore>& entries() const { return entries_; }
  int statement_count() const { return statement_count_; }
  bool empty() const { return entries_.empty(); }

  void save_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) fail(Errc::io_error, "cannot write " + path);
    out << "model,language,party,numerator,denominator,percent\n";
    for (Language lang : kLanguages) {
      for (const auto& model : models_) {
        for (const auto& party : parties_) {
          if (!contains(model, party, lang)) continue;
          const auto& s = at(model, party, lang);
          out << csv::escape(model) << ',' << to_string(lang) << ',' << csv::escape(party) << ','
              << s.numerator() << ',' << s.denominator() << ',' << render_percent(s) << '\n';
        }
      }
    }
  }

  static AlignmentMatrix load_csv(const std::string& path) {
    auto rows = csv::read_file(path);
    if (rows.empty() ||
        rows.front() != std::vector<std::string>{"model", "language", "party", "numerator",
                                                 "denominator", "percent"}) {
      fail(Errc::parse_error, "alignment CSV header mismatch in " + path);
    }
    AlignmentMatrix matrix;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() != 6) fail(Errc::parse_error, path + ": row " + std::to_string(i) + " malformed");
      const int num = std::stoi(row[3]);
      const int den = std::stoi(row[4]);
      if (matrix.statement_count_ == 0) matrix.statement_count_ = den / 2;
      if (den != 2 * matrix.statement_count_) {
        fail(Errc::parse_error, path + ": inconsistent denominator " + row[4]);
      }
      matrix.set(row[0], row[2], language_from_string(row[1]), AlignmentScore(num, den));
    }
    return matrix;
  }

  /// Imports a printed percent table (model,language,party,percent) by
  /// snapping each value to the nearest multiple of 1/(2N). A printed value
  /// farther than 0.005 pp from every representable rational is a hard error:
  /// it cannot have come from the metric.
  static AlignmentMatrix import_fixture_csv(const std::string& path, int statement_count = 38) {
    auto rows = csv::read_file(path);
    if (rows.empty() ||
        rows.front() != std::vector<std::string>{"model", "language", "party", "percent"}) {
      fail(Errc::parse_error, "fixture CSV header mismatch in " + path);
    }
    AlignmentMatrix matrix(statement_count);
    const int den = 2 * statement_count;
    for (size_t i = 1; i < rows.size(); ++i) {
      const auto& row = rows[i];
      if (row.size() != 4) fail(Errc::parse_error, path + ": row " + std::to_string(i) + " malformed");
      const double percent = std::stod(row[3]);
      const int num = static_cast<int>(std::lround(percent * den / 100.0));
      const double reconstructed = 100.0 * num / den;
      if (num < 0 || num > den || std::abs(reconstructed - percent) > 0.005 + 1e-9) {
        fail(Errc::parse_error, path + ": value " + row[3] + " for (" + row[0] + ", " + row[2] +
                                    ") is not a multiple of 1/" + std::to_string(den) +
                                    " within 0.005 pp");
      }
      matrix.set(row[0], row[2], language_from_string(row[1]), AlignmentScore(num, den));
    }
    return matrix;
  }

 private:
  int statement_count_ = 0;
  std::vector<std::string> models_;   // first-seen order
  std::vector<std::string> parties_;  // first-seen order
  std::map<Key, AlignmentScore> entries_;
};

/// Scores every (model, party, language) combination present in the inputs.
inline AlignmentMatrix alignment_matrix(const PositionMatrix& positions,
                                        const std::vector<ResponseVector>& responses) {
  AlignmentMatrix matrix(positions.statement_count());
  for (const auto& vec : responses) {
    if (static_cast<int>(vec.values.size()) != positions.statement_count()) {
      fail(Errc::length_mismatch, vec.model_id + ": response vector length " +
                                      std::to_string(vec.values.size()) + " != statement count " +
                                      std::to_string(positions.statement_count()));
    }
    for (const auto& party : positions.parties()) {
      matrix.set(vec.model_id, party, vec.language, alignment(positions.party_row(party), vec));
    }
  }
  return matrix;
}

enum class ShiftClass { none, positive_half, positive_full, negative_half, negative_full };

inline std::string_view to_string(ShiftClass c) {
  switch (c) {
    case ShiftClass::none: return "none";
    case ShiftClass::positive_half: return "positive_half";
    case ShiftClass::positive_full: return "positive_full";
    case ShiftClass::negative_half: return "negative_half";
    case ShiftClass::negative_full: return "negative_full";
  }
  return "?";
}

/// Positive = the English answer moved toward agreement (numerically lower);
/// full = swing between outright agreement and rejection.
inline ShiftClass shift_classify(ResponseValue de, ResponseValue en) {
  const int delta = static_cast<int>(de) - static_cast<int>(en);
  if (delta == 0) return ShiftClass::none;
  if (delta > 0) return delta == 2 ? ShiftClass::positive_full : ShiftClass::positive_half;
  return delta == -2 ? ShiftClass::negative_full : ShiftClass::negative_half;
}

struct LanguageResponseStats {
  std::map<std::string, int> agree_count;     // per model
  std::map<std::string, int> neutral_count;   // per model
  std::map<std::string, int> disagree_count;  // per model
  std::vector<double> per_statement_std;      // population std across models
  double mean_std = 0.0;
  int unanimous_statements = 0;
};

struct ResponseStats {
  std::map<Language, LanguageResponseStats> by_language;
};

/// Response-level dispersion statistics. The model set is treated as the full
/// population, so standard deviations divide by the model count.
inline ResponseStats response_stats(const std::vector<ResponseVector>& vectors) {
  if (vectors.empty()) fail(Errc::empty_input, "no response vectors");
  const size_t n = vectors.front().values.size();
  for (const auto& v : vectors) {
    if (v.values.size() != n) {
      fail(Errc::length_mismatch, v.model_id + ": vectors cover different statement sets");
    }
  }
  ResponseStats stats;
  for (Language lang : kLanguages) {
    std::vector<const ResponseVector*> group;
    for (const auto& v : vectors) {
      if (v.language == lang) group.push_back(&v);
    }
    if (group.empty()) continue;
    LanguageResponseStats& ls = stats.by_language[lang];
    for (const ResponseVector* v : group) {
      int agree = 0, neutral = 0, disagree = 0;
      for (ResponseValue r : v->values) {
        if (r == ResponseValue::agree) ++agree;
        if (r == ResponseValue::neutral) ++neutral;
        if (r == ResponseValue::disagree) ++disagree;
      }
      ls.agree_count[v->model_id] = agree;
      ls.neutral_count[v->model_id] = neutral;
      ls.disagree_count[v->model_id] = disagree;
    }
    double std_sum = 0.0;
    for (size_t s = 0; s < n; ++s) {
      double mean = 0.0;
      for (const ResponseVector* v : group) mean += static_cast<double>(v->values[s]);
      mean /= static_cast<double>(group.size());
      double var = 0.0;
      bool unanimous = true;
      for (const ResponseVector* v : group) {
        const double d = static_cast<double>(v->values[s]) - mean;
        var += d * d;
        if (v->values[s] != group.front()->values[s]) unanimous = false;
      }
      var /= static_cast<double>(group.size());
      const double sd = std::sqrt(var);
      ls.per_statement_std.push_back(sd);
      std_sum += sd;
      if (unanimous) ++ls.unanimous_statements;
    }
    ls.mean_std = std_sum / static_cast<double>(n);
  }
  return stats;
}

}  // namespace wahlmeter
