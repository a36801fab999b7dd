#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

namespace wahlmeter {

inline constexpr std::string_view kBucketSmall = "<=8B";
inline constexpr std::string_view kBucketMedium = "9-40B";
inline constexpr std::string_view kBucketLarge = ">40B";

inline std::string size_bucket(double params_billions) {
  if (params_billions <= 8.0) return std::string(kBucketSmall);
  if (params_billions <= 40.0) return std::string(kBucketMedium);
  return std::string(kBucketLarge);
}

/// Aggregates over the theta table. All theta quantities are magnitudes
/// (absolute values) as fractions of the half-axis, i.e. 0.135 = 13.5%.
struct AggregateStats {
  std::map<Language, double> mean_theta_by_language;
  std::map<std::string, double> mean_theta_by_size_bucket;  // only non-empty buckets
  std::map<std::string, double> mean_theta_by_model;        // averaged over languages
  double mean_abs_language_shift = 0.0;
  std::optional<double> release_effect;  // mean gain of newer over older across pairs
  std::optional<double> origin_gap;      // pair.first - pair.second
  std::string median_model;              // by per-model mean magnitude
};

/// Derives every aggregate the report shows from the theta table and the
/// model registry (size buckets, matched release pairs, origin pair).
inline AggregateStats aggregate_report(const ThetaTable& table, const ModelRegistry& registry) {
  if (table.models.empty()) fail(Errc::empty_input, "theta table has no models");
  for (const auto& model : table.models) {
    registry.require(model);
    for (Language lang : kLanguages) {
      if (!table.contains(model, lang)) {
        fail(Errc::incomplete_theta_table,
             model + " lacks a " + std::string(to_string(lang)) + " theta score");
      }
    }
  }

  AggregateStats stats;
  const double count = static_cast<double>(table.models.size());
  for (Language lang : kLanguages) {
    double sum = 0.0;
    for (const auto& model : table.models) {
      sum += std::abs(table.at(model, lang).value);
    }
    stats.mean_theta_by_language[lang] = sum / count;
  }

  for (const auto& model : table.models) {
    const double de = std::abs(table.at(model, Language::de).value);
    const double en = std::abs(table.at(model, Language::en).value);
    stats.mean_theta_by_model[model] = (de + en) / 2.0;
    stats.mean_abs_language_shift += std::abs(en - de);
  }
  stats.mean_abs_language_shift /= count;

  std::map<std::string, std::pair<double, int>> buckets;
  for (const auto& model : table.models) {
    const ModelCard& card = registry.require(model);
    auto& [sum, n] = buckets[size_bucket(card.params_billions)];
    sum += stats.mean_theta_by_model[model];
    ++n;
  }
  for (const auto& [bucket, acc] : buckets) {
    stats.mean_theta_by_size_bucket[bucket] = acc.first / static_cast<double>(acc.second);
  }

  const MatchedPairs& pairs = registry.pairs();
  if (!pairs.release_pairs.empty()) {
    double gain = 0.0;
    int used = 0;
    for (const auto& [older, newer] : pairs.release_pairs) {
      if (!stats.mean_theta_by_model.count(older) || !stats.mean_theta_by_model.count(newer)) continue;
      gain += stats.mean_theta_by_model[newer] - stats.mean_theta_by_model[older];
      ++used;
    }
    if (used > 0) stats.release_effect = gain / static_cast<double>(used);
  }
  if (pairs.origin_pair && stats.mean_theta_by_model.count(pairs.origin_pair->first) &&
      stats.mean_theta_by_model.count(pairs.origin_pair->second)) {
    stats.origin_gap = stats.mean_theta_by_model[pairs.origin_pair->first] -
                       stats.mean_theta_by_model[pairs.origin_pair->second];
  }

  // Median by mean magnitude; for an even count the lower middle is reported.
  std::vector<std::string> order = table.models;
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double ma = stats.mean_theta_by_model.at(a);
    const double mb = stats.mean_theta_by_model.at(b);
    return ma != mb ? ma < mb : a < b;
  });
  stats.median_model = order[(order.size() - 1) / 2];
  return stats;
}

/// Five-number summary plus 1.5*IQR outliers over one distribution.
/// Quartiles interpolate linearly between order statistics.
struct BoxSummary {
  double mean = 0.0;
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double whisker_low = 0.0;
  double whisker_high = 0.0;
  std::vector<double> outliers;
};

inline BoxSummary box_summary(std::vector<double> values) {
  if (values.empty()) fail(Errc::empty_input, "box summary of empty distribution");
  std::sort(values.begin(), values.end());
  const size_t n = values.size();
  auto quantile = [&](double p) {
    const double h = static_cast<double>(n - 1) * p;
    const size_t i = static_cast<size_t>(h);
    if (i + 1 >= n) return values[n - 1];
    return values[i] + (h - static_cast<double>(i)) * (values[i + 1] - values[i]);
  };
  BoxSummary box;
  box.min = values.front();
  box.max = values.back();
  box.q1 = quantile(0.25);
  box.median = quantile(0.5);
  box.q3 = quantile(0.75);
  for (double v : values) box.mean += v;
  box.mean /= static_cast<double>(n);
  const double iqr = box.q3 - box.q1;
  const double lo = box.q1 - 1.5 * iqr;
  const double hi = box.q3 + 1.5 * iqr;
  box.whisker_low = box.max;
  box.whisker_high = box.min;
  for (double v : values) {
    if (v < lo || v > hi) {
      box.outliers.push_back(v);
    } else {
      box.whisker_low = std::min(box.whisker_low, v);
      box.whisker_high = std::max(box.whisker_high, v);
    }
  }
  return box;
}

/// Per-party alignment distributions over the model dimension. Values are
/// percent; means come from the exact rationals.
struct PartyStats {
  std::vector<std::string> parties;
  std::map<std::pair<std::string, Language>, BoxSummary> entries;

  const BoxSummary& at(const std::string& party, Language lang) const {
    auto it = entries.find({party, lang});
    if (it == entries.end()) {
      fail(Errc::empty_matrix, "no stats for (" + party + ", " + std::string(to_string(lang)) + ")");
    }
    return it->second;
  }
};

inline PartyStats party_alignment_stats(const AlignmentMatrix& matrix) {
  if (matrix.empty()) fail(Errc::empty_matrix, "alignment matrix is empty");
  PartyStats stats;
  stats.parties = matrix.parties();
  for (const auto& party : matrix.parties()) {
    for (Language lang : kLanguages) {
      std::vector<double> values;
      long long numerator_sum = 0;
      int denominator = 0;
      for (const auto& model : matrix.models()) {
        if (!matrix.contains(model, party, lang)) continue;
        const auto& s = matrix.at(model, party, lang);
        values.push_back(s.percent());
        numerator_sum += s.numerator();
        denominator = s.denominator();
      }
      if (values.empty()) continue;
      const double count = static_cast<double>(values.size());
      BoxSummary box = box_summary(std::move(values));
      box.mean = 100.0 * static_cast<double>(numerator_sum) /
                 (static_cast<double>(denominator) * count);
      stats.entries[{party, lang}] = std::move(box);
    }
  }
  return stats;
}

/// Per-model mean absolute alignment change across parties when switching
/// from German to English, plus the signed per-party deltas (EN - DE).
/// Values are percent.
struct LanguageChangeReport {
  std::map<std::string, double> mean_abs_change;                  // per model
  std::map<std::pair<std::string, std::string>, double> deltas;   // (model, party)
};

inline LanguageChangeReport language_change_report(const AlignmentMatrix& matrix) {
  if (matrix.empty()) fail(Errc::empty_matrix, "alignment matrix is empty");
  LanguageChangeReport report;
  for (const auto& model : matrix.models()) {
    long long abs_sum = 0;
    int denominator = 0;
    int count = 0;
    for (const auto& party : matrix.parties()) {
      const bool has_de = matrix.contains(model, party, Language::de);
      const bool has_en = matrix.contains(model, party, Language::en);
      if (!has_de || !has_en) {
        fail(Errc::missing_language, "(" + model + ", " + party + ") lacks " +
                                         (has_de ? "an English" : "a German") + " alignment");
      }
      const auto& de = matrix.at(model, party, Language::de);
      const auto& en = matrix.at(model, party, Language::en);
      const int diff = en.numerator() - de.numerator();
      denominator = de.denominator();
      abs_sum += diff < 0 ? -diff : diff;
      ++count;
      report.deltas[{model, party}] = 100.0 * static_cast<double>(diff) / denominator;
    }
    report.mean_abs_change[model] =
        100.0 * static_cast<double>(abs_sum) / (static_cast<double>(denominator) * count);
  }
  return report;
}

}  // namespace wahlmeter
