#pragma once

#include <array>
#include <cmath>
#include <cstdio>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/scoring.hpp"

namespace wahlmeter {

inline constexpr std::array<double, 5> kSpectrumPositions{-1.0, -0.5, 0.0, 0.5, 1.0};

/// Normalized Bundestag vote shares in fixed seat order
/// (Die Linke, SPD, GRÜNE, CDU/CSU, AfD).
struct SharesVector {
  std::array<double, 5> shares{};

  double share(int seat_order) const { return shares[static_cast<size_t>(seat_order - 1)]; }

  double sum() const {
    double s = 0.0;
    for (double x : shares) s += x;
    return s;
  }

  bool operator==(const SharesVector&) const = default;
};

inline SharesVector make_shares(const std::array<double, 5>& weights) {
  double total = 0.0;
  for (double w : weights) {
    if (w < 0.0) fail(Errc::value_out_of_range, "negative share weight");
    total += w;
  }
  if (total == 0.0) fail(Errc::all_zero_alignments, "all share weights are zero");
  SharesVector out;
  for (size_t i = 0; i < 5; ++i) out.shares[i] = weights[i] / total;
  return out;
}

/// Relative alignment with the five parliament parties; everything else is
/// ignored. share_i = a_i / sum_j a_j.
inline SharesVector bundestag_shares(const std::map<std::string, AlignmentScore>& alignments,
                                     const PartyRegister& reg) {
  std::array<double, 5> weights{};
  for (const auto& seat : kBundestagSeating) {
    const std::string key{seat.key};
    if (reg.find(key) == nullptr || !reg.find(key)->in_bundestag) {
      fail(Errc::missing_bundestag_party, key + " not flagged in_bundestag in the register");
    }
    auto it = alignments.find(key);
    if (it == alignments.end()) {
      fail(Errc::missing_bundestag_party, "no alignment for " + key);
    }
    weights[static_cast<size_t>(seat.order - 1)] = it->second.value();
  }
  return make_shares(weights);
}

inline SharesVector bundestag_shares(const AlignmentMatrix& matrix, const std::string& model,
                                     Language lang, const PartyRegister& reg) {
  std::map<std::string, AlignmentScore> alignments;
  for (const auto& seat : kBundestagSeating) {
    const std::string key{seat.key};
    if (matrix.contains(model, key, lang)) alignments[key] = matrix.at(model, key, lang);
  }
  return bundestag_shares(alignments, reg);
}

struct SeatAllocation {
  std::array<int, 5> seats{};  // fixed seat order
  int total = 0;

  int seat_count(int seat_order) const { return seats[static_cast<size_t>(seat_order - 1)]; }

  bool operator==(const SeatAllocation&) const = default;
};

/// Sainte-Laguë/Schepers highest-quotient apportionment (odd divisors
/// 1, 3, 5, ...). Quotient ties go to the larger share, then to the lower
/// seat order, so the result is deterministic.
inline SeatAllocation allocate_seats(const SharesVector& shares, int total = 630) {
  if (total < 1) fail(Errc::value_out_of_range, "seat total must be >= 1");
  SeatAllocation alloc;
  alloc.total = total;
  for (int step = 0; step < total; ++step) {
    int best = -1;
    double best_quotient = -1.0;
    for (int i = 0; i < 5; ++i) {
      const double quotient =
          shares.shares[static_cast<size_t>(i)] / static_cast<double>(2 * alloc.seats[static_cast<size_t>(i)] + 1);
      const bool wins =
          quotient > best_quotient ||
          (quotient == best_quotient && best >= 0 &&
           shares.shares[static_cast<size_t>(i)] > shares.shares[static_cast<size_t>(best)]);
      if (best < 0 || wins) {
        best = i;
        best_quotient = quotient;
      }
    }
    ++alloc.seats[static_cast<size_t>(best)];
  }
  return alloc;
}

/// Signed left/right position, negative = left.
struct ThetaScore {
  double value = 0.0;  // in [-1, 1]

  double percent_magnitude() const { return std::abs(value) * 100.0; }

  std::string_view direction() const {
    if (value < 0.0) return "left";
    if (value > 0.0) return "right";
    return "center";
  }

  bool operator==(const ThetaScore&) const = default;
};

/// theta = sum_i p_i * share_i; the continuous form the seat-based score
/// converges to as quantization vanishes.
inline ThetaScore theta_from_shares(const SharesVector& shares) {
  if (std::abs(shares.sum() - 1.0) > 1e-9) {
    fail(Errc::value_out_of_range, "shares must sum to 1");
  }
  double theta = 0.0;
  for (size_t i = 0; i < 5; ++i) theta += kSpectrumPositions[i] * shares.shares[i];
  return ThetaScore{theta};
}

/// theta = (sum_i p_i * n_i) / (sum_i n_i) over an explicit seat allocation.
inline ThetaScore theta_from_seats(const SeatAllocation& alloc) {
  long long total = 0;
  double weighted = 0.0;
  for (size_t i = 0; i < 5; ++i) {
    if (alloc.seats[i] < 0) fail(Errc::value_out_of_range, "negative seat count");
    total += alloc.seats[i];
    weighted += kSpectrumPositions[i] * static_cast<double>(alloc.seats[i]);
  }
  if (total == 0) fail(Errc::zero_total_seats, "seat allocation is empty");
  return ThetaScore{weighted / static_cast<double>(total)};
}

/// Per-(model, language) theta scores in shares form.
struct ThetaTable {
  std::vector<std::string> models;  // first-seen order
  std::map<std::pair<std::string, Language>, ThetaScore> entries;

  const ThetaScore& at(const std::string& model, Language lang) const {
    auto it = entries.find({model, lang});
    if (it == entries.end()) {
      fail(Errc::incomplete_theta_table,
           "no theta for (" + model + ", " + std::string(to_string(lang)) + ")");
    }
    return it->second;
  }

  bool contains(const std::string& model, Language lang) const {
    return entries.count({model, lang}) != 0;
  }

  void set(const std::string& model, Language lang, ThetaScore score) {
    if (entries.emplace(std::make_pair(model, lang), score).second) {
      if (std::find(models.begin(), models.end(), model) == models.end()) models.push_back(model);
    } else {
      entries[{model, lang}] = score;
    }
  }
};

inline ThetaTable theta_table_from_alignments(const AlignmentMatrix& matrix,
                                              const PartyRegister& reg) {
  ThetaTable table;
  for (const auto& model : matrix.models()) {
    for (Language lang : kLanguages) {
      if (!matrix.has_language(model, lang)) continue;
      table.set(model, lang, theta_from_shares(bundestag_shares(matrix, model, lang, reg)));
    }
  }
  return table;
}

}  // namespace wahlmeter
