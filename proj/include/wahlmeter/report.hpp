#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "wahlmeter/analysis.hpp"
#include "wahlmeter/csv.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/figures.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

namespace wahlmeter {

namespace detail {

inline std::string fixed(double v, int digits = 2) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

inline std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  return out;
}

}  // namespace detail

inline void write_theta_csv(const std::string& path, const ThetaTable& table) {
  auto out = detail::open_out(path);
  out << "model,language,theta_signed,theta_percent,direction\n";
  for (const auto& model : table.models) {
    for (Language lang : kLanguages) {
      if (!table.contains(model, lang)) continue;
      const ThetaScore& t = table.at(model, lang);
      out << csv::escape(model) << ',' << to_string(lang) << ',' << detail::fixed(t.value, 9)
          << ',' << detail::fixed(t.percent_magnitude(), 2) << ',' << t.direction() << '\n';
    }
  }
}

inline void write_seats_csv(const std::string& path, const SeatAllocation& alloc,
                            const std::array<std::string, 5>& labels) {
  auto out = detail::open_out(path);
  out << "party,seats,total\n";
  for (size_t i = 0; i < 5; ++i) {
    out << csv::escape(labels[i]) << ',' << alloc.seats[i] << ',' << alloc.total << '\n';
  }
}

inline SeatAllocation read_seats_csv(const std::string& path) {
  auto rows = csv::read_file(path);
  if (rows.empty() || rows.front().size() < 2 || rows.front()[0] != "party") {
    fail(Errc::parse_error, "seats CSV must start with header party,seats[,total]");
  }
  SeatAllocation alloc;
  for (size_t i = 1; i < rows.size(); ++i) {
    const auto& row = rows[i];
    if (row.size() < 2) fail(Errc::parse_error, path + ": row " + std::to_string(i) + " malformed");
    const BundestagSeat* seat = bundestag_seat_for(row[0]);
    if (seat == nullptr) fail(Errc::parse_error, path + ": unknown Bundestag party " + row[0]);
    alloc.seats[static_cast<size_t>(seat->order - 1)] = std::stoi(row[1]);
  }
  for (int s : alloc.seats) alloc.total += s;
  return alloc;
}

inline void write_aggregates_csv(const std::string& path, const AggregateStats& stats) {
  auto out = detail::open_out(path);
  out << "metric,value_percent\n";
  out << "mean_theta_de," << detail::fixed(stats.mean_theta_by_language.at(Language::de) * 100, 4) << '\n';
  out << "mean_theta_en," << detail::fixed(stats.mean_theta_by_language.at(Language::en) * 100, 4) << '\n';
  for (const auto& [bucket, value] : stats.mean_theta_by_size_bucket) {
    out << "mean_theta_bucket_" << bucket << ',' << detail::fixed(value * 100, 4) << '\n';
  }
  out << "mean_abs_language_shift," << detail::fixed(stats.mean_abs_language_shift * 100, 4) << '\n';
  if (stats.release_effect) {
    out << "release_effect," << detail::fixed(*stats.release_effect * 100, 4) << '\n';
  }
  if (stats.origin_gap) {
    out << "origin_gap," << detail::fixed(*stats.origin_gap * 100, 4) << '\n';
  }
  out << "median_model," << csv::escape(stats.median_model) << '\n';
  for (const auto& [model, value] : stats.mean_theta_by_model) {
    out << "mean_theta_model_" << csv::escape(model) << ',' << detail::fixed(value * 100, 4) << '\n';
  }
}

inline void write_party_stats_csv(const std::string& path, const PartyStats& stats) {
  auto out = detail::open_out(path);
  out << "party,language,mean,min,q1,median,q3,max,outliers\n";
  for (const auto& party : stats.parties) {
    for (Language lang : kLanguages) {
      auto it = stats.entries.find({party, lang});
      if (it == stats.entries.end()) continue;
      const BoxSummary& box = it->second;
      std::string outliers;
      for (double v : box.outliers) {
        if (!outliers.empty()) outliers += ';';
        outliers += detail::fixed(v, 2);
      }
      out << csv::escape(party) << ',' << to_string(lang) << ',' << detail::fixed(box.mean, 4)
          << ',' << detail::fixed(box.min, 2) << ',' << detail::fixed(box.q1, 2) << ','
          << detail::fixed(box.median, 2) << ',' << detail::fixed(box.q3, 2) << ','
          << detail::fixed(box.max, 2) << ',' << csv::escape(outliers) << '\n';
    }
  }
}

inline void write_language_change_csv(const std::string& path, const LanguageChangeReport& report) {
  auto out = detail::open_out(path);
  out << "model,mean_abs_change\n";
  for (const auto& [model, mean] : report.mean_abs_change) {
    out << csv::escape(model) << ',' << detail::fixed(mean, 4) << '\n';
  }
}

inline void write_language_change_deltas_csv(const std::string& path,
                                             const LanguageChangeReport& report) {
  auto out = detail::open_out(path);
  out << "model,party,delta_en_minus_de\n";
  for (const auto& [key, delta] : report.deltas) {
    out << csv::escape(key.first) << ',' << csv::escape(key.second) << ','
        << detail::fixed(delta, 4) << '\n';
  }
}

/// Percent table in the layout of the published matrices: one block per
/// language, models as rows, parties as columns.
inline void write_alignment_percent_markdown(const std::string& path, const AlignmentMatrix& matrix) {
  auto out = detail::open_out(path);
  out << "# Alignment matrix (percent)\n";
  for (Language lang : kLanguages) {
    out << "\n## " << (lang == Language::de ? "German" : "English") << "\n\n";
    out << "| model |";
    for (const auto& party : matrix.parties()) out << ' ' << party << " |";
    out << "\n|---|";
    for (size_t i = 0; i < matrix.parties().size(); ++i) out << "---|";
    out << '\n';
    for (const auto& model : matrix.models()) {
      if (!matrix.has_language(model, lang)) continue;
      out << "| " << model << " |";
      for (const auto& party : matrix.parties()) {
        out << ' ' << render_percent(matrix.at(model, party, lang)) << " |";
      }
      out << '\n';
    }
  }
}

struct ReportInputs {
  const AlignmentMatrix* matrix = nullptr;
  const ThetaTable* theta = nullptr;
  const AggregateStats* aggregates = nullptr;
  const PartyStats* party_stats = nullptr;
  const LanguageChangeReport* language_change = nullptr;
  std::map<Language, SeatAllocation> mean_allocations;
  std::vector<FigureFile> figures;
  int total_seats = 630;
};

inline void write_markdown_report(const std::string& path, const ReportInputs& in) {
  auto out = detail::open_out(path);
  out << "# Evaluation report\n";

  if (in.theta != nullptr) {
    out << "\n## Left/right position (theta)\n\n";
    out << "| model | German | English |\n|---|---|---|\n";
    for (const auto& model : in.theta->models) {
      out << "| " << model << " |";
      for (Language lang : kLanguages) {
        if (in.theta->contains(model, lang)) {
          const ThetaScore& t = in.theta->at(model, lang);
          out << ' ' << detail::fixed(t.percent_magnitude(), 2) << "% " << t.direction() << " |";
        } else {
          out << " - |";
        }
      }
      out << '\n';
    }
  }

  if (in.aggregates != nullptr) {
    const AggregateStats& a = *in.aggregates;
    out << "\n## Aggregates\n\n| metric | value |\n|---|---|\n";
    out << "| mean theta magnitude, German | "
        << detail::fixed(a.mean_theta_by_language.at(Language::de) * 100, 2) << "% |\n";
    out << "| mean theta magnitude, English | "
        << detail::fixed(a.mean_theta_by_language.at(Language::en) * 100, 2) << "% |\n";
    for (const auto& [bucket, value] : a.mean_theta_by_size_bucket) {
      out << "| mean theta magnitude, " << bucket << " models | " << detail::fixed(value * 100, 2)
          << "% |\n";
    }
    out << "| mean absolute language shift | " << detail::fixed(a.mean_abs_language_shift * 100, 2)
        << " pp |\n";
    if (a.release_effect) {
      out << "| release effect (newer minus older) | " << detail::fixed(*a.release_effect * 100, 2)
          << " pp |\n";
    }
    if (a.origin_gap) {
      out << "| origin gap | " << detail::fixed(*a.origin_gap * 100, 2) << " pp |\n";
    }
    out << "| median model by mean theta magnitude | " << a.median_model << " |\n";
  }

  if (!in.mean_allocations.empty()) {
    out << "\n## Mean-alignment seat allocations (" << in.total_seats << " seats)\n\n";
    out << "| party |";
    for (const auto& [lang, alloc] : in.mean_allocations) {
      out << ' ' << (lang == Language::de ? "German" : "English") << " |";
    }
    out << "\n|---|";
    for (size_t i = 0; i < in.mean_allocations.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& seat : kBundestagSeating) {
      out << "| " << seat.key << " |";
      for (const auto& [lang, alloc] : in.mean_allocations) {
        out << ' ' << alloc.seat_count(seat.order) << " |";
      }
      out << '\n';
    }
  }

  if (in.party_stats != nullptr) {
    out << "\n## Party alignment distributions (percent over models)\n\n";
    out << "| party | language | mean | min | median | max | outliers |\n|---|---|---|---|---|---|---|\n";
    for (const auto& party : in.party_stats->parties) {
      for (Language lang : kLanguages) {
        auto it = in.party_stats->entries.find({party, lang});
        if (it == in.party_stats->entries.end()) continue;
        const BoxSummary& box = it->second;
        out << "| " << party << " | " << to_string(lang) << " | " << detail::fixed(box.mean, 2)
            << " | " << detail::fixed(box.min, 2) << " | " << detail::fixed(box.median, 2) << " | "
            << detail::fixed(box.max, 2) << " | " << box.outliers.size() << " |\n";
      }
    }
  }

  if (in.language_change != nullptr) {
    out << "\n## Language change (English minus German)\n\n";
    out << "| model | mean absolute change |\n|---|---|\n";
    for (const auto& [model, mean] : in.language_change->mean_abs_change) {
      out << "| " << model << " | " << detail::fixed(mean, 2) << " pp |\n";
    }
  }

  if (!in.figures.empty()) {
    out << "\n## Figures\n\n| file | canvas |\n|---|---|\n";
    for (const auto& fig : in.figures) {
      out << "| " << fig.name << " | " << fig.width << "x" << fig.height << " |\n";
    }
  }
}

}  // namespace wahlmeter
