#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wahlmeter/analysis.hpp"
#include "wahlmeter/corpus.hpp"
#include "wahlmeter/error.hpp"
#include "wahlmeter/scoring.hpp"
#include "wahlmeter/spectrum.hpp"

namespace wahlmeter {

// Answer colors from the heat-map legend; the darker full-swing shades are
// this project's constants.
inline constexpr std::string_view kColorAgree = "#27b376";
inline constexpr std::string_view kColorNeutral = "#f9a73e";
inline constexpr std::string_view kColorDisagree = "#bf212f";
inline constexpr std::string_view kColorShiftPositiveHalf = "#27b376";
inline constexpr std::string_view kColorShiftPositiveFull = "#14764e";
inline constexpr std::string_view kColorShiftNegativeHalf = "#bf212f";
inline constexpr std::string_view kColorShiftNegativeFull = "#801620";
inline constexpr std::string_view kColorShiftNone = "#f0f0f0";
inline constexpr std::string_view kColorThetaGerman = "#bf212f";
inline constexpr std::string_view kColorThetaEnglish = "#2b6cb0";

inline std::string_view party_color(std::string_view key) {
  static constexpr std::array<std::pair<std::string_view, std::string_view>, 12> kColors{{
      {"AfD", "#009ee0"},
      {"CDU/CSU", "#151518"},
      {"Die Linke", "#be3075"},
      {"Die PARTEI", "#b5152b"},
      {"FDP", "#ffed00"},
      {"FREIE WÄHLER", "#f7a800"},
      {"GRÜNE", "#46962b"},
      {"PIRATEN", "#ff820a"},
      {"SPD", "#e3000f"},
      {"Tierschutzpartei", "#006d73"},
      {"Volt", "#562883"},
      {"ÖDP", "#e6007e"},
  }};
  for (const auto& [k, color] : kColors) {
    if (k == key) return color;
  }
  return "#888888";
}

namespace svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

inline std::string escape_text(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

class Canvas {
 public:
  Canvas(int width, int height) : width_(width), height_(height) {
    body_ << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
          << height << "\" viewBox=\"0 0 " << width << ' ' << height << "\">\n";
    body_ << "<rect x=\"0\" y=\"0\" width=\"" << width << "\" height=\"" << height
          << "\" fill=\"#ffffff\"/>\n";
  }

  void rect(double x, double y, double w, double h, std::string_view fill,
            std::string_view stroke = "") {
    body_ << "<rect x=\"" << num(x) << "\" y=\"" << num(y) << "\" width=\"" << num(w)
          << "\" height=\"" << num(h) << "\" fill=\"" << fill << '"';
    if (!stroke.empty()) body_ << " stroke=\"" << stroke << "\" stroke-width=\"0.5\"";
    body_ << "/>\n";
  }

  void circle(double cx, double cy, double r, std::string_view fill,
              std::string_view stroke = "") {
    body_ << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(cy) << "\" r=\"" << num(r)
          << "\" fill=\"" << fill << '"';
    if (!stroke.empty()) body_ << " stroke=\"" << stroke << "\" stroke-width=\"1\"";
    body_ << "/>\n";
  }

  void line(double x1, double y1, double x2, double y2, std::string_view stroke,
            double width = 1.0) {
    body_ << "<line x1=\"" << num(x1) << "\" y1=\"" << num(y1) << "\" x2=\"" << num(x2)
          << "\" y2=\"" << num(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\""
          << num(width) << "\"/>\n";
  }

  void text(double x, double y, std::string_view content, int size = 11,
            std::string_view anchor = "start", std::string_view fill = "#222222") {
    body_ << "<text x=\"" << num(x) << "\" y=\"" << num(y) << "\" font-family=\"sans-serif\""
          << " font-size=\"" << size << "\" text-anchor=\"" << anchor << "\" fill=\"" << fill
          << "\">" << escape_text(content) << "</text>\n";
  }

  std::string finish() {
    body_ << "</svg>\n";
    return body_.str();
  }

  int width() const { return width_; }
  int height() const { return height_; }

 private:
  int width_;
  int height_;
  std::ostringstream body_;
};

}  // namespace svg

inline std::string_view answer_color(ResponseValue v) {
  switch (v) {
    case ResponseValue::agree: return kColorAgree;
    case ResponseValue::neutral: return kColorNeutral;
    case ResponseValue::disagree: return kColorDisagree;
  }
  return kColorShiftNone;
}

inline std::string_view shift_color(ShiftClass c) {
  switch (c) {
    case ShiftClass::none: return kColorShiftNone;
    case ShiftClass::positive_half: return kColorShiftPositiveHalf;
    case ShiftClass::positive_full: return kColorShiftPositiveFull;
    case ShiftClass::negative_half: return kColorShiftNegativeHalf;
    case ShiftClass::negative_full: return kColorShiftNegativeFull;
  }
  return kColorShiftNone;
}

/// Per-statement answers for every model: one block per language plus the
/// difference block marking where the English answer moved.
inline std::string render_answer_heatmap(const std::vector<ResponseVector>& responses) {
  if (responses.empty()) fail(Errc::incomplete_input, "heat-map needs response vectors");
  const int n = static_cast<int>(responses.front().values.size());
  std::vector<std::string> models;
  std::map<std::pair<std::string, Language>, const ResponseVector*> by_key;
  for (const auto& vec : responses) {
    if (static_cast<int>(vec.values.size()) != n) {
      fail(Errc::length_mismatch, "response vectors cover different statement sets");
    }
    if (std::find(models.begin(), models.end(), vec.model_id) == models.end()) {
      models.push_back(vec.model_id);
    }
    by_key[{vec.model_id, vec.language}] = &vec;
  }
  for (const auto& model : models) {
    if (!by_key.count({model, Language::de}) || !by_key.count({model, Language::en})) {
      fail(Errc::incomplete_input, model + " needs answers in both languages for the heat-map");
    }
  }

  const int cell = 18, gap = 2, left = 150, top = 34;
  const int rows = static_cast<int>(models.size());
  const int block_h = 22 + rows * (cell + gap) + 14;
  const int width = left + n * (cell + gap) + 20;
  svg::Canvas canvas(width, top + 3 * block_h);

  const std::array<std::string, 3> titles{"English", "German", "Differences"};
  for (int c = 0; c < n; ++c) {
    if ((c + 1) % 5 == 0 || c == 0) {
      canvas.text(left + c * (cell + gap) + cell / 2.0, top - 8, std::to_string(c + 1), 9, "middle");
    }
  }
  for (int block = 0; block < 3; ++block) {
    const int block_top = top + block * block_h;
    canvas.text(left - 140, block_top + 12, titles[static_cast<size_t>(block)], 13);
    for (int r = 0; r < rows; ++r) {
      const std::string& model = models[static_cast<size_t>(r)];
      const double y = block_top + 22 + r * (cell + gap);
      canvas.text(left - 10, y + cell * 0.72, model, 10, "end");
      const ResponseVector* en = by_key.at({model, Language::en});
      const ResponseVector* de = by_key.at({model, Language::de});
      for (int c = 0; c < n; ++c) {
        const double x = left + c * (cell + gap);
        std::string_view fill;
        if (block == 0) {
          fill = answer_color(en->values[static_cast<size_t>(c)]);
        } else if (block == 1) {
          fill = answer_color(de->values[static_cast<size_t>(c)]);
        } else {
          fill = shift_color(shift_classify(de->values[static_cast<size_t>(c)],
                                            en->values[static_cast<size_t>(c)]));
        }
        canvas.rect(x, y, cell, cell, fill, "#d0d0d0");
      }
    }
  }
  return canvas.finish();
}

/// Semicircular parliament diagram. Seats sit on concentric arcs and are
/// filled party by party in the fixed left-to-right seat order, so each party
/// owns a contiguous wedge.
inline std::string render_hemicycle(const SeatAllocation& alloc,
                                    const std::array<std::string, 5>& labels) {
  if (alloc.total < 1) fail(Errc::incomplete_input, "hemicycle needs a non-empty allocation");
  int assigned = 0;
  for (int s : alloc.seats) assigned += s;
  if (assigned != alloc.total) {
    fail(Errc::incomplete_input, "seat counts must sum to the allocation total");
  }

  const int rows = std::clamp(static_cast<int>(std::lround(std::sqrt(alloc.total / 5.0))), 1, 16);
  const double inner = 60.0, ring = 13.0, seat_r = rows > 6 ? 4.0 : 6.0;
  std::vector<double> radii;
  double radius_sum = 0.0;
  for (int i = 0; i < rows; ++i) {
    radii.push_back(inner + ring * i);
    radius_sum += radii.back();
  }
  // Seats per row proportional to its circumference, drift fixed by largest
  // remainder so the row counts sum to the exact total.
  std::vector<int> row_seats(static_cast<size_t>(rows));
  std::vector<std::pair<double, int>> remainders;
  int used = 0;
  for (int i = 0; i < rows; ++i) {
    const double quota = alloc.total * radii[static_cast<size_t>(i)] / radius_sum;
    row_seats[static_cast<size_t>(i)] = static_cast<int>(quota);
    used += row_seats[static_cast<size_t>(i)];
    remainders.push_back({quota - row_seats[static_cast<size_t>(i)], i});
  }
  std::sort(remainders.begin(), remainders.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second < b.second;
  });
  for (int i = 0; i < alloc.total - used; ++i) {
    ++row_seats[static_cast<size_t>(remainders[static_cast<size_t>(i)].second)];
  }

  struct Seat {
    double angle;
    int row;
  };
  std::vector<Seat> seats;
  for (int i = 0; i < rows; ++i) {
    const int count = row_seats[static_cast<size_t>(i)];
    for (int j = 0; j < count; ++j) {
      const double angle = count == 1 ? std::numbers::pi / 2.0
                                      : std::numbers::pi * (1.0 - static_cast<double>(j) /
                                                                      static_cast<double>(count - 1));
      seats.push_back({angle, i});
    }
  }
  std::sort(seats.begin(), seats.end(), [](const Seat& a, const Seat& b) {
    return a.angle != b.angle ? a.angle > b.angle : a.row < b.row;
  });

  const double outer = radii.back() + seat_r;
  const double cx = outer + 20.0, cy = outer + 24.0;
  const int width = static_cast<int>(2 * (outer + 20.0));
  const int height = static_cast<int>(cy + 70.0);
  svg::Canvas canvas(width, height);

  size_t seat_index = 0;
  for (size_t party = 0; party < 5; ++party) {
    for (int k = 0; k < alloc.seats[party]; ++k, ++seat_index) {
      const Seat& seat = seats[seat_index];
      const double r = radii[static_cast<size_t>(seat.row)];
      const double x = cx + r * std::cos(seat.angle);
      const double y = cy - r * std::sin(seat.angle);
      canvas.circle(x, y, seat_r, party_color(labels[party]));
    }
  }

  double lx = 16.0;
  const double ly = cy + 26.0;
  for (size_t party = 0; party < 5; ++party) {
    canvas.rect(lx, ly, 10, 10, party_color(labels[party]));
    const std::string entry = labels[party] + " (" + std::to_string(alloc.seats[party]) + ")";
    canvas.text(lx + 14, ly + 9, entry, 11);
    lx += 14.0 + 7.0 * static_cast<double>(entry.size()) + 16.0;
  }
  canvas.text(16.0, ly + 30.0, "total seats: " + std::to_string(alloc.total), 11);
  return canvas.finish();
}

/// Absolute theta per model and language, models sorted by descending mean
/// magnitude.
inline std::string render_theta_bars(const ThetaTable& table) {
  if (table.models.empty()) fail(Errc::incomplete_input, "theta bars need a populated table");
  for (const auto& model : table.models) {
    for (Language lang : kLanguages) {
      if (!table.contains(model, lang)) {
        fail(Errc::incomplete_input, model + " lacks a " + std::string(to_string(lang)) + " theta");
      }
    }
  }
  std::vector<std::string> order = table.models;
  auto mean_mag = [&](const std::string& m) {
    return (table.at(m, Language::de).percent_magnitude() +
            table.at(m, Language::en).percent_magnitude()) /
           2.0;
  };
  std::sort(order.begin(), order.end(), [&](const std::string& a, const std::string& b) {
    const double ma = mean_mag(a), mb = mean_mag(b);
    return ma != mb ? ma > mb : a < b;
  });

  double max_mag = 0.0;
  for (const auto& model : order) {
    max_mag = std::max({max_mag, table.at(model, Language::de).percent_magnitude(),
                        table.at(model, Language::en).percent_magnitude()});
  }
  const double axis_max = std::max(5.0, std::ceil(max_mag / 5.0) * 5.0);

  const int left = 60, bottom = 70, top = 24;
  const int plot_h = 240;
  const int group_w = 74;
  const int width = left + group_w * static_cast<int>(order.size()) + 30;
  const int height = top + plot_h + bottom;
  svg::Canvas canvas(width, height);

  for (double tick = 0.0; tick <= axis_max + 1e-9; tick += 5.0) {
    const double y = top + plot_h * (1.0 - tick / axis_max);
    canvas.line(left - 4, y, width - 20, y, "#dddddd");
    canvas.text(left - 8, y + 4, svg::num(tick), 10, "end");
  }
  canvas.line(left, top, left, top + plot_h, "#222222");
  canvas.line(left, top + plot_h, width - 20, top + plot_h, "#222222");
  canvas.text(14, top - 8, "absolute theta score (%)", 11);

  const double bar_w = 24.0;
  for (size_t i = 0; i < order.size(); ++i) {
    const std::string& model = order[i];
    const double x0 = left + group_w * static_cast<double>(i) + 10.0;
    const double de = table.at(model, Language::de).percent_magnitude();
    const double en = table.at(model, Language::en).percent_magnitude();
    const double de_h = plot_h * de / axis_max;
    const double en_h = plot_h * en / axis_max;
    canvas.rect(x0, top + plot_h - de_h, bar_w, de_h, kColorThetaGerman);
    canvas.rect(x0 + bar_w + 4.0, top + plot_h - en_h, bar_w, en_h, kColorThetaEnglish);
    char label[16];
    std::snprintf(label, sizeof label, "%.1f", de);
    canvas.text(x0 + bar_w / 2.0, top + plot_h - de_h - 4.0, label, 9, "middle");
    std::snprintf(label, sizeof label, "%.1f", en);
    canvas.text(x0 + 1.5 * bar_w + 4.0, top + plot_h - en_h - 4.0, label, 9, "middle");
    canvas.text(x0 + bar_w + 2.0, top + plot_h + 14.0, model, 9, "middle");
  }
  canvas.rect(left, height - 26, 10, 10, kColorThetaGerman);
  canvas.text(left + 14, height - 17, "German", 10);
  canvas.rect(left + 80, height - 26, 10, 10, kColorThetaEnglish);
  canvas.text(left + 94, height - 17, "English", 10);
  return canvas.finish();
}

/// Grouped per-party alignment bars, one cluster per model plus a trailing
/// cluster with the per-party averages.
inline std::string render_alignment_bars(const AlignmentMatrix& matrix, Language lang) {
  if (matrix.empty()) fail(Errc::incomplete_input, "alignment bars need a populated matrix");
  for (const auto& model : matrix.models()) {
    for (const auto& party : matrix.parties()) {
      if (!matrix.contains(model, party, lang)) {
        fail(Errc::incomplete_input, "(" + model + ", " + party + ") lacks a " +
                                         std::string(to_string(lang)) + " alignment");
      }
    }
  }
  const auto& models = matrix.models();
  const auto& parties = matrix.parties();
  const int bar_w = 8, bar_gap = 2;
  const int cluster_w = static_cast<int>(parties.size()) * (bar_w + bar_gap) + 22;
  const int left = 52, top = 26, plot_h = 260, bottom = 60;
  const int clusters = static_cast<int>(models.size()) + 1;
  const int width = left + clusters * cluster_w + 170;
  const int height = top + plot_h + bottom;
  svg::Canvas canvas(width, height);

  for (int tick = 0; tick <= 100; tick += 20) {
    const double y = top + plot_h * (1.0 - tick / 100.0);
    canvas.line(left - 4, y, left + clusters * cluster_w, y, "#dddddd");
    canvas.text(left - 8, y + 4, std::to_string(tick), 10, "end");
  }
  canvas.line(left, top, left, top + plot_h, "#222222");
  canvas.line(left, top + plot_h, left + clusters * cluster_w, top + plot_h, "#222222");
  canvas.text(10, top - 10, std::string("alignment (%), ") +
                                (lang == Language::de ? "German" : "English") + " statements", 11);

  auto draw_cluster = [&](int index, const std::string& label,
                          const std::vector<double>& values) {
    const double x0 = left + cluster_w * static_cast<double>(index) + 10.0;
    for (size_t p = 0; p < values.size(); ++p) {
      const double h = plot_h * values[p] / 100.0;
      canvas.rect(x0 + static_cast<double>(p) * (bar_w + bar_gap), top + plot_h - h, bar_w, h,
                  party_color(parties[p]));
    }
    canvas.text(x0 + values.size() * (bar_w + bar_gap) / 2.0, top + plot_h + 14.0, label, 9,
                "middle");
  };

  for (size_t m = 0; m < models.size(); ++m) {
    std::vector<double> values;
    for (const auto& party : parties) values.push_back(matrix.at(models[m], party, lang).percent());
    draw_cluster(static_cast<int>(m), models[m], values);
  }
  std::vector<double> averages;
  for (const auto& party : parties) {
    long long num = 0;
    int den = 0;
    for (const auto& model : models) {
      const auto& s = matrix.at(model, party, lang);
      num += s.numerator();
      den = s.denominator();
    }
    averages.push_back(100.0 * static_cast<double>(num) /
                       (static_cast<double>(den) * static_cast<double>(models.size())));
  }
  draw_cluster(static_cast<int>(models.size()), "Average", averages);

  double ly = top + 6.0;
  const double lx = left + clusters * cluster_w + 12.0;
  for (const auto& party : parties) {
    canvas.rect(lx, ly, 10, 10, party_color(party));
    canvas.text(lx + 14, ly + 9, party, 10);
    ly += 18.0;
  }
  return canvas.finish();
}

/// Box-whisker plots of the per-party alignment distributions, German panel
/// left, English panel right, outliers drawn as circles.
inline std::string render_box_whisker(const PartyStats& stats) {
  if (stats.entries.empty()) fail(Errc::incomplete_input, "box plot needs party statistics");
  const int slot = 34, box_w = 18;
  const int left = 52, top = 30, plot_h = 280, bottom = 110;
  const int panel_w = static_cast<int>(stats.parties.size()) * slot + 24;
  const int width = left + 2 * panel_w + 60;
  const int height = top + plot_h + bottom;
  svg::Canvas canvas(width, height);

  for (int tick = 0; tick <= 100; tick += 20) {
    const double y = top + plot_h * (1.0 - tick / 100.0);
    canvas.line(left - 4, y, width - 20, y, "#dddddd");
    canvas.text(left - 8, y + 4, std::to_string(tick), 10, "end");
  }
  canvas.line(left, top, left, top + plot_h, "#222222");
  canvas.line(left, top + plot_h, width - 20, top + plot_h, "#222222");

  const std::array<std::pair<Language, std::string>, 2> panels{{{Language::de, "German"},
                                                                {Language::en, "English"}}};
  for (size_t panel = 0; panel < panels.size(); ++panel) {
    const double panel_x = left + static_cast<double>(panel) * (panel_w + 40);
    canvas.text(panel_x + panel_w / 2.0, top - 10, panels[panel].second, 12, "middle");
    auto y_of = [&](double percent) { return top + plot_h * (1.0 - percent / 100.0); };
    for (size_t p = 0; p < stats.parties.size(); ++p) {
      const auto it = stats.entries.find({stats.parties[p], panels[panel].first});
      if (it == stats.entries.end()) continue;
      const BoxSummary& box = it->second;
      const double cx = panel_x + 16.0 + slot * static_cast<double>(p) + slot / 2.0;
      const std::string_view color = party_color(stats.parties[p]);
      canvas.line(cx, y_of(box.whisker_low), cx, y_of(box.q1), "#555555");
      canvas.line(cx, y_of(box.q3), cx, y_of(box.whisker_high), "#555555");
      canvas.line(cx - 6, y_of(box.whisker_low), cx + 6, y_of(box.whisker_low), "#555555");
      canvas.line(cx - 6, y_of(box.whisker_high), cx + 6, y_of(box.whisker_high), "#555555");
      canvas.rect(cx - box_w / 2.0, y_of(box.q3), box_w, y_of(box.q1) - y_of(box.q3), color,
                  "#333333");
      canvas.line(cx - box_w / 2.0, y_of(box.median), cx + box_w / 2.0, y_of(box.median),
                  "#ffffff", 1.5);
      for (double outlier : box.outliers) {
        canvas.circle(cx, y_of(outlier), 3.0, "none", "#333333");
      }
      canvas.text(cx, top + plot_h + 12.0 + (p % 2) * 12.0, stats.parties[p], 8, "middle");
    }
  }
  return canvas.finish();
}

struct FigureFile {
  std::string name;
  int width = 0;
  int height = 0;
};

inline FigureFile write_svg(const std::string& dir, const std::string& name,
                            const std::string& content) {
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(Errc::io_error, "cannot write " + path);
  out << content;
  FigureFile file;
  file.name = name;
  const size_t wpos = content.find("width=\"");
  const size_t hpos = content.find("height=\"");
  if (wpos != std::string::npos) file.width = std::atoi(content.c_str() + wpos + 7);
  if (hpos != std::string::npos) file.height = std::atoi(content.c_str() + hpos + 8);
  return file;
}

}  // namespace wahlmeter
