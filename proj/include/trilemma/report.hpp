// Copyright 2026 The trilemma-eval Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include "json.hpp"
#include "trilemma/error.hpp"
#include "trilemma/record.hpp"

namespace trilemma {

// ---------------------------------------------------------------------------
// Radar normalization

inline constexpr std::array<const char*, 6> kRadarAxes = {
    "Fidelity", "Diversity", "Sampling Speed", "Utility", "Robustness", "Privacy"};
inline constexpr std::size_t kPrivacyAxis = 5;

/// Raw per-(generator, dataset) values for the six radar axes. Utility and
/// robustness are means over the generator's successful synthetic-bearing
/// cells in that dataset.
struct RadarCell {
  std::string generator_id;
  std::string dataset_id;
  std::array<std::optional<double>, 6> raw;
};

struct RadarRow {
  std::string generator_id;
  std::array<double, 6> values{};
};

enum class RadarOrder {
  /// Min/max taken over every (generator, dataset) cell; each generator's
  /// cross-dataset mean is placed within that range.
  kCellsThenMean,
  /// Min/max taken over the generator means only.
  kMeanThenNormalize,
};

struct RadarResult {
  std::vector<RadarRow> rows;
  std::vector<RadarCell> cells;
  std::vector<std::array<double, 6>> normalized_cells;  ///< parallel to cells; NaN if missing
  std::vector<std::string> warnings;
};

/// Min-max over `range`, applied to `x`. Degenerate range maps to 0.5.
inline double min_max(double x, double lo, double hi) {
  if (!(hi > lo)) return 0.5;
  return std::clamp((x - lo) / (hi - lo), 0.0, 1.0);
}

inline std::vector<double> normalize_column(const std::vector<double>& v) {
  if (v.empty()) return {};
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  std::vector<double> out;
  out.reserve(v.size());
  for (double x : v) out.push_back(min_max(x, *lo, *hi));
  return out;
}

inline std::vector<RadarCell> collect_radar_cells(const std::vector<MetricsRecord>& records) {
  std::vector<RadarCell> cells;
  std::map<std::pair<std::string, std::string>, std::size_t> index;
  std::map<std::size_t, std::array<std::pair<double, std::size_t>, 2>> acc;
  for (const auto& r : records) {
    if (!uses_synthetic(r.variant.family)) continue;
    const auto key = std::make_pair(r.generator_id, r.dataset_id);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, cells.size()).first;
      cells.push_back({r.generator_id, r.dataset_id, {}});
      acc[it->second] = {};
    }
    auto& cell = cells[it->second];
    const std::array<std::optional<double>, 6> shared = {r.fidelity, r.diversity, r.sampling_speed,
                                                         std::nullopt, std::nullopt, r.privacy};
    for (std::size_t a = 0; a < 6; ++a) {
      if (!cell.raw[a] && shared[a]) cell.raw[a] = shared[a];
    }
    if (r.ok()) {
      auto& sums = acc[it->second];
      sums[0].first += r.utility.top_k_accuracy;
      sums[0].second += 1;
      sums[1].first += r.robustness.top_k_accuracy;
      sums[1].second += 1;
    }
  }
  for (auto& [i, sums] : acc) {
    if (sums[0].second > 0) cells[i].raw[3] = sums[0].first / static_cast<double>(sums[0].second);
    if (sums[1].second > 0) cells[i].raw[4] = sums[1].first / static_cast<double>(sums[1].second);
  }
  return cells;
}

/// Normalizes the six axes across generators for the radar chart. Privacy is
/// inverted after normalization so that larger is better on every axis.
/// Generators appear in order of first appearance in `records`.
inline RadarResult normalize_for_radar(const std::vector<MetricsRecord>& records,
                                       RadarOrder order = RadarOrder::kCellsThenMean) {
  RadarResult res;
  res.cells = collect_radar_cells(records);
  if (res.cells.empty()) throw Error("no synthetic-data records to place on the radar");

  std::vector<std::string> generators;
  for (const auto& c : res.cells) {
    if (std::find(generators.begin(), generators.end(), c.generator_id) == generators.end()) {
      generators.push_back(c.generator_id);
    }
  }
  res.rows.resize(generators.size());
  res.normalized_cells.assign(res.cells.size(), {});
  for (std::size_t g = 0; g < generators.size(); ++g) res.rows[g].generator_id = generators[g];

  for (std::size_t a = 0; a < 6; ++a) {
    std::vector<double> cell_values;
    std::vector<std::optional<double>> means(generators.size());
    for (std::size_t g = 0; g < generators.size(); ++g) {
      double sum = 0.0;
      std::size_t n = 0;
      for (const auto& c : res.cells) {
        if (c.generator_id != generators[g] || !c.raw[a]) continue;
        sum += *c.raw[a];
        ++n;
        cell_values.push_back(*c.raw[a]);
      }
      if (n > 0) means[g] = sum / static_cast<double>(n);
    }
    const auto invert = [&](double v) { return a == kPrivacyAxis ? 1.0 - v : v; };

    std::vector<double> range_values = cell_values;
    if (order == RadarOrder::kMeanThenNormalize) {
      range_values.clear();
      for (const auto& m : means) {
        if (m) range_values.push_back(*m);
      }
    }
    double lo = 0.0;
    double hi = 0.0;
    if (!range_values.empty()) {
      lo = *std::min_element(range_values.begin(), range_values.end());
      hi = *std::max_element(range_values.begin(), range_values.end());
    }
    if (!(hi > lo)) {
      res.warnings.push_back(std::string(kRadarAxes[a]) +
                             ": fewer than two distinct values; axis set to 0.5");
    }
    for (std::size_t g = 0; g < generators.size(); ++g) {
      if (!means[g]) {
        res.warnings.push_back(std::string(kRadarAxes[a]) + ": no value for generator '" +
                               generators[g] + "'; axis set to 0.5");
        res.rows[g].values[a] = 0.5;
        continue;
      }
      res.rows[g].values[a] = invert(min_max(*means[g], lo, hi));
    }
    for (std::size_t c = 0; c < res.cells.size(); ++c) {
      const auto& v = res.cells[c].raw[a];
      res.normalized_cells[c][a] = v ? invert(min_max(*v, lo, hi)) : std::nan("");
    }
  }
  return res;
}

// ---------------------------------------------------------------------------
// Tables

/// Shortest decimal text that parses back to the same double.
inline std::string format_number(double v) {
  if (!std::isfinite(v)) return std::isnan(v) ? "nan" : (v > 0 ? "inf" : "-inf");
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// A table cell is a JSON string, number or null (rendered "NA").
struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Json>> rows;

  Json to_json() const {
    Json rs = Json::array();
    for (const auto& r : rows) rs.push_back(r);
    return {{"columns", columns}, {"rows", rs}};
  }

  static Table from_json(const Json& j) {
    Table t;
    t.columns = j.at("columns").get<std::vector<std::string>>();
    for (const auto& r : j.at("rows")) t.rows.push_back(r.get<std::vector<Json>>());
    return t;
  }
};

namespace detail {

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

inline std::string cell_text(const Json& v) {
  if (v.is_null()) return "NA";
  if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
  if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
  if (v.is_number()) return format_number(v.get<double>());
  return v.get<std::string>();
}

inline Json parse_cell(const std::string& s, bool quoted) {
  if (!quoted && s == "NA") return nullptr;
  if (!quoted && !s.empty()) {
    std::uint64_t u = 0;
    auto ru = std::from_chars(s.data(), s.data() + s.size(), u);
    if (ru.ec == std::errc() && ru.ptr == s.data() + s.size()) return u;
    double d = 0.0;
    auto rd = std::from_chars(s.data(), s.data() + s.size(), d);
    if (rd.ec == std::errc() && rd.ptr == s.data() + s.size()) return d;
  }
  return s;
}

}  // namespace detail

inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += detail::csv_field(t.columns[i]);
  }
  out += '\n';
  for (const auto& r : t.rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (i) out += ',';
      // Strings that would read back as numbers or NA are quoted.
      std::string text = detail::cell_text(r[i]);
      const bool needs_quotes = r[i].is_string() && !detail::parse_cell(text, false).is_string();
      out += needs_quotes ? "\"" + text + "\"" : detail::csv_field(text);
    }
    out += '\n';
  }
  return out;
}

/// Parses CSV produced by to_csv. Unquoted NA becomes null and unquoted
/// numeric text becomes a number.
inline Table parse_csv(const std::string& text) {
  std::vector<std::vector<std::pair<std::string, bool>>> lines;
  std::vector<std::pair<std::string, bool>> fields;
  std::string cur;
  bool quoted = false;
  bool in_quotes = false;
  bool line_has_content = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char ch = text[i];
    if (in_quotes) {
      if (ch == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        in_quotes = false;
      } else {
        cur += ch;
      }
      continue;
    }
    if (ch == '"') {
      in_quotes = quoted = line_has_content = true;
    } else if (ch == ',') {
      fields.emplace_back(cur, quoted);
      cur.clear();
      quoted = false;
      line_has_content = true;
    } else if (ch == '\n') {
      fields.emplace_back(cur, quoted);
      lines.push_back(std::move(fields));
      fields.clear();
      cur.clear();
      quoted = line_has_content = false;
    } else if (ch != '\r') {
      cur += ch;
      line_has_content = true;
    }
  }
  if (line_has_content) {
    fields.emplace_back(cur, quoted);
    lines.push_back(std::move(fields));
  }
  if (lines.empty()) throw Error("empty CSV");
  Table t;
  for (const auto& [f, q] : lines.front()) t.columns.push_back(f);
  for (std::size_t l = 1; l < lines.size(); ++l) {
    std::vector<Json> row;
    for (const auto& [f, q] : lines[l]) row.push_back(detail::parse_cell(f, q));
    t.rows.push_back(std::move(row));
  }
  return t;
}

namespace detail {

template <typename Key>
std::vector<Key> first_appearance(const std::vector<MetricsRecord>& records, Key (*key)(const MetricsRecord&)) {
  std::vector<Key> out;
  for (const auto& r : records) {
    Key k = key(r);
    if (std::find(out.begin(), out.end(), k) == out.end()) out.push_back(std::move(k));
  }
  return out;
}

inline std::string dataset_of(const MetricsRecord& r) { return r.dataset_id; }

inline Json opt(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace detail

/// Fidelity / diversity / FID / privacy / sampling speed per generator and
/// dataset, with an Average block when more than one dataset is present.
inline Table trilemma_table(const std::vector<MetricsRecord>& records) {
  Table t;
  t.columns = {"Dataset", "Model", "Fidelity", "Diversity", "FID", "Privacy", "Sampling Speed"};
  const auto datasets = detail::first_appearance<std::string>(records, detail::dataset_of);
  std::vector<std::string> generators;
  for (const auto& r : records) {
    if (uses_synthetic(r.variant.family) &&
        std::find(generators.begin(), generators.end(), r.generator_id) == generators.end()) {
      generators.push_back(r.generator_id);
    }
  }
  // generator -> metric -> per-dataset values, for the Average block
  std::map<std::string, std::array<std::vector<double>, 5>> per_gen;
  for (const auto& d : datasets) {
    for (const auto& g : generators) {
      std::array<std::optional<double>, 5> v;
      bool present = false;
      for (const auto& r : records) {
        if (r.dataset_id != d || r.generator_id != g || !uses_synthetic(r.variant.family)) continue;
        present = true;
        const std::array<std::optional<double>, 5> m = {r.fidelity, r.diversity, r.fid, r.privacy,
                                                        r.sampling_speed};
        for (std::size_t i = 0; i < 5; ++i) {
          if (!v[i]) v[i] = m[i];
        }
      }
      if (!present) continue;
      std::vector<Json> row = {d, g};
      for (std::size_t i = 0; i < 5; ++i) {
        row.push_back(detail::opt(v[i]));
        if (v[i]) per_gen[g][i].push_back(*v[i]);
      }
      t.rows.push_back(std::move(row));
    }
  }
  if (datasets.size() > 1) {
    for (const auto& g : generators) {
      std::vector<Json> row = {"Average", g};
      for (std::size_t i = 0; i < 5; ++i) {
        const auto& vals = per_gen[g][i];
        if (vals.empty()) {
          row.push_back(nullptr);
        } else {
          double s = 0.0;
          for (double x : vals) s += x;
          row.push_back(s / static_cast<double>(vals.size()));
        }
      }
      t.rows.push_back(std::move(row));
    }
  }
  return t;
}

/// Utility and robustness (top-k accuracy, clean and under attack) for every
/// cell of one dataset, in family order.
inline Table utility_table(const std::vector<MetricsRecord>& records, const std::string& dataset) {
  Table t;
  t.columns = {"Experiment", "Model", "Multiplier", "Utility", "Robustness", "k", "Status"};
  std::vector<const MetricsRecord*> rows;
  for (const auto& r : records) {
    if (r.dataset_id == dataset) rows.push_back(&r);
  }
  std::vector<std::string> gens;
  for (const auto* r : rows) {
    if (!r->generator_id.empty() && std::find(gens.begin(), gens.end(), r->generator_id) == gens.end()) {
      gens.push_back(r->generator_id);
    }
  }
  auto rank = [&](const MetricsRecord* r) {
    const auto g = std::find(gens.begin(), gens.end(), r->generator_id) - gens.begin();
    return std::make_tuple(static_cast<int>(r->variant.family), r->variant.multiplier, g);
  };
  std::stable_sort(rows.begin(), rows.end(), [&](auto* a, auto* b) { return rank(a) < rank(b); });
  for (const auto* r : rows) {
    const bool synth = uses_synthetic(r->variant.family);
    t.rows.push_back({to_string(r->variant.family), synth ? Json(r->generator_id) : Json("-"),
                      synth ? Json(r->variant.multiplier) : Json("-"),
                      r->ok() ? Json(r->utility.top_k_accuracy) : Json(nullptr),
                      r->ok() ? Json(r->robustness.top_k_accuracy) : Json(nullptr),
                      r->ok() ? Json(r->utility.k) : Json(nullptr), r->status});
  }
  return t;
}

inline Table radar_table(const RadarResult& radar) {
  Table t;
  t.columns = {"Model"};
  for (const char* a : kRadarAxes) t.columns.emplace_back(a);
  for (const auto& row : radar.rows) {
    std::vector<Json> r = {row.generator_id};
    for (double v : row.values) r.push_back(v);
    t.rows.push_back(std::move(r));
  }
  return t;
}

namespace detail {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("cannot write " + path.string());
}

inline void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error("cannot create output directory " + dir.string());
  }
}

inline std::string file_safe(const std::string& s) {
  std::string out;
  for (char ch : s) out += (std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_') ? ch : '_';
  return out;
}

}  // namespace detail

struct ReportFormats {
  bool csv = true;
  bool json = true;
  bool svg = true;
};

/// Writes trilemma.{csv,json}, utility_<dataset>.{csv,json} and
/// radar.{csv,json} under out_dir. Returns the files written.
inline std::vector<std::filesystem::path> emit_tables(const std::vector<MetricsRecord>& records,
                                                      const std::filesystem::path& out_dir,
                                                      ReportFormats formats = {},
                                                      RadarOrder order = RadarOrder::kCellsThenMean) {
  if (records.empty()) throw Error("no records to tabulate");
  detail::ensure_dir(out_dir);
  std::vector<std::filesystem::path> written;
  auto emit = [&](const Table& t, const std::string& stem) {
    if (formats.csv) {
      written.push_back(out_dir / (stem + ".csv"));
      detail::write_text(written.back(), to_csv(t));
    }
    if (formats.json) {
      written.push_back(out_dir / (stem + ".json"));
      detail::write_text(written.back(), t.to_json().dump(2) + "\n");
    }
  };
  emit(trilemma_table(records), "trilemma");
  for (const auto& d : detail::first_appearance<std::string>(records, detail::dataset_of)) {
    emit(utility_table(records, d), "utility_" + detail::file_safe(d));
  }
  bool any_synthetic = false;
  for (const auto& r : records) any_synthetic = any_synthetic || uses_synthetic(r.variant.family);
  if (any_synthetic) emit(radar_table(normalize_for_radar(records, order)), "radar");
  return written;
}

// ---------------------------------------------------------------------------
// SVG

namespace detail {

inline constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                         "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};

inline std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

inline std::string fmt2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

inline std::string svg_open(int w, int h) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(w) + "\" height=\"" +
         std::to_string(h) + "\" viewBox=\"0 0 " + std::to_string(w) + " " + std::to_string(h) +
         "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" "
         "fill=\"white\"/>\n";
}

inline std::string text(double x, double y, const std::string& s, const char* anchor = "middle",
                        const std::string& extra = "") {
  return "<text x=\"" + fmt2(x) + "\" y=\"" + fmt2(y) + "\" text-anchor=\"" + anchor + "\"" + extra +
         ">" + xml_escape(s) + "</text>\n";
}

}  // namespace detail

/// Radar chart: six axes, one closed polygon per row.
inline std::string emit_radar_svg(const std::vector<RadarRow>& rows) {
  if (rows.empty()) throw Error("radar chart needs at least one row");
  const double cx = 230.0;
  const double cy = 240.0;
  const double radius = 160.0;
  auto point = [&](std::size_t axis, double v) {
    const double ang = -std::numbers::pi / 2.0 + static_cast<double>(axis) * std::numbers::pi / 3.0;
    return std::make_pair(cx + radius * v * std::cos(ang), cy + radius * v * std::sin(ang));
  };
  auto points = [&](const std::array<double, 6>& vals) {
    std::string s;
    for (std::size_t a = 0; a < 6; ++a) {
      const auto [x, y] = point(a, std::clamp(vals[a], 0.0, 1.0));
      if (a) s += ' ';
      s += detail::fmt2(x) + "," + detail::fmt2(y);
    }
    return s;
  };

  std::string svg = detail::svg_open(600, 480);
  svg += "<g class=\"grid\" fill=\"none\" stroke=\"#cccccc\">\n";
  for (double level : {0.25, 0.5, 0.75, 1.0}) {
    svg += "<polygon points=\"" + points({level, level, level, level, level, level}) + "\"/>\n";
  }
  for (std::size_t a = 0; a < 6; ++a) {
    const auto [x, y] = point(a, 1.0);
    svg += "<line x1=\"" + detail::fmt2(cx) + "\" y1=\"" + detail::fmt2(cy) + "\" x2=\"" +
           detail::fmt2(x) + "\" y2=\"" + detail::fmt2(y) + "\"/>\n";
  }
  svg += "</g>\n<g class=\"axes\">\n";
  for (std::size_t a = 0; a < 6; ++a) {
    const auto [x, y] = point(a, 1.13);
    svg += detail::text(x, y + 4.0, kRadarAxes[a]);
  }
  svg += "</g>\n<g class=\"series\">\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const char* color = detail::kPalette[i % detail::kPalette.size()];
    svg += "<polygon data-generator=\"" + detail::xml_escape(rows[i].generator_id) + "\" points=\"" +
           points(rows[i].values) + "\" fill=\"" + color + "\" fill-opacity=\"0.15\" stroke=\"" +
           color + "\" stroke-width=\"2\"/>\n";
  }
  svg += "</g>\n<g class=\"legend\">\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double y = 40.0 + 20.0 * static_cast<double>(i);
    svg += "<rect x=\"470\" y=\"" + detail::fmt2(y - 10.0) + "\" width=\"12\" height=\"12\" fill=\"" +
           detail::kPalette[i % detail::kPalette.size()] + "\"/>\n";
    svg += detail::text(488.0, y, rows[i].generator_id, "start");
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

enum class BarMetric { kUtility, kRobustness };

inline const char* to_string(BarMetric m) { return m == BarMetric::kUtility ? "utility" : "robustness"; }

/// Grouped bar chart for one dataset: one group per synthetic-bearing family
/// (data-anonymization, synthetic-da, combined-da), bars ordered by
/// generator then multiplier. baseline-real and geometric-da are drawn as
/// dashed horizontal reference lines.
inline std::string emit_bar_svg(const std::vector<MetricsRecord>& records, BarMetric metric,
                                const std::string& dataset) {
  std::vector<const MetricsRecord*> rs;
  for (const auto& r : records) {
    if (r.dataset_id == dataset) rs.push_back(&r);
  }
  if (rs.empty()) throw Error("no records for dataset '" + dataset + "'");
  auto value = [&](const MetricsRecord& r) -> std::optional<double> {
    if (!r.ok()) return std::nullopt;
    return metric == BarMetric::kUtility ? r.utility.top_k_accuracy : r.robustness.top_k_accuracy;
  };
  std::vector<std::string> gens;
  for (const auto* r : rs) {
    if (uses_synthetic(r->variant.family) &&
        std::find(gens.begin(), gens.end(), r->generator_id) == gens.end()) {
      gens.push_back(r->generator_id);
    }
  }

  struct Bar {
    std::size_t gen;
    std::size_t multiplier;
    std::optional<double> v;
  };
  std::vector<std::pair<Family, std::vector<Bar>>> groups;
  for (Family f : kAllFamilies) {
    if (!uses_synthetic(f)) continue;
    std::vector<Bar> bars;
    for (const auto* r : rs) {
      if (r->variant.family != f) continue;
      const auto g = static_cast<std::size_t>(std::find(gens.begin(), gens.end(), r->generator_id) - gens.begin());
      bars.push_back({g, r->variant.multiplier, value(*r)});
    }
    std::stable_sort(bars.begin(), bars.end(), [](const Bar& a, const Bar& b) {
      return std::tie(a.gen, a.multiplier) < std::tie(b.gen, b.multiplier);
    });
    if (!bars.empty()) groups.emplace_back(f, std::move(bars));
  }

  const double bar_w = 16.0;
  const double group_gap = 40.0;
  const double left = 60.0;
  const double top = 40.0;
  const double plot_h = 260.0;
  double plot_w = group_gap;
  for (const auto& [f, bars] : groups) plot_w += static_cast<double>(bars.size()) * bar_w + group_gap;
  plot_w = std::max(plot_w, 300.0);
  const int width = static_cast<int>(left + plot_w + 170.0);
  const int height = static_cast<int>(top + plot_h + 70.0);
  auto y_of = [&](double v) { return top + plot_h * (1.0 - std::clamp(v, 0.0, 1.0)); };

  std::string svg = detail::svg_open(width, height);
  svg += detail::text(left + plot_w / 2.0, 22.0, dataset + " " + to_string(metric), "middle",
                      " font-size=\"14\"");
  svg += "<g class=\"axis\" stroke=\"#333333\">\n";
  svg += "<line x1=\"" + detail::fmt2(left) + "\" y1=\"" + detail::fmt2(top) + "\" x2=\"" +
         detail::fmt2(left) + "\" y2=\"" + detail::fmt2(top + plot_h) + "\"/>\n";
  svg += "<line x1=\"" + detail::fmt2(left) + "\" y1=\"" + detail::fmt2(top + plot_h) + "\" x2=\"" +
         detail::fmt2(left + plot_w) + "\" y2=\"" + detail::fmt2(top + plot_h) + "\"/>\n";
  svg += "</g>\n<g class=\"ticks\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double v = 0.25 * i;
    svg += detail::text(left - 6.0, y_of(v) + 4.0, detail::fmt2(v), "end");
  }
  svg += "</g>\n<g class=\"bars\">\n";
  double x = left + group_gap;
  for (const auto& [f, bars] : groups) {
    const double start = x;
    for (const auto& b : bars) {
      const char* color = detail::kPalette[b.gen % detail::kPalette.size()];
      const double opacity = b.multiplier <= 1 ? 1.0 : (b.multiplier == 2 ? 0.7 : 0.45);
      if (b.v) {
        svg += "<rect x=\"" + detail::fmt2(x + 1.0) + "\" y=\"" + detail::fmt2(y_of(*b.v)) +
               "\" width=\"" + detail::fmt2(bar_w - 2.0) + "\" height=\"" +
               detail::fmt2(top + plot_h - y_of(*b.v)) + "\" fill=\"" + color + "\" fill-opacity=\"" +
               detail::fmt2(opacity) + "\"/>\n";
      } else {
        svg += detail::text(x + bar_w / 2.0, top + plot_h - 4.0, "NA", "middle", " font-size=\"9\"");
      }
      svg += detail::text(x + bar_w / 2.0, top + plot_h + 14.0, "x" + std::to_string(b.multiplier),
                          "middle", " font-size=\"9\"");
      x += bar_w;
    }
    svg += detail::text((start + x) / 2.0, top + plot_h + 32.0, to_string(f));
    x += group_gap;
  }
  svg += "</g>\n<g class=\"baselines\">\n";
  double legend_y = top + 10.0;
  const double legend_x = left + plot_w + 20.0;
  for (Family f : {Family::kBaselineReal, Family::kGeometricDa}) {
    for (const auto* r : rs) {
      if (r->variant.family != f) continue;
      const auto v = value(*r);
      if (!v) continue;
      const char* stroke = f == Family::kBaselineReal ? "#000000" : "#888888";
      svg += "<line data-family=\"" + std::string(to_string(f)) + "\" x1=\"" + detail::fmt2(left) +
             "\" y1=\"" + detail::fmt2(y_of(*v)) + "\" x2=\"" + detail::fmt2(left + plot_w) +
             "\" y2=\"" + detail::fmt2(y_of(*v)) + "\" stroke=\"" + stroke +
             "\" stroke-dasharray=\"6,4\"/>\n";
      svg += "<line x1=\"" + detail::fmt2(legend_x) + "\" y1=\"" + detail::fmt2(legend_y - 4.0) +
             "\" x2=\"" + detail::fmt2(legend_x + 14.0) + "\" y2=\"" + detail::fmt2(legend_y - 4.0) +
             "\" stroke=\"" + stroke + "\" stroke-dasharray=\"6,4\"/>\n";
      svg += detail::text(legend_x + 20.0, legend_y, to_string(f), "start");
      legend_y += 20.0;
      break;
    }
  }
  svg += "</g>\n<g class=\"legend\">\n";
  for (std::size_t g = 0; g < gens.size(); ++g) {
    svg += "<rect x=\"" + detail::fmt2(legend_x) + "\" y=\"" + detail::fmt2(legend_y - 10.0) +
           "\" width=\"12\" height=\"12\" fill=\"" + detail::kPalette[g % detail::kPalette.size()] +
           "\"/>\n";
    svg += detail::text(legend_x + 20.0, legend_y, gens[g], "start");
    legend_y += 20.0;
  }
  svg += "</g>\n</svg>\n";
  return svg;
}

/// Reads <run>/records and writes <run>/tables and <run>/plots.
inline std::vector<std::filesystem::path> emit_report(const std::filesystem::path& run_dir,
                                                      ReportFormats formats = {},
                                                      RadarOrder order = RadarOrder::kCellsThenMean) {
  const auto records = load_records(run_dir / "records");
  if (records.empty()) throw Error("no records under " + (run_dir / "records").string());
  std::vector<std::filesystem::path> written;
  if (formats.csv || formats.json) written = emit_tables(records, run_dir / "tables", formats, order);
  if (formats.svg) {
    const auto plots = run_dir / "plots";
    detail::ensure_dir(plots);
    bool any_synthetic = false;
    for (const auto& r : records) any_synthetic = any_synthetic || uses_synthetic(r.variant.family);
    if (any_synthetic) {
      written.push_back(plots / "radar.svg");
      detail::write_text(written.back(), emit_radar_svg(normalize_for_radar(records, order).rows));
    }
    for (const auto& d : detail::first_appearance<std::string>(records, detail::dataset_of)) {
      for (BarMetric m : {BarMetric::kUtility, BarMetric::kRobustness}) {
        written.push_back(plots / (std::string(to_string(m)) + "_" + detail::file_safe(d) + ".svg"));
        detail::write_text(written.back(), emit_bar_svg(records, m, d));
      }
    }
  }
  return written;
}

}  // namespace trilemma
