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

#include "trilemma/report.hpp"

#include <gtest/gtest.h>

#include <random>
#include <regex>

#include "test_util.hpp"

namespace trilemma {
namespace {

// Independent min-max oracle.
double oracle_minmax(double x, const std::vector<double>& all) {
  double lo = all[0];
  double hi = all[0];
  for (double v : all) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return hi == lo ? 0.5 : (x - lo) / (hi - lo);
}

MetricsRecord synth_record(const std::string& gen, const std::string& ds, Family f, std::size_t m,
                           double fidelity, double diversity, double speed, double privacy,
                           double utility, double robustness) {
  MetricsRecord r;
  r.generator_id = gen;
  r.dataset_id = ds;
  r.variant = {f, m, gen};
  r.fidelity = fidelity;
  r.diversity = diversity;
  r.fid = 100.0 * (1.0 - fidelity);
  r.sampling_speed = speed;
  r.privacy = privacy;
  r.utility.accuracy = r.utility.top_k_accuracy = utility;
  r.robustness.accuracy = r.robustness.top_k_accuracy = robustness;
  return r;
}

MetricsRecord real_record(const std::string& ds, Family f, double utility, double robustness) {
  MetricsRecord r;
  r.dataset_id = ds;
  r.variant = {f, 0, ""};
  r.utility.accuracy = r.utility.top_k_accuracy = utility;
  r.robustness.accuracy = r.robustness.top_k_accuracy = robustness;
  return r;
}

std::string testing_cell(const Json& v) {
  return v.is_string() ? v.get<std::string>() : v.dump();
}

std::vector<MetricsRecord> averages_records() {
  // Cross-dataset privacy averages for three generators, one cell each.
  return {synth_record("VAE", "avg", Family::kSyntheticDa, 1, 0.0214, 0.0, 12.8, 0.702, 0.5, 0.3),
          synth_record("GAN", "avg", Family::kSyntheticDa, 1, 0.368, 0.0879, 8.0, 0.409, 0.6, 0.2),
          synth_record("DM", "avg", Family::kSyntheticDa, 1, 0.472, 0.112, 0.16, 0.442, 0.7, 0.25)};
}

TEST(RadarTest, PrivacyInvertedExample) {
  for (RadarOrder order : {RadarOrder::kCellsThenMean, RadarOrder::kMeanThenNormalize}) {
    const auto res = normalize_for_radar(averages_records(), order);
    ASSERT_EQ(res.rows.size(), 3u);
    const std::vector<double> raw = {0.702, 0.409, 0.442};
    for (std::size_t g = 0; g < 3; ++g) {
      EXPECT_NEAR(res.rows[g].values[kPrivacyAxis], 1.0 - oracle_minmax(raw[g], raw), 1e-12);
    }
    EXPECT_NEAR(res.rows[0].values[kPrivacyAxis], 0.0, 1e-3);
    EXPECT_NEAR(res.rows[1].values[kPrivacyAxis], 1.0, 1e-3);
    EXPECT_NEAR(res.rows[2].values[kPrivacyAxis], 0.8874, 1e-3);
  }
}

TEST(RadarTest, BestRawValueGetsOneExceptPrivacy) {
  const auto res = normalize_for_radar(averages_records());
  // Fidelity best: DM; speed best: VAE.
  EXPECT_DOUBLE_EQ(res.rows[2].values[0], 1.0);
  EXPECT_DOUBLE_EQ(res.rows[0].values[0], 0.0);
  EXPECT_DOUBLE_EQ(res.rows[0].values[2], 1.0);
  EXPECT_DOUBLE_EQ(res.rows[2].values[2], 0.0);
  // Lowest raw privacy is best.
  EXPECT_DOUBLE_EQ(res.rows[1].values[kPrivacyAxis], 1.0);
  for (const auto& row : res.rows) {
    for (double v : row.values) {
      EXPECT_GE(v, 0.0);
      EXPECT_LE(v, 1.0);
    }
  }
}

TEST(RadarTest, ConstantColumnIsHalfWithWarning) {
  auto recs = averages_records();
  for (auto& r : recs) r.sampling_speed = 4.0;
  const auto res = normalize_for_radar(recs);
  for (const auto& row : res.rows) EXPECT_DOUBLE_EQ(row.values[2], 0.5);
  ASSERT_FALSE(res.warnings.empty());
  EXPECT_NE(res.warnings[0].find("Sampling Speed"), std::string::npos);
}

TEST(RadarTest, AffineInvariance) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<MetricsRecord> recs;
  for (const char* g : {"a", "b", "c"}) {
    for (const char* d : {"d1", "d2", "d3", "d4"}) {
      recs.push_back(synth_record(g, d, Family::kCombinedDa, 1, u(rng), u(rng), u(rng), u(rng), u(rng), u(rng)));
    }
  }
  const auto base = normalize_for_radar(recs);
  auto shifted = recs;
  for (auto& r : shifted) {
    r.fidelity = 3.5 * *r.fidelity + 2.0;
    r.privacy = 0.25 * *r.privacy - 7.0;
    r.sampling_speed = 1000.0 * *r.sampling_speed;
  }
  const auto moved = normalize_for_radar(shifted);
  for (std::size_t g = 0; g < 3; ++g) {
    for (std::size_t a = 0; a < 6; ++a) EXPECT_NEAR(base.rows[g].values[a], moved.rows[g].values[a], 1e-9);
  }
}

TEST(RadarTest, CellRangeVersusMeanRange) {
  // Two datasets; the generator means sit strictly inside the cell range.
  std::vector<MetricsRecord> recs = {
      synth_record("a", "d1", Family::kSyntheticDa, 1, 0.0, 0.1, 1, 0.5, 0.5, 0.5),
      synth_record("a", "d2", Family::kSyntheticDa, 1, 0.8, 0.1, 1, 0.5, 0.5, 0.5),
      synth_record("b", "d1", Family::kSyntheticDa, 1, 0.2, 0.1, 1, 0.5, 0.5, 0.5),
      synth_record("b", "d2", Family::kSyntheticDa, 1, 1.0, 0.1, 1, 0.5, 0.5, 0.5)};
  const auto cells = normalize_for_radar(recs, RadarOrder::kCellsThenMean);
  const std::vector<double> all = {0.0, 0.8, 0.2, 1.0};
  EXPECT_NEAR(cells.rows[0].values[0], oracle_minmax(0.4, all), 1e-12);
  EXPECT_NEAR(cells.rows[1].values[0], oracle_minmax(0.6, all), 1e-12);
  // Per-cell normalization: exactly one cell at 1 and one at 0.
  int ones = 0;
  int zeros = 0;
  for (const auto& c : cells.normalized_cells) {
    ones += c[0] == 1.0;
    zeros += c[0] == 0.0;
  }
  EXPECT_EQ(ones, 1);
  EXPECT_EQ(zeros, 1);
  const auto means = normalize_for_radar(recs, RadarOrder::kMeanThenNormalize);
  EXPECT_DOUBLE_EQ(means.rows[0].values[0], 0.0);
  EXPECT_DOUBLE_EQ(means.rows[1].values[0], 1.0);
}

TEST(RadarTest, UtilityAveragesAcrossFamilies) {
  std::vector<MetricsRecord> recs = {
      synth_record("a", "d", Family::kDataAnonymization, 1, 0.1, 0.1, 1, 0.5, 0.2, 0.1),
      synth_record("a", "d", Family::kSyntheticDa, 2, 0.1, 0.1, 1, 0.5, 0.6, 0.3),
      synth_record("b", "d", Family::kSyntheticDa, 1, 0.2, 0.1, 1, 0.5, 0.9, 0.2),
      real_record("d", Family::kBaselineReal, 0.99, 0.99)};
  const auto res = normalize_for_radar(recs);
  ASSERT_EQ(res.cells.size(), 2u);
  EXPECT_NEAR(*res.cells[0].raw[3], 0.4, 1e-12);
  EXPECT_NEAR(*res.cells[0].raw[4], 0.2, 1e-12);
}

TEST(TableTest, RowCountsAndNA) {
  auto recs = averages_records();
  recs[1].fid.reset();
  const auto t = trilemma_table(recs);
  EXPECT_EQ(t.columns, (std::vector<std::string>{"Dataset", "Model", "Fidelity", "Diversity", "FID",
                                                 "Privacy", "Sampling Speed"}));
  ASSERT_EQ(t.rows.size(), 3u);
  const auto csv = to_csv(t);
  EXPECT_NE(csv.find("avg,GAN,0.368,0.0879,NA,0.409,8"), std::string::npos) << csv;
}

TEST(TableTest, AverageBlockForSeveralDatasets) {
  std::vector<MetricsRecord> recs = {
      synth_record("a", "d1", Family::kSyntheticDa, 1, 0.2, 0.1, 3, 0.5, 0.5, 0.5),
      synth_record("a", "d2", Family::kSyntheticDa, 1, 0.4, 0.3, 3, 0.7, 0.5, 0.5)};
  const auto t = trilemma_table(recs);
  ASSERT_EQ(t.rows.size(), 3u);
  EXPECT_EQ(t.rows[2][0], "Average");
  EXPECT_NEAR(t.rows[2][2].get<double>(), 0.3, 1e-12);
  EXPECT_NEAR(t.rows[2][5].get<double>(), 0.6, 1e-12);
}

TEST(TableTest, CsvRoundTripsToJsonMirror) {
  std::vector<MetricsRecord> recs = averages_records();
  recs.push_back(real_record("avg", Family::kBaselineReal, 0.1 + 0.2, 1.0 / 3.0));
  recs.push_back(real_record("avg", Family::kGeometricDa, 0.5, 0.25));
  recs.back().status = "failed";
  recs[0].generator_id = "VAE, \"beta\"";
  recs[0].variant.generator_id = recs[0].generator_id;
  recs[1].generator_id = "123";
  recs[1].variant.generator_id = "123";
  testing::TempDir dir("report");
  const auto files = emit_tables(recs, dir.path());
  std::size_t pairs = 0;
  for (const auto& f : files) {
    if (f.extension() != ".csv") continue;
    std::ifstream in(f);
    std::stringstream ss;
    ss << in.rdbuf();
    const Table from_csv = parse_csv(ss.str());
    auto json_path = f;
    json_path.replace_extension(".json");
    const Table from_json = Table::from_json(read_json_file(json_path));
    EXPECT_EQ(from_csv.to_json(), from_json.to_json()) << f;
    ++pairs;
  }
  EXPECT_EQ(pairs, 3u);  // trilemma, utility_avg, radar
}

TEST(TableTest, UtilityTableFamilyOrder) {
  std::vector<MetricsRecord> recs = {
      synth_record("g", "d", Family::kCombinedDa, 2, 0.1, 0.1, 1, 0.5, 0.8, 0.1),
      synth_record("g", "d", Family::kCombinedDa, 1, 0.1, 0.1, 1, 0.5, 0.7, 0.1),
      real_record("d", Family::kGeometricDa, 0.6, 0.2),
      synth_record("g", "d", Family::kDataAnonymization, 1, 0.1, 0.1, 1, 0.5, 0.4, 0.1),
      real_record("d", Family::kBaselineReal, 0.5, 0.2)};
  const auto t = utility_table(recs, "d");
  std::vector<std::string> order;
  for (const auto& r : t.rows) order.push_back(r[0].get<std::string>() + "/" + testing_cell(r[2]));
  EXPECT_EQ(order, (std::vector<std::string>{"baseline-real/-", "geometric-da/-",
                                             "data-anonymization/1", "combined-da/1", "combined-da/2"}));
}

TEST(TableTest, UnwritableDirectory) {
  testing::TempDir dir("report_ro");
  const auto blocker = dir.path() / "file";
  std::ofstream(blocker) << "x";
  EXPECT_THROW(emit_tables(averages_records(), blocker / "tables"), Error);
}

TEST(SvgTest, RadarGeometryAndDeterminism) {
  const auto rows = normalize_for_radar(averages_records()).rows;
  const std::string a = emit_radar_svg(rows);
  const std::string b = emit_radar_svg(rows);
  EXPECT_EQ(a, b);
  const std::regex series("data-generator=");
  EXPECT_EQ(std::distance(std::sregex_iterator(a.begin(), a.end(), series), std::sregex_iterator()), 3);
  for (const char* axis : kRadarAxes) EXPECT_NE(a.find(std::string(">") + axis + "<"), std::string::npos);
  EXPECT_THROW(emit_radar_svg({}), Error);

  std::vector<RadarRow> same(2, rows[0]);
  same[1].generator_id = rows[0].generator_id;
  const std::string s = emit_radar_svg(same);
  const auto first = s.find("points=", s.find("data-generator="));
  const auto second = s.find("points=", s.find("data-generator=", first));
  EXPECT_EQ(s.substr(first, s.find('"', first + 8) - first), s.substr(second, s.find('"', second + 8) - second));
}

TEST(SvgTest, BarChartOrderAndBaselines) {
  std::vector<MetricsRecord> recs = {
      synth_record("g", "d", Family::kCombinedDa, 1, 0.1, 0.1, 1, 0.5, 0.8, 0.1),
      synth_record("g", "d", Family::kSyntheticDa, 1, 0.1, 0.1, 1, 0.5, 0.7, 0.1),
      synth_record("g", "d", Family::kDataAnonymization, 1, 0.1, 0.1, 1, 0.5, 0.4, 0.1),
      real_record("d", Family::kBaselineReal, 0.5, 0.2),
      real_record("d", Family::kGeometricDa, 0.6, 0.2)};
  const std::string svg = emit_bar_svg(recs, BarMetric::kUtility, "d");
  EXPECT_EQ(svg, emit_bar_svg(recs, BarMetric::kUtility, "d"));
  const auto da = svg.find(">data-anonymization<");
  const auto sda = svg.find(">synthetic-da<");
  const auto cda = svg.find(">combined-da<");
  ASSERT_NE(da, std::string::npos);
  EXPECT_LT(da, sda);
  EXPECT_LT(sda, cda);
  EXPECT_NE(svg.find("data-family=\"baseline-real\""), std::string::npos);
  EXPECT_NE(svg.find("data-family=\"geometric-da\""), std::string::npos);
  EXPECT_THROW(emit_bar_svg(recs, BarMetric::kUtility, "missing"), Error);
}

}  // namespace
}  // namespace trilemma
