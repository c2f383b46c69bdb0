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

#include "trilemma/pipeline.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "trilemma/toy.hpp"

namespace trilemma {
namespace {

using testing::TempDir;

std::multiset<std::string> sources_of(const LabeledImageDataset& ds) {
  return {ds.sources.begin(), ds.sources.end()};
}

LabeledImageDataset pool_like(std::size_t per_class, std::uint64_t seed) {
  auto pool = make_blob_dataset(per_class, 2, 8, seed);
  for (auto& s : pool.sources) s = "synthetic:g/" + s;
  pool.role = DatasetRole::kSynthetic;
  return pool;
}

TEST(TrainingSetTest, SizesPerFamily) {
  const auto real = make_blob_dataset(6, 2, 8, 1);
  const auto pool = pool_like(40, 2);
  const std::size_t n = real.size();
  EXPECT_EQ(build_training_set({Family::kBaselineReal, 0, ""}, real, nullptr, 0).size(), n);
  EXPECT_EQ(build_training_set({Family::kGeometricDa, 0, ""}, real, nullptr, 0).size(), 4 * n);
  for (std::size_t m = 1; m <= 3; ++m) {
    EXPECT_EQ(build_training_set({Family::kDataAnonymization, m, "g"}, real, &pool, 0).size(), m * n);
    EXPECT_EQ(build_training_set({Family::kSyntheticDa, m, "g"}, real, &pool, 0).size(), (1 + m) * n);
    EXPECT_EQ(build_training_set({Family::kCombinedDa, m, "g"}, real, &pool, 0).size(), 4 * (1 + m) * n);
  }
}

TEST(TrainingSetTest, DrawsAreStratifiedAndNested) {
  auto real = make_blob_dataset(5, 2, 8, 1);
  // Unbalanced real classes: 5 and 3.
  real = subset(real, {0, 1, 2, 3, 4, 5, 6, 7}, DatasetRole::kRealTrain);
  const auto pool = pool_like(30, 2);
  std::multiset<std::string> prev;
  for (std::size_t m = 1; m <= 3; ++m) {
    const auto draw = draw_synthetic(real, pool, m, 99);
    const auto counts = draw.class_counts();
    EXPECT_EQ(counts[0], 5 * m);
    EXPECT_EQ(counts[1], 3 * m);
    for (std::size_t i = 0; i < draw.size(); ++i) {
      // Labels follow the pool's class names.
      EXPECT_NE(draw.sources[i].find(draw.class_names[draw.labels[i]]), std::string::npos);
    }
    const auto cur = sources_of(draw);
    EXPECT_TRUE(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end())) << "m=" << m;
    EXPECT_EQ(std::set<std::string>(cur.begin(), cur.end()).size(), cur.size());
    prev = cur;
  }
}

TEST(TrainingSetTest, DrawMapsClassesByName) {
  const auto real = make_blob_dataset(3, 2, 8, 1);
  auto pool = pool_like(10, 2);
  std::reverse(pool.class_names.begin(), pool.class_names.end());
  for (auto& l : pool.labels) l = 1 - l;
  const auto draw = draw_synthetic(real, pool, 1, 0);
  for (std::size_t i = 0; i < draw.size(); ++i) {
    EXPECT_NE(draw.sources[i].find(real.class_names[draw.labels[i]]), std::string::npos);
  }
}

TEST(TrainingSetTest, InsufficientPoolNamesClassCounts) {
  const auto real = make_blob_dataset(10, 2, 8, 1);
  const auto pool = pool_like(15, 2);
  try {
    (void)draw_synthetic(real, pool, 2, 0);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("'class_0' requires 20, available 15"), std::string::npos) << msg;
    EXPECT_NE(msg.find("'class_1' requires 20, available 15"), std::string::npos) << msg;
  }
}

TEST(TrainingSetTest, LeakageCheck) {
  const auto ds = make_blob_dataset(4, 2, 8, 1);
  const auto a = subset(ds, {0, 1, 4, 5}, DatasetRole::kRealTrain);
  const auto b = subset(ds, {2, 6}, DatasetRole::kRealTest);
  EXPECT_NO_THROW(check_no_test_leakage(geometric_augment(a, 0), b));
  EXPECT_THROW(check_no_test_leakage(geometric_augment(concat(a, b), 0), b), Error);
}

Json minimal_config() {
  return Json::parse(R"({
    "datasets": [{"id": "toy", "root": "data",
                  "synthetic": {"g": {"pool": "pool"}}}],
    "generators": [{"id": "g", "sampling_speed": 5.0}]
  })");
}

TEST(ConfigTest, DefaultsAndResolution) {
  const auto cfg = parse_run_config(minimal_config(), "/base");
  EXPECT_EQ(cfg.datasets[0].root, std::filesystem::path("/base/data"));
  EXPECT_EQ(cfg.datasets[0].synthetic.at("g").pool, std::filesystem::path("/base/pool"));
  EXPECT_EQ(cfg.classifier.train.epochs, 30u);
  EXPECT_EQ(cfg.classifier.train.batch_size, 32u);
  EXPECT_DOUBLE_EQ(cfg.classifier.train.learning_rate, 1e-3);
  EXPECT_EQ(cfg.attack.max_iterations, 5u);
  EXPECT_DOUBLE_EQ(cfg.attack.overshoot, 0.02);
  EXPECT_EQ(cfg.privacy.q, 100u);
  EXPECT_EQ(cfg.privacy.l, 10u);
  EXPECT_EQ(cfg.manifold_k, 3u);
  EXPECT_EQ(cfg.plan.families.size(), 5u);
  EXPECT_EQ(cfg.plan.multipliers, (std::vector<std::size_t>{1, 2, 3}));
}

TEST(ConfigTest, ResolvedConfigRoundTrips) {
  auto j = minimal_config();
  j["classifier"] = {{"variant", "three-block"}, {"epochs", 4}, {"hidden", 16}};
  j["generators"][0]["adapter"] = {{"kind", "stub"}, {"delay_ms", 2.5}, {"height", 8}};
  const auto cfg = parse_run_config(j, "/base");
  const Json resolved = to_json(cfg);
  const auto again = parse_run_config(resolved, "/elsewhere");
  EXPECT_EQ(to_json(again), resolved);
}

TEST(ConfigTest, RejectsUnknownGeneratorAndFamily) {
  auto j = minimal_config();
  j["datasets"][0]["synthetic"] = {{"nope", {{"pool", "p"}}}};
  EXPECT_THROW(parse_run_config(j, "/"), Error);
  auto k = minimal_config();
  k["plan"] = {{"families", {"not-a-family"}}};
  EXPECT_THROW(parse_run_config(k, "/"), Error);
  EXPECT_THROW(parse_run_config(Json::parse("{}"), "/"), Error);
}

TEST(ConfigTest, CellEnumeration) {
  auto j = minimal_config();
  j["generators"].push_back({{"id", "h"}});
  j["datasets"][0]["synthetic"]["h"] = {{"pool", "p2"}};
  const auto cfg = parse_run_config(j, "/");
  const auto cells = enumerate_cells(cfg);
  // Two real-only cells plus three families x three multipliers per generator.
  EXPECT_EQ(cells.size(), 2u + 2u * 9u);
  std::set<std::string> ids;
  for (const auto& [d, v] : cells) ids.insert(v.label() + "/" + v.generator_id);
  EXPECT_EQ(ids.size(), cells.size());
}

class RunTest : public ::testing::Test {
 protected:
  void SetUp() override {
    save_image_dataset(make_blob_dataset(10, 2, 16, 3), dir_.path() / "data");
    save_image_dataset(make_blob_dataset(40, 2, 16, 4), dir_.path() / "pool");
    save_image_dataset(make_blob_dataset(8, 2, 16, 5), dir_.path() / "small_pool");
  }

  Json config() const {
    return Json::parse(R"({
      "output_dir": "out", "seed": 11, "workers": 2,
      "datasets": [{"id": "toy", "root": "data",
                    "synthetic": {"good": {"pool": "pool"}, "small": {"pool": "small_pool"}}}],
      "generators": [{"id": "good", "adapter": {"kind": "stub", "height": 16, "width": 16},
                      "bench_count": 4, "warmup": 1},
                     {"id": "small", "sampling_speed": 3.0}],
      "plan": {"families": ["baseline-real", "synthetic-da"], "multipliers": [1, 3]},
      "classifier": {"variant": "four-block", "hidden": 8, "epochs": 2, "top_k": 1},
      "privacy": {"q": 4, "l": 2},
      "fallback_feature_dim": 16
    })");
  }

  TempDir dir_{"run"};
};

TEST_F(RunTest, EndToEndIsolatedFailuresAndIdempotentRerun) {
  const auto cfg = parse_run_config(config(), dir_.path());
  std::ostringstream log;
  const auto first = run_experiment(cfg, &log);
  ASSERT_EQ(first.records.size(), 5u);
  EXPECT_EQ(first.trained, 5u);
  EXPECT_EQ(first.reused, 0u);

  // The small pool holds 8 per class; x3 needs 24 per class from 8 train images.
  std::set<std::string> failed(first.failed_cells.begin(), first.failed_cells.end());
  EXPECT_EQ(failed, (std::set<std::string>{"toy__synthetic-da__small__x3"}));
  for (const auto& r : first.records) {
    if (!r.ok()) {
      EXPECT_NE(r.error.find("insufficient synthetic pool"), std::string::npos);
      continue;
    }
    EXPECT_EQ(r.notes.at("leakage_check"), "passed");
    EXPECT_GE(r.utility.accuracy, 0.0);
    EXPECT_LE(r.robustness.accuracy, r.utility.accuracy + 1e-12);
    EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / "checkpoints" / (r.cell_id() + ".gevm")));
    if (r.variant.family == Family::kBaselineReal) {
      EXPECT_FALSE(r.fidelity.has_value());
      EXPECT_FALSE(r.privacy.has_value());
    } else {
      ASSERT_TRUE(r.fidelity && r.diversity && r.fid && r.privacy && r.sampling_speed);
      EXPECT_GE(*r.fidelity, 0.0);
      EXPECT_LE(*r.fidelity, 1.0);
      EXPECT_GE(*r.fid, 0.0);
      EXPECT_GT(*r.sampling_speed, 0.0);
    }
  }
  EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / "run.json"));
  EXPECT_TRUE(std::filesystem::exists(cfg.output_dir / "generators" / "toy__good.privacy.json"));

  std::map<std::string, std::string> before;
  for (const auto& e : std::filesystem::directory_iterator(cfg.output_dir / "records")) {
    before[e.path().filename().string()] = read_json_file(e.path()).dump();
  }

  const auto second = run_experiment(cfg);
  // Only the failed cell is retried.
  EXPECT_EQ(second.reused, 4u);
  EXPECT_EQ(second.trained, 1u);
  for (const auto& e : std::filesystem::directory_iterator(cfg.output_dir / "records")) {
    EXPECT_EQ(before.at(e.path().filename().string()), read_json_file(e.path()).dump());
  }
}

TEST_F(RunTest, SameSeedSameRecords) {
  auto j = config();
  j["plan"] = {{"families", {"synthetic-da"}}, {"multipliers", {1}}};
  j["datasets"][0]["synthetic"].erase("small");
  j["workers"] = 1;
  const auto a = run_experiment(parse_run_config(j, dir_.path()));
  j["output_dir"] = "out2";
  const auto b = run_experiment(parse_run_config(j, dir_.path()));
  ASSERT_EQ(a.records.size(), 1u);
  Json ra = to_json(a.records[0]);
  Json rb = to_json(b.records[0]);
  EXPECT_EQ(ra.at("utility"), rb.at("utility"));
  EXPECT_EQ(ra.at("robustness"), rb.at("robustness"));
  EXPECT_EQ(ra.at("fidelity"), rb.at("fidelity"));
  EXPECT_EQ(ra.at("privacy"), rb.at("privacy"));
}

}  // namespace
}  // namespace trilemma
