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
#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <ostream>
#include <random>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "trilemma/adversarial.hpp"
#include "trilemma/augment.hpp"
#include "trilemma/classifier.hpp"
#include "trilemma/dataset.hpp"
#include "trilemma/error.hpp"
#include "trilemma/feature_store.hpp"
#include "trilemma/fid.hpp"
#include "trilemma/genbench.hpp"
#include "trilemma/manifold.hpp"
#include "trilemma/record.hpp"
#include "trilemma/ssim.hpp"

namespace trilemma {

// Bumped whenever record contents change meaning, so stale cells rerun.
inline constexpr int kRecordSchemaVersion = 1;

// ---------------------------------------------------------------------------
// Configuration

struct SyntheticPoolConfig {
  std::filesystem::path pool;
  // Optional backbone embeddings; pixel fallback features are used otherwise.
  std::optional<std::filesystem::path> real_features;
  std::optional<std::filesystem::path> synthetic_features;
  std::optional<std::filesystem::path> real_fid_features;
  std::optional<std::filesystem::path> synthetic_fid_features;
};

struct DatasetConfig {
  std::string id;
  std::filesystem::path root;
  SplitRatios split;
  std::optional<ImageDims> resize;
  std::map<std::string, SyntheticPoolConfig> synthetic;  // by generator id
};

struct GeneratorConfig {
  std::string id;
  std::optional<GeneratorAdapter> adapter;
  std::optional<double> sampling_speed;  // pre-measured samples/s
  std::size_t bench_count = 128;
  std::size_t warmup = 16;
};

struct ExperimentPlan {
  std::vector<Family> families{kAllFamilies.begin(), kAllFamilies.end()};
  std::vector<std::size_t> multipliers{1, 2, 3};
};

struct ClassifierConfig {
  ClassifierVariant variant = ClassifierVariant::kFourBlock;
  std::size_t hidden = 128;
  std::size_t top_k = 1;
  TrainHyper train;
};

struct RunConfig {
  std::filesystem::path output_dir = "run";
  std::uint64_t seed = 0;
  std::string host;
  std::size_t workers = 1;
  std::vector<DatasetConfig> datasets;
  std::vector<GeneratorConfig> generators;
  ExperimentPlan plan;
  ClassifierConfig classifier;
  AttackConfig attack;
  PrivacyConfig privacy;
  SsimParams ssim;
  std::size_t manifold_k = kDefaultManifoldK;
  std::size_t fallback_feature_dim = 64;

  const GeneratorConfig& generator(const std::string& id) const {
    for (const auto& g : generators) {
      if (g.id == id) return g;
    }
    throw Error("unknown generator '" + id + "'");
  }
};

namespace detail {

inline std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  const std::filesystem::path path(p);
  return path.is_absolute() ? path : (base / path).lexically_normal();
}

inline std::optional<std::filesystem::path> optional_path(const Json& j, const char* key,
                                                          const std::filesystem::path& base) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return resolve(base, j.at(key).get<std::string>());
}

inline Json path_or_null(const std::optional<std::filesystem::path>& p) {
  return p ? Json(p->string()) : Json(nullptr);
}

inline GeneratorAdapter adapter_from_json(const Json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "stub") {
    StubGenerator s;
    s.per_sample_delay_s = j.value("delay_ms", 0.0) / 1000.0;
    s.height = j.value("height", std::size_t{32});
    s.width = j.value("width", std::size_t{32});
    s.channels = j.value("channels", std::size_t{1});
    s.seed = j.value("seed", std::uint64_t{0});
    return s;
  }
  if (kind == "command") return CommandGenerator{j.at("template").get<std::string>()};
  throw Error("unknown generator adapter kind '" + kind + "'");
}

inline Json adapter_to_json(const GeneratorAdapter& g) {
  if (const auto* s = std::get_if<StubGenerator>(&g)) {
    return {{"kind", "stub"}, {"delay_ms", s->per_sample_delay_s * 1000.0}, {"height", s->height},
            {"width", s->width}, {"channels", s->channels}, {"seed", s->seed}};
  }
  return {{"kind", "command"}, {"template", std::get<CommandGenerator>(g).command_template}};
}

}  // namespace detail

/// Parses a run configuration. Relative paths resolve against `base_dir`
/// (normally the directory holding the config file). Omitted fields take
/// their defaults.
inline RunConfig parse_run_config(const Json& j, const std::filesystem::path& base_dir) {
  RunConfig c;
  try {
    c.output_dir = detail::resolve(base_dir, j.value("output_dir", std::string("run")));
    c.seed = j.value("seed", std::uint64_t{0});
    c.host = j.value("host", std::string{});
    c.workers = j.value("workers", std::size_t{1});
    for (const auto& d : j.at("datasets")) {
      DatasetConfig ds;
      ds.id = d.at("id").get<std::string>();
      ds.root = detail::resolve(base_dir, d.at("root").get<std::string>());
      if (d.contains("split")) {
        const auto s = d.at("split").get<std::vector<double>>();
        if (s.size() != 3) throw Error("split needs three fractions");
        ds.split = {s[0], s[1], s[2]};
      }
      if (d.contains("resize") && !d.at("resize").is_null()) {
        const auto r = d.at("resize").get<std::vector<std::size_t>>();
        if (r.size() != 2) throw Error("resize needs [height, width]");
        ds.resize = ImageDims{r[0], r[1]};
      }
      if (d.contains("synthetic")) {
        for (const auto& [gen, s] : d.at("synthetic").items()) {
          SyntheticPoolConfig p;
          p.pool = detail::resolve(base_dir, s.at("pool").get<std::string>());
          p.real_features = detail::optional_path(s, "real_features", base_dir);
          p.synthetic_features = detail::optional_path(s, "synthetic_features", base_dir);
          p.real_fid_features = detail::optional_path(s, "real_fid_features", base_dir);
          p.synthetic_fid_features = detail::optional_path(s, "synthetic_fid_features", base_dir);
          ds.synthetic.emplace(gen, std::move(p));
        }
      }
      c.datasets.push_back(std::move(ds));
    }
    if (j.contains("generators")) {
      for (const auto& g : j.at("generators")) {
        GeneratorConfig gc;
        gc.id = g.at("id").get<std::string>();
        if (g.contains("adapter")) gc.adapter = detail::adapter_from_json(g.at("adapter"));
        if (g.contains("sampling_speed") && !g.at("sampling_speed").is_null()) {
          gc.sampling_speed = g.at("sampling_speed").get<double>();
        }
        gc.bench_count = g.value("bench_count", gc.bench_count);
        gc.warmup = g.value("warmup", gc.warmup);
        c.generators.push_back(std::move(gc));
      }
    }
    if (j.contains("plan")) {
      const auto& p = j.at("plan");
      if (p.contains("families")) {
        c.plan.families.clear();
        for (const auto& f : p.at("families")) c.plan.families.push_back(parse_family(f.get<std::string>()));
      }
      if (p.contains("multipliers")) c.plan.multipliers = p.at("multipliers").get<std::vector<std::size_t>>();
    }
    if (j.contains("classifier")) {
      const auto& m = j.at("classifier");
      const std::string variant = m.value("variant", std::string(to_string(c.classifier.variant)));
      if (variant == "four-block") c.classifier.variant = ClassifierVariant::kFourBlock;
      else if (variant == "three-block") c.classifier.variant = ClassifierVariant::kThreeBlock;
      else throw Error("unknown classifier variant '" + variant + "'");
      c.classifier.hidden = m.value("hidden", c.classifier.hidden);
      c.classifier.top_k = m.value("top_k", c.classifier.top_k);
      c.classifier.train.epochs = m.value("epochs", c.classifier.train.epochs);
      c.classifier.train.batch_size = m.value("batch_size", c.classifier.train.batch_size);
      c.classifier.train.learning_rate = m.value("learning_rate", c.classifier.train.learning_rate);
    }
    if (j.contains("attack")) {
      const auto& a = j.at("attack");
      c.attack.max_iterations = a.value("max_iterations", c.attack.max_iterations);
      c.attack.overshoot = a.value("overshoot", c.attack.overshoot);
      c.attack.clamp_to_valid_range = a.value("clamp", c.attack.clamp_to_valid_range);
    }
    if (j.contains("privacy")) {
      c.privacy.q = j.at("privacy").value("q", c.privacy.q);
      c.privacy.l = j.at("privacy").value("l", c.privacy.l);
    }
    if (j.contains("ssim")) {
      c.ssim.window = j.at("ssim").value("window", c.ssim.window);
      c.ssim.gaussian_sigma = j.at("ssim").value("sigma", c.ssim.gaussian_sigma);
    }
    c.manifold_k = j.value("manifold_k", c.manifold_k);
    c.fallback_feature_dim = j.value("fallback_feature_dim", c.fallback_feature_dim);
  } catch (const Json::exception& e) {
    throw Error(std::string("invalid run configuration: ") + e.what());
  }
  c.privacy.seed = c.seed;
  c.classifier.train.seed = c.seed;

  if (c.datasets.empty()) throw Error("run configuration names no datasets");
  std::set<std::string> ids;
  for (const auto& g : c.generators) {
    if (!ids.insert(g.id).second) throw Error("duplicate generator id '" + g.id + "'");
    if (g.adapter) validate(*g.adapter);
  }
  for (const auto& d : c.datasets) {
    for (const auto& [gen, pool] : d.synthetic) (void)c.generator(gen);
  }
  for (std::size_t m : c.plan.multipliers) {
    if (m < 1) throw Error("multipliers must be at least 1");
  }
  c.classifier.train.validate();
  c.attack.validate();
  c.privacy.validate();
  c.ssim.validate();
  if (c.workers < 1) c.workers = 1;
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(read_json_file(path), std::filesystem::absolute(path).parent_path());
}

inline Json to_json(const DatasetConfig& d) {
  Json synth = Json::object();
  for (const auto& [gen, p] : d.synthetic) {
    synth[gen] = {{"pool", p.pool.string()},
                  {"real_features", detail::path_or_null(p.real_features)},
                  {"synthetic_features", detail::path_or_null(p.synthetic_features)},
                  {"real_fid_features", detail::path_or_null(p.real_fid_features)},
                  {"synthetic_fid_features", detail::path_or_null(p.synthetic_fid_features)}};
  }
  return {{"id", d.id},
          {"root", d.root.string()},
          {"split", {d.split.train, d.split.val, d.split.test}},
          {"resize", d.resize ? Json{d.resize->height, d.resize->width} : Json(nullptr)},
          {"synthetic", synth}};
}

inline Json to_json(const ClassifierConfig& c) {
  return {{"variant", to_string(c.variant)},
          {"hidden", c.hidden},
          {"top_k", c.top_k},
          {"epochs", c.train.epochs},
          {"batch_size", c.train.batch_size},
          {"learning_rate", c.train.learning_rate},
          {"optimizer", {{"name", "adam"}, {"beta1", c.train.beta1}, {"beta2", c.train.beta2},
                         {"epsilon", c.train.epsilon}}}};
}

inline Json to_json(const AttackConfig& a) {
  return {{"method", "deepfool"},
          {"max_iterations", a.max_iterations},
          {"overshoot", a.overshoot},
          {"clamp", a.clamp_to_valid_range}};
}

/// Fully resolved configuration, defaults included.
inline Json to_json(const RunConfig& c) {
  Json datasets = Json::array();
  for (const auto& d : c.datasets) datasets.push_back(to_json(d));
  Json generators = Json::array();
  for (const auto& g : c.generators) {
    generators.push_back({{"id", g.id},
                          {"adapter", g.adapter ? detail::adapter_to_json(*g.adapter) : Json(nullptr)},
                          {"sampling_speed", optional_to_json(g.sampling_speed)},
                          {"bench_count", g.bench_count},
                          {"warmup", g.warmup}});
  }
  Json families = Json::array();
  for (Family f : c.plan.families) families.push_back(to_string(f));
  return {{"schema_version", kRecordSchemaVersion},
          {"output_dir", c.output_dir.string()},
          {"seed", c.seed},
          {"host", c.host},
          {"datasets", datasets},
          {"generators", generators},
          {"plan", {{"families", families}, {"multipliers", c.plan.multipliers}}},
          {"classifier", to_json(c.classifier)},
          {"attack", to_json(c.attack)},
          {"privacy", {{"q", c.privacy.q}, {"l", c.privacy.l}}},
          {"ssim", {{"window", c.ssim.window}, {"sigma", c.ssim.gaussian_sigma}, {"k1", c.ssim.k1},
                    {"k2", c.ssim.k2}, {"dynamic_range", c.ssim.dynamic_range}}},
          {"manifold_k", c.manifold_k},
          {"fallback_feature_dim", c.fallback_feature_dim}};
}

// ---------------------------------------------------------------------------
// Training sets

/// Stable provenance check: strips "#transform" suffixes and verifies no
/// training image derives from a test image.
inline void check_no_test_leakage(const LabeledImageDataset& training,
                                  const LabeledImageDataset& test) {
  std::set<std::string> test_sources(test.sources.begin(), test.sources.end());
  for (const auto& s : training.sources) {
    const std::string base = s.substr(0, s.find('#'));
    if (test_sources.count(base) != 0) throw Error("test image '" + base + "' leaked into training");
  }
}

/// Class-stratified draw of multiplier * |class in real_train| synthetic
/// images per class. The per-class permutation depends only on `seed`, so
/// draws nest across multipliers (1x within 2x within 3x).
inline LabeledImageDataset draw_synthetic(const LabeledImageDataset& real_train,
                                          const LabeledImageDataset& pool, std::size_t multiplier,
                                          std::uint64_t seed) {
  std::vector<std::vector<std::size_t>> by_class(pool.num_classes());
  for (std::size_t i = 0; i < pool.size(); ++i) by_class[pool.labels[i]].push_back(i);

  const auto real_counts = real_train.class_counts();
  std::string shortfall;
  std::vector<std::size_t> pool_class(real_train.num_classes());
  for (std::size_t c = 0; c < real_train.num_classes(); ++c) {
    const auto& name = real_train.class_names[c];
    const auto it = std::find(pool.class_names.begin(), pool.class_names.end(), name);
    const std::size_t need = multiplier * real_counts[c];
    std::size_t have = 0;
    if (it != pool.class_names.end()) {
      pool_class[c] = static_cast<std::size_t>(it - pool.class_names.begin());
      have = by_class[pool_class[c]].size();
    }
    if (have < need) {
      shortfall += " '" + name + "' requires " + std::to_string(need) + ", available " +
                   std::to_string(have) + ";";
    }
  }
  if (!shortfall.empty()) throw Error("insufficient synthetic pool:" + shortfall);

  LabeledImageDataset out = real_train.empty_like();
  out.role = DatasetRole::kSynthetic;
  std::mt19937_64 rng(seed);
  for (std::size_t c = 0; c < real_train.num_classes(); ++c) {
    auto idx = by_class[pool_class[c]];
    std::shuffle(idx.begin(), idx.end(), rng);
    for (std::size_t t = 0; t < multiplier * real_counts[c]; ++t) {
      out.push_back(pool.images[idx[t]], c, pool.sources[idx[t]]);
    }
  }
  return out;
}

/// Seeds derived from the run seed for each randomized stage.
struct StageSeeds {
  std::uint64_t init;
  std::uint64_t shuffle;
  std::uint64_t augment;
  std::uint64_t draw;

  explicit StageSeeds(std::uint64_t seed)
      : init(seed), shuffle(seed + 1), augment(seed + 2), draw(seed + 3) {}
};

inline LabeledImageDataset build_training_set(const ExperimentVariant& variant,
                                              const LabeledImageDataset& real_train,
                                              const LabeledImageDataset* synth_pool,
                                              std::uint64_t seed) {
  variant.validate();
  const StageSeeds seeds(seed);
  switch (variant.family) {
    case Family::kBaselineReal: return real_train;
    case Family::kGeometricDa: return geometric_augment(real_train, seeds.augment);
    default: break;
  }
  if (synth_pool == nullptr) throw Error(variant.label() + " needs a synthetic pool");
  const auto draw = draw_synthetic(real_train, *synth_pool, variant.multiplier, seeds.draw);
  switch (variant.family) {
    case Family::kDataAnonymization: return draw;
    case Family::kSyntheticDa: return concat(real_train, draw);
    case Family::kCombinedDa:
      return concat(geometric_augment(real_train, seeds.augment),
                    geometric_augment(draw, seeds.augment + 1));
    default: break;
  }
  throw Error("unhandled experiment family");
}

/// Every (dataset, variant) cell of the plan. Real-only families appear once
/// per dataset; synthetic-bearing ones once per generator with a pool and
/// multiplier.
inline std::vector<std::pair<std::size_t, ExperimentVariant>> enumerate_cells(const RunConfig& cfg) {
  std::vector<std::pair<std::size_t, ExperimentVariant>> cells;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    for (Family f : cfg.plan.families) {
      if (!uses_synthetic(f)) {
        cells.push_back({d, ExperimentVariant{f, 0, ""}});
        continue;
      }
      for (const auto& g : cfg.generators) {
        if (cfg.datasets[d].synthetic.count(g.id) == 0) continue;
        for (std::size_t m : cfg.plan.multipliers) cells.push_back({d, ExperimentVariant{f, m, g.id}});
      }
    }
  }
  return cells;
}

// ---------------------------------------------------------------------------
// Running

struct GeneratorMetrics {
  double fidelity = 0.0;
  double diversity = 0.0;
  double fid = 0.0;
  double privacy = 0.0;
  std::string feature_source;
  std::string fid_feature_source;
  std::string fingerprint;
};

struct RunSummary {
  std::vector<MetricsRecord> records;
  std::size_t trained = 0;
  std::size_t reused = 0;
  std::vector<std::string> failed_cells;
};

namespace detail {

struct PreparedDataset {
  DatasetSplit split;
  std::map<std::string, LabeledImageDataset> pools;
  std::map<std::string, GeneratorMetrics> metrics;
  std::map<std::string, std::string> failures;  // generator id -> message
};

inline LabeledImageDataset load_pool(const std::filesystem::path& dir, const std::string& gen,
                                     const Image& like) {
  auto pool = load_image_dataset(dir, DatasetRole::kSynthetic, ImageDims{like.height(), like.width()});
  for (auto& s : pool.sources) s = "synthetic:" + gen + "/" + s;
  if (!pool.images.empty() && pool.images.front().channels() != like.channels()) {
    throw Error("synthetic pool " + dir.string() + " has a different channel count than the real data");
  }
  return pool;
}

inline FeatureSet features_or_fallback(const std::optional<std::filesystem::path>& file,
                                       const LabeledImageDataset& ds, const RunConfig& cfg) {
  if (file) return read_embeddings(*file);
  return fallback_features(ds, cfg.fallback_feature_dim, cfg.seed);
}

inline GeneratorMetrics compute_generator_metrics(const RunConfig& cfg, const DatasetConfig& dcfg,
                                                  const SyntheticPoolConfig& pcfg,
                                                  const LabeledImageDataset& real_train,
                                                  const LabeledImageDataset& pool,
                                                  const std::filesystem::path& audit_path) {
  GeneratorMetrics m;
  const FeatureSet real_pr = features_or_fallback(pcfg.real_features, real_train, cfg);
  const FeatureSet synth_pr = features_or_fallback(pcfg.synthetic_features, pool, cfg);
  m.fidelity = precision(real_pr, synth_pr, cfg.manifold_k);
  m.diversity = recall(real_pr, synth_pr, cfg.manifold_k);
  m.feature_source = to_string(real_pr.source);

  const FeatureSet real_fid = pcfg.real_fid_features ? read_embeddings(*pcfg.real_fid_features) : real_pr;
  const FeatureSet synth_fid =
      pcfg.synthetic_fid_features ? read_embeddings(*pcfg.synthetic_fid_features) : synth_pr;
  m.fid = fid(real_fid, synth_fid);
  m.fid_feature_source = to_string(real_fid.source);

  const PrivacyResult priv = privacy_audit(pool, real_train, cfg.privacy, cfg.ssim);
  m.privacy = priv.score;
  Json audit = Json::array();
  for (std::size_t i = 0; i < std::min<std::size_t>(priv.matches.size(), 20); ++i) {
    const auto& mt = priv.matches[i];
    audit.push_back({{"synthetic", pool.sources[mt.synthetic_index]},
                     {"nearest_real", real_train.sources[mt.real_index]},
                     {"ssim", mt.ssim}});
  }
  write_json_file(audit_path, {{"dataset", dcfg.id},
                               {"score", priv.score},
                               {"repeat_means", priv.repeat_means},
                               {"top_matches", audit}});
  return m;
}

}  // namespace detail

/// Runs every cell of the plan and persists results under the output
/// directory:
///   run.json          resolved config and its fingerprint
///   records/*.json    one MetricsRecord per cell
///   generators/*.json cached per-generator metrics and privacy audits
///   checkpoints/      trained classifier per cell (GEVM)
///   summary.json      trained / reused / failed cells
/// Cells whose record already exists with a matching fingerprint are reused
/// without retraining. A failing cell is recorded and does not stop others.
inline RunSummary run_experiment(const RunConfig& cfg, std::ostream* log = nullptr) {
  namespace fs = std::filesystem;
  const fs::path run_dir = cfg.output_dir;
  fs::create_directories(run_dir / "records");
  fs::create_directories(run_dir / "checkpoints");
  fs::create_directories(run_dir / "generators");
  std::mutex log_mutex;
  auto say = [&](const std::string& msg) {
    if (log == nullptr) return;
    std::lock_guard<std::mutex> lock(log_mutex);
    *log << msg << '\n';
  };

  const Json resolved = to_json(cfg);
  write_json_file(run_dir / "run.json", {{"config", resolved}, {"fingerprint", fingerprint(resolved)}});

  // Sampling speed, once per generator. Benchmarks run one at a time.
  std::map<std::string, std::optional<double>> speeds;
  for (const auto& g : cfg.generators) {
    if (g.sampling_speed) {
      speeds[g.id] = g.sampling_speed;
      continue;
    }
    if (!g.adapter) {
      speeds[g.id] = std::nullopt;
      continue;
    }
    const Json key = {{"adapter", detail::adapter_to_json(*g.adapter)}, {"count", g.bench_count},
                      {"warmup", g.warmup}, {"host", cfg.host}};
    const fs::path cache = run_dir / "generators" / (g.id + ".speed.json");
    if (fs::exists(cache)) {
      const Json j = read_json_file(cache);
      if (j.value("fingerprint", "") == fingerprint(key)) {
        speeds[g.id] = j.at("samples_per_second").get<double>();
        continue;
      }
    }
    const fs::path bench_dir = run_dir / "bench" / g.id;
    fs::remove_all(bench_dir);
    say("benchmarking generator " + g.id);
    const auto b = benchmark_generator(*g.adapter, g.bench_count, g.warmup, bench_dir);
    speeds[g.id] = sampling_speed(b.count, b.elapsed_seconds);
    write_json_file(cache, {{"fingerprint", fingerprint(key)}, {"count", b.count},
                            {"elapsed_seconds", b.elapsed_seconds},
                            {"samples_per_second", *speeds[g.id]}, {"host", cfg.host}});
  }

  // Datasets, splits, pools and generator-level metrics.
  std::vector<detail::PreparedDataset> prepared(cfg.datasets.size());
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    const auto& dcfg = cfg.datasets[d];
    auto& prep = prepared[d];
    say("loading dataset " + dcfg.id);
    const auto corpus = load_image_dataset(dcfg.root, DatasetRole::kUnspecified, dcfg.resize);
    prep.split = stratified_split(corpus, dcfg.split, cfg.seed);
    for (const auto& [gen, pcfg] : dcfg.synthetic) {
      const std::string key_name = dcfg.id + "__" + gen;
      try {
        prep.pools.emplace(gen, detail::load_pool(pcfg.pool, gen, prep.split.train.images.front()));
        const Json key = {{"schema_version", kRecordSchemaVersion}, {"dataset", to_json(dcfg)},
                          {"generator", gen}, {"seed", cfg.seed}, {"manifold_k", cfg.manifold_k},
                          {"fallback_feature_dim", cfg.fallback_feature_dim},
                          {"privacy", {{"q", cfg.privacy.q}, {"l", cfg.privacy.l}}},
                          {"ssim", resolved.at("ssim")}};
        const std::string fp = fingerprint(key);
        const fs::path cache = run_dir / "generators" / (key_name + ".json");
        if (fs::exists(cache) && read_json_file(cache).value("fingerprint", "") == fp) {
          const Json j = read_json_file(cache);
          GeneratorMetrics m;
          m.fidelity = j.at("fidelity").get<double>();
          m.diversity = j.at("diversity").get<double>();
          m.fid = j.at("fid").get<double>();
          m.privacy = j.at("privacy").get<double>();
          m.feature_source = j.at("feature_source").get<std::string>();
          m.fid_feature_source = j.at("fid_feature_source").get<std::string>();
          m.fingerprint = fp;
          prep.metrics.emplace(gen, m);
          continue;
        }
        say("scoring generator " + gen + " on " + dcfg.id);
        GeneratorMetrics m = detail::compute_generator_metrics(
            cfg, dcfg, pcfg, prep.split.train, prep.pools.at(gen),
            run_dir / "generators" / (key_name + ".privacy.json"));
        m.fingerprint = fp;
        write_json_file(cache, {{"fingerprint", fp}, {"fidelity", m.fidelity},
                                {"diversity", m.diversity}, {"fid", m.fid}, {"privacy", m.privacy},
                                {"feature_source", m.feature_source},
                                {"fid_feature_source", m.fid_feature_source}});
        prep.metrics.emplace(gen, m);
      } catch (const std::exception& e) {
        prep.failures[gen] = e.what();
        say("generator " + gen + " on " + dcfg.id + " failed: " + e.what());
      }
    }
  }

  // Cells.
  const auto cells = enumerate_cells(cfg);
  std::vector<MetricsRecord> records(cells.size());
  std::vector<char> reused(cells.size(), 0);
  std::atomic<std::size_t> next{0};

  auto run_cell = [&](std::size_t index) {
    const auto& [d, variant] = cells[index];
    const auto& dcfg = cfg.datasets[d];
    const auto& prep = prepared[d];
    MetricsRecord rec;
    rec.dataset_id = dcfg.id;
    rec.generator_id = variant.generator_id;
    rec.variant = variant;
    rec.seed = cfg.seed;
    rec.notes = {{"augmentation", "originals + one random right-angle rotation + hflip + vflip (4x)"},
                 {"synthetic_draws", "class-stratified, nested across multipliers"},
                 {"classifier", to_json(cfg.classifier)},
                 {"attack", to_json(cfg.attack)},
                 {"host", cfg.host},
                 {"split_sizes", {prep.split.train.size(), prep.split.val.size(), prep.split.test.size()}}};

    Json key = {{"schema_version", kRecordSchemaVersion}, {"dataset", to_json(dcfg)},
                {"variant", to_json(variant)}, {"classifier", to_json(cfg.classifier)},
                {"attack", to_json(cfg.attack)}, {"seed", cfg.seed}};
    if (uses_synthetic(variant.family)) {
      const auto it = prep.metrics.find(variant.generator_id);
      key["generator_metrics"] = it == prep.metrics.end() ? Json(nullptr) : Json(it->second.fingerprint);
      key["sampling_speed"] = optional_to_json(speeds.at(variant.generator_id));
    }
    rec.fingerprint = fingerprint(key);
    const fs::path record_path = run_dir / "records" / (rec.cell_id() + ".json");

    if (fs::exists(record_path)) {
      try {
        MetricsRecord old = record_from_json(read_json_file(record_path));
        if (old.ok() && old.fingerprint == rec.fingerprint) {
          records[index] = std::move(old);
          reused[index] = 1;
          return;
        }
      } catch (const std::exception&) {
        // Unreadable stale record: recompute.
      }
    }

    try {
      const LabeledImageDataset* pool = nullptr;
      if (uses_synthetic(variant.family)) {
        const auto fail = prep.failures.find(variant.generator_id);
        if (fail != prep.failures.end()) throw Error("generator stage failed: " + fail->second);
        pool = &prep.pools.at(variant.generator_id);
        const auto& gm = prep.metrics.at(variant.generator_id);
        rec.fidelity = gm.fidelity;
        rec.diversity = gm.diversity;
        rec.fid = gm.fid;
        rec.privacy = gm.privacy;
        rec.sampling_speed = speeds.at(variant.generator_id);
        rec.notes["feature_source"] = gm.feature_source;
        rec.notes["fid_feature_source"] = gm.fid_feature_source;
      }
      const auto training = build_training_set(variant, prep.split.train, pool, cfg.seed);
      check_no_test_leakage(training, prep.split.test);
      rec.training_size = training.size();
      rec.notes["leakage_check"] = "passed";

      const Image& like = prep.split.train.images.front();
      const StageSeeds seeds(cfg.seed);
      const Classifier init = build_classifier(like.height(), like.width(), like.channels(),
                                               prep.split.train.num_classes(), cfg.classifier.variant,
                                               seeds.init, cfg.classifier.hidden);
      TrainHyper h = cfg.classifier.train;
      h.seed = seeds.shuffle;
      say("training " + rec.cell_id() + " on " + std::to_string(training.size()) + " images");
      const TrainResult tr = train(init, training, prep.split.val, h);
      save_checkpoint(tr.model, run_dir / "checkpoints" / (rec.cell_id() + ".gevm"));
      rec.best_epoch = tr.best_epoch;
      rec.training_curve = tr.curve;

      const std::size_t k = std::min(cfg.classifier.top_k, tr.model.num_classes());
      rec.utility = evaluate(tr.model, prep.split.test, k);
      const AttackReport attack = adversarial_accuracy(tr.model, prep.split.test, cfg.attack, k);
      rec.robustness = attack.adversarial;
      rec.notes["attack_breakdown"] = {{"flipped", attack.flipped},
                                       {"degenerate", attack.degenerate},
                                       {"clean_correct", attack.clean_correct},
                                       {"clean_correct_survived", attack.clean_correct_survived}};
    } catch (const std::exception& e) {
      rec.status = "failed";
      rec.error = e.what();
      say("cell " + rec.cell_id() + " failed: " + e.what());
    }
    write_json_file(record_path, to_json(rec));
    records[index] = std::move(rec);
  };

  const std::size_t workers = std::min(cfg.workers, std::max<std::size_t>(cells.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < cells.size(); i = next++) run_cell(i);
    });
  }
  for (auto& t : pool) t.join();

  RunSummary summary;
  Json failed = Json::array();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (reused[i]) ++summary.reused;
    else ++summary.trained;
    if (!records[i].ok()) {
      summary.failed_cells.push_back(records[i].cell_id());
      failed.push_back({{"cell", records[i].cell_id()}, {"error", records[i].error}});
    }
  }
  summary.records = std::move(records);
  write_json_file(run_dir / "summary.json", {{"cells", cells.size()},
                                             {"trained", summary.trained},
                                             {"reused", summary.reused},
                                             {"failed", failed}});
  return summary;
}

}  // namespace trilemma
