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

// trilemma-eval: command-line front end for the evaluation library.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "trilemma.hpp"

namespace fs = std::filesystem;
using trilemma::Json;

namespace {

std::optional<trilemma::ImageDims> parse_dims(const std::string& s) {
  if (s.empty()) return std::nullopt;
  const auto x = s.find('x');
  if (x == std::string::npos) throw trilemma::Error("resize must look like HxW, got '" + s + "'");
  return trilemma::ImageDims{std::stoul(s.substr(0, x)), std::stoul(s.substr(x + 1))};
}

void emit(const Json& j, const std::string& out) {
  if (out.empty() || out == "-") {
    std::cout << j.dump(2) << '\n';
  } else {
    trilemma::write_json_file(out, j);
    std::cerr << "wrote " << out << '\n';
  }
}

trilemma::LabeledImageDataset load_dir(const std::string& dir, const std::string& resize,
                                       trilemma::DatasetRole role = trilemma::DatasetRole::kUnspecified) {
  return trilemma::load_image_dataset(dir, role, parse_dims(resize));
}

// A feature argument is either a GEVB file or an image directory; the
// latter is embedded with the pixel-space fallback projector.
trilemma::FeatureSet load_features(const std::string& path, const std::string& resize, std::size_t dim,
                                   std::uint64_t seed) {
  if (fs::is_directory(path)) return trilemma::fallback_features(load_dir(path, resize), dim, seed);
  return trilemma::read_embeddings(path);
}

Json histogram(const std::vector<double>& v, std::size_t bins) {
  Json h = {{"bins", bins}, {"edges", Json::array()}, {"counts", Json::array()}};
  if (v.empty() || bins == 0) return h;
  const double lo = *std::min_element(v.begin(), v.end());
  const double hi = *std::max_element(v.begin(), v.end());
  const double width = hi > lo ? (hi - lo) / static_cast<double>(bins) : 1.0;
  std::vector<std::size_t> counts(bins, 0);
  for (double x : v) {
    auto b = static_cast<std::size_t>((x - lo) / width);
    counts[std::min(b, bins - 1)]++;
  }
  for (std::size_t i = 0; i <= bins; ++i) h["edges"].push_back(lo + width * static_cast<double>(i));
  h["counts"] = counts;
  return h;
}

Json class_counts_json(const trilemma::LabeledImageDataset& ds) {
  Json j = Json::object();
  const auto counts = ds.class_counts();
  for (std::size_t c = 0; c < ds.num_classes(); ++c) j[ds.class_names[c]] = counts[c];
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Extended generative-learning-trilemma evaluation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "trilemma-eval 0.1.0");

  // ingest
  auto* ingest = app.add_subcommand("ingest", "Load a class-per-directory corpus and split it");
  std::string ingest_root, ingest_resize, ingest_out, ingest_dump_splits, ingest_dump_aug;
  std::vector<double> ingest_split{0.8, 0.1, 0.1};
  std::uint64_t ingest_seed = 0;
  ingest->add_option("--root", ingest_root, "Dataset root (one subdirectory per class)")->required();
  ingest->add_option("--resize", ingest_resize, "Resize target HxW");
  ingest->add_option("--split", ingest_split, "train val test fractions")->expected(3);
  ingest->add_option("--seed", ingest_seed, "Split seed");
  ingest->add_option("--out", ingest_out, "Write the summary JSON here (default stdout)");
  ingest->add_option("--dump-splits", ingest_dump_splits, "Write train/val/test PNG trees here");
  ingest->add_option("--dump-augmented", ingest_dump_aug, "Write the geometric-DA training set here");

  // toy
  auto* toy = app.add_subcommand("toy", "Write a synthetic toy corpus (Gaussian spots)");
  std::string toy_out;
  std::size_t toy_per_class = 100, toy_classes = 2, toy_size = 8, toy_channels = 1;
  std::uint64_t toy_seed = 0;
  double toy_noise = 0.15;
  toy->add_option("--out", toy_out)->required();
  toy->add_option("--per-class", toy_per_class);
  toy->add_option("--classes", toy_classes);
  toy->add_option("--size", toy_size);
  toy->add_option("--channels", toy_channels);
  toy->add_option("--noise", toy_noise);
  toy->add_option("--seed", toy_seed);

  // embed-fallback
  auto* embed = app.add_subcommand("embed-fallback", "Pixel-space random-projection embeddings (GEVB)");
  std::string embed_data, embed_resize, embed_out;
  std::size_t embed_dim = 64;
  std::uint64_t embed_seed = 0;
  embed->add_option("--data", embed_data)->required();
  embed->add_option("--resize", embed_resize);
  embed->add_option("--dim", embed_dim);
  embed->add_option("--seed", embed_seed);
  embed->add_option("--out", embed_out)->required();

  // manifold
  auto* manifold = app.add_subcommand("manifold", "k-NN precision (fidelity) and recall (diversity)");
  std::string man_real, man_synth, man_resize, man_out;
  std::size_t man_k = trilemma::kDefaultManifoldK, man_dim = 64;
  std::uint64_t man_seed = 0;
  manifold->add_option("--real", man_real, "GEVB file or image directory")->required();
  manifold->add_option("--synthetic", man_synth, "GEVB file or image directory")->required();
  manifold->add_option("--k", man_k);
  manifold->add_option("--resize", man_resize);
  manifold->add_option("--fallback-dim", man_dim);
  manifold->add_option("--seed", man_seed);
  manifold->add_option("--out", man_out);

  // fid
  auto* fidc = app.add_subcommand("fid", "Frechet distance between two feature sets");
  std::string fid_real, fid_synth, fid_resize, fid_out;
  std::size_t fid_dim = 64;
  std::uint64_t fid_seed = 0;
  fidc->add_option("--real", fid_real, "GEVB file or image directory")->required();
  fidc->add_option("--synthetic", fid_synth, "GEVB file or image directory")->required();
  fidc->add_option("--resize", fid_resize);
  fidc->add_option("--fallback-dim", fid_dim);
  fidc->add_option("--seed", fid_seed);
  fidc->add_option("--out", fid_out);

  // privacy
  auto* priv = app.add_subcommand("privacy", "Max-SSIM memorization audit");
  std::string priv_real, priv_synth, priv_resize, priv_out;
  trilemma::PrivacyConfig priv_cfg;
  std::size_t priv_top = 20;
  priv->add_option("--real", priv_real, "Real training images")->required();
  priv->add_option("--synthetic", priv_synth, "Synthetic images")->required();
  priv->add_option("--resize", priv_resize);
  priv->add_option("--q", priv_cfg.q);
  priv->add_option("--l", priv_cfg.l);
  priv->add_option("--seed", priv_cfg.seed);
  priv->add_option("--top", priv_top, "Number of closest matches to list");
  priv->add_option("--out", priv_out);

  // train
  auto* trainc = app.add_subcommand("train", "Train the small CNN on a corpus (stratified split)");
  std::string tr_data, tr_resize, tr_out, tr_variant = "four-block", tr_metrics;
  std::size_t tr_hidden = 128;
  std::uint64_t tr_seed = 0;
  trilemma::TrainHyper tr_hyper;
  trainc->add_option("--data", tr_data)->required();
  trainc->add_option("--resize", tr_resize);
  trainc->add_option("--variant", tr_variant)->check(CLI::IsMember({"four-block", "three-block"}));
  trainc->add_option("--hidden", tr_hidden);
  trainc->add_option("--epochs", tr_hyper.epochs);
  trainc->add_option("--batch-size", tr_hyper.batch_size);
  trainc->add_option("--lr", tr_hyper.learning_rate);
  trainc->add_option("--seed", tr_seed);
  trainc->add_option("--out", tr_out, "Checkpoint path (GEVM)")->required();
  trainc->add_option("--metrics", tr_metrics, "Write training curve and test scores here");

  // attack
  auto* attack = app.add_subcommand("attack", "DeepFool robustness of a checkpoint on a test set");
  std::string at_model, at_data, at_resize, at_out;
  trilemma::AttackConfig at_cfg;
  std::size_t at_k = 1, at_bins = 10;
  bool at_no_clamp = false;
  attack->add_option("--model", at_model)->required();
  attack->add_option("--data", at_data, "Test images (class-per-directory)")->required();
  attack->add_option("--resize", at_resize);
  attack->add_option("--iterations", at_cfg.max_iterations);
  attack->add_option("--overshoot", at_cfg.overshoot);
  attack->add_flag("--no-clamp", at_no_clamp, "Do not clamp perturbed pixels to [0,1]");
  attack->add_option("--top-k", at_k);
  attack->add_option("--bins", at_bins, "Histogram bins for perturbation norms");
  attack->add_option("--out", at_out);

  // bench
  auto* bench = app.add_subcommand("bench", "Measure generator sampling speed (samples/s)");
  std::string b_command, b_dir, b_out;
  double b_delay_ms = -1.0;
  std::size_t b_count = 128, b_warmup = 16, b_size = 32, b_channels = 1;
  bench->add_option("--stub-delay-ms", b_delay_ms, "Use the stub generator with this per-sample delay");
  bench->add_option("--command", b_command, "Shell template with {count} {outdir} [{class}]");
  bench->add_option("--count", b_count);
  bench->add_option("--warmup", b_warmup);
  bench->add_option("--size", b_size, "Stub image side");
  bench->add_option("--channels", b_channels, "Stub image channels");
  bench->add_option("--samples-dir", b_dir, "Where generated images go")->required();
  bench->add_option("--out", b_out);

  // run
  auto* run = app.add_subcommand("run", "Run the full experiment plan from a config file");
  std::string run_config;
  std::size_t run_workers = 0;
  run->add_option("--config", run_config)->required()->check(CLI::ExistingFile);
  run->add_option("--workers", run_workers, "Parallel cells (overrides the config)");

  // report
  auto* report = app.add_subcommand("report", "Tables and plots from a run directory");
  std::string rep_run, rep_order = "cells";
  std::vector<std::string> rep_formats;
  report->add_option("--run", rep_run)->required()->check(CLI::ExistingDirectory);
  report->add_option("--format", rep_formats, "csv, json and/or svg (default all)")
      ->check(CLI::IsMember({"csv", "json", "svg"}))
      ->delimiter(',');
  report->add_option("--radar-order", rep_order, "cells: range over all cells; means: range over generator means")
      ->check(CLI::IsMember({"cells", "means"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*ingest) {
      const auto corpus = load_dir(ingest_root, ingest_resize);
      const trilemma::SplitRatios ratios{ingest_split[0], ingest_split[1], ingest_split[2]};
      const auto split = trilemma::stratified_split(corpus, ratios, ingest_seed);
      const auto& first = corpus.images.front();
      Json j = {{"root", ingest_root},
                {"images", corpus.size()},
                {"classes", corpus.class_names},
                {"shape", {first.height(), first.width(), first.channels()}},
                {"class_counts", class_counts_json(corpus)},
                {"train", class_counts_json(split.train)},
                {"val", class_counts_json(split.val)},
                {"test", class_counts_json(split.test)},
                {"seed", ingest_seed}};
      if (!ingest_dump_splits.empty()) {
        trilemma::save_image_dataset(split.train, fs::path(ingest_dump_splits) / "train");
        trilemma::save_image_dataset(split.val, fs::path(ingest_dump_splits) / "val");
        trilemma::save_image_dataset(split.test, fs::path(ingest_dump_splits) / "test");
      }
      if (!ingest_dump_aug.empty()) {
        const auto aug = trilemma::geometric_augment(split.train, ingest_seed + 2);
        trilemma::save_image_dataset(aug, ingest_dump_aug);
        j["augmented"] = aug.size();
      }
      emit(j, ingest_out);
    } else if (*toy) {
      const auto ds = trilemma::make_blob_dataset(toy_per_class, toy_classes, toy_size, toy_seed, toy_noise,
                                                  toy_channels);
      trilemma::save_image_dataset(ds, toy_out);
      std::cerr << "wrote " << ds.size() << " images to " << toy_out << '\n';
    } else if (*embed) {
      const auto ds = load_dir(embed_data, embed_resize);
      trilemma::write_embeddings(trilemma::fallback_features(ds, embed_dim, embed_seed), embed_out);
      std::cerr << "wrote " << ds.size() << "x" << embed_dim << " embeddings to " << embed_out << '\n';
    } else if (*manifold) {
      const auto real = load_features(man_real, man_resize, man_dim, man_seed);
      const auto synth = load_features(man_synth, man_resize, man_dim, man_seed);
      emit({{"precision", trilemma::precision(real, synth, man_k)},
            {"recall", trilemma::recall(real, synth, man_k)},
            {"k", man_k},
            {"real", {{"count", real.count()}, {"dim", real.dim()}, {"source", to_string(real.source)}}},
            {"synthetic", {{"count", synth.count()}, {"dim", synth.dim()}, {"source", to_string(synth.source)}}}},
           man_out);
    } else if (*fidc) {
      const auto real = load_features(fid_real, fid_resize, fid_dim, fid_seed);
      const auto synth = load_features(fid_synth, fid_resize, fid_dim, fid_seed);
      emit({{"fid", trilemma::fid(real, synth)},
            {"real_count", real.count()},
            {"synthetic_count", synth.count()},
            {"dim", real.dim()},
            {"source", to_string(real.source)}},
           fid_out);
    } else if (*priv) {
      const auto real = load_dir(priv_real, priv_resize, trilemma::DatasetRole::kRealTrain);
      const auto synth = load_dir(priv_synth, priv_resize, trilemma::DatasetRole::kSynthetic);
      const auto res = trilemma::privacy_audit(synth, real, priv_cfg);
      Json matches = Json::array();
      for (std::size_t i = 0; i < std::min(priv_top, res.matches.size()); ++i) {
        const auto& m = res.matches[i];
        matches.push_back({{"synthetic", synth.sources[m.synthetic_index]},
                           {"nearest_real", real.sources[m.real_index]},
                           {"ssim", m.ssim}});
      }
      emit({{"score", res.score}, {"q", priv_cfg.q}, {"l", priv_cfg.l}, {"seed", priv_cfg.seed},
            {"repeat_means", res.repeat_means}, {"top_matches", matches}},
           priv_out);
    } else if (*trainc) {
      const auto corpus = load_dir(tr_data, tr_resize);
      const auto split = trilemma::stratified_split(corpus, {}, tr_seed);
      const auto& like = corpus.images.front();
      const auto variant = tr_variant == "three-block" ? trilemma::ClassifierVariant::kThreeBlock
                                                       : trilemma::ClassifierVariant::kFourBlock;
      const auto init = trilemma::build_classifier(like.height(), like.width(), like.channels(),
                                                   corpus.num_classes(), variant, tr_seed, tr_hidden);
      tr_hyper.seed = tr_seed + 1;
      const auto res = trilemma::train(init, split.train, split.val, tr_hyper);
      trilemma::save_checkpoint(res.model, tr_out);
      const auto eval = trilemma::evaluate(res.model, split.test, 1);
      Json curve = Json::array();
      for (const auto& e : res.curve) {
        curve.push_back({{"epoch", e.epoch}, {"train_loss", e.train_loss}, {"val_loss", e.val_loss},
                         {"val_accuracy", e.val_accuracy}});
      }
      const Json j = {{"checkpoint", tr_out}, {"best_epoch", res.best_epoch},
                      {"test", trilemma::to_json(eval)}, {"curve", curve}};
      if (tr_metrics.empty()) {
        std::cerr << "best epoch " << res.best_epoch << ", test accuracy " << eval.accuracy << '\n';
      }
      emit(j, tr_metrics.empty() ? "-" : tr_metrics);
    } else if (*attack) {
      const auto model = trilemma::load_checkpoint(at_model);
      const auto test = load_dir(at_data, at_resize, trilemma::DatasetRole::kRealTest);
      at_cfg.clamp_to_valid_range = !at_no_clamp;
      const auto rep = trilemma::adversarial_accuracy(model, test, at_cfg, at_k);
      emit({{"clean", trilemma::to_json(rep.clean)},
            {"adversarial", trilemma::to_json(rep.adversarial)},
            {"flipped", rep.flipped},
            {"degenerate_gradient", rep.degenerate},
            {"clean_correct", rep.clean_correct},
            {"clean_correct_survived", rep.clean_correct_survived},
            {"perturbation_l2_histogram", histogram(rep.perturbation_norms, at_bins)},
            {"attack", {{"iterations", at_cfg.max_iterations}, {"overshoot", at_cfg.overshoot},
                        {"clamp", at_cfg.clamp_to_valid_range}}}},
           at_out);
    } else if (*bench) {
      if ((b_delay_ms >= 0.0) == !b_command.empty()) {
        throw trilemma::Error("pass exactly one of --stub-delay-ms or --command");
      }
      trilemma::GeneratorAdapter g = trilemma::CommandGenerator{b_command};
      if (b_delay_ms >= 0.0) {
        g = trilemma::StubGenerator{b_delay_ms / 1000.0, b_size, b_size, b_channels, 0};
      }
      trilemma::validate(g);
      const auto res = trilemma::benchmark_generator(g, b_count, b_warmup, b_dir);
      emit({{"count", res.count},
            {"elapsed_seconds", res.elapsed_seconds},
            {"samples_per_second", trilemma::sampling_speed(res.count, res.elapsed_seconds)},
            {"warmup", b_warmup},
            {"samples_dir", res.samples_dir.string()}},
           b_out);
    } else if (*run) {
      auto cfg = trilemma::load_run_config(run_config);
      if (run_workers > 0) cfg.workers = run_workers;
      const auto summary = trilemma::run_experiment(cfg, &std::cerr);
      std::cout << "cells: " << summary.records.size() << " trained: " << summary.trained
                << " reused: " << summary.reused << " failed: " << summary.failed_cells.size() << '\n';
      for (const auto& c : summary.failed_cells) std::cout << "  failed " << c << '\n';
      std::cout << "records in " << (cfg.output_dir / "records").string() << '\n';
      return summary.failed_cells.empty() ? 0 : 3;
    } else if (*report) {
      trilemma::ReportFormats formats{rep_formats.empty(), rep_formats.empty(), rep_formats.empty()};
      for (const auto& f : rep_formats) {
        if (f == "csv") formats.csv = true;
        if (f == "json") formats.json = true;
        if (f == "svg") formats.svg = true;
      }
      const auto order = rep_order == "means" ? trilemma::RadarOrder::kMeanThenNormalize
                                              : trilemma::RadarOrder::kCellsThenMean;
      const auto records = trilemma::load_records(fs::path(rep_run) / "records");
      const bool any_synthetic = std::any_of(records.begin(), records.end(), [](const auto& r) {
        return trilemma::uses_synthetic(r.variant.family);
      });
      if (any_synthetic) {
        for (const auto& w : trilemma::normalize_for_radar(records, order).warnings) {
          std::cerr << "warning: " << w << '\n';
        }
      }
      for (const auto& p : trilemma::emit_report(rep_run, formats, order)) std::cout << p.string() << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
