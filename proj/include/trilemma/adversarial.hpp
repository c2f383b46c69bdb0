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
#include <cmath>
#include <concepts>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include "trilemma/classifier.hpp"
#include "trilemma/error.hpp"

namespace trilemma {

/// Anything DeepFool can attack: logits and their input Jacobian over a flat
/// input vector.
template <typename M>
concept DifferentiableModel = requires(const M& m, std::span<const double> x) {
  { m.num_classes() } -> std::convertible_to<std::size_t>;
  { m.logits(x) } -> std::same_as<std::vector<double>>;
  { m.input_jacobian(x) } -> std::same_as<std::vector<std::vector<double>>>;
};

/// Affine multiclass model, logits = W x + b with W stored row-major.
struct LinearModel {
  std::size_t classes = 0;
  std::size_t inputs = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  std::size_t num_classes() const noexcept { return classes; }

  std::vector<double> logits(std::span<const double> x) const {
    std::vector<double> out(bias);
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t i = 0; i < inputs; ++i) out[c] += weights[c * inputs + i] * x[i];
    }
    return out;
  }

  std::vector<std::vector<double>> input_jacobian(std::span<const double>) const {
    std::vector<std::vector<double>> rows(classes);
    for (std::size_t c = 0; c < classes; ++c) {
      rows[c].assign(weights.begin() + static_cast<std::ptrdiff_t>(c * inputs),
                     weights.begin() + static_cast<std::ptrdiff_t>((c + 1) * inputs));
    }
    return rows;
  }
};

struct AttackConfig {
  std::size_t max_iterations = 5;
  double overshoot = 0.02;
  bool clamp_to_valid_range = true;

  void validate() const {
    if (max_iterations < 1) throw Error("attack needs at least one iteration");
    if (!(overshoot >= 0.0)) throw Error("overshoot must be nonnegative");
  }
};

/// Added to each linearized step so that a point sitting exactly on a
/// boundary still crosses it.
inline constexpr double kDeepFoolMinStep = 1e-9;

struct AttackResult {
  std::vector<double> perturbed;
  double perturbation_l2 = 0.0;
  bool flipped = false;
  bool degenerate_gradient = false;
  std::size_t iterations = 0;
  std::size_t original_class = 0;
  std::size_t final_class = 0;
};

/// Multiclass DeepFool. Each iteration linearizes every competing class j
/// around the current point, steps onto the nearest linearized boundary
/// |f_j - f_c| / |grad f_j - grad f_c| and accumulates the step. The total
/// perturbation is scaled by (1 + overshoot) and optionally clipped to [0,1].
template <DifferentiableModel M>
AttackResult deepfool(const M& model, std::span<const double> input, const AttackConfig& cfg) {
  cfg.validate();
  const std::size_t n = input.size();
  const std::size_t classes = model.num_classes();
  AttackResult res;
  res.perturbed.assign(input.begin(), input.end());
  const std::vector<double> clean_logits = model.logits(input);
  res.original_class = argmax(clean_logits);
  res.final_class = res.original_class;
  if (classes < 2) {
    res.degenerate_gradient = true;
    return res;
  }

  const double scale = 1.0 + cfg.overshoot;
  std::vector<double> total(n, 0.0);
  std::vector<double> x(input.begin(), input.end());
  std::vector<double> w(n);
  for (std::size_t it = 0; it < cfg.max_iterations; ++it) {
    const std::vector<double> f = model.logits(x);
    if (argmax(f) != res.original_class) break;
    const auto jac = model.input_jacobian(x);
    const auto& g0 = jac[res.original_class];
    double best = std::numeric_limits<double>::infinity();
    std::size_t best_class = classes;
    double best_norm = 0.0;
    for (std::size_t j = 0; j < classes; ++j) {
      if (j == res.original_class) continue;
      double norm2 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const double d = jac[j][i] - g0[i];
        norm2 += d * d;
      }
      if (!(norm2 > 0.0)) continue;
      const double norm = std::sqrt(norm2);
      const double dist = std::abs(f[j] - f[res.original_class]) / norm;
      if (dist < best) {
        best = dist;
        best_class = j;
        best_norm = norm;
      }
    }
    if (best_class == classes) {
      res.degenerate_gradient = true;
      break;
    }
    const double step = (best + kDeepFoolMinStep) / best_norm;
    for (std::size_t i = 0; i < n; ++i) {
      total[i] += step * (jac[best_class][i] - g0[i]);
      x[i] = input[i] + scale * total[i];
      // Each iterate stays a valid image.
      if (cfg.clamp_to_valid_range) x[i] = std::clamp(x[i], 0.0, 1.0);
    }
    ++res.iterations;
  }

  double norm2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    res.perturbed[i] = x[i];
    const double d = x[i] - input[i];
    norm2 += d * d;
  }
  res.perturbation_l2 = std::sqrt(norm2);
  res.final_class = argmax(model.logits(res.perturbed));
  res.flipped = res.final_class != res.original_class;
  return res;
}

inline AttackResult deepfool(const Classifier& model, const Image& img, const AttackConfig& cfg) {
  model.check_image(img);
  const auto px = img.pixels();
  const std::vector<double> x(px.begin(), px.end());
  return deepfool(model, std::span<const double>(x), cfg);
}

struct AttackReport {
  EvalResult clean;
  EvalResult adversarial;
  std::vector<double> perturbation_norms;
  std::size_t flipped = 0;
  std::size_t degenerate = 0;
  /// Breakdown over test points the model classified correctly before the
  /// attack.
  std::size_t clean_correct = 0;
  std::size_t clean_correct_survived = 0;
};

/// Attacks every test image independently and scores the perturbed set.
inline AttackReport adversarial_accuracy(const Classifier& model, const LabeledImageDataset& test,
                                         const AttackConfig& cfg, std::size_t k = 1) {
  if (test.empty()) throw Error("cannot attack an empty test set");
  AttackReport rep;
  std::vector<std::vector<double>> clean_logits, adv_logits;
  for (std::size_t i = 0; i < test.size(); ++i) {
    const AttackResult r = deepfool(model, test.images[i], cfg);
    const auto px = test.images[i].pixels();
    clean_logits.push_back(model.logits(std::vector<double>(px.begin(), px.end())));
    adv_logits.push_back(model.logits(r.perturbed));
    rep.perturbation_norms.push_back(r.perturbation_l2);
    rep.flipped += r.flipped;
    rep.degenerate += r.degenerate_gradient;
    if (r.original_class == test.labels[i]) {
      ++rep.clean_correct;
      rep.clean_correct_survived += r.final_class == test.labels[i];
    }
  }
  rep.clean = score_logits(clean_logits, test.labels, model.num_classes(), k);
  rep.adversarial = score_logits(adv_logits, test.labels, model.num_classes(), k);
  return rep;
}

}  // namespace trilemma
