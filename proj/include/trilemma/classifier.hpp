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
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"

namespace trilemma {

/// Variance gain of the logit layer at initialization (std = sqrt(gain / fan_in)).
inline constexpr double kLogitInitGain = 0.01;

/// Conv blocks (3x3, stride 1, padding 1, ReLU, 2x2 max-pool) followed by
/// two fully connected layers.
struct Architecture {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t in_channels = 1;
  std::vector<std::size_t> block_channels;
  std::size_t hidden = 128;
  std::size_t num_classes = 2;

  std::size_t input_size() const noexcept { return height * width * in_channels; }
  std::size_t pooled_height() const noexcept { return height >> block_channels.size(); }
  std::size_t pooled_width() const noexcept { return width >> block_channels.size(); }
  std::size_t flat_size() const noexcept {
    return pooled_height() * pooled_width() * block_channels.back();
  }

  /// sum over blocks of (9 * c_in * c_out + c_out)
  ///   + (flat * hidden + hidden) + (hidden * classes + classes)
  std::size_t parameter_count() const noexcept {
    std::size_t n = 0;
    std::size_t cin = in_channels;
    for (std::size_t cout : block_channels) {
      n += 9 * cin * cout + cout;
      cin = cout;
    }
    return n + flat_size() * hidden + hidden + hidden * num_classes + num_classes;
  }

  void validate() const {
    if (block_channels.empty()) throw Error("classifier needs at least one conv block");
    if (in_channels != 1 && in_channels != 3) throw Error("classifier input must have 1 or 3 channels");
    if (num_classes < 1 || hidden < 1) throw Error("classifier needs at least one class and hidden unit");
    const std::size_t div = std::size_t{1} << block_channels.size();
    if (height == 0 || width == 0 || height % div != 0 || width % div != 0) {
      throw Error("input " + std::to_string(height) + "x" + std::to_string(width) +
                  " must be divisible by " + std::to_string(div) + " for " +
                  std::to_string(block_channels.size()) + " pooling stages");
    }
  }

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

/// kFourBlock: 8-16-32-64 feature maps. kThreeBlock: 16-32-64.
enum class ClassifierVariant { kFourBlock, kThreeBlock };

inline const char* to_string(ClassifierVariant v) {
  return v == ClassifierVariant::kFourBlock ? "four-block" : "three-block";
}

inline Architecture make_architecture(std::size_t height, std::size_t width, std::size_t channels,
                                      std::size_t num_classes, ClassifierVariant variant,
                                      std::size_t hidden = 128) {
  Architecture a;
  a.height = height;
  a.width = width;
  a.in_channels = channels;
  a.num_classes = num_classes;
  a.hidden = hidden;
  a.block_channels = variant == ClassifierVariant::kFourBlock
                         ? std::vector<std::size_t>{8, 16, 32, 64}
                         : std::vector<std::size_t>{16, 32, 64};
  a.validate();
  return a;
}

/// Intermediate values of one forward pass, kept for the backward pass.
struct ForwardTrace {
  std::vector<std::vector<double>> block_inputs;   // CHW, one per block
  std::vector<std::vector<double>> pre_relu;       // conv outputs
  std::vector<std::vector<std::uint32_t>> argmax;  // pooled position -> source index
  std::vector<double> flat;
  std::vector<double> hidden_pre;
  std::vector<double> logits;
};

class Classifier {
 public:
  Classifier() = default;

  /// Zero-initialized parameters.
  explicit Classifier(Architecture arch) : arch_(std::move(arch)) {
    arch_.validate();
    layout();
    params_.assign(arch_.parameter_count(), 0.0);
  }

  /// He-normal weights (std sqrt(2 / fan_in)) for the ReLU layers,
  /// std sqrt(kLogitInitGain / fan_in) for the logit layer; zero biases.
  static Classifier he_initialized(Architecture arch, std::uint64_t seed) {
    Classifier m(std::move(arch));
    std::mt19937_64 rng(seed);
    auto fill = [&](std::size_t offset, std::size_t count, std::size_t fan_in, double gain = 2.0) {
      std::normal_distribution<double> normal(0.0, std::sqrt(gain / static_cast<double>(fan_in)));
      for (std::size_t i = 0; i < count; ++i) m.params_[offset + i] = normal(rng);
    };
    std::size_t cin = m.arch_.in_channels;
    for (std::size_t b = 0; b < m.blocks_.size(); ++b) {
      const std::size_t cout = m.arch_.block_channels[b];
      fill(m.blocks_[b].weight, 9 * cin * cout, 9 * cin);
      cin = cout;
    }
    fill(m.fc1_weight_, m.arch_.flat_size() * m.arch_.hidden, m.arch_.flat_size());
    // Logit layer: no ReLU follows, and pooled activations are large, so a
    // small scale keeps the initial loss near ln(C).
    fill(m.fc2_weight_, m.arch_.hidden * m.arch_.num_classes, m.arch_.hidden, kLogitInitGain);
    return m;
  }

  const Architecture& architecture() const noexcept { return arch_; }
  std::size_t num_classes() const noexcept { return arch_.num_classes; }
  std::size_t input_size() const noexcept { return arch_.input_size(); }

  std::span<const double> parameters() const noexcept { return params_; }
  std::span<double> parameters() noexcept { return params_; }

  /// Final affine layer, row-major (classes x hidden), then its bias.
  std::span<double> output_weights() noexcept {
    return {params_.data() + fc2_weight_, arch_.hidden * arch_.num_classes};
  }
  std::span<double> output_bias() noexcept {
    return {params_.data() + fc2_bias_, arch_.num_classes};
  }

  friend bool operator==(const Classifier& a, const Classifier& b) {
    return a.arch_ == b.arch_ && a.params_ == b.params_;
  }

  /// `input` is an image buffer in the Image layout (row, column, channel).
  ForwardTrace forward_trace(std::span<const double> input) const {
    check_input(input.size());
    ForwardTrace t;
    std::vector<double> x = to_chw(input);
    std::size_t h = arch_.height, w = arch_.width, cin = arch_.in_channels;
    for (std::size_t b = 0; b < blocks_.size(); ++b) {
      const std::size_t cout = arch_.block_channels[b];
      std::vector<double> z = conv_forward(x, h, w, cin, cout, blocks_[b]);
      t.block_inputs.push_back(std::move(x));
      std::vector<double> a(z.size());
      for (std::size_t i = 0; i < z.size(); ++i) a[i] = relu(z[i]);
      std::vector<std::uint32_t> idx;
      x = max_pool(a, h, w, cout, idx);
      t.pre_relu.push_back(std::move(z));
      t.argmax.push_back(std::move(idx));
      h /= 2;
      w /= 2;
      cin = cout;
    }
    t.flat = std::move(x);

    const std::size_t flat = arch_.flat_size();
    t.hidden_pre.assign(arch_.hidden, 0.0);
    for (std::size_t j = 0; j < arch_.hidden; ++j) {
      const double* row = params_.data() + fc1_weight_ + j * flat;
      double acc = params_[fc1_bias_ + j];
      for (std::size_t i = 0; i < flat; ++i) acc += row[i] * t.flat[i];
      t.hidden_pre[j] = acc;
    }
    t.logits.assign(arch_.num_classes, 0.0);
    for (std::size_t c = 0; c < arch_.num_classes; ++c) {
      const double* row = params_.data() + fc2_weight_ + c * arch_.hidden;
      double acc = params_[fc2_bias_ + c];
      for (std::size_t j = 0; j < arch_.hidden; ++j) {
        acc += row[j] * relu(t.hidden_pre[j]);
      }
      t.logits[c] = acc;
    }
    return t;
  }

  std::vector<double> logits(std::span<const double> input) const {
    return forward_trace(input).logits;
  }

  std::vector<double> logits(const Image& img) const {
    check_image(img);
    const auto px = img.pixels();
    const std::vector<double> x(px.begin(), px.end());
    return logits(x);
  }

  std::vector<std::vector<double>> logits_batch(std::span<const Image> images) const {
    std::vector<std::vector<double>> out;
    out.reserve(images.size());
    for (const auto& img : images) out.push_back(logits(img));
    return out;
  }

  /// Backpropagates `dlogits` through a recorded pass. Accumulates parameter
  /// gradients into `param_grad` when it is nonempty, and returns the input
  /// gradient (Image layout) when `want_input` is set.
  std::vector<double> backward(const ForwardTrace& t, std::span<const double> dlogits,
                               std::span<double> param_grad, bool want_input) const {
    const std::size_t hidden = arch_.hidden;
    const std::size_t flat = arch_.flat_size();
    const bool want_params = !param_grad.empty();
    if (want_params && param_grad.size() != params_.size()) {
      throw Error("parameter gradient buffer has the wrong size");
    }

    std::vector<double> dhidden(hidden, 0.0);
    for (std::size_t c = 0; c < arch_.num_classes; ++c) {
      const double g = dlogits[c];
      if (g == 0.0) continue;
      const double* row = params_.data() + fc2_weight_ + c * hidden;
      for (std::size_t j = 0; j < hidden; ++j) {
        const double act = relu(t.hidden_pre[j]);
        if (want_params) param_grad[fc2_weight_ + c * hidden + j] += g * act;
        dhidden[j] += g * row[j];
      }
      if (want_params) param_grad[fc2_bias_ + c] += g;
    }
    for (std::size_t j = 0; j < hidden; ++j) {
      if (!(t.hidden_pre[j] > 0.0)) dhidden[j] = 0.0;
    }

    std::vector<double> dx(flat, 0.0);
    for (std::size_t j = 0; j < hidden; ++j) {
      const double g = dhidden[j];
      if (g == 0.0) continue;
      const double* row = params_.data() + fc1_weight_ + j * flat;
      for (std::size_t i = 0; i < flat; ++i) {
        if (want_params) param_grad[fc1_weight_ + j * flat + i] += g * t.flat[i];
        dx[i] += g * row[i];
      }
      if (want_params) param_grad[fc1_bias_ + j] += g;
    }

    for (std::size_t b = blocks_.size(); b-- > 0;) {
      const std::size_t shift = b;
      const std::size_t h = arch_.height >> shift;
      const std::size_t w = arch_.width >> shift;
      const std::size_t cin = b == 0 ? arch_.in_channels : arch_.block_channels[b - 1];
      const std::size_t cout = arch_.block_channels[b];
      std::vector<double> dz(cout * h * w, 0.0);
      const auto& idx = t.argmax[b];
      for (std::size_t i = 0; i < idx.size(); ++i) dz[idx[i]] += dx[i];
      const auto& z = t.pre_relu[b];
      for (std::size_t i = 0; i < dz.size(); ++i) {
        if (!(z[i] > 0.0)) dz[i] = 0.0;
      }
      const bool need_dx = b > 0 || want_input;
      dx = conv_backward(t.block_inputs[b], dz, h, w, cin, cout, blocks_[b],
                         want_params ? param_grad : std::span<double>{}, need_dx);
    }
    return want_input ? to_hwc(dx) : std::vector<double>{};
  }

  /// d logit[class_index] / d input, in the Image layout.
  std::vector<double> input_gradient(std::span<const double> input, std::size_t class_index) const {
    if (class_index >= arch_.num_classes) {
      throw Error("class index " + std::to_string(class_index) + " out of range for " +
                  std::to_string(arch_.num_classes) + " classes");
    }
    const ForwardTrace t = forward_trace(input);
    std::vector<double> seed(arch_.num_classes, 0.0);
    seed[class_index] = 1.0;
    return backward(t, seed, {}, true);
  }

  /// All class gradients from one forward pass; row c is d logit[c] / d input.
  std::vector<std::vector<double>> input_jacobian(std::span<const double> input) const {
    const ForwardTrace t = forward_trace(input);
    std::vector<std::vector<double>> rows;
    std::vector<double> seed(arch_.num_classes, 0.0);
    for (std::size_t c = 0; c < arch_.num_classes; ++c) {
      seed[c] = 1.0;
      rows.push_back(backward(t, seed, {}, true));
      seed[c] = 0.0;
    }
    return rows;
  }

  /// Image-level convenience over input_gradient().
  std::vector<double> gradient_wrt_input(const Image& img, std::size_t class_index) const {
    check_image(img);
    const auto px = img.pixels();
    const std::vector<double> x(px.begin(), px.end());
    return input_gradient(x, class_index);
  }

  void check_image(const Image& img) const {
    if (img.height() != arch_.height || img.width() != arch_.width ||
        img.channels() != arch_.in_channels) {
      throw Error("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) + "x" +
                  std::to_string(img.channels()) + " does not match classifier input " +
                  std::to_string(arch_.height) + "x" + std::to_string(arch_.width) + "x" +
                  std::to_string(arch_.in_channels));
    }
  }

 private:
  struct BlockOffsets {
    std::size_t weight = 0;  // [cout][cin][3][3]
    std::size_t bias = 0;    // [cout]
  };

  // NaN passes through so that divergence surfaces in the loss.
  static double relu(double v) noexcept { return v < 0.0 ? 0.0 : v; }

  void layout() {
    std::size_t off = 0;
    std::size_t cin = arch_.in_channels;
    blocks_.clear();
    for (std::size_t cout : arch_.block_channels) {
      blocks_.push_back({off, off + 9 * cin * cout});
      off += 9 * cin * cout + cout;
      cin = cout;
    }
    fc1_weight_ = off;
    off += arch_.flat_size() * arch_.hidden;
    fc1_bias_ = off;
    off += arch_.hidden;
    fc2_weight_ = off;
    off += arch_.hidden * arch_.num_classes;
    fc2_bias_ = off;
  }

  void check_input(std::size_t n) const {
    if (n != arch_.input_size()) {
      throw Error("input has " + std::to_string(n) + " values, classifier expects " +
                  std::to_string(arch_.input_size()));
    }
  }

  std::vector<double> to_chw(std::span<const double> hwc) const {
    const std::size_t hw = arch_.height * arch_.width;
    const std::size_t c = arch_.in_channels;
    std::vector<double> out(hwc.size());
    for (std::size_t p = 0; p < hw; ++p) {
      for (std::size_t k = 0; k < c; ++k) out[k * hw + p] = hwc[p * c + k];
    }
    return out;
  }

  std::vector<double> to_hwc(const std::vector<double>& chw) const {
    const std::size_t hw = arch_.height * arch_.width;
    const std::size_t c = arch_.in_channels;
    std::vector<double> out(chw.size());
    for (std::size_t p = 0; p < hw; ++p) {
      for (std::size_t k = 0; k < c; ++k) out[p * c + k] = chw[k * hw + p];
    }
    return out;
  }

  std::vector<double> conv_forward(const std::vector<double>& x, std::size_t h, std::size_t w,
                                   std::size_t cin, std::size_t cout,
                                   const BlockOffsets& off) const {
    std::vector<double> z(cout * h * w);
    for (std::size_t o = 0; o < cout; ++o) {
      double* zo = z.data() + o * h * w;
      std::fill(zo, zo + h * w, params_[off.bias + o]);
      for (std::size_t i = 0; i < cin; ++i) {
        const double* xi = x.data() + i * h * w;
        const double* k = params_.data() + off.weight + (o * cin + i) * 9;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const double wv = k[ky * 3 + kx];
            // output (y, x) reads input (y + ky - 1, x + kx - 1)
            const std::size_t y0 = ky == 0 ? 1 : 0;
            const std::size_t y1 = ky == 2 ? h - 1 : h;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? w - 1 : w;
            for (std::size_t y = y0; y < y1; ++y) {
              const double* src = xi + (y + ky - 1) * w;
              double* dst = zo + y * w;
              for (std::size_t xx = x0; xx < x1; ++xx) dst[xx] += wv * src[xx + kx - 1];
            }
          }
        }
      }
    }
    return z;
  }

  std::vector<double> conv_backward(const std::vector<double>& x, const std::vector<double>& dz,
                                    std::size_t h, std::size_t w, std::size_t cin,
                                    std::size_t cout, const BlockOffsets& off,
                                    std::span<double> param_grad, bool need_dx) const {
    std::vector<double> dx(need_dx ? cin * h * w : 0, 0.0);
    for (std::size_t o = 0; o < cout; ++o) {
      const double* dzo = dz.data() + o * h * w;
      if (!param_grad.empty()) {
        double acc = 0.0;
        for (std::size_t p = 0; p < h * w; ++p) acc += dzo[p];
        param_grad[off.bias + o] += acc;
      }
      for (std::size_t i = 0; i < cin; ++i) {
        const double* xi = x.data() + i * h * w;
        const double* k = params_.data() + off.weight + (o * cin + i) * 9;
        for (std::size_t ky = 0; ky < 3; ++ky) {
          for (std::size_t kx = 0; kx < 3; ++kx) {
            const std::size_t y0 = ky == 0 ? 1 : 0;
            const std::size_t y1 = ky == 2 ? h - 1 : h;
            const std::size_t x0 = kx == 0 ? 1 : 0;
            const std::size_t x1 = kx == 2 ? w - 1 : w;
            double gw = 0.0;
            const double wv = k[ky * 3 + kx];
            for (std::size_t y = y0; y < y1; ++y) {
              const std::size_t src_row = (y + ky - 1) * w + (kx - 1);
              const double* g = dzo + y * w;
              for (std::size_t xx = x0; xx < x1; ++xx) {
                gw += g[xx] * xi[src_row + xx];
                if (need_dx) dx[i * h * w + src_row + xx] += g[xx] * wv;
              }
            }
            if (!param_grad.empty()) param_grad[off.weight + (o * cin + i) * 9 + ky * 3 + kx] += gw;
          }
        }
      }
    }
    return dx;
  }

  // 2x2 stride-2 max pool; ties keep the first element in row-major order.
  static std::vector<double> max_pool(const std::vector<double>& a, std::size_t h, std::size_t w,
                                      std::size_t c, std::vector<std::uint32_t>& idx) {
    const std::size_t oh = h / 2, ow = w / 2;
    std::vector<double> out(c * oh * ow);
    idx.resize(out.size());
    for (std::size_t k = 0; k < c; ++k) {
      for (std::size_t y = 0; y < oh; ++y) {
        for (std::size_t x = 0; x < ow; ++x) {
          std::size_t best = k * h * w + (2 * y) * w + 2 * x;
          for (std::size_t dy = 0; dy < 2; ++dy) {
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t cand = k * h * w + (2 * y + dy) * w + 2 * x + dx;
              if (a[cand] > a[best]) best = cand;
            }
          }
          const std::size_t o = k * oh * ow + y * ow + x;
          out[o] = a[best];
          idx[o] = static_cast<std::uint32_t>(best);
        }
      }
    }
    return out;
  }

  Architecture arch_;
  std::vector<double> params_;
  std::vector<BlockOffsets> blocks_;
  std::size_t fc1_weight_ = 0;
  std::size_t fc1_bias_ = 0;
  std::size_t fc2_weight_ = 0;
  std::size_t fc2_bias_ = 0;
};

inline Classifier build_classifier(std::size_t height, std::size_t width, std::size_t channels,
                                   std::size_t num_classes, ClassifierVariant variant,
                                   std::uint64_t seed, std::size_t hidden = 128) {
  return Classifier::he_initialized(
      make_architecture(height, width, channels, num_classes, variant, hidden), seed);
}

// ---------------------------------------------------------------------------
// Loss and evaluation

/// Numerically stable softmax cross-entropy. Writes d loss / d logits into
/// `grad` when it is nonempty.
inline double softmax_cross_entropy(std::span<const double> logits, std::size_t label,
                                    std::span<double> grad = {}) {
  const double top = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (double z : logits) total += std::exp(z - top);
  const double log_norm = top + std::log(total);
  if (!grad.empty()) {
    for (std::size_t c = 0; c < logits.size(); ++c) {
      grad[c] = std::exp(logits[c] - log_norm) - (c == label ? 1.0 : 0.0);
    }
  }
  return log_norm - logits[label];
}

/// Index of the largest logit; ties go to the lowest index.
inline std::size_t argmax(std::span<const double> logits) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = c;
  }
  return best;
}

/// Position of `label` in the descending logit order, ties broken toward the
/// lower class index.
inline std::size_t rank_of(std::span<const double> logits, std::size_t label) {
  std::size_t rank = 0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    if (c == label) continue;
    if (logits[c] > logits[label] || (logits[c] == logits[label] && c < label)) ++rank;
  }
  return rank;
}

struct EvalResult {
  double accuracy = 0.0;
  double top_k_accuracy = 0.0;
  std::size_t k = 1;
  std::vector<double> per_class_accuracy;
  std::vector<std::size_t> per_class_count;
  double mean_loss = 0.0;
};

/// Scores precomputed logits. Classes absent from the labels get per-class
/// accuracy 0 with count 0.
inline EvalResult score_logits(const std::vector<std::vector<double>>& logits,
                               std::span<const std::size_t> labels, std::size_t num_classes,
                               std::size_t k) {
  if (logits.empty()) throw Error("cannot evaluate on an empty test set");
  if (k < 1) throw Error("top-k needs k >= 1");
  EvalResult r;
  r.k = k;
  r.per_class_accuracy.assign(num_classes, 0.0);
  r.per_class_count.assign(num_classes, 0);
  std::size_t correct = 0, top_k = 0;
  double loss = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    const std::size_t label = labels[i];
    const bool hit = argmax(logits[i]) == label;
    correct += hit;
    top_k += rank_of(logits[i], label) < k;
    ++r.per_class_count.at(label);
    r.per_class_accuracy[label] += hit ? 1.0 : 0.0;
    loss += softmax_cross_entropy(logits[i], label);
  }
  const auto n = static_cast<double>(logits.size());
  r.accuracy = static_cast<double>(correct) / n;
  r.top_k_accuracy = static_cast<double>(top_k) / n;
  r.mean_loss = loss / n;
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (r.per_class_count[c] > 0) r.per_class_accuracy[c] /= static_cast<double>(r.per_class_count[c]);
  }
  return r;
}

inline EvalResult evaluate(const Classifier& m, const LabeledImageDataset& test, std::size_t k = 1) {
  return score_logits(m.logits_batch(test.images), test.labels, m.num_classes(), k);
}

// ---------------------------------------------------------------------------
// Training

struct TrainHyper {
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw Error("epochs must be at least 1");
    if (batch_size < 1) throw Error("batch size must be at least 1");
    if (!(learning_rate >= 0.0)) throw Error("learning rate must be nonnegative");
  }
};

struct EpochStats {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
};

struct TrainResult {
  Classifier model;          ///< snapshot with the lowest validation loss
  std::size_t best_epoch = 0;  ///< 0 means the initial model was never beaten
  std::vector<EpochStats> curve;
};

class TrainingDiverged : public Error {
 public:
  explicit TrainingDiverged(std::size_t epoch)
      : Error("training diverged in epoch " + std::to_string(epoch)), epoch_(epoch) {}
  std::size_t epoch() const noexcept { return epoch_; }

 private:
  std::size_t epoch_;
};

/// Minibatch Adam on mean cross-entropy with a seeded per-epoch shuffle.
/// Returns the epoch snapshot with the lowest validation loss (earliest on
/// ties); the untrained model competes as epoch 0.
inline TrainResult train(const Classifier& initial, const LabeledImageDataset& train_ds,
                         const LabeledImageDataset& val_ds, const TrainHyper& h) {
  h.validate();
  if (train_ds.empty() || val_ds.empty()) throw Error("training needs nonempty train and val sets");
  for (const auto* ds : {&train_ds, &val_ds}) {
    for (std::size_t i = 0; i < ds->size(); ++i) {
      if (ds->labels[i] >= initial.num_classes()) throw Error("label out of range for classifier");
      initial.check_image(ds->images[i]);
    }
  }

  std::vector<std::vector<double>> inputs(train_ds.size());
  for (std::size_t i = 0; i < train_ds.size(); ++i) {
    const auto px = train_ds.images[i].pixels();
    inputs[i].assign(px.begin(), px.end());
  }

  Classifier model = initial;
  const std::size_t n_params = model.parameters().size();
  std::vector<double> grad(n_params), m1(n_params, 0.0), m2(n_params, 0.0);
  std::vector<double> dlogits(model.num_classes());
  std::vector<std::size_t> order(train_ds.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(h.seed);

  TrainResult result;
  result.model = model;
  double best_val = evaluate(model, val_ds).mean_loss;
  std::uint64_t step = 0;

  for (std::size_t epoch = 1; epoch <= h.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += h.batch_size) {
      const std::size_t end = std::min(order.size(), start + h.batch_size);
      std::fill(grad.begin(), grad.end(), 0.0);
      for (std::size_t b = start; b < end; ++b) {
        const std::size_t i = order[b];
        const ForwardTrace t = model.forward_trace(inputs[i]);
        epoch_loss += softmax_cross_entropy(t.logits, train_ds.labels[i], dlogits);
        model.backward(t, dlogits, grad, false);
      }
      if (!std::isfinite(epoch_loss)) throw TrainingDiverged(epoch);
      const double scale = 1.0 / static_cast<double>(end - start);
      ++step;
      const double bias1 = 1.0 - std::pow(h.beta1, static_cast<double>(step));
      const double bias2 = 1.0 - std::pow(h.beta2, static_cast<double>(step));
      auto params = model.parameters();
      for (std::size_t p = 0; p < n_params; ++p) {
        const double g = grad[p] * scale;
        m1[p] = h.beta1 * m1[p] + (1.0 - h.beta1) * g;
        m2[p] = h.beta2 * m2[p] + (1.0 - h.beta2) * g * g;
        params[p] -= h.learning_rate * (m1[p] / bias1) / (std::sqrt(m2[p] / bias2) + h.epsilon);
      }
    }
    const EvalResult val = evaluate(model, val_ds);
    if (!std::isfinite(val.mean_loss)) throw TrainingDiverged(epoch);
    result.curve.push_back({epoch, epoch_loss / static_cast<double>(order.size()), val.mean_loss,
                            val.accuracy});
    if (val.mean_loss < best_val) {
      best_val = val.mean_loss;
      result.best_epoch = epoch;
      result.model = model;
    }
  }
  return result;
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// GEVM layout, little-endian:
//   "GEVM" | u32 version=1 | u32 block_count | u32 channels[block_count] |
//   u32 height | u32 width | u32 in_channels | u32 hidden | u32 num_classes |
//   u32 parameter_count | float32 parameters
// Parameter order: per block conv weight [out][in][3][3] then bias [out];
// fc1 weight [hidden][flat] then bias; fc2 weight [classes][hidden] then bias.
// The flattened conv output is channel-major (channel, row, column).

inline constexpr std::array<char, 4> kCheckpointMagic = {'G', 'E', 'V', 'M'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

inline void save_checkpoint(const Classifier& m, const std::filesystem::path& path) {
  std::vector<std::uint32_t> header;
  const auto& a = m.architecture();
  header.push_back(kCheckpointVersion);
  header.push_back(static_cast<std::uint32_t>(a.block_channels.size()));
  for (auto c : a.block_channels) header.push_back(static_cast<std::uint32_t>(c));
  for (auto v : {a.height, a.width, a.in_channels, a.hidden, a.num_classes,
                 m.parameters().size()}) {
    header.push_back(static_cast<std::uint32_t>(v));
  }
  std::vector<float> blob(m.parameters().begin(), m.parameters().end());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write checkpoint " + path.string());
  out.write(kCheckpointMagic.data(), 4);
  out.write(reinterpret_cast<const char*>(header.data()),
            static_cast<std::streamsize>(header.size() * 4));
  out.write(reinterpret_cast<const char*>(blob.data()),
            static_cast<std::streamsize>(blob.size() * sizeof(float)));
  if (!out) throw Error("failed writing checkpoint " + path.string());
}

inline Classifier load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::size_t pos = 0;
  auto take = [&]() {
    if (pos + 4 > bytes.size()) throw Error("truncated checkpoint " + path.string());
    std::uint32_t v;
    std::memcpy(&v, bytes.data() + pos, 4);
    pos += 4;
    return v;
  };
  if (bytes.size() < 8 || std::memcmp(bytes.data(), kCheckpointMagic.data(), 4) != 0) {
    throw Error("unrecognized checkpoint file: " + path.string());
  }
  pos = 4;
  if (take() != kCheckpointVersion) throw Error("unsupported checkpoint version in " + path.string());
  Architecture a;
  const std::uint32_t blocks = take();
  if (blocks == 0 || blocks > 16) throw Error("corrupt checkpoint " + path.string());
  for (std::uint32_t b = 0; b < blocks; ++b) a.block_channels.push_back(take());
  a.height = take();
  a.width = take();
  a.in_channels = take();
  a.hidden = take();
  a.num_classes = take();
  const std::uint32_t count = take();
  Classifier m(a);
  if (count != m.parameters().size() || bytes.size() != pos + 4ULL * count) {
    throw Error("checkpoint " + path.string() + " parameter blob does not match its architecture");
  }
  std::vector<float> blob(count);
  std::memcpy(blob.data(), bytes.data() + pos, 4ULL * count);
  std::copy(blob.begin(), blob.end(), m.parameters().begin());
  return m;
}

}  // namespace trilemma
