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
#include <cstdint>
#include <numeric>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"

namespace trilemma {

struct SsimParams {
  std::size_t window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;

  double c1() const noexcept { return (k1 * dynamic_range) * (k1 * dynamic_range); }
  double c2() const noexcept { return (k2 * dynamic_range) * (k2 * dynamic_range); }

  void validate() const {
    if (window < 3 || window % 2 == 0) throw Error("SSIM window must be odd and at least 3");
    if (!(gaussian_sigma > 0 && k1 > 0 && k2 > 0 && dynamic_range > 0)) {
      throw Error("SSIM constants must be positive");
    }
  }
};

namespace detail {

inline std::vector<double> gaussian_kernel(const SsimParams& p) {
  std::vector<double> g(p.window);
  const double center = static_cast<double>(p.window / 2);
  double total = 0.0;
  for (std::size_t i = 0; i < p.window; ++i) {
    const double d = static_cast<double>(i) - center;
    g[i] = std::exp(-(d * d) / (2.0 * p.gaussian_sigma * p.gaussian_sigma));
    total += g[i];
  }
  for (double& v : g) v /= total;
  return g;
}

// Separable "valid" Gaussian filter of a single-channel plane.
inline std::vector<double> filter_valid(const std::vector<double>& plane, std::size_t h,
                                        std::size_t w, const std::vector<double>& g) {
  const std::size_t n = g.size();
  const std::size_t ow = w - n + 1;
  const std::size_t oh = h - n + 1;
  std::vector<double> horiz(h * ow);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += g[t] * plane[r * w + c + t];
      horiz[r * ow + c] = acc;
    }
  }
  std::vector<double> out(oh * ow);
  for (std::size_t r = 0; r < oh; ++r) {
    for (std::size_t c = 0; c < ow; ++c) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += g[t] * horiz[(r + t) * ow + c];
      out[r * ow + c] = acc;
    }
  }
  return out;
}

inline std::vector<double> channel_plane(const Image& img, std::size_t ch) {
  std::vector<double> plane(img.height() * img.width());
  for (std::size_t r = 0; r < img.height(); ++r) {
    for (std::size_t c = 0; c < img.width(); ++c) plane[r * img.width() + c] = img.at(r, c, ch);
  }
  return plane;
}

}  // namespace detail

/// Per-image local statistics reused across many SSIM comparisons.
class SsimOperand {
 public:
  SsimOperand(const Image& img, const SsimParams& p) : height_(img.height()), width_(img.width()) {
    p.validate();
    if (img.height() < p.window || img.width() < p.window) {
      throw Error("image " + std::to_string(img.height()) + "x" + std::to_string(img.width()) +
                  " is smaller than the SSIM window " + std::to_string(p.window));
    }
    const auto g = detail::gaussian_kernel(p);
    for (std::size_t ch = 0; ch < img.channels(); ++ch) {
      auto plane = detail::channel_plane(img, ch);
      std::vector<double> sq(plane.size());
      for (std::size_t i = 0; i < plane.size(); ++i) sq[i] = plane[i] * plane[i];
      means_.push_back(detail::filter_valid(plane, height_, width_, g));
      second_moments_.push_back(detail::filter_valid(sq, height_, width_, g));
      planes_.push_back(std::move(plane));
    }
  }

  std::size_t channels() const noexcept { return planes_.size(); }
  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }

  friend double ssim(const SsimOperand& a, const SsimOperand& b, const SsimParams& p);

 private:
  std::size_t height_;
  std::size_t width_;
  std::vector<std::vector<double>> planes_;
  std::vector<std::vector<double>> means_;
  std::vector<std::vector<double>> second_moments_;
};

/// Mean SSIM over all fully contained Gaussian windows, averaged over
/// channels.
inline double ssim(const SsimOperand& a, const SsimOperand& b, const SsimParams& p) {
  if (a.height_ != b.height_ || a.width_ != b.width_ || a.channels() != b.channels()) {
    throw Error("SSIM operands differ in shape");
  }
  const auto g = detail::gaussian_kernel(p);
  const double c1 = p.c1();
  const double c2 = p.c2();
  double channel_total = 0.0;
  for (std::size_t ch = 0; ch < a.channels(); ++ch) {
    const auto& xa = a.planes_[ch];
    const auto& xb = b.planes_[ch];
    std::vector<double> prod(xa.size());
    for (std::size_t i = 0; i < xa.size(); ++i) prod[i] = xa[i] * xb[i];
    const auto cross = detail::filter_valid(prod, a.height_, a.width_, g);
    const auto& mu_a = a.means_[ch];
    const auto& mu_b = b.means_[ch];
    const auto& sq_a = a.second_moments_[ch];
    const auto& sq_b = b.second_moments_[ch];
    double total = 0.0;
    for (std::size_t i = 0; i < cross.size(); ++i) {
      const double mab = mu_a[i] * mu_b[i];
      const double var_a = sq_a[i] - mu_a[i] * mu_a[i];
      const double var_b = sq_b[i] - mu_b[i] * mu_b[i];
      const double cov = cross[i] - mab;
      const double num = (2.0 * mab + c1) * (2.0 * cov + c2);
      const double den = (mu_a[i] * mu_a[i] + mu_b[i] * mu_b[i] + c1) * (var_a + var_b + c2);
      total += num / den;
    }
    channel_total += total / static_cast<double>(cross.size());
  }
  return channel_total / static_cast<double>(a.channels());
}

inline double ssim(const Image& a, const Image& b, const SsimParams& p = {}) {
  if (!a.same_shape(b)) throw Error("SSIM needs images of identical shape");
  return ssim(SsimOperand(a, p), SsimOperand(b, p), p);
}

struct MaxSsim {
  double value = -1.0;
  std::size_t index = 0;  ///< argmax over the reference set
};

/// Best SSIM of `s` against a prepared reference set; ties keep the lowest
/// index.
inline MaxSsim max_ssim(const SsimOperand& s, const std::vector<SsimOperand>& reference,
                        const SsimParams& p) {
  if (reference.empty()) throw Error("max SSIM needs a nonempty real set");
  MaxSsim best;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    const double v = ssim(s, reference[i], p);
    if (i == 0 || v > best.value) best = {v, i};
  }
  return best;
}

inline std::vector<SsimOperand> prepare_ssim_operands(const LabeledImageDataset& ds,
                                                      const SsimParams& p) {
  std::vector<SsimOperand> out;
  out.reserve(ds.size());
  for (const auto& img : ds.images) out.emplace_back(img, p);
  return out;
}

inline MaxSsim max_ssim(const Image& s, const LabeledImageDataset& real, const SsimParams& p = {}) {
  if (real.empty()) throw Error("max SSIM needs a nonempty real set");
  return max_ssim(SsimOperand(s, p), prepare_ssim_operands(real, p), p);
}

struct PrivacyConfig {
  std::size_t q = 100;  ///< synthetic samples per repeat
  std::size_t l = 10;   ///< repeats
  std::uint64_t seed = 0;

  void validate() const {
    if (q < 1 || l < 1) throw Error("privacy q and l must be at least 1");
  }
};

struct PrivacyMatch {
  std::size_t synthetic_index = 0;
  std::size_t real_index = 0;
  double ssim = 0.0;
};

struct PrivacyResult {
  double score = 0.0;
  std::vector<double> repeat_means;
  /// Every synthetic image that was drawn at least once, highest SSIM first.
  std::vector<PrivacyMatch> matches;
};

/// Mean over `l` repeats of the mean max-SSIM of `q` synthetic images drawn
/// without replacement. Lower means less memorization.
inline PrivacyResult privacy_audit(const LabeledImageDataset& synth, const LabeledImageDataset& real,
                                   const PrivacyConfig& cfg, const SsimParams& p = {}) {
  cfg.validate();
  p.validate();
  if (synth.size() < cfg.q) {
    throw Error("synthetic set has " + std::to_string(synth.size()) + " images but q=" +
                std::to_string(cfg.q) + "; use q <= " + std::to_string(synth.size()));
  }
  const auto reference = prepare_ssim_operands(real, p);
  if (reference.empty()) throw Error("max SSIM needs a nonempty real set");

  std::mt19937_64 rng(cfg.seed);
  std::vector<std::size_t> order(synth.size());
  std::unordered_map<std::size_t, MaxSsim> cache;
  PrivacyResult result;
  double repeat_total = 0.0;
  for (std::size_t rep = 0; rep < cfg.l; ++rep) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<std::size_t> drawn(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cfg.q));
    std::sort(drawn.begin(), drawn.end());
    double total = 0.0;
    for (std::size_t j : drawn) {
      auto it = cache.find(j);
      if (it == cache.end()) {
        it = cache.emplace(j, max_ssim(SsimOperand(synth.images[j], p), reference, p)).first;
      }
      total += it->second.value;
    }
    const double mean = total / static_cast<double>(cfg.q);
    result.repeat_means.push_back(mean);
    repeat_total += mean;
  }
  result.score = repeat_total / static_cast<double>(cfg.l);
  for (const auto& [j, m] : cache) result.matches.push_back({j, m.index, m.value});
  std::sort(result.matches.begin(), result.matches.end(), [](const auto& a, const auto& b) {
    return a.ssim != b.ssim ? a.ssim > b.ssim : a.synthetic_index < b.synthetic_index;
  });
  return result;
}

inline double privacy_score(const LabeledImageDataset& synth, const LabeledImageDataset& real,
                            const PrivacyConfig& cfg, const SsimParams& p = {}) {
  return privacy_audit(synth, real, cfg, p).score;
}

}  // namespace trilemma
