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
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "trilemma/error.hpp"

namespace trilemma {

/// A dense image with interleaved channels, stored row-major as
/// (row, column, channel). Pixel values live in [0, 1].
class Image {
 public:
  Image() = default;

  Image(std::size_t height, std::size_t width, std::size_t channels, float fill = 0.0F)
      : height_(height), width_(width), channels_(channels),
        pixels_(height * width * channels, fill) {
    check_shape();
  }

  Image(std::size_t height, std::size_t width, std::size_t channels, std::vector<float> pixels)
      : height_(height), width_(width), channels_(channels), pixels_(std::move(pixels)) {
    check_shape();
    if (pixels_.size() != height_ * width_ * channels_) {
      throw Error("image buffer holds " + std::to_string(pixels_.size()) + " values, expected " +
                  std::to_string(height_ * width_ * channels_));
    }
    for (float v : pixels_) {
      if (!(v >= 0.0F && v <= 1.0F)) throw Error("image pixel outside [0,1]");
    }
  }

  std::size_t height() const noexcept { return height_; }
  std::size_t width() const noexcept { return width_; }
  std::size_t channels() const noexcept { return channels_; }
  std::size_t size() const noexcept { return pixels_.size(); }

  float at(std::size_t row, std::size_t col, std::size_t ch) const {
    return pixels_[(row * width_ + col) * channels_ + ch];
  }
  float& at(std::size_t row, std::size_t col, std::size_t ch) {
    return pixels_[(row * width_ + col) * channels_ + ch];
  }

  std::span<const float> pixels() const noexcept { return pixels_; }
  std::span<float> pixels() noexcept { return pixels_; }

  bool same_shape(const Image& other) const noexcept {
    return height_ == other.height_ && width_ == other.width_ && channels_ == other.channels_;
  }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  void check_shape() const {
    if (channels_ != 1 && channels_ != 3) throw Error("image must have 1 or 3 channels");
  }

  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::size_t channels_ = 1;
  std::vector<float> pixels_;
};

enum class DatasetRole { kRealTrain, kRealVal, kRealTest, kSynthetic, kUnspecified };

inline const char* to_string(DatasetRole role) {
  switch (role) {
    case DatasetRole::kRealTrain: return "real-train";
    case DatasetRole::kRealVal: return "real-val";
    case DatasetRole::kRealTest: return "real-test";
    case DatasetRole::kSynthetic: return "synthetic";
    case DatasetRole::kUnspecified: break;
  }
  return "unspecified";
}

/// Images with integer class labels.
///
/// `sources` holds one provenance string per image (the file path relative to
/// the ingest root, with a `#transform` suffix for derived copies). The
/// pipeline uses it to prove the test split never leaks into training.
struct LabeledImageDataset {
  std::vector<Image> images;
  std::vector<std::size_t> labels;
  std::vector<std::string> class_names;
  std::vector<std::string> sources;
  DatasetRole role = DatasetRole::kUnspecified;

  std::size_t size() const noexcept { return images.size(); }
  bool empty() const noexcept { return images.empty(); }
  std::size_t num_classes() const noexcept { return class_names.size(); }

  void push_back(Image img, std::size_t label, std::string source) {
    images.push_back(std::move(img));
    labels.push_back(label);
    sources.push_back(std::move(source));
  }

  /// Per-class image counts, indexed by label.
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(class_names.size(), 0);
    for (std::size_t label : labels) ++counts.at(label);
    return counts;
  }

  /// Same classes and role, no images.
  LabeledImageDataset empty_like() const {
    LabeledImageDataset out;
    out.class_names = class_names;
    out.role = role;
    return out;
  }

  void validate() const {
    if (images.size() != labels.size() || images.size() != sources.size()) {
      throw Error("dataset images, labels and sources differ in length");
    }
    for (std::size_t i = 0; i < images.size(); ++i) {
      if (labels[i] >= class_names.size()) {
        throw Error("label " + std::to_string(labels[i]) + " out of range for " +
                    std::to_string(class_names.size()) + " classes");
      }
      if (!images[i].same_shape(images.front())) throw Error("dataset images differ in shape");
    }
  }
};

struct SplitRatios {
  double train = 0.8;
  double val = 0.1;
  double test = 0.1;

  void validate() const {
    for (double r : {train, val, test}) {
      if (!(r > 0.0 && r < 1.0)) throw Error("split ratios must each lie in (0,1)");
    }
    if (std::abs(train + val + test - 1.0) > 1e-9) throw Error("split ratios must sum to 1");
  }
};

/// Bilinear resampling with half-pixel centers and edge clamping.
inline Image resize_bilinear(const Image& img, std::size_t out_h, std::size_t out_w) {
  if (out_h < 1 || out_w < 1) throw Error("resize target must be at least 1x1");
  if (out_h == img.height() && out_w == img.width()) return img;
  const std::size_t in_h = img.height();
  const std::size_t in_w = img.width();
  const std::size_t ch = img.channels();
  Image out(out_h, out_w, ch);

  auto source_coord = [](std::size_t dst, std::size_t in, std::size_t out_n, std::size_t& lo,
                         std::size_t& hi, double& frac) {
    double pos = (static_cast<double>(dst) + 0.5) * static_cast<double>(in) /
                     static_cast<double>(out_n) - 0.5;
    pos = std::clamp(pos, 0.0, static_cast<double>(in - 1));
    lo = static_cast<std::size_t>(std::floor(pos));
    hi = std::min(lo + 1, in - 1);
    frac = pos - static_cast<double>(lo);
  };

  for (std::size_t r = 0; r < out_h; ++r) {
    std::size_t r0, r1;
    double fr;
    source_coord(r, in_h, out_h, r0, r1, fr);
    for (std::size_t c = 0; c < out_w; ++c) {
      std::size_t c0, c1;
      double fc;
      source_coord(c, in_w, out_w, c0, c1, fc);
      for (std::size_t k = 0; k < ch; ++k) {
        const double top = (1.0 - fc) * img.at(r0, c0, k) + fc * img.at(r0, c1, k);
        const double bottom = (1.0 - fc) * img.at(r1, c0, k) + fc * img.at(r1, c1, k);
        const double v = (1.0 - fr) * top + fr * bottom;
        out.at(r, c, k) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return out;
}

}  // namespace trilemma
