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

#include <array>
#include <cstdint>
#include <random>
#include <string>

#include "trilemma/image.hpp"

namespace trilemma {

/// Lossless right-angle rotations (counter-clockwise) and flips.
enum class GeoTransform { kRot90, kRot180, kRot270, kHFlip, kVFlip };

inline const char* to_string(GeoTransform t) {
  switch (t) {
    case GeoTransform::kRot90: return "rot90";
    case GeoTransform::kRot180: return "rot180";
    case GeoTransform::kRot270: return "rot270";
    case GeoTransform::kHFlip: return "hflip";
    case GeoTransform::kVFlip: return "vflip";
  }
  return "unknown";
}

inline Image apply_transform(const Image& img, GeoTransform t) {
  const std::size_t h = img.height();
  const std::size_t w = img.width();
  const std::size_t ch = img.channels();
  const bool swaps = t == GeoTransform::kRot90 || t == GeoTransform::kRot270;
  Image out(swaps ? w : h, swaps ? h : w, ch);
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t orow = r, ocol = c;
      switch (t) {
        case GeoTransform::kRot90: orow = w - 1 - c; ocol = r; break;
        case GeoTransform::kRot180: orow = h - 1 - r; ocol = w - 1 - c; break;
        case GeoTransform::kRot270: orow = c; ocol = h - 1 - r; break;
        case GeoTransform::kHFlip: ocol = w - 1 - c; break;
        case GeoTransform::kVFlip: orow = h - 1 - r; break;
      }
      for (std::size_t k = 0; k < ch; ++k) out.at(orow, ocol, k) = img.at(r, c, k);
    }
  }
  return out;
}

/// Materializes the 4x augmented set: every original, then for each original
/// one seeded random rotation, one horizontal flip and one vertical flip.
/// Non-square inputs only get rot180 so that all outputs keep one shape.
inline LabeledImageDataset geometric_augment(const LabeledImageDataset& ds, std::uint64_t seed) {
  if (ds.empty()) throw Error("cannot augment an empty dataset");
  static constexpr std::array<GeoTransform, 3> kRotations = {
      GeoTransform::kRot90, GeoTransform::kRot180, GeoTransform::kRot270};
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 2);
  LabeledImageDataset out = ds;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const Image& img = ds.images[i];
    GeoTransform rot = kRotations[static_cast<std::size_t>(pick(rng))];
    if (img.height() != img.width()) rot = GeoTransform::kRot180;
    for (GeoTransform t : {rot, GeoTransform::kHFlip, GeoTransform::kVFlip}) {
      out.push_back(apply_transform(img, t), ds.labels[i], ds.sources[i] + "#" + to_string(t));
    }
  }
  return out;
}

}  // namespace trilemma
