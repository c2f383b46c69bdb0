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
#include <random>
#include <string>

#include "trilemma/image.hpp"

namespace trilemma {

/// Seeded toy corpus: class c draws a Gaussian bump centred on its own spot
/// (spots spread along the main diagonal) over uniform background noise.
/// Classes are linearly separable for amplitude well above the noise.
inline LabeledImageDataset make_blob_dataset(std::size_t per_class, std::size_t num_classes,
                                             std::size_t size, std::uint64_t seed,
                                             double noise = 0.15, std::size_t channels = 1) {
  LabeledImageDataset ds;
  for (std::size_t c = 0; c < num_classes; ++c) ds.class_names.push_back("class_" + std::to_string(c));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bg(0.0, noise);
  std::normal_distribution<double> jitter(0.0, 0.5);
  const double sigma = std::max(1.0, static_cast<double>(size) / 6.0);
  for (std::size_t c = 0; c < num_classes; ++c) {
    const double t = (static_cast<double>(c) + 0.5) / static_cast<double>(num_classes);
    const double cy = t * static_cast<double>(size - 1);
    const double cx = cy;
    for (std::size_t i = 0; i < per_class; ++i) {
      const double oy = cy + jitter(rng);
      const double ox = cx + jitter(rng);
      Image img(size, size, channels);
      for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t col = 0; col < size; ++col) {
          const double dy = static_cast<double>(r) - oy;
          const double dx = static_cast<double>(col) - ox;
          const double bump = 0.8 * std::exp(-(dx * dx + dy * dy) / (2.0 * sigma * sigma));
          for (std::size_t k = 0; k < channels; ++k) {
            img.at(r, col, k) = static_cast<float>(std::clamp(bump + bg(rng), 0.0, 1.0));
          }
        }
      }
      ds.push_back(std::move(img), c, "toy/" + ds.class_names[c] + "/" + std::to_string(i));
    }
  }
  return ds;
}

}  // namespace trilemma
