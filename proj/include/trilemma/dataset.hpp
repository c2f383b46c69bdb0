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
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <tuple>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"
#include "trilemma/png_io.hpp"

namespace trilemma {

struct ImageDims {
  std::size_t height = 0;
  std::size_t width = 0;
};

namespace detail {

inline std::vector<std::filesystem::path> sorted_entries(const std::filesystem::path& dir,
                                                         bool directories) {
  std::vector<std::filesystem::path> out;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (directories ? entry.is_directory() : entry.is_regular_file()) {
      if (!directories) {
        auto ext = entry.path().extension().string();
        std::transform(ext.begin(), ext.end(), ext.begin(),
                       [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
        if (ext != ".png") continue;
      }
      out.push_back(entry.path());
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

/// Loads a class-per-subdirectory PNG corpus.
///
/// Classes are numbered by lexicographic subdirectory name and files are read
/// in lexicographic order. When `resize` is set every image is resampled to
/// it; otherwise all images must already share one shape.
inline LabeledImageDataset load_image_dataset(const std::filesystem::path& root, DatasetRole role,
                                              std::optional<ImageDims> resize = std::nullopt) {
  if (!std::filesystem::is_directory(root)) throw Error("not a directory: " + root.string());
  LabeledImageDataset ds;
  ds.role = role;
  const auto class_dirs = detail::sorted_entries(root, true);
  if (class_dirs.empty()) throw Error("no classes in " + root.string());

  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    const auto& dir = class_dirs[label];
    ds.class_names.push_back(dir.filename().string());
    for (const auto& file : detail::sorted_entries(dir, false)) {
      Image img = read_png(file);
      if (resize) img = resize_bilinear(img, resize->height, resize->width);
      if (!ds.images.empty() && !img.same_shape(ds.images.front())) {
        throw Error("image " + file.string() + " has shape " + std::to_string(img.height()) + "x" +
                    std::to_string(img.width()) + "x" + std::to_string(img.channels()) +
                    " unlike the rest of the dataset; pass a resize target");
      }
      ds.push_back(std::move(img), label,
                   std::filesystem::relative(file, root).generic_string());
    }
  }
  return ds;
}

/// Writes the dataset back out as `root/<class>/<index>.png`.
inline void save_image_dataset(const LabeledImageDataset& ds, const std::filesystem::path& root) {
  for (const auto& name : ds.class_names) std::filesystem::create_directories(root / name);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    char file[32];
    std::snprintf(file, sizeof(file), "%06zu.png", i);
    write_png(root / ds.class_names[ds.labels[i]] / file, ds.images[i]);
  }
}

/// Copies the selected rows of `ds` into a new dataset with `role`.
inline LabeledImageDataset subset(const LabeledImageDataset& ds,
                                  const std::vector<std::size_t>& indices, DatasetRole role) {
  LabeledImageDataset out = ds.empty_like();
  out.role = role;
  for (std::size_t i : indices) out.push_back(ds.images.at(i), ds.labels.at(i), ds.sources.at(i));
  return out;
}

/// Concatenates datasets that share a class list.
inline LabeledImageDataset concat(const LabeledImageDataset& a, const LabeledImageDataset& b) {
  if (a.class_names != b.class_names) throw Error("cannot concatenate datasets with different classes");
  LabeledImageDataset out = a;
  for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.images[i], b.labels[i], b.sources[i]);
  return out;
}

struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Per-class seeded shuffle, then floor(n * ratio) samples to val and test;
/// the remainder stays in train. Index lists come back sorted.
inline SplitIndices stratified_split_indices(const LabeledImageDataset& ds,
                                             const SplitRatios& ratios, std::uint64_t seed) {
  ratios.validate();
  std::vector<std::vector<std::size_t>> by_class(ds.num_classes());
  for (std::size_t i = 0; i < ds.size(); ++i) by_class.at(ds.labels[i]).push_back(i);

  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < 3) {
      throw Error("class '" + ds.class_names[c] + "' has " + std::to_string(idx.size()) +
                  " samples; stratified split needs at least 3");
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    const auto n = static_cast<double>(idx.size());
    const auto n_val = static_cast<std::size_t>(std::floor(n * ratios.val + 1e-9));
    const auto n_test = static_cast<std::size_t>(std::floor(n * ratios.test + 1e-9));
    const std::size_t n_train = idx.size() - n_val - n_test;
    out.train.insert(out.train.end(), idx.begin(), idx.begin() + n_train);
    out.val.insert(out.val.end(), idx.begin() + n_train, idx.begin() + n_train + n_val);
    out.test.insert(out.test.end(), idx.begin() + n_train + n_val, idx.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.val.begin(), out.val.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

struct DatasetSplit {
  LabeledImageDataset train;
  LabeledImageDataset val;
  LabeledImageDataset test;
};

inline DatasetSplit stratified_split(const LabeledImageDataset& ds, const SplitRatios& ratios,
                                     std::uint64_t seed) {
  const SplitIndices idx = stratified_split_indices(ds, ratios, seed);
  return {subset(ds, idx.train, DatasetRole::kRealTrain), subset(ds, idx.val, DatasetRole::kRealVal),
          subset(ds, idx.test, DatasetRole::kRealTest)};
}

}  // namespace trilemma
