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

#include <Eigen/Dense>

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/image.hpp"

namespace trilemma {

static_assert(std::endian::native == std::endian::little,
              "embedding I/O assumes a little-endian host");

enum class FeatureSource : std::uint8_t { kVgg16 = 0, kInception = 1, kFallback = 2 };

inline const char* to_string(FeatureSource s) {
  switch (s) {
    case FeatureSource::kVgg16: return "vgg16";
    case FeatureSource::kInception: return "inception";
    case FeatureSource::kFallback: return "fallback";
  }
  return "unknown";
}

using FeatureMatrix = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// One feature vector per row.
struct FeatureSet {
  FeatureMatrix vectors;
  FeatureSource source = FeatureSource::kFallback;

  std::size_t count() const noexcept { return static_cast<std::size_t>(vectors.rows()); }
  std::size_t dim() const noexcept { return static_cast<std::size_t>(vectors.cols()); }

  void validate() const {
    if (vectors.rows() < 1 || vectors.cols() < 1) throw Error("feature set is empty");
    if (!vectors.allFinite()) throw Error("feature set contains non-finite values");
  }
};

// GEVB layout, little-endian:
//   "GEVB" | u32 version=1 | u32 count | u32 dim | u8 source | 3 zero bytes |
//   count*dim float32, row-major
inline constexpr std::array<char, 4> kEmbeddingMagic = {'G', 'E', 'V', 'B'};
inline constexpr std::uint32_t kEmbeddingVersion = 1;
inline constexpr std::size_t kEmbeddingHeaderBytes = 20;

inline void write_embeddings(const FeatureSet& fs, const std::filesystem::path& path) {
  fs.validate();
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write embedding file " + path.string());
  const auto count = static_cast<std::uint32_t>(fs.count());
  const auto dim = static_cast<std::uint32_t>(fs.dim());
  const std::uint8_t tail[4] = {static_cast<std::uint8_t>(fs.source), 0, 0, 0};
  out.write(kEmbeddingMagic.data(), 4);
  out.write(reinterpret_cast<const char*>(&kEmbeddingVersion), 4);
  out.write(reinterpret_cast<const char*>(&count), 4);
  out.write(reinterpret_cast<const char*>(&dim), 4);
  out.write(reinterpret_cast<const char*>(tail), 4);
  out.write(reinterpret_cast<const char*>(fs.vectors.data()),
            static_cast<std::streamsize>(sizeof(float) * fs.vectors.size()));
  if (!out) throw Error("failed writing embedding file " + path.string());
}

inline FeatureSet read_embeddings(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embedding file " + path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (bytes.size() < kEmbeddingHeaderBytes ||
      std::memcmp(bytes.data(), kEmbeddingMagic.data(), 4) != 0) {
    throw Error("unrecognized embedding file: " + path.string());
  }
  std::uint32_t version = 0, count = 0, dim = 0;
  std::memcpy(&version, bytes.data() + 4, 4);
  std::memcpy(&count, bytes.data() + 8, 4);
  std::memcpy(&dim, bytes.data() + 12, 4);
  const auto tag = static_cast<std::uint8_t>(bytes[16]);
  if (version != kEmbeddingVersion || tag > 2) {
    throw Error("unrecognized embedding file: " + path.string());
  }
  const std::size_t expected =
      kEmbeddingHeaderBytes + sizeof(float) * static_cast<std::size_t>(count) * dim;
  if (bytes.size() != expected) {
    throw Error("truncated embedding file " + path.string() + ": expected " +
                std::to_string(expected) + " bytes, found " + std::to_string(bytes.size()));
  }
  FeatureSet fs;
  fs.source = static_cast<FeatureSource>(tag);
  fs.vectors.resize(count, dim);
  std::memcpy(fs.vectors.data(), bytes.data() + kEmbeddingHeaderBytes, expected - kEmbeddingHeaderBytes);
  return fs;
}

/// Seeded Gaussian projection shared by every image of one shape.
class RandomProjector {
 public:
  RandomProjector(std::size_t input_size, std::size_t dim, std::uint64_t seed)
      : weights_(dim, input_size) {
    if (dim < 2) throw Error("fallback feature dimension must be at least 2");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0 / std::sqrt(static_cast<double>(input_size)));
    for (Eigen::Index r = 0; r < weights_.rows(); ++r) {
      for (Eigen::Index c = 0; c < weights_.cols(); ++c) weights_(r, c) = normal(rng);
    }
  }

  Eigen::VectorXd project(std::span<const float> pixels) const {
    Eigen::Map<const Eigen::VectorXf> x(pixels.data(), static_cast<Eigen::Index>(pixels.size()));
    return (weights_ * x.cast<double>()).array().tanh().matrix();
  }

  const Eigen::MatrixXd& weights() const noexcept { return weights_; }

 private:
  Eigen::MatrixXd weights_;
};

/// Pixel features through tanh(W x) with W ~ N(0, 1/pixel_count). Used when
/// no pretrained-backbone embeddings were supplied.
inline FeatureSet fallback_features(const LabeledImageDataset& ds, std::size_t dim,
                                    std::uint64_t seed) {
  if (ds.empty()) throw Error("cannot extract features from an empty dataset");
  const RandomProjector proj(ds.images.front().size(), dim, seed);
  FeatureSet fs;
  fs.source = FeatureSource::kFallback;
  fs.vectors.resize(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(dim));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    fs.vectors.row(static_cast<Eigen::Index>(i)) = proj.project(ds.images[i].pixels()).cast<float>();
  }
  return fs;
}

}  // namespace trilemma
