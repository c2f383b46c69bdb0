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
#include <span>
#include <string>
#include <vector>

#include "trilemma/error.hpp"
#include "trilemma/feature_store.hpp"

namespace trilemma {

inline constexpr std::size_t kDefaultManifoldK = 3;

namespace detail {

// Sequential per-pair reduction; every distance in this module goes through
// here so that identical rows compare bitwise equal.
inline double squared_distance(const float* a, const float* b, std::size_t dim) noexcept {
  double acc = 0.0;
  for (std::size_t i = 0; i < dim; ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

}  // namespace detail

/// Union of k-NN hyperspheres around a support set.
struct ManifoldModel {
  FeatureSet support;
  std::vector<double> squared_radii;
  std::size_t k = kDefaultManifoldK;

  double radius(std::size_t i) const { return std::sqrt(squared_radii.at(i)); }
};

/// Radius of each support row is the distance to its k-th nearest other row
/// (k-th order statistic, so ties count with multiplicity).
inline ManifoldModel build_manifold(const FeatureSet& fs, std::size_t k = kDefaultManifoldK) {
  fs.validate();
  const std::size_t n = fs.count();
  if (k < 1) throw Error("manifold k must be at least 1");
  if (n < k + 1) {
    throw Error("need at least k+1 support points (k=" + std::to_string(k) + ", have " +
                std::to_string(n) + ")");
  }
  ManifoldModel m;
  m.support = fs;
  m.k = k;
  m.squared_radii.resize(n);
  const std::size_t dim = fs.dim();
  std::vector<double> dists(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    const float* row_i = fs.vectors.data() + i * dim;
    std::size_t w = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      dists[w++] = detail::squared_distance(row_i, fs.vectors.data() + j * dim, dim);
    }
    std::nth_element(dists.begin(), dists.begin() + static_cast<std::ptrdiff_t>(k - 1), dists.end());
    m.squared_radii[i] = dists[k - 1];
  }
  return m;
}

/// 1 when `v` lies in at least one hypersphere, boundary included.
inline int membership(std::span<const float> v, const ManifoldModel& m) {
  const std::size_t dim = m.support.dim();
  if (v.size() != dim) {
    throw Error("feature dimension " + std::to_string(v.size()) + " does not match manifold dimension " +
                std::to_string(dim));
  }
  for (std::size_t i = 0; i < m.support.count(); ++i) {
    const double d2 = detail::squared_distance(v.data(), m.support.vectors.data() + i * dim, dim);
    if (d2 <= m.squared_radii[i]) return 1;
  }
  return 0;
}

/// Fraction of `queries` rows inside the manifold.
inline double coverage(const FeatureSet& queries, const ManifoldModel& m) {
  queries.validate();
  const std::size_t dim = queries.dim();
  std::size_t inside = 0;
  for (std::size_t i = 0; i < queries.count(); ++i) {
    inside += static_cast<std::size_t>(
        membership(std::span<const float>(queries.vectors.data() + i * dim, dim), m));
  }
  return static_cast<double>(inside) / static_cast<double>(queries.count());
}

/// Fidelity: share of synthetic features that land on the real manifold.
inline double precision(const FeatureSet& real, const FeatureSet& synth,
                        std::size_t k = kDefaultManifoldK) {
  return coverage(synth, build_manifold(real, k));
}

/// Diversity: share of real features covered by the synthetic manifold.
inline double recall(const FeatureSet& real, const FeatureSet& synth,
                     std::size_t k = kDefaultManifoldK) {
  return precision(synth, real, k);
}

}  // namespace trilemma
