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

// Independent brute-force references shared by the unit and acceptance
// suites. Nothing here calls into the library code under test.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

namespace trilemma::oracle {

using Points = std::vector<std::vector<float>>;

inline double dist2(const std::vector<float>& a, const std::vector<float>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = static_cast<double>(a[i]) - static_cast<double>(b[i]);
    acc += d * d;
  }
  return acc;
}

// k-th smallest distance to the other rows, via a full sort.
inline std::vector<double> knn_radii2(const Points& support, std::size_t k) {
  std::vector<double> radii;
  for (std::size_t i = 0; i < support.size(); ++i) {
    std::vector<double> d;
    for (std::size_t j = 0; j < support.size(); ++j) {
      if (i != j) d.push_back(dist2(support[i], support[j]));
    }
    std::sort(d.begin(), d.end());
    radii.push_back(d[k - 1]);
  }
  return radii;
}

inline double coverage(const Points& support, const Points& queries, std::size_t k) {
  const auto radii = knn_radii2(support, k);
  std::size_t inside = 0;
  for (const auto& q : queries) {
    bool hit = false;
    for (std::size_t i = 0; i < support.size(); ++i) {
      if (dist2(q, support[i]) <= radii[i]) hit = true;
    }
    inside += hit;
  }
  return static_cast<double>(inside) / static_cast<double>(queries.size());
}

inline double precision(const Points& real, const Points& synth, std::size_t k) {
  return coverage(real, synth, k);
}
inline double recall(const Points& real, const Points& synth, std::size_t k) {
  return coverage(synth, real, k);
}

// Frechet distance between Gaussians with diagonal covariances.
inline double diagonal_fid(const std::vector<double>& mu_r, const std::vector<double>& var_r,
                           const std::vector<double>& mu_s, const std::vector<double>& var_s) {
  double total = 0.0;
  for (std::size_t i = 0; i < mu_r.size(); ++i) {
    const double dm = mu_r[i] - mu_s[i];
    const double ds = std::sqrt(var_r[i]) - std::sqrt(var_s[i]);
    total += dm * dm + ds * ds;
  }
  return total;
}

}  // namespace trilemma::oracle
