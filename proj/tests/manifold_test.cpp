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

#include "trilemma/manifold.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "oracles.hpp"

namespace trilemma {
namespace {

FeatureSet from_points(const oracle::Points& pts) {
  FeatureSet fs;
  fs.vectors.resize(static_cast<Eigen::Index>(pts.size()), static_cast<Eigen::Index>(pts[0].size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    for (std::size_t j = 0; j < pts[i].size(); ++j) {
      fs.vectors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = pts[i][j];
    }
  }
  return fs;
}

oracle::Points random_points(std::mt19937_64& rng, std::size_t n, std::size_t d, float shift = 0.0F) {
  std::normal_distribution<float> normal(0.0F, 1.0F);
  oracle::Points pts(n, std::vector<float>(d));
  for (auto& p : pts) {
    for (auto& v : p) v = normal(rng) + shift;
  }
  return pts;
}

TEST(BuildManifoldTest, LineRadiiK1) {
  const auto m = build_manifold(from_points({{0}, {1}, {3}}), 1);
  EXPECT_DOUBLE_EQ(m.radius(0), 1.0);
  EXPECT_DOUBLE_EQ(m.radius(1), 1.0);
  EXPECT_DOUBLE_EQ(m.radius(2), 2.0);
}

TEST(BuildManifoldTest, LineRadiiK2) {
  const auto m = build_manifold(from_points({{0}, {1}, {3}}), 2);
  EXPECT_DOUBLE_EQ(m.radius(0), 3.0);
  EXPECT_DOUBLE_EQ(m.radius(1), 2.0);
  EXPECT_DOUBLE_EQ(m.radius(2), 3.0);
}

TEST(BuildManifoldTest, NeedsKPlusOnePoints) {
  try {
    build_manifold(from_points({{0}, {1}, {3}}), 3);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("need at least k+1 support points"), std::string::npos);
  }
}

TEST(BuildManifoldTest, TiedDistancesCountWithMultiplicity) {
  // Point 0 has two neighbours at distance 1 and one at 5; k=2 picks 1.
  const auto m = build_manifold(from_points({{0}, {1}, {-1}, {5}}), 2);
  EXPECT_DOUBLE_EQ(m.radius(0), 1.0);
}

TEST(MembershipTest, SupportPointIsInside) {
  const auto m = build_manifold(from_points({{0, 0}, {1, 0}, {0, 2}}), 1);
  const float v[] = {1, 0};
  EXPECT_EQ(membership(v, m), 1);
}

TEST(MembershipTest, BoundaryIsInside) {
  // Radius of (0,0) with k=1 is 1; (0,-1) sits exactly on that sphere and
  // is farther than every other radius from the other points.
  const auto m = build_manifold(from_points({{0, 0}, {1, 0}, {0, 5}}), 1);
  const float v[] = {0, -1};
  EXPECT_EQ(membership(v, m), 1);
}

TEST(MembershipTest, FarPointIsOutside) {
  const auto m = build_manifold(from_points({{0, 0}, {1, 0}, {0, 2}}), 1);
  const float v[] = {50, 50};
  EXPECT_EQ(membership(v, m), 0);
  const float wrong_dim[] = {1, 2, 3};
  EXPECT_THROW(membership(wrong_dim, m), Error);
}

TEST(PrecisionTest, IdenticalSetsScoreOne) {
  std::mt19937_64 rng(3);
  const auto fs = from_points(random_points(rng, 40, 5));
  EXPECT_EQ(precision(fs, fs), 1.0);
  EXPECT_EQ(recall(fs, fs), 1.0);
}

TEST(PrecisionTest, UnitSquareCorners) {
  // Every corner's 3rd neighbour is the opposite corner at sqrt(2); the
  // centre is within 0.707 of all corners, (10,10) is outside.
  const auto real = from_points({{0, 0}, {1, 0}, {0, 1}, {1, 1}});
  const auto synth = from_points({{0.5F, 0.5F}, {10, 10}});
  EXPECT_DOUBLE_EQ(precision(real, synth, 3), 0.5);
}

TEST(PrecisionTest, DistantSyntheticScoresZero) {
  std::mt19937_64 rng(4);
  const auto real = from_points(random_points(rng, 30, 3));
  const auto synth = from_points(random_points(rng, 30, 3, 1e6F));
  EXPECT_EQ(precision(real, synth), 0.0);
}

TEST(RecallTest, SingleClusterCoversOneMode) {
  // Synthetic: one tight cluster at the origin. Real: six copies of synthetic
  // points plus four points in a far cluster. Only the six are covered.
  oracle::Points synth;
  for (int i = 0; i < 10; ++i) synth.push_back({0.01F * static_cast<float>(i), 0.0F});
  oracle::Points real;
  for (int i = 0; i < 6; ++i) real.push_back(synth[static_cast<std::size_t>(i)]);
  for (int i = 0; i < 4; ++i) real.push_back({100.0F + static_cast<float>(i), 100.0F});
  EXPECT_DOUBLE_EQ(oracle::recall(real, synth, 3), 0.6);
  EXPECT_DOUBLE_EQ(recall(from_points(real), from_points(synth), 3), 0.6);
}

TEST(RecallTest, IsPrecisionWithRolesSwapped) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = from_points(random_points(rng, 20 + trial, 3));
    const auto b = from_points(random_points(rng, 25, 3, 0.5F));
    const std::size_t k = 1 + static_cast<std::size_t>(trial % 5);
    EXPECT_EQ(recall(a, b, k), precision(b, a, k));
  }
}

TEST(ManifoldPropertyTest, MatchesBruteForceOracle) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> size(6, 80);
  std::uniform_int_distribution<std::size_t> dim(1, 8);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t d = dim(rng);
    const auto real = random_points(rng, size(rng), d);
    const auto synth = random_points(rng, size(rng), d, 0.3F);
    for (std::size_t k : {1, 3, 5}) {
      EXPECT_EQ(precision(from_points(real), from_points(synth), k), oracle::precision(real, synth, k));
      EXPECT_EQ(recall(from_points(real), from_points(synth), k), oracle::recall(real, synth, k));
    }
  }
}

TEST(ManifoldPropertyTest, PermutationInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto real = random_points(rng, 30, 4);
    auto synth = random_points(rng, 35, 4, 0.4F);
    const double p = precision(from_points(real), from_points(synth));
    const double r = recall(from_points(real), from_points(synth));
    std::shuffle(real.begin(), real.end(), rng);
    std::shuffle(synth.begin(), synth.end(), rng);
    EXPECT_EQ(precision(from_points(real), from_points(synth)), p);
    EXPECT_EQ(recall(from_points(real), from_points(synth)), r);
  }
}

// Signed axis permutations are rotations that float arithmetic applies
// exactly, so the metrics must not move at all.
TEST(ManifoldPropertyTest, RigidRotationInvariant) {
  std::mt19937_64 rng(6);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t d = 2 + static_cast<std::size_t>(trial % 6);
    auto real = random_points(rng, 30, d);
    auto synth = random_points(rng, 30, d, 0.4F);
    std::vector<std::size_t> perm(d);
    std::iota(perm.begin(), perm.end(), std::size_t{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<float> sign(d);
    for (auto& s : sign) s = (rng() & 1U) ? 1.0F : -1.0F;
    auto rotate = [&](oracle::Points pts) {
      for (auto& p : pts) {
        const auto old = p;
        for (std::size_t i = 0; i < d; ++i) p[i] = sign[i] * old[perm[i]];
      }
      return pts;
    };
    EXPECT_EQ(precision(from_points(rotate(real)), from_points(rotate(synth))),
              precision(from_points(real), from_points(synth)));
    EXPECT_EQ(recall(from_points(rotate(real)), from_points(rotate(synth))),
              recall(from_points(real), from_points(synth)));
  }
}

}  // namespace
}  // namespace trilemma
