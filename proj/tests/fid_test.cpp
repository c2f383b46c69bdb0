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

#include "trilemma/fid.hpp"

#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"

namespace trilemma {
namespace {

GaussianStats stats_1d(double mean, double var) {
  GaussianStats s;
  s.mean = Eigen::VectorXd::Constant(1, mean);
  s.covariance = Eigen::MatrixXd::Constant(1, 1, var);
  return s;
}

Eigen::MatrixXd random_psd(std::mt19937_64& rng, Eigen::Index d, Eigen::Index rank) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd b(d, rank);
  for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = normal(rng);
  return b * b.transpose();
}

Eigen::MatrixXd random_orthogonal(std::mt19937_64& rng, Eigen::Index d) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(d, d);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return Eigen::HouseholderQR<Eigen::MatrixXd>(a).householderQ();
}

TEST(GaussianStatsTest, TwoPointsHandComputed) {
  FeatureSet fs;
  fs.vectors.resize(2, 2);
  fs.vectors << 0, 0, 2, 0;
  const auto s = gaussian_stats(fs);
  EXPECT_DOUBLE_EQ(s.mean(0), 1.0);
  EXPECT_DOUBLE_EQ(s.mean(1), 0.0);
  EXPECT_DOUBLE_EQ(s.covariance(0, 0), 2.0);
  EXPECT_DOUBLE_EQ(s.covariance(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(s.covariance(1, 1), 0.0);
}

TEST(GaussianStatsTest, IdenticalRowsHaveZeroCovariance) {
  FeatureSet fs;
  fs.vectors = FeatureMatrix::Constant(5, 3, 2.5F);
  EXPECT_EQ(gaussian_stats(fs).covariance.cwiseAbs().maxCoeff(), 0.0);
}

TEST(GaussianStatsTest, SingleRowIsAnError) {
  FeatureSet fs;
  fs.vectors = FeatureMatrix::Constant(1, 3, 1.0F);
  try {
    gaussian_stats(fs);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("covariance undefined"), std::string::npos);
  }
}

TEST(MatrixSqrtTest, IdentityAndDiagonal) {
  EXPECT_TRUE(matrix_sqrt_psd(Eigen::MatrixXd::Identity(4, 4)).isApprox(Eigen::MatrixXd::Identity(4, 4)));
  Eigen::MatrixXd d = Eigen::Vector2d(4, 9).asDiagonal();
  const Eigen::MatrixXd r = matrix_sqrt_psd(d);
  EXPECT_NEAR(r(0, 0), 2.0, 1e-12);
  EXPECT_NEAR(r(1, 1), 3.0, 1e-12);
  EXPECT_NEAR(r(0, 1), 0.0, 1e-12);
}

TEST(MatrixSqrtTest, ReconstructsInput) {
  Eigen::MatrixXd a(2, 2);
  a << 2, 1, 1, 2;
  const Eigen::MatrixXd r = matrix_sqrt_psd(a);
  EXPECT_LE((r * r - a).cwiseAbs().maxCoeff(), 1e-10);
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 1 + trial % 12;
    const Eigen::MatrixXd p = random_psd(rng, d, d);
    const Eigen::MatrixXd root = matrix_sqrt_psd(p);
    EXPECT_LE((root * root - p).cwiseAbs().maxCoeff(), 1e-10 * std::max(1.0, p.cwiseAbs().maxCoeff()));
  }
}

TEST(MatrixSqrtTest, RejectsAsymmetricInput) {
  Eigen::MatrixXd a(2, 2);
  a << 1, 2, 0, 1;
  EXPECT_THROW(matrix_sqrt_psd(a), Error);
}

TEST(FidTest, IdenticalStatsGiveZero) {
  std::mt19937_64 rng(1);
  GaussianStats s;
  s.mean = Eigen::VectorXd::Random(6);
  s.covariance = random_psd(rng, 6, 3);  // rank deficient on purpose
  EXPECT_LE(fid(s, s), 1e-6);
}

TEST(FidTest, OneDimensionalClosedForms) {
  EXPECT_NEAR(fid(stats_1d(0, 1), stats_1d(1, 1)), 1.0, 1e-12);
  EXPECT_NEAR(fid(stats_1d(0, 1), stats_1d(0, 4)), 1.0, 1e-12);
}

TEST(FidTest, DimensionMismatch) {
  GaussianStats a = stats_1d(0, 1);
  GaussianStats b;
  b.mean = Eigen::VectorXd::Zero(2);
  b.covariance = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_THROW(fid(a, b), Error);
}

TEST(FidPropertyTest, DiagonalMatchesClosedForm) {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> var(0.01, 10.0);
  std::normal_distribution<double> normal(0.0, 3.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + static_cast<std::size_t>(trial % 16);
    std::vector<double> mr(d), vr(d), ms(d), vs(d);
    for (std::size_t i = 0; i < d; ++i) {
      mr[i] = normal(rng);
      ms[i] = normal(rng);
      vr[i] = var(rng);
      vs[i] = var(rng);
    }
    GaussianStats r, s;
    r.mean = Eigen::Map<Eigen::VectorXd>(mr.data(), static_cast<Eigen::Index>(d));
    s.mean = Eigen::Map<Eigen::VectorXd>(ms.data(), static_cast<Eigen::Index>(d));
    r.covariance = Eigen::Map<Eigen::VectorXd>(vr.data(), static_cast<Eigen::Index>(d)).asDiagonal();
    s.covariance = Eigen::Map<Eigen::VectorXd>(vs.data(), static_cast<Eigen::Index>(d)).asDiagonal();
    const double expected = oracle::diagonal_fid(mr, vr, ms, vs);
    EXPECT_LE(std::abs(fid(r, s) - expected), 1e-8 * expected);
  }
}

TEST(FidPropertyTest, SymmetricAndRotationInvariant) {
  std::mt19937_64 rng(13);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 2 + trial % 10;
    GaussianStats a, b;
    a.mean = Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
    b.mean = Eigen::VectorXd::NullaryExpr(d, [&] { return normal(rng); });
    a.covariance = random_psd(rng, d, d);
    b.covariance = random_psd(rng, d, d);
    const double ab = fid(a, b);
    EXPECT_NEAR(fid(b, a), ab, 1e-6);
    EXPECT_GE(ab, 0.0);
    const Eigen::MatrixXd q = random_orthogonal(rng, d);
    GaussianStats ra{q * a.mean, q * a.covariance * q.transpose()};
    GaussianStats rb{q * b.mean, q * b.covariance * q.transpose()};
    ra.covariance = 0.5 * (ra.covariance + ra.covariance.transpose()).eval();
    rb.covariance = 0.5 * (rb.covariance + rb.covariance.transpose()).eval();
    EXPECT_NEAR(fid(ra, rb), ab, 1e-6);
  }
}

}  // namespace
}  // namespace trilemma
