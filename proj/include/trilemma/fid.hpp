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

#include <algorithm>
#include <cmath>
#include <string>

#include "trilemma/error.hpp"
#include "trilemma/feature_store.hpp"

namespace trilemma {

/// Mean and unbiased covariance of a feature set.
struct GaussianStats {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;

  Eigen::Index dim() const noexcept { return mean.size(); }
};

inline GaussianStats gaussian_stats(const FeatureSet& fs) {
  fs.validate();
  if (fs.count() < 2) throw Error("covariance undefined for fewer than 2 feature vectors");
  const Eigen::MatrixXd x = fs.vectors.cast<double>();
  GaussianStats s;
  s.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - s.mean.transpose();
  s.covariance = (centered.transpose() * centered) / static_cast<double>(x.rows() - 1);
  // Symmetrize away round-off.
  s.covariance = 0.5 * (s.covariance + s.covariance.transpose()).eval();
  return s;
}

namespace detail {

inline Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> symmetric_eigen(const Eigen::MatrixXd& a) {
  if (a.rows() != a.cols()) throw Error("matrix square root needs a square matrix");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if (!((a - a.transpose()).cwiseAbs().maxCoeff() <= 1e-8 * scale)) {
    throw Error("matrix square root needs a symmetric matrix");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a);
  if (eig.info() != Eigen::Success) throw Error("eigendecomposition did not converge");
  return eig;
}

// Eigenvalues below 1e-10 * max(lambda), negatives included, become zero.
inline Eigen::VectorXd clamped_roots(const Eigen::VectorXd& lambda) {
  const double top = lambda.size() > 0 ? lambda.maxCoeff() : 0.0;
  const double floor = 1e-10 * std::max(top, 0.0);
  Eigen::VectorXd out(lambda.size());
  for (Eigen::Index i = 0; i < lambda.size(); ++i) {
    out(i) = lambda(i) > floor ? std::sqrt(lambda(i)) : 0.0;
  }
  return out;
}

}  // namespace detail

/// Principal square root of a symmetric PSD matrix, V diag(sqrt(lambda+)) V^T.
inline Eigen::MatrixXd matrix_sqrt_psd(const Eigen::MatrixXd& a) {
  const auto eig = detail::symmetric_eigen(a);
  const Eigen::VectorXd roots = detail::clamped_roots(eig.eigenvalues());
  return eig.eigenvectors() * roots.asDiagonal() * eig.eigenvectors().transpose();
}

/// Frechet distance between two Gaussians:
///   |mu_r - mu_s|^2 + tr(S_r) + tr(S_s) - 2 tr((S_s^1/2 S_r S_s^1/2)^1/2)
/// The sandwiched form has the same trace as (S_r S_s)^1/2 but stays symmetric
/// PSD. Negative round-off results are reported as 0.
inline double fid(const GaussianStats& real, const GaussianStats& synth) {
  if (real.dim() != synth.dim() || real.covariance.rows() != real.dim() ||
      synth.covariance.rows() != synth.dim()) {
    throw Error("FID statistics have mismatched dimensions (" + std::to_string(real.dim()) +
                " vs " + std::to_string(synth.dim()) + ")");
  }
  const Eigen::MatrixXd root_s = matrix_sqrt_psd(synth.covariance);
  Eigen::MatrixXd sandwich = root_s * real.covariance * root_s;
  sandwich = 0.5 * (sandwich + sandwich.transpose()).eval();
  const auto eig = detail::symmetric_eigen(sandwich);
  const double trace_root = detail::clamped_roots(eig.eigenvalues()).sum();
  const double mean_term = (real.mean - synth.mean).squaredNorm();
  const double value =
      mean_term + real.covariance.trace() + synth.covariance.trace() - 2.0 * trace_root;
  return std::max(value, 0.0);
}

inline double fid(const FeatureSet& real, const FeatureSet& synth) {
  return fid(gaussian_stats(real), gaussian_stats(synth));
}

}  // namespace trilemma
