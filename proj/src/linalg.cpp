/*
 * Copyright 2026 The riskctl Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "riskctl/error.hpp"
#include "riskctl/linalg.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <string>

namespace riskctl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
  case ErrorCode::DimensionMismatch: return "DimensionMismatch";
  case ErrorCode::NonSymmetricPenalty: return "NonSymmetricPenalty";
  case ErrorCode::IndefinitePenalty: return "IndefinitePenalty";
  case ErrorCode::InfeasibleTarget: return "InfeasibleTarget";
  case ErrorCode::InvalidModel: return "InvalidModel";
  case ErrorCode::UnsupportedSource: return "UnsupportedSource";
  case ErrorCode::NonPsdWeight: return "NonPsdWeight";
  case ErrorCode::InsufficientSamples: return "InsufficientSamples";
  case ErrorCode::MomentMismatch: return "MomentMismatch";
  case ErrorCode::SingularInnerMatrix: return "SingularInnerMatrix";
  case ErrorCode::NonFiniteRecursion: return "NonFiniteRecursion";
  case ErrorCode::NotStabilizable: return "NotStabilizable";
  case ErrorCode::NotDetectable: return "NotDetectable";
  case ErrorCode::NoConvergence: return "NoConvergence";
  case ErrorCode::SingularInnovation: return "SingularInnovation";
  case ErrorCode::PlanExhausted: return "PlanExhausted";
  case ErrorCode::InvalidConfig: return "InvalidConfig";
  case ErrorCode::UsageError: return "UsageError";
  case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

namespace linalg {

bool all_finite(const Matrix &M) { return M.allFinite(); }

bool is_symmetric(const Matrix &M, double tol) {
  if (M.rows() != M.cols())
    return false;
  const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
  return (M - M.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix symmetrize(const Matrix &M) { return 0.5 * (M + M.transpose()); }

double min_eigenvalue(const Matrix &M) {
  if (M.size() == 0)
    return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M),
                                           Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

double spectral_radius(const Matrix &M) {
  if (M.size() == 0)
    return 0.0;
  Eigen::EigenSolver<Matrix> es(M, false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix psd_factor(const Matrix &M) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  Vector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * root.asDiagonal();
}

void require_shape(const Matrix &M, Eigen::Index rows, Eigen::Index cols,
                   std::string_view name) {
  if (M.rows() != rows || M.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be " + std::to_string(rows) + "x" +
                    std::to_string(cols) + ", got " +
                    std::to_string(M.rows()) + "x" + std::to_string(M.cols()),
                std::string(name));
  }
}

void require_size(const Vector &v, Eigen::Index size, std::string_view name) {
  if (v.size() != size) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must have length " +
                    std::to_string(size) + ", got " + std::to_string(v.size()),
                std::string(name));
  }
}

namespace {

double scaled_min_eigenvalue(const Matrix &M, std::string_view name) {
  if (M.rows() != M.cols())
    throw Error(ErrorCode::DimensionMismatch,
                std::string(name) + " must be square", std::string(name));
  if (!M.allFinite())
    throw Error(ErrorCode::IndefinitePenalty,
                std::string(name) + " has non-finite entries",
                std::string(name));
  if (!is_symmetric(M))
    throw Error(ErrorCode::NonSymmetricPenalty,
                std::string(name) + " is not symmetric", std::string(name));
  return min_eigenvalue(M);
}

} // namespace

void require_psd(const Matrix &M, std::string_view name) {
  if (scaled_min_eigenvalue(M, name) < -kPsdTol)
    throw Error(ErrorCode::IndefinitePenalty,
                std::string(name) + " is not positive semi-definite",
                std::string(name));
}

void require_pd(const Matrix &M, std::string_view name) {
  if (scaled_min_eigenvalue(M, name) < kPsdTol)
    throw Error(ErrorCode::IndefinitePenalty,
                std::string(name) + " is not positive definite",
                std::string(name));
}

double relative_difference(const Matrix &a, const Matrix &b) {
  return (a - b).norm() / std::max(1.0, b.norm());
}

} // namespace linalg
} // namespace riskctl
