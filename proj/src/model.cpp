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

#include "riskctl/model.hpp"
#include "riskctl/error.hpp"

#include <Eigen/SVD>

#include <complex>

namespace riskctl {

LtiSystem::LtiSystem(Matrix A, Matrix B, Matrix C)
    : A_(std::move(A)), B_(std::move(B)), C_(std::move(C)) {
  const auto n = A_.rows();
  if (n == 0 || B_.cols() == 0 || C_.rows() == 0)
    throw Error(ErrorCode::DimensionMismatch,
                "system dimensions n, m, q must be positive", "system");
  linalg::require_shape(A_, n, n, "A");
  linalg::require_shape(B_, n, B_.cols(), "B");
  linalg::require_shape(C_, C_.rows(), n, "C");
  if (!A_.allFinite() || !B_.allFinite() || !C_.allFinite())
    throw Error(ErrorCode::InvalidModel, "system matrices must be finite",
                "system");
}

namespace {

using CMatrix = Eigen::MatrixXcd;

constexpr double kRankTol = 1e-8;
constexpr double kUnitCircle = 1.0 - 1e-12;

bool full_rank(const CMatrix &M, Eigen::Index rank) {
  Eigen::JacobiSVD<CMatrix> svd(M);
  const auto &s = svd.singularValues();
  if (s.size() < rank || s(0) == 0.0)
    return false;
  return s(rank - 1) > kRankTol * s(0);
}

// PBH: every mode with |lambda| >= 1 must be visible through `other`, stacked
// side by side (controllability) or on top (observability).
bool pbh_unstable_modes(const Matrix &A, const Matrix &other, bool stack_cols) {
  const auto n = A.rows();
  Eigen::EigenSolver<Matrix> es(A, false);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::complex<double> lambda = es.eigenvalues()(i);
    if (std::abs(lambda) < kUnitCircle)
      continue;
    CMatrix shifted = A.cast<std::complex<double>>();
    shifted.diagonal().array() -= lambda;
    CMatrix test;
    if (stack_cols) {
      test.resize(n, n + other.cols());
      test << shifted, other.cast<std::complex<double>>();
    } else {
      test.resize(n + other.rows(), n);
      test << shifted, other.cast<std::complex<double>>();
    }
    if (!full_rank(test, n))
      return false;
  }
  return true;
}

} // namespace

bool is_stabilizable(const Matrix &A, const Matrix &B) {
  return pbh_unstable_modes(A, B, true);
}

bool is_detectable(const Matrix &A, const Matrix &C) {
  return pbh_unstable_modes(A, C, false);
}

StructureReport validate_system(const LtiSystem &sys, const Matrix &Q,
                                const Matrix &R) {
  linalg::require_shape(Q, sys.n(), sys.n(), "Q");
  linalg::require_shape(R, sys.m(), sys.m(), "R");
  linalg::require_psd(Q, "Q");
  linalg::require_pd(R, "R");

  StructureReport report;
  report.spectral_radius_A = linalg::spectral_radius(sys.A());
  report.stabilizable = is_stabilizable(sys.A(), sys.B());
  report.detectable_via_Q_sqrt =
      is_detectable(sys.A(), linalg::psd_factor(Q).transpose());
  return report;
}

RegulationTarget make_regulation_target(const LtiSystem &sys,
                                        const Vector &x_star) {
  linalg::require_size(x_star, sys.n(), "x_star");
  const Matrix I = Matrix::Identity(sys.n(), sys.n());
  const Vector rhs = (I - sys.A()) * x_star;
  Vector u_star = sys.B().completeOrthogonalDecomposition().solve(rhs);
  const double residual = (rhs - sys.B() * u_star).norm();
  if (residual > 1e-8 * std::max(1.0, rhs.norm())) {
    throw Error(ErrorCode::InfeasibleTarget,
                "x_star is not a fixed point for any feedforward input "
                "(residual " + std::to_string(residual) + ")",
                "target.x_star");
  }
  return {x_star, std::move(u_star), sys.C() * x_star};
}

RegulationTarget make_fixed_point_target(const LtiSystem &sys,
                                         const Vector &u_star) {
  linalg::require_size(u_star, sys.m(), "u_star");
  const Matrix I = Matrix::Identity(sys.n(), sys.n());
  Eigen::FullPivLU<Matrix> lu(I - sys.A());
  if (!lu.isInvertible())
    throw Error(ErrorCode::InfeasibleTarget,
                "I - A is singular; no unique fixed point", "target.u_star");
  Vector x_star = lu.solve(sys.B() * u_star);
  return {x_star, u_star, sys.C() * x_star};
}

LtiSystem opamp_system() {
  Matrix A(2, 2), B(2, 1), C(1, 2);
  A << 0.172, 0.0, 1.046, 0.8869;
  B << 0.1882, 0.2762;
  C << 0.05, -1.0;
  return {A, B, C};
}

} // namespace riskctl
