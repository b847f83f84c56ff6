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
#include "testutil.hpp"

using namespace riskctl;
using testutil::random_stable;

TEST_CASE("op-amp plant is stable and stabilizable") {
  const auto sys = opamp_system();
  const auto rep = validate_system(sys, Matrix::Identity(2, 2),
                                   Matrix::Identity(1, 1));
  CHECK(rep.stabilizable);
  CHECK(rep.detectable_via_Q_sqrt);
  CHECK(rep.spectral_radius_A == doctest::Approx(0.8869).epsilon(1e-12));
}

TEST_CASE("marginally stable modes without input are not stabilizable") {
  const LtiSystem sys(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                      Matrix::Identity(1, 2));
  const auto rep = validate_system(sys, Matrix::Identity(2, 2),
                                   Matrix::Identity(1, 1));
  CHECK_FALSE(rep.stabilizable);
}

TEST_CASE("unstable mode reachable only through B is detected") {
  Matrix A(2, 2);
  A << 1.5, 0.0, 0.0, 0.5;
  Matrix B_bad(2, 1), B_good(2, 1);
  B_bad << 0.0, 1.0;
  B_good << 1.0, 0.0;
  CHECK_FALSE(is_stabilizable(A, B_bad));
  CHECK(is_stabilizable(A, B_good));
  Matrix C_bad(1, 2), C_good(1, 2);
  C_bad << 0.0, 1.0;
  C_good << 1.0, 0.0;
  CHECK_FALSE(is_detectable(A, C_bad));
  CHECK(is_detectable(A, C_good));
}

TEST_CASE("random stable A is stabilizable for any B") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 1 + trial % 4;
    const Matrix A = random_stable(rng, n, 0.95);
    Eigen::EigenSolver<Matrix> es(A);
    CHECK(es.eigenvalues().cwiseAbs().maxCoeff() < 1.0);
    CHECK(is_stabilizable(A, Matrix::Zero(n, 1)));
    CHECK(is_stabilizable(A, testutil::random_matrix(rng, n, 2)));
  }
}

TEST_CASE("penalty validation reports the failing property") {
  const auto sys = opamp_system();
  const Matrix R = Matrix::Identity(1, 1);
  CHECK_ERROR_CODE(validate_system(sys, Matrix::Identity(3, 3), R),
                   ErrorCode::DimensionMismatch);
  Matrix Qns(2, 2);
  Qns << 1.0, 0.5, 0.0, 1.0;
  CHECK_ERROR_CODE(validate_system(sys, Qns, R),
                   ErrorCode::NonSymmetricPenalty);
  Matrix Qind(2, 2);
  Qind << 1.0, 0.0, 0.0, -1e-6;
  CHECK_ERROR_CODE(validate_system(sys, Qind, R), ErrorCode::IndefinitePenalty);
  CHECK_ERROR_CODE(validate_system(sys, Matrix::Identity(2, 2),
                                   Matrix::Zero(1, 1)),
                   ErrorCode::IndefinitePenalty);
  // PSD within tolerance is accepted.
  Matrix Qtol(2, 2);
  Qtol << 1.0, 0.0, 0.0, -1e-12;
  CHECK_NOTHROW(validate_system(sys, Qtol, R));
}

TEST_CASE("system constructor rejects inconsistent or non-finite data") {
  CHECK_ERROR_CODE(LtiSystem(Matrix::Identity(2, 2), Matrix::Zero(3, 1),
                             Matrix::Zero(1, 2)),
                   ErrorCode::DimensionMismatch);
  CHECK_ERROR_CODE(LtiSystem(Matrix::Identity(2, 2), Matrix::Zero(2, 1),
                             Matrix::Zero(1, 3)),
                   ErrorCode::DimensionMismatch);
  Matrix A = Matrix::Identity(2, 2);
  A(0, 1) = std::numeric_limits<double>::quiet_NaN();
  CHECK_ERROR_CODE(LtiSystem(A, Matrix::Zero(2, 1), Matrix::Zero(1, 2)),
                   ErrorCode::InvalidModel);
}

TEST_CASE("structure report is deterministic") {
  const auto sys = opamp_system();
  const auto a = validate_system(sys, Matrix::Identity(2, 2),
                                 Matrix::Identity(1, 1));
  const auto b = validate_system(sys, Matrix::Identity(2, 2),
                                 Matrix::Identity(1, 1));
  CHECK(a.stabilizable == b.stabilizable);
  CHECK(a.detectable_via_Q_sqrt == b.detectable_via_Q_sqrt);
  CHECK(a.spectral_radius_A == b.spectral_radius_A);
}

TEST_CASE("origin is always a regulation target") {
  const auto t = make_regulation_target(opamp_system(), Vector::Zero(2));
  CHECK(t.u_star.norm() == 0.0);
  CHECK(t.y_star.norm() == 0.0);
}

TEST_CASE("forward-constructed fixed points are inverted exactly") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index n = 2 + trial % 3;
    const Matrix A = random_stable(rng, n, 0.9);
    const Matrix B = testutil::random_matrix(rng, n, 1 + trial % 2);
    const Matrix C = testutil::random_matrix(rng, 1, n);
    const LtiSystem sys(A, B, C);
    const Vector u = testutil::random_matrix(rng, B.cols(), 1);
    const Vector x = (Matrix::Identity(n, n) - A).lu().solve(B * u);
    const auto t = make_regulation_target(sys, x);
    CHECK((t.u_star - u).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((t.y_star - C * x).norm() <= 1e-12);
    CHECK((A * x + B * t.u_star - x).norm() <= 1e-8 * std::max(1.0, x.norm()));
  }
}

TEST_CASE("op-amp target with unit feedforward input") {
  const auto sys = opamp_system();
  const auto t = make_fixed_point_target(sys, Vector::Constant(1, 1.0));
  CHECK((sys.A() * t.x_star + sys.B() * t.u_star - t.x_star).norm() <= 1e-12);
  CHECK(t.x_star(0) == doctest::Approx(0.1882 / (1.0 - 0.172)));
  CHECK(t.y_star(0) == doctest::Approx((sys.C() * t.x_star)(0)));
}

TEST_CASE("state that is no fixed point for any input is rejected") {
  // (0.2117, 0.43995) gives (I - A) x = (0.1753, -0.1717), not a multiple
  // of B.
  Vector x(2);
  x << 0.2117, 0.43995;
  const auto sys = opamp_system();
  CHECK((sys.C() * x)(0) == doctest::Approx(-0.4294).epsilon(1e-4));
  CHECK_ERROR_CODE(make_regulation_target(sys, x), ErrorCode::InfeasibleTarget);
}
