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

#pragma once

#include "riskctl/linalg.hpp"

namespace riskctl {

/// Partially observed plant x_{t+1} = A x_t + B u_t + w_{t+1}, y_t = C x_t + eps_t.
/// Immutable after construction; the constructor enforces consistent shapes
/// and finite entries.
class LtiSystem {
public:
  LtiSystem(Matrix A, Matrix B, Matrix C);

  const Matrix &A() const noexcept { return A_; }
  const Matrix &B() const noexcept { return B_; }
  const Matrix &C() const noexcept { return C_; }
  Eigen::Index n() const noexcept { return A_.rows(); }
  Eigen::Index m() const noexcept { return B_.cols(); }
  Eigen::Index q() const noexcept { return C_.rows(); }

private:
  Matrix A_, B_, C_;
};

struct StructureReport {
  bool stabilizable = false;
  bool detectable_via_Q_sqrt = false;
  double spectral_radius_A = 0.0;
};

/// Checks penalty shapes/definiteness and runs PBH rank tests on the modes of
/// A with |lambda| >= 1.
StructureReport validate_system(const LtiSystem &sys, const Matrix &Q,
                                const Matrix &R);

/// PBH tests on their own; singular values below 1e-8 * sigma_max count as
/// rank deficient.
bool is_stabilizable(const Matrix &A, const Matrix &B);
bool is_detectable(const Matrix &A, const Matrix &C);

struct RegulationTarget {
  Vector x_star;
  Vector u_star;
  Vector y_star;
};

/// Solves (I - A) x* = B u* for u* in the least-squares sense and rejects
/// targets whose residual exceeds 1e-8 (relative).
RegulationTarget make_regulation_target(const LtiSystem &sys,
                                        const Vector &x_star);

/// The fixed point x* = (I - A)^{-1} B u* for a chosen feedforward input.
RegulationTarget make_fixed_point_target(const LtiSystem &sys,
                                         const Vector &u_star);

/// Inverting op-amp circuit, two capacitor voltages, sampled at 0.4 s.
LtiSystem opamp_system();

} // namespace riskctl
