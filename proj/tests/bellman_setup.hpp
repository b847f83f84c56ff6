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

#include "oracles.hpp"
#include "riskctl/controller.hpp"
#include "riskctl/model.hpp"
#include "riskctl/noise.hpp"
#include "riskctl/risk_transform.hpp"

namespace bellman {

using riskctl::Matrix;
using riskctl::Vector;

/// Discrete-noise instance under full state feedback, with the library's
/// synthesis alongside the enumeration oracle.
struct Instance {
  oracle::LagrangianProblem problem;
  riskctl::FiniteSynthesis synthesis;
};

inline Instance make_instance(const Matrix &A, const Matrix &B,
                              const Matrix &C, const Matrix &Q,
                              const Matrix &R, const Matrix &Qs,
                              const Matrix &Qo, double mu_s, double mu_o,
                              int N, std::vector<Vector> x0,
                              oracle::DiscreteNoise noise) {
  const riskctl::LtiSystem sys(A, B, C);
  // Paired rows carry the exact moments of the uniform law over them.
  const auto model = riskctl::JointNoiseModel::paired(noise.w, noise.eps);
  const auto mo = riskctl::compute_moments(model, Qs, Qo, C);
  riskctl::RiskWeights wts;
  wts.Q = Q;
  wts.R = R;
  wts.Qs = Qs;
  wts.Qo = Qo;
  wts.mu_s = mu_s;
  wts.mu_o = mu_o;
  wts.N = N;
  const auto tp = riskctl::transform(wts, mo, C);

  Instance inst;
  inst.synthesis = riskctl::synthesize_finite(sys, tp, wts, mo);
  inst.problem = {A, B, C, Q, R, Qs, Qo, mu_s, mu_o, N, std::move(x0),
                  std::move(noise)};
  return inst;
}

/// Affine coefficients k_t = h_t + l_t of a schedule.
inline std::vector<Vector> offsets(const riskctl::PolicySchedule &p) {
  std::vector<Vector> k;
  for (int t = 0; t < p.horizon(); ++t)
    k.push_back(p.h[t] + p.l[t]);
  return k;
}

/// Scalar plant with a skewed three-point shock and a coupled output noise.
inline Instance scalar_instance(double w_shift = 0.0) {
  oracle::DiscreteNoise noise;
  const double ws[] = {-0.6, -0.2, 1.4};
  const double es[] = {0.1, -0.3, 0.5};
  for (int k = 0; k < 3; ++k) {
    noise.w.push_back(Vector::Constant(1, ws[k] + w_shift));
    noise.eps.push_back(Vector::Constant(1, es[k]));
  }
  std::vector<Vector> x0;
  for (double v : {-1.0, 0.5, 2.0})
    x0.push_back(Vector::Constant(1, v));
  const Matrix one = Matrix::Identity(1, 1);
  return make_instance(Matrix::Constant(1, 1, 0.9), Matrix::Constant(1, 1, 0.7),
                       Matrix::Constant(1, 1, 1.3), one, 0.5 * one, one,
                       0.8 * one, 0.4, 0.2, 2, std::move(x0),
                       std::move(noise));
}

/// Two-state plant with non-normal A so transposed recursions differ.
inline Instance planar_instance(const Vector &w_shift = Vector::Zero(2)) {
  Matrix A(2, 2), B(2, 1), C(1, 2), Qs(2, 2);
  A << 0.6, 0.9, -0.3, 0.4;
  B << 0.2, 1.0;
  C << 1.0, 0.5;
  Qs << 1.0, 0.3, 0.3, 0.5;
  oracle::DiscreteNoise noise;
  const double w1[] = {-0.4, 0.1, 0.0, 1.1};
  const double w2[] = {0.2, -0.5, 0.1, 0.8};
  const double es[] = {0.2, -0.1, -0.4, 0.6};
  for (int k = 0; k < 4; ++k) {
    noise.w.push_back((Vector(2) << w1[k], w2[k]).finished() + w_shift);
    noise.eps.push_back(Vector::Constant(1, es[k]));
  }
  std::vector<Vector> x0;
  const double xs[][2] = {{1.0, 0.0}, {-0.5, 1.0}, {0.3, -1.2}, {0.0, 0.4}};
  for (const auto &p : xs)
    x0.push_back((Vector(2) << p[0], p[1]).finished());
  return make_instance(A, B, C, Matrix::Identity(2, 2),
                       Matrix::Constant(1, 1, 0.3), Qs,
                       Matrix::Constant(1, 1, 0.6), 0.5, 0.3, 2,
                       std::move(x0), std::move(noise));
}

} // namespace bellman
