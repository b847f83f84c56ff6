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
#include "riskctl/noise.hpp"

namespace riskctl {

/// Penalties, risk weights, multipliers and tolerances of the
/// risk-constrained LQ problem over horizon N.
struct RiskWeights {
  Matrix Q, R, Qs, Qo;
  double mu_s = 0.0, mu_o = 0.0;
  double eps_s = 1.0, eps_o = 1.0;
  int N = 1;

  /// Throws on non-PSD/PD penalties, negative multipliers, N < 1.
  void validate(Eigen::Index n, Eigen::Index m, Eigen::Index q) const;
  RiskWeights with_multipliers(double s, double o) const;
};

/// The unconstrained LQ problem the Lagrangian reduces to: inflated state
/// penalty, affine statistic, and the tolerances shifted by the constant
/// (state-independent) part of the expected squared deviations.
struct TransformedProblem {
  Matrix Q_mu;
  Vector M_mu;
  double eps_bar_s = 0.0;
  double eps_bar_o = 0.0;
  /// Constant terms of the per-step increments; eps_bar = eps - N * constant.
  double state_constant = 0.0;
  double output_constant = 0.0;
  NoiseMoments moments;
};

TransformedProblem transform(const RiskWeights &weights,
                             const NoiseMoments &moments, const Matrix &C);

/// E{Delta^2_s} written as a function of the realised state x_t; its average
/// over closed-loop states estimates one summand of J_s.
double constraint_increment_state(const Vector &x, const NoiseMoments &moments,
                                  const Matrix &Qs);
double constraint_increment_output(const Vector &x, const NoiseMoments &moments,
                                   const Matrix &Qo, const Matrix &C);

/// m_w - 4 tr(Qs W Qs W)
double state_increment_constant(const NoiseMoments &moments, const Matrix &Qs);
/// m_weps + 4 eps_bar' Qo M - 8 tr(C' G C W) + 4 tr(G Z), G = Qo P Qo
double output_increment_constant(const NoiseMoments &moments, const Matrix &Qo,
                                 const Matrix &C);

} // namespace riskctl
