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

#include "riskctl/risk_transform.hpp"
#include "riskctl/error.hpp"

namespace riskctl {

void RiskWeights::validate(Eigen::Index n, Eigen::Index m,
                           Eigen::Index q) const {
  linalg::require_shape(Q, n, n, "weights.Q");
  linalg::require_shape(R, m, m, "weights.R");
  linalg::require_shape(Qs, n, n, "weights.Qs");
  linalg::require_shape(Qo, q, q, "weights.Qo");
  linalg::require_psd(Q, "weights.Q");
  linalg::require_pd(R, "weights.R");
  linalg::require_psd(Qs, "weights.Qs");
  linalg::require_psd(Qo, "weights.Qo");
  if (!(mu_s >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "mu_s must be nonnegative",
                "weights.mu_s");
  if (!(mu_o >= 0.0))
    throw Error(ErrorCode::InvalidConfig, "mu_o must be nonnegative",
                "weights.mu_o");
  if (N < 1)
    throw Error(ErrorCode::InvalidConfig, "horizon N must be positive",
                "weights.N");
}

RiskWeights RiskWeights::with_multipliers(double s, double o) const {
  RiskWeights w = *this;
  w.mu_s = s;
  w.mu_o = o;
  return w;
}

namespace {

bool same(const Matrix &a, const Matrix &b) {
  return a.rows() == b.rows() && a.cols() == b.cols() &&
         (a - b).cwiseAbs().maxCoeff() <= 1e-12 * std::max(1.0, b.norm());
}

} // namespace

double state_increment_constant(const NoiseMoments &mo, const Matrix &Qs) {
  const Matrix QW = Qs * mo.W;
  return mo.m_w - 4.0 * (QW * QW).trace();
}

double output_increment_constant(const NoiseMoments &mo, const Matrix &Qo,
                                 const Matrix &C) {
  const Matrix G = Qo * mo.P * Qo;
  return mo.m_weps + 4.0 * mo.eps_bar.dot(Qo * mo.M) -
         8.0 * (C.transpose() * G * C * mo.W).trace() +
         4.0 * (G * mo.Z).trace();
}

TransformedProblem transform(const RiskWeights &w, const NoiseMoments &mo,
                             const Matrix &C) {
  if (!same(mo.Qs, w.Qs) || !same(mo.Qo, w.Qo) || !same(mo.C, C))
    throw Error(ErrorCode::MomentMismatch,
                "moments were computed with different Qs, Qo or C", "moments");

  const Matrix Ct = C.transpose();
  const Matrix G = w.Qo * mo.P * w.Qo;

  TransformedProblem tp;
  tp.Q_mu = w.Q + 4.0 * w.mu_s * w.Qs * mo.W * w.Qs +
            4.0 * w.mu_o * Ct * G * C;
  tp.Q_mu = linalg::symmetrize(tp.Q_mu);
  tp.M_mu = 4.0 * w.mu_s * w.Qs * mo.M_w +
            4.0 * w.mu_o * (Ct * w.Qo * mo.M + 2.0 * Ct * G * mo.eps_bar);
  tp.state_constant = state_increment_constant(mo, w.Qs);
  tp.output_constant = output_increment_constant(mo, w.Qo, C);
  tp.eps_bar_s = w.eps_s - w.N * tp.state_constant;
  tp.eps_bar_o = w.eps_o - w.N * tp.output_constant;
  tp.moments = mo;
  return tp;
}

double constraint_increment_state(const Vector &x, const NoiseMoments &mo,
                                  const Matrix &Qs) {
  const Vector Qx = Qs * x;
  return 4.0 * Qx.dot(mo.W * Qx) + 4.0 * Qx.dot(mo.M_w) +
         state_increment_constant(mo, Qs);
}

double constraint_increment_output(const Vector &x, const NoiseMoments &mo,
                                   const Matrix &Qo, const Matrix &C) {
  const Vector QCx = Qo * (C * x);
  return 4.0 * QCx.dot(mo.P * QCx) +
         4.0 * QCx.dot(mo.M + 2.0 * mo.P * Qo * mo.eps_bar) +
         output_increment_constant(mo, Qo, C);
}

} // namespace riskctl
