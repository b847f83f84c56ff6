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

#include "riskctl/estimator.hpp"
#include "riskctl/error.hpp"

#include <Eigen/Cholesky>

namespace riskctl {

FilterCovariancePlan plan_covariances(const LtiSystem &sys,
                                      const NoiseMoments &mo,
                                      const Matrix &Sigma0, int N) {
  const auto n = sys.n();
  const auto q = sys.q();
  linalg::require_shape(Sigma0, n, n, "Sigma0");
  linalg::require_shape(mo.W, n, n, "moments.W");
  linalg::require_shape(mo.E, q, q, "moments.E");
  linalg::require_shape(mo.H, n, q, "moments.H");
  if (N < 0)
    throw Error(ErrorCode::InvalidConfig, "horizon must be nonnegative");

  const Matrix &A = sys.A();
  const Matrix &C = sys.C();

  FilterCovariancePlan plan;
  plan.Sigma_filt.reserve(N + 1);
  plan.Sigma_pred.reserve(N + 1);
  plan.H_cross.reserve(N + 1);
  plan.gains.reserve(N + 1);
  plan.Sigma_filt.push_back(linalg::symmetrize(Sigma0));
  plan.Sigma_pred.push_back(linalg::symmetrize(Sigma0));
  plan.H_cross.push_back(linalg::symmetrize(Sigma0));
  plan.gains.push_back(Matrix::Zero(n, q));

  for (int t = 1; t <= N; ++t) {
    const Matrix pred =
        linalg::symmetrize(A * plan.Sigma_filt.back() * A.transpose() + mo.W);
    const Matrix CH = C * mo.H;
    const Matrix innovation =
        linalg::symmetrize(C * pred * C.transpose() + CH + CH.transpose() + mo.E);
    Eigen::LLT<Matrix> llt(innovation);
    if (llt.info() != Eigen::Success ||
        linalg::min_eigenvalue(innovation) <=
            1e-14 * std::max(1.0, innovation.norm()))
      throw Error(ErrorCode::SingularInnovation,
                  "innovation covariance is not positive definite at t = " +
                      std::to_string(t));
    const Matrix cross = pred * C.transpose() + mo.H; // Cov(rho, nu)
    const Matrix gain = llt.solve(cross.transpose()).transpose();
    Matrix filt = linalg::symmetrize(pred - gain * innovation * gain.transpose());
    const Matrix h_cross = pred - gain * cross.transpose();

    plan.Sigma_pred.push_back(pred);
    plan.Sigma_filt.push_back(std::move(filt));
    plan.H_cross.push_back(h_cross);
    plan.gains.push_back(gain);
  }
  return plan;
}

FilterState filter_step(const FilterState &state, const Vector &u_prev,
                        const Vector &y, const LtiSystem &sys,
                        const NoiseMoments &mo,
                        const FilterCovariancePlan &plan) {
  const int next = state.t + 1;
  if (next > plan.horizon())
    throw Error(ErrorCode::PlanExhausted,
                "filter plan does not cover t = " + std::to_string(next));
  const Vector predicted = sys.A() * state.x_hat + sys.B() * u_prev + mo.w_bar;
  const Vector innovation = y - sys.C() * predicted - mo.eps_bar;
  return {predicted + plan.gains[next] * innovation, plan.Sigma_filt[next],
          next};
}

} // namespace riskctl
