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
#include "riskctl/model.hpp"
#include "riskctl/noise.hpp"

#include <vector>

namespace riskctl {

/// Offline covariance schedule of the time-varying Kalman filter for
/// x_{t+1} = A x_t + B u_t + w_{t+1}, y_t = C x_t + eps_t with
/// Cov(w_t, eps_t) = H at equal time index.
///
/// Index t runs over 0..N. Entry 0 holds the prior: Sigma_filt[0] =
/// Sigma_pred[0] = Sigma0 and a zero gain (y_0 is not assimilated).
///
/// With rho_t = x_t - xhat_{t|t-1} = A e_{t-1} + (w_t - w_bar):
///   S_t      = C Sigma_pred C' + C H + H' C' + E      (innovation covariance)
///   L_t      = (Sigma_pred C' + H) S_t^{-1}
///   Sigma_filt = Sigma_pred - L_t S_t L_t'
///   H_cross  = E{e_t rho_t'} = Sigma_pred - L_t (C Sigma_pred + H')
/// The last line equals Sigma_filt, because Cov(rho, nu) = S_t L_t'.
struct FilterCovariancePlan {
  std::vector<Matrix> Sigma_filt;
  std::vector<Matrix> Sigma_pred;
  std::vector<Matrix> H_cross;
  std::vector<Matrix> gains;

  int horizon() const noexcept {
    return static_cast<int>(Sigma_filt.size()) - 1;
  }
};

FilterCovariancePlan plan_covariances(const LtiSystem &sys,
                                      const NoiseMoments &moments,
                                      const Matrix &Sigma0, int N);

struct FilterState {
  Vector x_hat;
  Matrix Sigma;
  int t = 0;
};

/// Mean-aware predict/correct step from t to t+1 using the planned gain.
FilterState filter_step(const FilterState &state, const Vector &u_prev,
                        const Vector &y, const LtiSystem &sys,
                        const NoiseMoments &moments,
                        const FilterCovariancePlan &plan);

} // namespace riskctl
