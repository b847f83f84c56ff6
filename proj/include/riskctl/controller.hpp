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

#include "riskctl/estimator.hpp"
#include "riskctl/linalg.hpp"
#include "riskctl/model.hpp"
#include "riskctl/noise.hpp"
#include "riskctl/risk_transform.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace riskctl {

/// Affine policy u_t = K_t xhat_{t|t} + h_t + l_t for t = 0..N-1.
struct PolicySchedule {
  std::vector<Matrix> K;
  std::vector<Vector> h; ///< compensates the process-noise mean
  std::vector<Vector> l; ///< repels third-order noise statistics

  int horizon() const noexcept { return static_cast<int>(K.size()); }
  Vector control(int t, const Vector &x_hat) const {
    return K[t] * x_hat + h[t] + l[t];
  }
};

/// Cost-to-go  xhat' V_t xhat + 2 xhat' T_t w_bar + xhat' S_t M_mu + p_t,
/// t = 0..N.
struct ValueParams {
  std::vector<Matrix> V, T, S;
  std::vector<double> p;
  /// False when p was computed without a filter covariance plan; then p
  /// omits the estimation-error traces.
  bool p_includes_filter_terms = false;
};

struct FiniteSynthesis {
  PolicySchedule policy;
  ValueParams value;
};

/// Backward recursion from V_N = Q_mu, S_N = I, T_N = 0. With F = A + B K:
///   V_{t-1} = A'V A + Q_mu - A'V B (B'V B + R)^{-1} B'V A
///   T_{t-1} = F' (V_t + T_t)
///   S_{t-1} = F' S_t + I
///   p_{t-1} = p_t - k' (B'V B + R) k + w_bar'(V_t + 2 T_t) w_bar
///             + w_bar' S_t M_mu + tr(Q_mu Sigma_{t-1|t-1})
///             + tr(V_t (Sigma_{t|t-1} + Sigma_{t|t})) - 2 tr(V_t H_{t|t-1})
/// with k = h_{t-1} + l_{t-1}.
FiniteSynthesis synthesize_finite(const LtiSystem &sys,
                                  const TransformedProblem &tp,
                                  const RiskWeights &weights,
                                  const NoiseMoments &moments,
                                  const FilterCovariancePlan *filter_covs =
                                      nullptr);

struct SteadyStatePolicy {
  Matrix V, K, S, T;
  Vector h, l;
  double closed_loop_spectral_radius = 0.0;
  int iterations = 0;
  double riccati_residual = 0.0;
};

struct DareOptions {
  double tolerance = 1e-12;
  int max_iterations = 100000;
};

/// Stabilizing DARE solution by value iteration from Q, plus the
/// stationary affine terms S = (I - F')^{-1}, T = (I - F')^{-1} F' V.
SteadyStatePolicy synthesize_infinite(const LtiSystem &sys,
                                      const TransformedProblem &tp,
                                      const RiskWeights &weights,
                                      const NoiseMoments &moments,
                                      const DareOptions &options = {});

struct DareSolution {
  Matrix V;
  int iterations = 0;
};
DareSolution solve_dare(const Matrix &A, const Matrix &B, const Matrix &Q,
                        const Matrix &R, const DareOptions &options = {});
double dare_residual(const Matrix &A, const Matrix &B, const Matrix &Q,
                     const Matrix &R, const Matrix &V);

/// d_t = ||V_t - V_inf||_F for t = N, N-1, ..., 0 (element 0 is t = N).
/// `terminal` replaces V_N = Q_mu when given.
std::vector<double> convergence_profile(const LtiSystem &sys,
                                        const TransformedProblem &tp,
                                        const RiskWeights &weights, int N,
                                        const std::optional<Matrix> &terminal =
                                            std::nullopt);

/// Gain file: comment header, then one CSV row per t with vec(K_t)
/// (column-major), h_t, l_t. Numbers use shortest round-trip formatting.
void write_gain_file(std::ostream &out, const PolicySchedule &policy,
                     const std::string &label);
void write_gain_file(const std::string &path, const PolicySchedule &policy,
                     const std::string &label);
PolicySchedule read_gain_file(std::istream &in);

} // namespace riskctl
