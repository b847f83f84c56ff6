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

#include "riskctl/controller.hpp"
#include "riskctl/linalg.hpp"
#include "riskctl/model.hpp"
#include "riskctl/noise.hpp"

#include <variant>

namespace riskctl {

/// Risk-sensitive (exponential-of-quadratic) baseline. Negative theta is
/// risk-averse; theta = 0 is the classical LQ regulator.
struct LeqgConfig {
  double theta = 0.0;
  int horizon = 1;
};

/// The theta-modified matrix I + theta G'V_t G lost positive definiteness
/// while stepping back from `step` (G G' = W).
struct BreakdownReport {
  int step = 0;
  double theta = 0.0;
  double min_eigenvalue = 0.0;
};

using LeqgResult = std::variant<PolicySchedule, BreakdownReport>;

/// Certainty-equivalent risk-sensitive Riccati recursion driven by the
/// process-noise covariance W (the Gaussian surrogate of any mixture):
///   Vt = V + (-theta) V G (I + theta G'V G)^{-1} G'V
///   K  = -(B'Vt B + R)^{-1} B'Vt A
///   V_{t-1} = A'Vt A + Q + A'Vt B K
/// The returned schedule has l = 0 and h compensating w_bar.
LeqgResult synthesize_leqg(const LtiSystem &sys, const Matrix &Q,
                           const Matrix &R, const NoiseMoments &moments,
                           const LeqgConfig &cfg);

/// Largest-theta (closest to zero, negative) breakdown point located by
/// bisection to `tol`; returns 0 when no breakdown occurs for theta >=
/// `theta_min`.
double leqg_breakdown_threshold(const LtiSystem &sys, const Matrix &Q,
                                const Matrix &R, const NoiseMoments &moments,
                                int horizon, double theta_min = -1e6,
                                double tol = 1e-12);

} // namespace riskctl
