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
#include "riskctl/estimator.hpp"
#include "riskctl/model.hpp"
#include "riskctl/noise.hpp"
#include "riskctl/risk_transform.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace riskctl {

/// One closed-loop replication, t = 0..N. Coordinates are those the policy
/// was synthesized in (deviations from the regulation target in the CLI).
struct TrajectoryRecord {
  std::uint64_t seed = 0;
  int replication = 0;
  std::vector<Vector> x, x_hat, u, y;
  std::vector<Vector> w, eps; ///< draws used at each t (w_0 is unused)
  /// ||x_t||_Q^2 + ||u_t||_R^2 with u_N = 0.
  std::vector<double> stage_cost;
  /// Realised squared deviations; zero at t = 0.
  std::vector<double> ds2, do2;
  /// Model-based expectations of ds2/do2 evaluated at x_t; zero at t = 0.
  std::vector<double> inc_s, inc_o;

  int horizon() const noexcept { return static_cast<int>(x.size()) - 1; }
};

struct SimulationOptions {
  std::uint64_t seed = 0;
  int replications = 1;
  /// Stream id of the first replication; replication r uses stream
  /// first_replication + r.
  int first_replication = 0;
  /// Initial estimate; defaults to x0 (exactly known initial state).
  std::optional<Vector> x_hat0;
};

/// Runs filter + policy + plant. Replication k draws from NoiseStream(seed, k)
/// so any policy sees the same noise path for the same k.
std::vector<TrajectoryRecord>
simulate(const LtiSystem &sys, const PolicySchedule &schedule,
         const JointNoiseModel &model, const NoiseMoments &moments,
         const RiskWeights &weights, const FilterCovariancePlan &plan,
         const Vector &x0, const SimulationOptions &options);

struct Estimate {
  double mean = 0.0;
  double se = 0.0;
};

/// Mean and standard error of i.i.d. values.
Estimate estimate(const std::vector<double> &values);
/// Estimate of E{a - b} from paired values (common random numbers).
Estimate paired_difference(const std::vector<double> &a,
                           const std::vector<double> &b);

struct EvaluationSummary {
  Estimate J, Js, Jo;
  /// Same expectations from the model-based increments along the paths.
  Estimate Js_model, Jo_model;
  int replications = 0;
  int horizon = 0;
  double mu_s = 0.0, mu_o = 0.0;

  /// Per-replication totals, kept for paired comparisons.
  std::vector<double> J_rep, Js_rep, Jo_rep;
  /// Per-replication sample variance over t = 1..N of ||x_t||_Q^2.
  std::vector<double> state_energy_variance_rep;

  /// Across-replication mean and variance of ||x_t||_Q^2, and mean of the
  /// realised increments, per t.
  std::vector<double> state_energy_mean, state_energy_variance;
  std::vector<double> ds2_mean, do2_mean;
};

EvaluationSummary summarize(const std::vector<TrajectoryRecord> &records,
                            const RiskWeights &weights);

struct KktCondition {
  std::string name;
  bool pass = false;
  double value = 0.0;     ///< quantity tested
  double tolerance = 0.0; ///< allowed bound
  std::string detail;
};

struct KktReport {
  std::vector<KktCondition> conditions;
  bool all_pass() const;
};

/// Checks the sufficient optimality conditions for the transformed problem:
/// the policy minimizes the Lagrangian at the summary's multipliers,
/// J_s <= eps_bar_s and J_o <= eps_bar_o up to 3 SE, and
/// |mu (J - eps_bar)| <= 3 SE mu for each constraint. J here is the
/// reformulated constraint, i.e. the measured one minus N times the constant.
KktReport verify_kkt(const EvaluationSummary &summary,
                     const TransformedProblem &tp, const RiskWeights &weights);

/// Everything needed to synthesize and evaluate a policy.
struct ClosedLoopSetup {
  LtiSystem sys;
  JointNoiseModel model;
  NoiseMoments moments;
  RiskWeights weights;
  FilterCovariancePlan plan;
  Vector x0;
};

FiniteSynthesis synthesize(const ClosedLoopSetup &setup, double mu_s,
                           double mu_o);

struct MultiplierRow {
  double mu_s = 0.0, mu_o = 0.0;
  Estimate J, Js, Jo;
  double spectral_radius = 0.0; ///< of A + B K_0
};

/// Synthesizes and evaluates each grid point on the same noise paths.
std::vector<MultiplierRow>
tabulate_multipliers(const ClosedLoopSetup &setup,
                     const std::vector<std::pair<double, double>> &grid,
                     std::uint64_t seed, int replications);

/// max_t ||e_t^A - e_t^B|| for the two closed loops driven by the same noise
/// path (replication 0 of `seed`), e_t = x_t - xhat_{t|t}.
double estimation_error_gap(const ClosedLoopSetup &setup,
                            const PolicySchedule &a, const PolicySchedule &b,
                            std::uint64_t seed);

struct DualAscentStep {
  double mu_s = 0.0, mu_o = 0.0;
  Estimate Js, Jo;
};

/// Projected subgradient mu <- max(0, mu + alpha_k (J - eps)) with
/// alpha_k = alpha0 / sqrt(k + 1), using the measured constraints.
std::vector<DualAscentStep> dual_ascent(const ClosedLoopSetup &setup,
                                        double eps_s, double eps_o,
                                        double alpha0, int iterations,
                                        std::uint64_t seed, int replications);

} // namespace riskctl
