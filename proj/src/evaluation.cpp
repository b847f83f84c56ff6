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

#include "riskctl/evaluation.hpp"

#include "riskctl/error.hpp"

#include <algorithm>
#include <cmath>

namespace riskctl {

std::vector<TrajectoryRecord>
simulate(const LtiSystem &sys, const PolicySchedule &schedule,
         const JointNoiseModel &model, const NoiseMoments &mo,
         const RiskWeights &weights, const FilterCovariancePlan &plan,
         const Vector &x0, const SimulationOptions &options) {
  const int N = schedule.horizon();
  const auto n = sys.n();
  const auto m = sys.m();
  const auto q = sys.q();
  linalg::require_size(x0, n, "x0");
  if (model.process_dim() != n || model.output_dim() != q)
    throw Error(ErrorCode::DimensionMismatch,
                "noise dimensions do not match the system", "noise");
  if (N > plan.horizon())
    throw Error(ErrorCode::PlanExhausted,
                "policy horizon exceeds the filter plan", "plan");
  if (options.replications < 1)
    throw Error(ErrorCode::InvalidConfig, "replications must be positive",
                "run.replications");
  for (int t = 0; t < N; ++t) {
    linalg::require_shape(schedule.K[t], m, n, "K");
    linalg::require_size(schedule.h[t], m, "h");
    linalg::require_size(schedule.l[t], m, "l");
  }

  const Matrix &A = sys.A();
  const Matrix &B = sys.B();
  const Matrix &C = sys.C();
  const Matrix &Q = weights.Q;
  const Matrix &R = weights.R;
  const Matrix &Qs = weights.Qs;
  const Matrix &Qo = weights.Qo;
  const double tr_s = (Qs * mo.W).trace();
  const double tr_o = (Qo * mo.P).trace();

  std::vector<TrajectoryRecord> out;
  out.reserve(options.replications);
  Vector w(n), eps(q);
  for (int r = 0; r < options.replications; ++r) {
    const int id = options.first_replication + r;
    NoiseStream stream(model, options.seed, static_cast<std::uint64_t>(id));
    TrajectoryRecord rec;
    rec.seed = options.seed;
    rec.replication = id;
    for (auto *v : {&rec.x, &rec.x_hat, &rec.u, &rec.y, &rec.w, &rec.eps})
      v->reserve(N + 1);

    Vector x = x0;
    FilterState fs{options.x_hat0 ? *options.x_hat0 : x0, plan.Sigma_filt[0],
                   0};
    stream.next(w, eps);
    rec.x.push_back(x);
    rec.x_hat.push_back(fs.x_hat);
    rec.y.push_back(C * x + eps);
    rec.w.push_back(w);
    rec.eps.push_back(eps);
    rec.ds2.push_back(0.0);
    rec.do2.push_back(0.0);
    rec.inc_s.push_back(0.0);
    rec.inc_o.push_back(0.0);

    for (int t = 0; t < N; ++t) {
      const Vector u = schedule.control(t, fs.x_hat);
      rec.u.push_back(u);
      rec.stage_cost.push_back(x.dot(Q * x) + u.dot(R * u));

      stream.next(w, eps);
      const Vector x_tilde = A * x + B * u + mo.w_bar;
      x = A * x + B * u + w;
      const Vector y = C * x + eps;
      fs = filter_step(fs, u, y, sys, mo, plan);

      const Vector y_tilde = C * x_tilde + mo.eps_bar;
      const double ds = x.dot(Qs * x) - x_tilde.dot(Qs * x_tilde) - tr_s;
      const double dout = y.dot(Qo * y) - y_tilde.dot(Qo * y_tilde) - tr_o;

      rec.x.push_back(x);
      rec.x_hat.push_back(fs.x_hat);
      rec.y.push_back(y);
      rec.w.push_back(w);
      rec.eps.push_back(eps);
      rec.ds2.push_back(ds * ds);
      rec.do2.push_back(dout * dout);
      rec.inc_s.push_back(constraint_increment_state(x, mo, Qs));
      rec.inc_o.push_back(constraint_increment_output(x, mo, Qo, C));
    }
    rec.u.push_back(Vector::Zero(m));
    rec.stage_cost.push_back(x.dot(Q * x));
    out.push_back(std::move(rec));
  }
  return out;
}

Estimate estimate(const std::vector<double> &values) {
  Estimate e;
  const auto k = values.size();
  if (k == 0)
    return e;
  double sum = 0.0;
  for (double v : values)
    sum += v;
  e.mean = sum / static_cast<double>(k);
  if (k > 1) {
    double ss = 0.0;
    for (double v : values)
      ss += (v - e.mean) * (v - e.mean);
    e.se = std::sqrt(ss / static_cast<double>(k - 1) / static_cast<double>(k));
  }
  return e;
}

Estimate paired_difference(const std::vector<double> &a,
                           const std::vector<double> &b) {
  if (a.size() != b.size())
    throw Error(ErrorCode::DimensionMismatch,
                "paired samples must have equal length");
  std::vector<double> d(a.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    d[i] = a[i] - b[i];
  return estimate(d);
}

EvaluationSummary summarize(const std::vector<TrajectoryRecord> &records,
                            const RiskWeights &weights) {
  EvaluationSummary s;
  s.replications = static_cast<int>(records.size());
  s.mu_s = weights.mu_s;
  s.mu_o = weights.mu_o;
  if (records.empty())
    return s;
  const int N = records.front().horizon();
  s.horizon = N;

  std::vector<double> js_model, jo_model;
  s.state_energy_mean.assign(N + 1, 0.0);
  s.state_energy_variance.assign(N + 1, 0.0);
  s.ds2_mean.assign(N + 1, 0.0);
  s.do2_mean.assign(N + 1, 0.0);
  std::vector<double> energy_sq(N + 1, 0.0);

  for (const auto &rec : records) {
    if (rec.horizon() != N)
      throw Error(ErrorCode::DimensionMismatch,
                  "replications have different horizons");
    double J = 0.0, Js = 0.0, Jo = 0.0, Jsm = 0.0, Jom = 0.0;
    for (int t = 0; t <= N; ++t) {
      J += rec.stage_cost[t];
      Js += rec.ds2[t];
      Jo += rec.do2[t];
      Jsm += rec.inc_s[t];
      Jom += rec.inc_o[t];
    }
    s.J_rep.push_back(J);
    s.Js_rep.push_back(Js);
    s.Jo_rep.push_back(Jo);
    js_model.push_back(Jsm);
    jo_model.push_back(Jom);

    double e_sum = 0.0, e_sq = 0.0;
    for (int t = 0; t <= N; ++t) {
      const double e = rec.x[t].dot(weights.Q * rec.x[t]);
      s.state_energy_mean[t] += e;
      energy_sq[t] += e * e;
      s.ds2_mean[t] += rec.ds2[t];
      s.do2_mean[t] += rec.do2[t];
      if (t >= 1) {
        e_sum += e;
        e_sq += e * e;
      }
    }
    double tv = 0.0;
    if (N >= 2) {
      const double mean = e_sum / N;
      tv = std::max(0.0, (e_sq - N * mean * mean) / (N - 1));
    }
    s.state_energy_variance_rep.push_back(tv);
  }

  const double k = static_cast<double>(records.size());
  for (int t = 0; t <= N; ++t) {
    const double mean = s.state_energy_mean[t] / k;
    s.state_energy_mean[t] = mean;
    s.state_energy_variance[t] =
        k > 1 ? std::max(0.0, (energy_sq[t] - k * mean * mean) / (k - 1))
              : 0.0;
    s.ds2_mean[t] /= k;
    s.do2_mean[t] /= k;
  }
  s.J = estimate(s.J_rep);
  s.Js = estimate(s.Js_rep);
  s.Jo = estimate(s.Jo_rep);
  s.Js_model = estimate(js_model);
  s.Jo_model = estimate(jo_model);
  return s;
}

bool KktReport::all_pass() const {
  return std::all_of(conditions.begin(), conditions.end(),
                     [](const KktCondition &c) { return c.pass; });
}

KktReport verify_kkt(const EvaluationSummary &summary,
                     const TransformedProblem &tp, const RiskWeights &weights) {
  KktReport report;
  const double N = weights.N;
  const double Js = summary.Js.mean - N * tp.state_constant;
  const double Jo = summary.Jo.mean - N * tp.output_constant;

  {
    KktCondition c;
    c.name = "lagrangian_minimizer";
    c.value = std::max(std::abs(summary.mu_s - weights.mu_s),
                       std::abs(summary.mu_o - weights.mu_o));
    c.tolerance = 0.0;
    c.pass = c.value <= c.tolerance;
    c.detail = "policy synthesized at the multipliers under test";
    report.conditions.push_back(c);
  }
  {
    KktCondition c;
    c.name = "primal_feasibility";
    const double slack_s = Js - tp.eps_bar_s - 3.0 * summary.Js.se;
    const double slack_o = Jo - tp.eps_bar_o - 3.0 * summary.Jo.se;
    c.value = std::max(Js - tp.eps_bar_s, Jo - tp.eps_bar_o);
    c.tolerance = 3.0 * std::max(summary.Js.se, summary.Jo.se);
    c.pass = slack_s <= 0.0 && slack_o <= 0.0;
    c.detail = "J_s - eps_bar_s and J_o - eps_bar_o within 3 SE of <= 0";
    report.conditions.push_back(c);
  }
  {
    KktCondition c;
    c.name = "complementary_slackness";
    const double gap_s = std::abs(weights.mu_s * (Js - tp.eps_bar_s));
    const double gap_o = std::abs(weights.mu_o * (Jo - tp.eps_bar_o));
    const bool ok_s = gap_s <= 3.0 * summary.Js.se * weights.mu_s;
    const bool ok_o = gap_o <= 3.0 * summary.Jo.se * weights.mu_o;
    c.value = std::max(gap_s, gap_o);
    c.tolerance = 3.0 * std::max(summary.Js.se * weights.mu_s,
                                 summary.Jo.se * weights.mu_o);
    c.pass = ok_s && ok_o;
    c.detail = "|mu (J - eps_bar)| within 3 SE mu of 0 for each constraint";
    report.conditions.push_back(c);
  }
  return report;
}

FiniteSynthesis synthesize(const ClosedLoopSetup &setup, double mu_s,
                           double mu_o) {
  const RiskWeights w = setup.weights.with_multipliers(mu_s, mu_o);
  const TransformedProblem tp = transform(w, setup.moments, setup.sys.C());
  return synthesize_finite(setup.sys, tp, w, setup.moments, &setup.plan);
}

std::vector<MultiplierRow>
tabulate_multipliers(const ClosedLoopSetup &setup,
                     const std::vector<std::pair<double, double>> &grid,
                     std::uint64_t seed, int replications) {
  if (grid.empty())
    throw Error(ErrorCode::UsageError, "multiplier grid is empty", "grid");
  std::vector<MultiplierRow> rows;
  SimulationOptions opt;
  opt.seed = seed;
  opt.replications = replications;
  for (const auto &[mu_s, mu_o] : grid) {
    const auto syn = synthesize(setup, mu_s, mu_o);
    const RiskWeights w = setup.weights.with_multipliers(mu_s, mu_o);
    const auto recs = simulate(setup.sys, syn.policy, setup.model,
                               setup.moments, w, setup.plan, setup.x0, opt);
    const auto s = summarize(recs, w);
    MultiplierRow row;
    row.mu_s = mu_s;
    row.mu_o = mu_o;
    row.J = s.J;
    row.Js = s.Js;
    row.Jo = s.Jo;
    row.spectral_radius = linalg::spectral_radius(
        setup.sys.A() + setup.sys.B() * syn.policy.K.front());
    rows.push_back(row);
  }
  return rows;
}

double estimation_error_gap(const ClosedLoopSetup &setup,
                            const PolicySchedule &a, const PolicySchedule &b,
                            std::uint64_t seed) {
  if (a.horizon() != b.horizon())
    throw Error(ErrorCode::DimensionMismatch,
                "policies must share a horizon");
  SimulationOptions opt;
  opt.seed = seed;
  const auto ra = simulate(setup.sys, a, setup.model, setup.moments,
                           setup.weights, setup.plan, setup.x0, opt);
  const auto rb = simulate(setup.sys, b, setup.model, setup.moments,
                           setup.weights, setup.plan, setup.x0, opt);
  double worst = 0.0;
  for (int t = 0; t <= a.horizon(); ++t) {
    const Vector ea = ra[0].x[t] - ra[0].x_hat[t];
    const Vector eb = rb[0].x[t] - rb[0].x_hat[t];
    worst = std::max(worst, (ea - eb).norm());
  }
  return worst;
}

std::vector<DualAscentStep> dual_ascent(const ClosedLoopSetup &setup,
                                        double eps_s, double eps_o,
                                        double alpha0, int iterations,
                                        std::uint64_t seed, int replications) {
  std::vector<DualAscentStep> steps;
  double mu_s = setup.weights.mu_s;
  double mu_o = setup.weights.mu_o;
  SimulationOptions opt;
  opt.seed = seed;
  opt.replications = replications;
  for (int k = 0; k < iterations; ++k) {
    const auto syn = synthesize(setup, mu_s, mu_o);
    const RiskWeights w = setup.weights.with_multipliers(mu_s, mu_o);
    const auto s =
        summarize(simulate(setup.sys, syn.policy, setup.model, setup.moments,
                           w, setup.plan, setup.x0, opt),
                  w);
    steps.push_back({mu_s, mu_o, s.Js, s.Jo});
    const double alpha = alpha0 / std::sqrt(k + 1.0);
    mu_s = std::max(0.0, mu_s + alpha * (s.Js.mean - eps_s));
    mu_o = std::max(0.0, mu_o + alpha * (s.Jo.mean - eps_o));
  }
  return steps;
}

} // namespace riskctl
