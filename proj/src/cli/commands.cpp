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

#include "riskctl/cli/commands.hpp"

#include "riskctl/controller.hpp"
#include "riskctl/evaluation.hpp"
#include "riskctl/format.hpp"
#include "riskctl/leqg.hpp"

#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

namespace riskctl::cli {
namespace fs = std::filesystem;

namespace {

constexpr const char *kVersion = "0.1.0";

json to_json(const Matrix &M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c)
      row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

json to_json(const Vector &v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i)
    a.push_back(v(i));
  return a;
}

json to_json(const Estimate &e) { return {{"mean", e.mean}, {"se", e.se}}; }

json to_json(const KktReport &report) {
  json conds = json::array();
  for (const auto &c : report.conditions)
    conds.push_back({{"name", c.name},
                     {"pass", c.pass},
                     {"value", c.value},
                     {"tolerance", c.tolerance},
                     {"detail", c.detail}});
  return conds;
}

void write_file(const fs::path &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f)
    throw Error(ErrorCode::IoError, "cannot open " + path.string());
  f << text;
  if (!f)
    throw Error(ErrorCode::IoError, "failed writing " + path.string());
}

fs::path prepare_out_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error(ErrorCode::IoError,
                "cannot create output directory " + dir + ": " + ec.message(),
                "run.out");
  return fs::path(dir);
}

/// Long-format trajectories in absolute coordinates; stage_cost, ds2 and do2
/// are those of the deviation loop.
std::string trajectory_csv(const std::vector<TrajectoryRecord> &records,
                           const RegulationTarget &target) {
  std::ostringstream out;
  if (records.empty())
    return {};
  const auto &f = records.front();
  const auto n = f.x[0].size(), m = f.u[0].size(), q = f.y[0].size();
  out << "replication,t";
  for (Eigen::Index i = 1; i <= n; ++i)
    out << ",x_" << i;
  for (Eigen::Index i = 1; i <= n; ++i)
    out << ",xhat_" << i;
  for (Eigen::Index i = 1; i <= m; ++i)
    out << ",u_" << i;
  for (Eigen::Index i = 1; i <= q; ++i)
    out << ",y_" << i;
  out << ",stage_cost,ds2,do2";
  for (Eigen::Index i = 1; i <= n; ++i)
    out << ",w_" << i;
  for (Eigen::Index i = 1; i <= q; ++i)
    out << ",eps_" << i;
  out << '\n';
  auto put = [&out](const Vector &v, const Vector &offset) {
    for (Eigen::Index i = 0; i < v.size(); ++i)
      out << ',' << format_double(v(i) + offset(i));
  };
  const Vector zero_n = Vector::Zero(n), zero_q = Vector::Zero(q);
  for (const auto &rec : records) {
    for (int t = 0; t <= rec.horizon(); ++t) {
      out << rec.replication << ',' << t;
      put(rec.x[t], target.x_star);
      put(rec.x_hat[t], target.x_star);
      put(rec.u[t], t < rec.horizon() ? target.u_star
                                      : Vector::Zero(m).eval());
      put(rec.y[t], target.y_star);
      out << ',' << format_double(rec.stage_cost[t]) << ','
          << format_double(rec.ds2[t]) << ',' << format_double(rec.do2[t]);
      put(rec.w[t], zero_n);
      put(rec.eps[t], zero_q);
      out << '\n';
    }
  }
  return out.str();
}

struct PolicyRun {
  std::string name;
  std::string kind; // "risk_constrained" or "leqg"
  double mu_s = 0.0, mu_o = 0.0, theta = 0.0;
  std::optional<PolicySchedule> schedule;
  std::optional<BreakdownReport> breakdown;
  std::optional<TransformedProblem> tp;
  RiskWeights weights;
};

std::vector<PolicyRun> synthesize_all(const Experiment &ex) {
  const auto &s = ex.setup;
  std::vector<PolicyRun> runs;
  for (const auto &p : ex.policies) {
    PolicyRun r;
    r.name = p.name;
    r.kind = "risk_constrained";
    r.mu_s = p.mu_s;
    r.mu_o = p.mu_o;
    r.weights = s.weights.with_multipliers(p.mu_s, p.mu_o);
    r.tp = transform(r.weights, s.moments, s.sys.C());
    r.schedule =
        synthesize_finite(s.sys, *r.tp, r.weights, s.moments, &s.plan).policy;
    runs.push_back(std::move(r));
  }
  for (double theta : ex.leqg_thetas) {
    PolicyRun r;
    r.name = "leqg_theta_" + format_double(theta);
    r.kind = "leqg";
    r.theta = theta;
    r.weights = s.weights.with_multipliers(0.0, 0.0);
    auto res = synthesize_leqg(s.sys, s.weights.Q, s.weights.R, s.moments,
                               {theta, s.weights.N});
    if (auto *b = std::get_if<BreakdownReport>(&res))
      r.breakdown = *b;
    else
      r.schedule = std::get<PolicySchedule>(std::move(res));
    runs.push_back(std::move(r));
  }
  return runs;
}

json policy_header(const PolicyRun &r, const Experiment &ex) {
  json j = {{"name", r.name}, {"kind", r.kind}};
  if (r.kind == "leqg")
    j["theta"] = r.theta;
  else {
    j["mu_s"] = r.mu_s;
    j["mu_o"] = r.mu_o;
  }
  if (r.breakdown) {
    j["status"] = "breakdown";
    j["breakdown"] = {{"step", r.breakdown->step},
                      {"theta", r.breakdown->theta},
                      {"min_eigenvalue", r.breakdown->min_eigenvalue}};
  } else {
    j["status"] = "ok";
    j["spectral_radius_K0"] = linalg::spectral_radius(
        ex.setup.sys.A() + ex.setup.sys.B() * r.schedule->K.front());
  }
  return j;
}

json manifest(const Experiment &ex, const std::string &command,
              const std::vector<std::string> &artifacts) {
  return {{"tool", "riskctl"},
          {"version", kVersion},
          {"command", command},
          {"config_hash", ex.hash},
          {"seed", ex.run.seed},
          {"replications", ex.run.replications},
          {"horizon", ex.setup.weights.N},
          {"coordinates",
           "trajectory states, estimates, inputs and outputs are absolute; "
           "costs are taken on deviations from the target"},
          {"fourth_order_method", ex.setup.moments.fourth_order_method},
          {"artifacts", artifacts},
          {"config", ex.config}};
}

json moments_json(const NoiseMoments &mo) {
  return {{"w_bar", to_json(mo.w_bar)}, {"eps_bar", to_json(mo.eps_bar)},
          {"W", to_json(mo.W)},         {"E", to_json(mo.E)},
          {"H", to_json(mo.H)},         {"P", to_json(mo.P)},
          {"M_w", to_json(mo.M_w)},     {"M", to_json(mo.M)},
          {"m_w", mo.m_w},              {"m_weps", mo.m_weps},
          {"fourth_order_method", mo.fourth_order_method}};
}

} // namespace

json resolve_config(const CommonOptions &opt) {
  if (opt.config_path && opt.preset)
    throw Error(ErrorCode::UsageError,
                "--config and --preset are mutually exclusive", "config");
  if (!opt.config_path && !opt.preset)
    throw Error(ErrorCode::UsageError, "one of --config or --preset is required",
                "config");
  json cfg = opt.config_path ? load_config_file(*opt.config_path)
                             : preset(*opt.preset);
  for (const auto &o : opt.overrides)
    apply_override(cfg, o);
  if (!cfg.is_object())
    throw Error(ErrorCode::InvalidConfig, "config must be a JSON object",
                "config");
  if (opt.seed)
    cfg["run"]["seed"] = *opt.seed;
  if (opt.replications)
    cfg["run"]["replications"] = *opt.replications;
  if (opt.out_dir)
    cfg["run"]["out"] = *opt.out_dir;
  return cfg;
}

int run_command(const CommonOptions &options, std::ostream &log) {
  const Experiment ex = build_experiment(resolve_config(options));
  const auto &s = ex.setup;
  const fs::path dir = prepare_out_dir(ex.run.out_dir);
  auto runs = synthesize_all(ex);

  SimulationOptions sim;
  sim.seed = ex.run.seed;
  sim.replications = ex.run.replications;

  std::vector<std::string> artifacts;
  json policies = json::array();
  json kkt = json::array();
  std::optional<EvaluationSummary> baseline;
  std::vector<std::pair<std::string, EvaluationSummary>> evaluated;

  for (const auto &r : runs) {
    json pj = policy_header(r, ex);
    if (!r.schedule) {
      log << r.name << ": breakdown at step " << r.breakdown->step << '\n';
      policies.push_back(pj);
      continue;
    }
    const auto records = simulate(s.sys, *r.schedule, s.model, s.moments,
                                  r.weights, s.plan, s.x0, sim);
    const auto sum = summarize(records, r.weights);

    const std::string gains = "gains_" + r.name + ".csv";
    write_gain_file((dir / gains).string(), *r.schedule, r.name);
    artifacts.push_back(gains);
    const std::string traj = "traj_" + r.name + ".csv";
    write_file(dir / traj, trajectory_csv(records, ex.target));
    artifacts.push_back(traj);

    pj["J"] = to_json(sum.J);
    pj["Js"] = to_json(sum.Js);
    pj["Jo"] = to_json(sum.Jo);
    pj["Js_model"] = to_json(sum.Js_model);
    pj["Jo_model"] = to_json(sum.Jo_model);
    pj["state_energy_mean"] = sum.state_energy_mean;
    pj["state_energy_variance"] = sum.state_energy_variance;
    pj["gains_file"] = gains;
    pj["trajectory_file"] = traj;
    policies.push_back(pj);
    log << r.name << ": J = " << format_double(sum.J.mean) << " +- "
        << format_double(sum.J.se) << ", Js = " << format_double(sum.Js.mean)
        << " +- " << format_double(sum.Js.se)
        << ", Jo = " << format_double(sum.Jo.mean) << " +- "
        << format_double(sum.Jo.se) << '\n';

    if (r.kind == "risk_constrained") {
      RiskWeights w = r.weights;
      w.eps_s = ex.eps_s_given ? s.weights.eps_s : sum.Js.mean;
      w.eps_o = ex.eps_o_given ? s.weights.eps_o : sum.Jo.mean;
      const auto tp = transform(w, s.moments, s.sys.C());
      const auto report = verify_kkt(sum, tp, w);
      kkt.push_back({{"policy", r.name},
                     {"mu_s", r.mu_s},
                     {"mu_o", r.mu_o},
                     {"eps_s", w.eps_s},
                     {"eps_o", w.eps_o},
                     {"eps_s_source", ex.eps_s_given ? "config" : "measured"},
                     {"eps_o_source", ex.eps_o_given ? "config" : "measured"},
                     {"eps_bar_s", tp.eps_bar_s},
                     {"eps_bar_o", tp.eps_bar_o},
                     {"state_constant", tp.state_constant},
                     {"output_constant", tp.output_constant},
                     {"all_pass", report.all_pass()},
                     {"conditions", to_json(report)}});
      if (r.name == "risk_neutral")
        baseline = sum;
    }
    evaluated.emplace_back(r.name, sum);
  }

  json comparisons = json::array();
  if (baseline) {
    for (const auto &[name, sum] : evaluated) {
      if (name == "risk_neutral")
        continue;
      comparisons.push_back(
          {{"policy", name},
           {"baseline", "risk_neutral"},
           {"delta_J", to_json(paired_difference(sum.J_rep, baseline->J_rep))},
           {"delta_Js",
            to_json(paired_difference(sum.Js_rep, baseline->Js_rep))},
           {"delta_Jo",
            to_json(paired_difference(sum.Jo_rep, baseline->Jo_rep))},
           {"delta_state_energy_time_variance",
            to_json(paired_difference(sum.state_energy_variance_rep,
                                      baseline->state_energy_variance_rep))}});
    }
  }

  json summary = {{"config_hash", ex.hash},
                  {"seed", ex.run.seed},
                  {"replications", ex.run.replications},
                  {"horizon", s.weights.N},
                  {"hero_replication", ex.run.hero_replication},
                  {"target",
                   {{"x_star", to_json(ex.target.x_star)},
                    {"u_star", to_json(ex.target.u_star)},
                    {"y_star", to_json(ex.target.y_star)}}},
                  {"moments", moments_json(s.moments)},
                  {"policies", policies},
                  {"comparisons", comparisons}};
  write_file(dir / "summary.json", summary.dump(2) + "\n");
  artifacts.push_back("summary.json");
  write_file(dir / "kkt.json",
             json({{"config_hash", ex.hash}, {"reports", kkt}}).dump(2) +
                 "\n");
  artifacts.push_back("kkt.json");
  write_file(dir / "manifest.json",
             manifest(ex, "run", artifacts).dump(2) + "\n");
  log << "wrote " << artifacts.size() + 1 << " artifacts to "
      << dir.string() << '\n';
  return 0;
}

int gains_command(const CommonOptions &options, std::ostream &log) {
  const Experiment ex = build_experiment(resolve_config(options));
  const auto &s = ex.setup;
  const fs::path dir = prepare_out_dir(ex.run.out_dir);
  const auto runs = synthesize_all(ex);
  std::vector<std::string> artifacts;
  for (const auto &r : runs) {
    if (!r.schedule) {
      log << r.name << ": breakdown at step " << r.breakdown->step
          << " (min eigenvalue " << format_double(r.breakdown->min_eigenvalue)
          << ")\n";
      continue;
    }
    const std::string gains = "gains_" + r.name + ".csv";
    write_gain_file((dir / gains).string(), *r.schedule, r.name);
    artifacts.push_back(gains);
    const double rho = linalg::spectral_radius(
        s.sys.A() + s.sys.B() * r.schedule->K.front());
    log << r.name << ": spectral radius of A + B K_0 = " << format_double(rho);
    if (r.tp) {
      const Matrix dQ = r.tp->Q_mu - s.weights.Q;
      log << ", Q_mu inflation ||Q_mu - Q||_F / ||Q||_F = "
          << format_double(dQ.norm() / std::max(1e-300, s.weights.Q.norm()))
          << ", lambda_max(Q_mu) = "
          << format_double(
                 Eigen::SelfAdjointEigenSolver<Matrix>(r.tp->Q_mu)
                     .eigenvalues()
                     .maxCoeff());
    }
    log << '\n';
  }
  write_file(dir / "manifest.json",
             manifest(ex, "gains", artifacts).dump(2) + "\n");
  return 0;
}

std::vector<std::pair<double, double>> parse_grid(const std::string &text) {
  std::vector<std::pair<double, double>> grid;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty())
      continue;
    const auto colon = item.find(':');
    try {
      std::size_t used = 0;
      const double a = std::stod(item.substr(0, colon), &used);
      double b = 0.0;
      if (colon != std::string::npos)
        b = std::stod(item.substr(colon + 1));
      if (a < 0.0 || b < 0.0)
        throw Error(ErrorCode::UsageError,
                    "grid multipliers must be nonnegative: " + item, "grid");
      grid.emplace_back(a, b);
    } catch (const std::invalid_argument &) {
      throw Error(ErrorCode::UsageError, "bad grid entry '" + item + "'",
                  "grid");
    } catch (const std::out_of_range &) {
      throw Error(ErrorCode::UsageError, "bad grid entry '" + item + "'",
                  "grid");
    }
  }
  if (grid.empty())
    throw Error(ErrorCode::UsageError, "multiplier grid is empty", "grid");
  return grid;
}

int tune_command(const CommonOptions &options, const TuneOptions &tune,
                 std::ostream &log) {
  if (tune.grid.empty())
    throw Error(ErrorCode::UsageError, "multiplier grid is empty", "grid");
  const Experiment ex = build_experiment(resolve_config(options));
  const auto &s = ex.setup;
  const fs::path dir = prepare_out_dir(ex.run.out_dir);
  const auto rows =
      tabulate_multipliers(s, tune.grid, ex.run.seed, ex.run.replications);
  const bool targets = tune.eps_s || tune.eps_o;

  std::ostringstream csv;
  csv << "mu_s,mu_o,J,J_se,Js,Js_se,Jo,Jo_se,spectral_radius";
  if (targets)
    csv << ",kkt_pass";
  csv << '\n';
  json reports = json::array();
  for (const auto &row : rows) {
    csv << format_double(row.mu_s) << ',' << format_double(row.mu_o) << ','
        << format_double(row.J.mean) << ',' << format_double(row.J.se) << ','
        << format_double(row.Js.mean) << ',' << format_double(row.Js.se)
        << ',' << format_double(row.Jo.mean) << ','
        << format_double(row.Jo.se) << ','
        << format_double(row.spectral_radius);
    if (targets) {
      RiskWeights w = s.weights.with_multipliers(row.mu_s, row.mu_o);
      w.eps_s = tune.eps_s.value_or(std::numeric_limits<double>::infinity());
      w.eps_o = tune.eps_o.value_or(std::numeric_limits<double>::infinity());
      const auto tp = transform(w, s.moments, s.sys.C());
      EvaluationSummary sum;
      sum.J = row.J;
      sum.Js = row.Js;
      sum.Jo = row.Jo;
      sum.mu_s = row.mu_s;
      sum.mu_o = row.mu_o;
      sum.replications = ex.run.replications;
      sum.horizon = w.N;
      const auto report = verify_kkt(sum, tp, w);
      csv << ',' << (report.all_pass() ? "true" : "false");
      reports.push_back({{"mu_s", row.mu_s},
                         {"mu_o", row.mu_o},
                         {"all_pass", report.all_pass()},
                         {"conditions", to_json(report)}});
    }
    csv << '\n';
  }
  write_file(dir / "tune.csv", csv.str());
  std::vector<std::string> artifacts{"tune.csv"};
  if (targets) {
    json kj = {{"config_hash", ex.hash}, {"reports", reports}};
    if (tune.eps_s)
      kj["eps_s"] = *tune.eps_s;
    if (tune.eps_o)
      kj["eps_o"] = *tune.eps_o;
    write_file(dir / "tune_kkt.json", kj.dump(2) + "\n");
    artifacts.push_back("tune_kkt.json");
  }
  write_file(dir / "manifest.json",
             manifest(ex, "tune", artifacts).dump(2) + "\n");
  log << csv.str();
  return 0;
}

json error_json(const Error &error) {
  return {{"error",
           {{"code", std::string(to_string(error.code()))},
            {"message", error.what()},
            {"field", error.field()}}}};
}

int exit_code(const Error &error) {
  return error.code() == ErrorCode::UsageError ? 2 : 1;
}

} // namespace riskctl::cli
