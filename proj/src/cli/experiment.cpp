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

#include "riskctl/cli/experiment.hpp"

#include "riskctl/error.hpp"
#include "riskctl/format.hpp"

#include <fstream>
#include <regex>
#include <sstream>

namespace riskctl::cli {
namespace {

[[noreturn]] void bad(const std::string &field, const std::string &message) {
  throw Error(ErrorCode::InvalidConfig, field + ": " + message, field);
}

const json &require(const json &obj, const std::string &key,
                    const std::string &path) {
  if (!obj.is_object() || !obj.contains(key))
    bad(path + "." + key, "missing required field");
  return obj.at(key);
}

double as_number(const json &j, const std::string &field) {
  if (!j.is_number())
    bad(field, "expected a number");
  return j.get<double>();
}

int as_int(const json &j, const std::string &field) {
  if (!j.is_number_integer())
    bad(field, "expected an integer");
  return j.get<int>();
}

/// number -> 1x1, flat array -> one row, array of arrays -> rows.
Matrix parse_matrix(const json &j, const std::string &field) {
  if (j.is_number())
    return Matrix::Constant(1, 1, j.get<double>());
  if (!j.is_array() || j.empty())
    bad(field, "expected a number or a non-empty array");
  if (j.front().is_number()) {
    Matrix M(1, j.size());
    for (std::size_t c = 0; c < j.size(); ++c)
      M(0, c) = as_number(j[c], field);
    return M;
  }
  const auto rows = j.size();
  if (!j.front().is_array() || j.front().empty())
    bad(field, "expected an array of rows");
  const auto cols = j.front().size();
  Matrix M(rows, cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols)
      bad(field, "rows must have equal length");
    for (std::size_t c = 0; c < cols; ++c)
      M(r, c) = as_number(j[r][c], field);
  }
  return M;
}

Vector parse_vector(const json &j, const std::string &field) {
  if (j.is_number())
    return Vector::Constant(1, j.get<double>());
  if (!j.is_array() || j.empty())
    bad(field, "expected a number or a non-empty array");
  Vector v(j.size());
  for (std::size_t i = 0; i < j.size(); ++i)
    v(i) = as_number(j[i], field);
  return v;
}

GaussianMixture parse_mixture(const json &j, const std::string &field) {
  if (!j.is_array() || j.empty())
    bad(field, "expected a non-empty list of components");
  std::vector<GaussianComponent> comps;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const std::string f = field + "." + std::to_string(i);
    GaussianComponent c;
    c.weight = as_number(require(j[i], "weight", f), f + ".weight");
    c.mean = parse_vector(require(j[i], "mean", f), f + ".mean");
    const json &cov = require(j[i], "cov", f);
    c.cov = cov.is_number()
                ? Matrix(cov.get<double>() *
                         Matrix::Identity(c.mean.size(), c.mean.size()))
                : parse_matrix(cov, f + ".cov");
    comps.push_back(std::move(c));
  }
  try {
    return GaussianMixture(std::move(comps));
  } catch (const Error &e) {
    throw Error(e.code(), field + ": " + e.what(), field);
  }
}

std::vector<Vector> read_csv_rows(const std::string &path,
                                  const std::string &field) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open " + path, field);
  std::vector<Vector> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#')
      continue;
    std::vector<double> vals;
    std::stringstream ss(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(ss, cell, ',')) {
      try {
        std::size_t used = 0;
        vals.push_back(std::stod(cell, &used));
      } catch (const std::exception &) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (first) {
        first = false;
        continue; // header
      }
      bad(field, "non-numeric row in " + path);
    }
    first = false;
    if (!rows.empty() && rows.front().size() != static_cast<long>(vals.size()))
      bad(field, "ragged rows in " + path);
    rows.push_back(Eigen::Map<Vector>(vals.data(), vals.size()));
  }
  if (rows.empty())
    bad(field, "no data rows in " + path);
  return rows;
}

NoiseSource parse_source(const json &j, const std::string &field,
                         const Matrix &B) {
  if (!j.is_object())
    bad(field, "expected an object");
  if (j.contains("csv"))
    return EmpiricalSource{read_csv_rows(j.at("csv").get<std::string>(),
                                         field + ".csv")};
  GaussianMixture mix =
      parse_mixture(require(j, "mixture", field), field + ".mixture");
  if (j.value("input_channel", false)) {
    Matrix G = j.contains("injection")
                   ? parse_matrix(j.at("injection"), field + ".injection")
                   : B;
    if (G.cols() != mix.dimension())
      bad(field + ".injection", "column count must equal the shock dimension");
    return InputChannelSource{std::move(mix), std::move(G)};
  }
  return mix;
}

LtiSystem parse_system(const json &j) {
  if (!j.is_object())
    bad("system", "expected an object");
  if (j.contains("preset")) {
    for (const char *key : {"A", "B", "C"})
      if (j.contains(key))
        bad(std::string("system.") + key,
            "give either system.preset or explicit matrices, not both");
    const auto name = j.at("preset").get<std::string>();
    if (name != "opamp")
      bad("system.preset", "unknown system preset '" + name + "'");
    return opamp_system();
  }
  Matrix A = parse_matrix(require(j, "A", "system"), "system.A");
  Matrix B = parse_matrix(require(j, "B", "system"), "system.B");
  Matrix C = parse_matrix(require(j, "C", "system"), "system.C");
  if (B.rows() != A.rows() && B.rows() == 1 && B.cols() == A.rows())
    B.transposeInPlace(); // a flat B is read as a column
  try {
    return LtiSystem(std::move(A), std::move(B), std::move(C));
  } catch (const Error &e) {
    throw Error(e.code(), std::string("system: ") + e.what(), "system");
  }
}

JointNoiseModel parse_noise(const json &j, const LtiSystem &sys) {
  if (!j.is_object())
    bad("noise", "expected an object");
  const auto coupling = j.value("coupling", std::string("independent"));
  try {
    if (coupling == "independent")
      return JointNoiseModel::independent(
          parse_source(require(j, "process", "noise"), "noise.process",
                       sys.B()),
          parse_source(require(j, "output", "noise"), "noise.output",
                       sys.B()));
    if (coupling == "joint")
      return JointNoiseModel::joint(
          parse_mixture(require(require(j, "joint", "noise"), "mixture",
                                "noise.joint"),
                        "noise.joint.mixture"),
          sys.n());
    if (coupling == "paired") {
      const auto rows = read_csv_rows(
          require(require(j, "paired", "noise"), "csv", "noise.paired")
              .get<std::string>(),
          "noise.paired.csv");
      if (rows.front().size() != sys.n() + sys.q())
        bad("noise.paired.csv", "expected n + q columns");
      std::vector<Vector> w, eps;
      for (const auto &r : rows) {
        w.push_back(r.head(sys.n()));
        eps.push_back(r.tail(sys.q()));
      }
      return JointNoiseModel::paired(std::move(w), std::move(eps));
    }
  } catch (const Error &e) {
    if (e.field().empty())
      throw Error(e.code(), std::string("noise: ") + e.what(), "noise");
    throw;
  }
  bad("noise.coupling", "expected independent, joint or paired");
}

void check_name(const std::string &name, const std::string &field) {
  static const std::regex ok("[A-Za-z0-9_.+-]+");
  if (!std::regex_match(name, ok))
    bad(field, "policy names may only use letters, digits and _.+-");
}

std::string mu_label(double v) { return format_double(v); }

} // namespace

json preset(const std::string &name) {
  auto gauss = [](double mean, double var) {
    return json{{"weight", 1.0}, {"mean", {mean}}, {"cov", {{var}}}};
  };
  auto comp = [](double w, double mean, double var) {
    return json{{"weight", w}, {"mean", {mean}}, {"cov", {{var}}}};
  };
  json cfg = {
      {"system", {{"preset", "opamp"}}},
      {"target", {{"u_star", {1.0}}}},
      {"weights",
       {{"Q", {{1.0, 0.0}, {0.0, 1.0}}},
        {"R", {{1.0}}},
        {"Qs", {{1.0, 0.0}, {0.0, 0.1}}},
        {"Qo", {{1.0}}},
        {"N", 100}}},
      {"run",
       {{"seed", 1}, {"replications", 200}, {"hero_replication", 0},
        {"out", "out/" + name}}}};
  json noise = {{"coupling", "independent"}, {"fourth_order", "analytic"}};
  if (name == "case1") {
    noise["process"] = {{"input_channel", true},
                        {"mixture", {comp(0.8, 0.0, 0.01),
                                     comp(0.2, 10.0, 0.001)}}};
    noise["output"] = {{"mixture", {gauss(0.0, 0.01)}}};
    cfg["policies"] = {{{"name", "mu_10_0"}, {"mu_s", 10.0}, {"mu_o", 0.0}}};
    cfg["baselines"] = {{"risk_neutral", true}, {"leqg_theta", {-0.05}}};
  } else if (name == "case2") {
    noise["process"] = {{"input_channel", true},
                        {"mixture", {gauss(0.0, 0.1)}}};
    noise["output"] = {{"mixture", {comp(0.7, 0.0, 0.01),
                                    comp(0.3, 20.0, 0.005)}}};
    cfg["policies"] = {
        {{"name", "mu_1e6_0"}, {"mu_s", 1e6}, {"mu_o", 0.0}},
        {{"name", "mu_0_5e-4"}, {"mu_s", 0.0}, {"mu_o", 5e-4}}};
    cfg["baselines"] = {{"risk_neutral", true}, {"leqg_theta", {-0.08}}};
  } else if (name == "case3") {
    noise["process"] = {{"input_channel", true},
                        {"mixture", {comp(0.95, 0.0, 0.01),
                                     comp(0.05, 10.0, 0.001)}}};
    noise["output"] = {{"mixture", {comp(0.95, 0.0, 0.01),
                                    comp(0.05, 20.0, 0.005)}}};
    cfg["policies"] = {
        {{"name", "mu_0.005_0"}, {"mu_s", 0.005}, {"mu_o", 0.0}},
        {{"name", "mu_0_0.05"}, {"mu_s", 0.0}, {"mu_o", 0.05}}};
    cfg["baselines"] = {{"risk_neutral", true}, {"leqg_theta", {-0.0031}}};
  } else {
    throw Error(ErrorCode::UsageError, "unknown preset '" + name + "'",
                "preset");
  }
  cfg["noise"] = noise;
  return cfg;
}

std::vector<std::string> preset_names() { return {"case1", "case2", "case3"}; }

json load_config_file(const std::string &path) {
  std::ifstream in(path);
  if (!in)
    throw Error(ErrorCode::IoError, "cannot open config " + path, "config");
  try {
    return json::parse(in);
  } catch (const json::parse_error &e) {
    throw Error(ErrorCode::InvalidConfig,
                "config is not valid JSON: " + std::string(e.what()),
                "config");
  }
}

void apply_override(json &config, const std::string &assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0)
    throw Error(ErrorCode::UsageError,
                "override must look like key.path=value: " + assignment,
                "override");
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded())
    value = text;

  json *node = &config;
  std::stringstream ss(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(ss, key, '.'))
    keys.push_back(key);
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const auto &k = keys[i];
    if (k.empty())
      throw Error(ErrorCode::UsageError, "empty key in override " + path,
                  "override");
    const bool index = node->is_array() &&
                       k.find_first_not_of("0123456789") == std::string::npos;
    json *child;
    if (index) {
      const auto at = std::stoul(k);
      if (at >= node->size())
        throw Error(ErrorCode::UsageError, "index out of range in " + path,
                    path);
      child = &(*node)[at];
    } else {
      if (!node->is_object() && !node->is_null())
        throw Error(ErrorCode::UsageError,
                    "cannot descend into non-object at " + k, path);
      child = &(*node)[k];
    }
    node = child;
  }
  *node = std::move(value);
}

std::string config_hash(const json &config) {
  json hashed = config;
  if (hashed.contains("run") && hashed["run"].is_object())
    hashed["run"].erase("out");
  const std::string text = hashed.dump();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

Experiment build_experiment(const json &config) {
  try {
    if (!config.is_object())
      bad("config", "expected a JSON object");

    LtiSystem sys = parse_system(require(config, "system", "config"));
    const auto n = sys.n();
    const auto q = sys.q();

    // Target.
    RegulationTarget target{Vector::Zero(n), Vector::Zero(sys.m()),
                            Vector::Zero(q)};
    if (config.contains("target") && config.at("target").is_object()) {
      const json &t = config.at("target");
      if (t.contains("u_star")) {
        const Vector u = parse_vector(t.at("u_star"), "target.u_star");
        if (u.size() != sys.m())
          bad("target.u_star", "expected m entries");
        target = make_fixed_point_target(sys, u);
      } else if (t.contains("x_star")) {
        const Vector x = parse_vector(t.at("x_star"), "target.x_star");
        if (x.size() != n)
          bad("target.x_star", "expected n entries");
        target = make_regulation_target(sys, x);
      }
    } else if (config.contains("target") &&
               !(config.at("target").is_string() &&
                 config.at("target").get<std::string>() == "zero")) {
      bad("target", "expected an object or \"zero\"");
    }

    // Weights.
    const json &wj = require(config, "weights", "config");
    RiskWeights weights;
    weights.Q = parse_matrix(require(wj, "Q", "weights"), "weights.Q");
    weights.R = parse_matrix(require(wj, "R", "weights"), "weights.R");
    weights.Qs = parse_matrix(require(wj, "Qs", "weights"), "weights.Qs");
    weights.Qo = parse_matrix(require(wj, "Qo", "weights"), "weights.Qo");
    weights.N = as_int(require(wj, "N", "weights"), "weights.N");
    weights.mu_s = wj.contains("mu_s") ? as_number(wj["mu_s"], "weights.mu_s")
                                       : 0.0;
    weights.mu_o = wj.contains("mu_o") ? as_number(wj["mu_o"], "weights.mu_o")
                                       : 0.0;
    bool eps_s_given = false, eps_o_given = false;
    if (wj.contains("eps_s")) {
      weights.eps_s = as_number(wj["eps_s"], "weights.eps_s");
      eps_s_given = true;
    }
    if (wj.contains("eps_o")) {
      weights.eps_o = as_number(wj["eps_o"], "weights.eps_o");
      eps_o_given = true;
    }
    try {
      weights.validate(n, sys.m(), q);
    } catch (const Error &e) {
      throw Error(e.code(), e.what(),
                  e.field().empty() ? "weights" : e.field());
    }

    // Noise and moments.
    const json &nj = require(config, "noise", "config");
    JointNoiseModel model = parse_noise(nj, sys);
    if (model.process_dim() != n)
      bad("noise.process", "process noise dimension must equal n");
    if (model.output_dim() != q)
      bad("noise.output", "output noise dimension must equal q");
    MomentOptions mopt;
    const auto method = nj.value("fourth_order", std::string("analytic"));
    if (method == "monte_carlo")
      mopt.method = FourthOrderMethod::MonteCarlo;
    else if (method != "analytic")
      bad("noise.fourth_order", "expected analytic or monte_carlo");
    if (nj.contains("mc_samples"))
      mopt.samples = static_cast<std::size_t>(
          as_int(nj["mc_samples"], "noise.mc_samples"));
    if (nj.contains("mc_seed"))
      mopt.seed = static_cast<std::uint64_t>(
          as_int(nj["mc_seed"], "noise.mc_seed"));
    NoiseMoments moments =
        compute_moments(model, weights.Qs, weights.Qo, sys.C(), mopt);
    Matrix Sigma0 = Matrix::Zero(n, n);
    if (nj.contains("sigma0"))
      Sigma0 = parse_matrix(nj["sigma0"], "noise.sigma0");
    if (Sigma0.rows() != n || Sigma0.cols() != n)
      bad("noise.sigma0", "expected an n x n matrix");
    FilterCovariancePlan plan =
        plan_covariances(sys, moments, Sigma0, weights.N);

    // Initial state.
    Vector x0 = target.x_star;
    if (config.contains("initial")) {
      const json &ij = config.at("initial");
      if (ij.contains("x0")) {
        x0 = parse_vector(ij.at("x0"), "initial.x0");
        if (x0.size() != n)
          bad("initial.x0", "expected n entries");
      }
    }

    Experiment ex{config,
                  {},
                  ClosedLoopSetup{sys, std::move(model), moments, weights,
                                  std::move(plan), x0 - target.x_star},
                  target,
                  x0,
                  {},
                  {},
                  {},
                  eps_s_given,
                  eps_o_given};

    // Policies and baselines.
    const json baselines = config.value("baselines", json::object());
    if (baselines.value("risk_neutral", true))
      ex.policies.push_back({"risk_neutral", 0.0, 0.0});
    if (config.contains("policies")) {
      const json &pj = config.at("policies");
      if (!pj.is_array())
        bad("policies", "expected a list");
      for (std::size_t i = 0; i < pj.size(); ++i) {
        const std::string f = "policies." + std::to_string(i);
        PolicySpec p;
        p.mu_s = pj[i].contains("mu_s")
                     ? as_number(pj[i]["mu_s"], f + ".mu_s")
                     : 0.0;
        p.mu_o = pj[i].contains("mu_o")
                     ? as_number(pj[i]["mu_o"], f + ".mu_o")
                     : 0.0;
        if (p.mu_s < 0.0 || p.mu_o < 0.0)
          bad(f, "multipliers must be nonnegative");
        p.name = pj[i].contains("name")
                     ? pj[i]["name"].get<std::string>()
                     : "mu_" + mu_label(p.mu_s) + "_" + mu_label(p.mu_o);
        check_name(p.name, f + ".name");
        ex.policies.push_back(p);
      }
    } else if (weights.mu_s > 0.0 || weights.mu_o > 0.0) {
      ex.policies.push_back({"risk_constrained", weights.mu_s, weights.mu_o});
    }
    for (std::size_t i = 0; i < ex.policies.size(); ++i)
      for (std::size_t k = 0; k < i; ++k)
        if (ex.policies[i].name == ex.policies[k].name)
          bad("policies", "duplicate policy name '" + ex.policies[i].name +
                              "'");
    if (baselines.contains("leqg_theta")) {
      const json &tj = baselines.at("leqg_theta");
      if (!tj.is_array())
        bad("baselines.leqg_theta", "expected a list of numbers");
      for (const auto &v : tj)
        ex.leqg_thetas.push_back(as_number(v, "baselines.leqg_theta"));
    }

    // Run block.
    if (config.contains("run")) {
      const json &rj = config.at("run");
      if (rj.contains("seed")) {
        if (!rj["seed"].is_number_integer() || rj["seed"].get<long long>() < 0)
          bad("run.seed", "expected a nonnegative integer");
        ex.run.seed = rj["seed"].get<std::uint64_t>();
      }
      if (rj.contains("replications"))
        ex.run.replications = as_int(rj["replications"], "run.replications");
      if (rj.contains("hero_replication"))
        ex.run.hero_replication =
            as_int(rj["hero_replication"], "run.hero_replication");
      if (rj.contains("out"))
        ex.run.out_dir = rj["out"].get<std::string>();
    }
    if (ex.run.replications < 1)
      bad("run.replications", "must be positive");
    if (ex.run.hero_replication < 0 ||
        ex.run.hero_replication >= ex.run.replications)
      bad("run.hero_replication", "must index an existing replication");

    ex.hash = config_hash(config);
    return ex;
  } catch (const json::exception &e) {
    throw Error(ErrorCode::InvalidConfig,
                std::string("config has an unexpected type: ") + e.what(),
                "config");
  }
}

} // namespace riskctl::cli
