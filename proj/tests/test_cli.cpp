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
#include "riskctl/cli/experiment.hpp"
#include "riskctl/controller.hpp"
#include "testutil.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace riskctl;
using cli::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path &p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch_dir(const std::string &name) {
  const auto dir = fs::temp_directory_path() /
                   ("riskctl_test_" + std::to_string(::getpid()) + "_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

/// Runs the installed tool; returns its exit status.
int tool(const std::string &args, const fs::path &err_file) {
  const std::string cmd = std::string(RISKCTL_BIN) + " " + args + " >/dev/null 2>" +
                          err_file.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

void expect_field(const json &cfg, const std::string &field, ErrorCode code) {
  bool thrown = false;
  try {
    (void)cli::build_experiment(cfg);
  } catch (const Error &e) {
    thrown = true;
    CHECK_MESSAGE(e.field() == field, e.what());
    CHECK(e.code() == code);
  }
  CHECK_MESSAGE(thrown, "expected failure at " << field);
}

json with(json cfg, const std::string &assignment) {
  cli::apply_override(cfg, assignment);
  return cfg;
}

} // namespace

TEST_CASE("presets build into consistent experiments") {
  for (const auto &name : cli::preset_names()) {
    const auto exp = cli::build_experiment(cli::preset(name));
    CHECK(exp.setup.sys.n() == 2);
    CHECK(exp.setup.plan.horizon() >= exp.setup.weights.N);
    CHECK(exp.policies.front().name == "risk_neutral");
    CHECK(exp.policies.size() >= 2);
    CHECK(exp.leqg_thetas.size() == 1);
    CHECK(exp.run.out_dir == "out/" + name);
    // The target is a fixed point for its feedforward input.
    const auto &A = exp.setup.sys.A();
    const auto &B = exp.setup.sys.B();
    CHECK((A * exp.target.x_star + B * exp.target.u_star - exp.target.x_star)
              .norm() <= 1e-12);
  }
  CHECK_ERROR_CODE(cli::preset("case9"), ErrorCode::UsageError);
}

TEST_CASE("overrides edit nested values") {
  json cfg = cli::preset("case1");
  cli::apply_override(cfg, "weights.N=30");
  cli::apply_override(cfg, "policies.0.mu_s=3.5");
  cli::apply_override(cfg, "run.out=elsewhere");
  cli::apply_override(cfg, "baselines.leqg_theta=[-0.01,-0.02]");
  CHECK(cfg["weights"]["N"] == 30);
  CHECK(cfg["policies"][0]["mu_s"] == 3.5);
  CHECK(cfg["run"]["out"] == "elsewhere");
  const auto exp = cli::build_experiment(cfg);
  CHECK(exp.setup.weights.N == 30);
  CHECK(exp.leqg_thetas.size() == 2);
  CHECK(exp.policies[1].mu_s == 3.5);
  CHECK_ERROR_CODE(cli::apply_override(cfg, "novalue"), ErrorCode::UsageError);
  CHECK_ERROR_CODE(cli::apply_override(cfg, "policies.7.mu_s=1"),
                   ErrorCode::UsageError);
  CHECK_ERROR_CODE(cli::apply_override(cfg, "weights..N=1"),
                   ErrorCode::UsageError);
}

TEST_CASE("config hash ignores the output directory only") {
  const json base = cli::preset("case2");
  const auto h = cli::config_hash(base);
  CHECK(h.size() == 16);
  CHECK(cli::config_hash(with(base, "run.out=x")) == h);
  CHECK(cli::config_hash(with(base, "run.seed=2")) != h);
  CHECK(cli::config_hash(cli::preset("case2")) == h);
}

TEST_CASE("malformed configs name the offending field") {
  const json base = cli::preset("case1");
  expect_field(with(base, "weights.Q=[[1,0]]"), "weights.Q",
               ErrorCode::DimensionMismatch);
  expect_field(with(base, "noise.coupling=bogus"), "noise.coupling",
               ErrorCode::InvalidConfig);
  expect_field(with(base, "run.replications=0"), "run.replications",
               ErrorCode::InvalidConfig);
  expect_field(with(base, "weights.mu_s=-1"), "weights.mu_s",
               ErrorCode::InvalidConfig);
  expect_field(with(base, "policies.0.mu_o=-2"), "policies.0",
               ErrorCode::InvalidConfig);
  expect_field(with(base, "system.A=[[1,2],[3]]"), "system.A",
               ErrorCode::InvalidConfig);
  expect_field(with(base, "target={\"x_star\":[0.2117,0.43995]}"),
               "target.x_star", ErrorCode::InfeasibleTarget);
  json no_system = base;
  no_system.erase("system");
  expect_field(no_system, "config.system", ErrorCode::InvalidConfig);
}

TEST_CASE("explicit systems and paired noise are accepted") {
  const auto dir = scratch_dir("paired");
  std::ofstream(dir / "rows.csv") << "w1,w2,eps\n0.1,0,0.05\n-0.1,0.2,-0.05\n"
                                      "0,-0.2,0\n";
  json cfg = cli::preset("case1");
  cfg["system"] = {{"A", {{0.5, 0.1}, {0.0, 0.7}}},
                   {"B", {1.0, 0.5}},
                   {"C", {{1.0, 0.0}}}};
  cfg["target"] = "zero";
  cfg["noise"] = {{"coupling", "paired"},
                  {"paired", {{"csv", (dir / "rows.csv").string()}}}};
  const auto exp = cli::build_experiment(cfg);
  CHECK(exp.setup.sys.B().cols() == 1);
  CHECK(exp.setup.model.coupling() == Coupling::Paired);
  CHECK(exp.setup.moments.w_bar.norm() <= 1e-15);
  CHECK(exp.target.x_star.norm() == 0.0);

  cfg["noise"]["paired"]["csv"] = (dir / "absent.csv").string();
  expect_field(cfg, "noise.paired.csv", ErrorCode::IoError);
  fs::remove_all(dir);
}

TEST_CASE("multiplier grids parse") {
  const auto a = cli::parse_grid("0,1,10");
  REQUIRE(a.size() == 3);
  CHECK(a[2] == std::pair{10.0, 0.0});
  const auto b = cli::parse_grid("0:0, 1:0.5");
  REQUIRE(b.size() == 2);
  CHECK(b[1] == std::pair{1.0, 0.5});
  CHECK_ERROR_CODE(cli::parse_grid(""), ErrorCode::UsageError);
  CHECK_ERROR_CODE(cli::parse_grid("x"), ErrorCode::UsageError);
  CHECK_ERROR_CODE(cli::parse_grid("1,-1"), ErrorCode::UsageError);
}

TEST_CASE("errors serialize to a stable shape") {
  const Error e(ErrorCode::InvalidConfig, "bad", "weights.R");
  const auto j = cli::error_json(e);
  CHECK(j["error"]["code"] == "InvalidConfig");
  CHECK(j["error"]["message"] == "bad");
  CHECK(j["error"]["field"] == "weights.R");
  CHECK(cli::exit_code(e) == 1);
  CHECK(cli::exit_code(Error(ErrorCode::UsageError, "u")) == 2);
}

TEST_CASE("run writes the artifact set and is byte-reproducible") {
  const auto dir = scratch_dir("run");
  const std::string args = "run --preset case1 --replications 20 "
                           "--override weights.N=40 --out ";
  REQUIRE(tool(args + (dir / "a").string() + " --seed 7", dir / "err_a") == 0);
  REQUIRE(tool(args + (dir / "b").string() + " --seed 7", dir / "err_b") == 0);
  std::size_t files = 0;
  for (const auto &entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename();
    if (name != "manifest.json")
      CHECK_MESSAGE(slurp(entry.path()) == slurp(dir / "b" / name), name);
    ++files;
  }
  CHECK(files == 9);
  // Manifests differ only in the recorded output directory.
  auto ma = json::parse(slurp(dir / "a" / "manifest.json"));
  auto mb = json::parse(slurp(dir / "b" / "manifest.json"));
  ma["config"]["run"].erase("out");
  mb["config"]["run"].erase("out");
  CHECK(ma == mb);

  const auto summary = json::parse(slurp(dir / "a" / "summary.json"));
  CHECK(summary["config_hash"].get<std::string>().size() == 16);
  CHECK(summary["policies"].size() == 3);
  const auto manifest = json::parse(slurp(dir / "a" / "manifest.json"));
  CHECK(manifest["seed"] == 7);
  CHECK(manifest["replications"] == 20);

  std::ifstream gains(dir / "a" / "gains_mu_10_0.csv");
  const auto pol = read_gain_file(gains);
  CHECK(pol.horizon() == 40);

  std::ifstream traj(dir / "a" / "traj_risk_neutral.csv");
  std::string header, line;
  std::getline(traj, header);
  CHECK(header.rfind("replication,t,x_1,x_2,xhat_1,xhat_2,u_1,y_1,stage_cost,"
                     "ds2,do2",
                     0) == 0);
  std::size_t rows = 0;
  while (std::getline(traj, line))
    ++rows;
  CHECK(rows == 20u * 41u);

  REQUIRE(tool(args + (dir / "c").string() + " --seed 8", dir / "err_c") == 0);
  CHECK(slurp(dir / "a" / "traj_mu_10_0.csv") !=
        slurp(dir / "c" / "traj_mu_10_0.csv"));
  fs::remove_all(dir);
}

TEST_CASE("gains and tune subcommands") {
  const auto dir = scratch_dir("tune");
  REQUIRE(tool("gains --preset case2 --out " + (dir / "g").string(),
               dir / "err") == 0);
  CHECK(fs::exists(dir / "g" / "gains_mu_1e6_0.csv"));
  CHECK(fs::exists(dir / "g" / "manifest.json"));
  CHECK_FALSE(fs::exists(dir / "g" / "summary.json"));

  REQUIRE(tool("tune --preset case1 --replications 20 --grid 0,1,10 --out " +
                   (dir / "t").string(),
               dir / "err") == 0);
  std::ifstream csv(dir / "t" / "tune.csv");
  std::string line;
  std::size_t rows = 0;
  while (std::getline(csv, line))
    ++rows;
  CHECK(rows == 4);

  REQUIRE(tool("tune --preset case1 --replications 20 --grid 10 "
               "--eps-s 1e9 --eps-o 1e9 --out " +
                   (dir / "k").string(),
               dir / "err") == 0);
  CHECK(fs::exists(dir / "k" / "tune_kkt.json"));
  fs::remove_all(dir);
}

TEST_CASE("usage and config errors exit nonzero with a JSON error") {
  const auto dir = scratch_dir("errors");
  CHECK(tool("run --preset case4", dir / "e1") == 2);
  const auto e1 = json::parse(slurp(dir / "e1"));
  CHECK(e1["error"]["code"] == "UsageError");

  CHECK(tool("tune --preset case1 --grid \"\" --out " + (dir / "o").string(),
             dir / "e2") == 2);
  CHECK(json::parse(slurp(dir / "e2"))["error"]["field"] == "grid");

  CHECK(tool("run --preset case1 --override weights.R=[[0]] --out " +
                 (dir / "o").string(),
             dir / "e3") == 1);
  CHECK(json::parse(slurp(dir / "e3"))["error"]["field"] == "weights.R");

  std::ofstream(dir / "broken.json") << "{ not json";
  CHECK(tool("run --config " + (dir / "broken.json").string(), dir / "e4") ==
        1);
  CHECK(json::parse(slurp(dir / "e4"))["error"]["code"] == "InvalidConfig");

  CHECK(tool("run --config " + (dir / "missing.json").string(), dir / "e5") ==
        1);
  CHECK(json::parse(slurp(dir / "e5"))["error"]["code"] == "IoError");
  CHECK(tool("", dir / "e6") == 2);
  fs::remove_all(dir);
}
