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

#include <CLI11.hpp>

#include <iostream>

namespace {

using riskctl::cli::CommonOptions;

void add_common(CLI::App *cmd, CommonOptions &opt) {
  cmd->add_option_function<std::string>(
      "--config", [&opt](const std::string &v) { opt.config_path = v; },
      "JSON experiment config");
  cmd->add_option_function<std::string>(
         "--preset", [&opt](const std::string &v) { opt.preset = v; },
         "built-in configuration")
      ->check(CLI::IsMember({"case1", "case2", "case3"}));
  cmd->add_option_function<std::uint64_t>(
      "--seed", [&opt](std::uint64_t v) { opt.seed = v; }, "base RNG seed");
  cmd->add_option_function<int>(
         "--replications", [&opt](int v) { opt.replications = v; },
         "Monte-Carlo replications")
      ->check(CLI::PositiveNumber);
  cmd->add_option_function<std::string>(
      "--out", [&opt](const std::string &v) { opt.out_dir = v; },
      "artifact directory");
  cmd->add_option("--override", opt.overrides,
                  "dotted.key=value applied to the config (repeatable)");
}

} // namespace

int main(int argc, char **argv) {
  CLI::App app{"Risk-constrained LQ control of partially observed systems"};
  app.require_subcommand(1);

  CommonOptions run_opt, gains_opt, tune_opt;
  riskctl::cli::TuneOptions tune;
  std::string grid_text;

  auto *run = app.add_subcommand("run", "synthesize, simulate and report");
  add_common(run, run_opt);
  auto *gains = app.add_subcommand("gains", "synthesize gain schedules only");
  add_common(gains, gains_opt);
  auto *tune_cmd =
      app.add_subcommand("tune", "tabulate multipliers against outcomes");
  add_common(tune_cmd, tune_opt);
  tune_cmd->add_option("--grid", grid_text,
                       "mu_s list, or mu_s:mu_o pairs, comma separated")
      ->required();
  tune_cmd->add_option_function<double>(
      "--eps-s", [&tune](double v) { tune.eps_s = v; },
      "state constraint tolerance for the KKT check");
  tune_cmd->add_option_function<double>(
      "--eps-o", [&tune](double v) { tune.eps_o = v; },
      "output constraint tolerance for the KKT check");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0)
      return app.exit(e); // --help
    riskctl::Error err(riskctl::ErrorCode::UsageError, e.what(), "argv");
    std::cerr << riskctl::cli::error_json(err).dump() << '\n';
    return 2;
  }

  try {
    if (*run)
      return riskctl::cli::run_command(run_opt, std::cout);
    if (*gains)
      return riskctl::cli::gains_command(gains_opt, std::cout);
    tune.grid = riskctl::cli::parse_grid(grid_text);
    return riskctl::cli::tune_command(tune_opt, tune, std::cout);
  } catch (const riskctl::Error &e) {
    std::cerr << riskctl::cli::error_json(e).dump() << '\n';
    return riskctl::cli::exit_code(e);
  } catch (const std::exception &e) {
    riskctl::Error err(riskctl::ErrorCode::IoError, e.what());
    std::cerr << riskctl::cli::error_json(err).dump() << '\n';
    return 1;
  }
}
