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

#include "riskctl/cli/experiment.hpp"
#include "riskctl/error.hpp"

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

namespace riskctl::cli {

struct CommonOptions {
  std::optional<std::string> config_path;
  std::optional<std::string> preset;
  std::optional<std::uint64_t> seed;
  std::optional<int> replications;
  std::optional<std::string> out_dir;
  std::vector<std::string> overrides;
};

/// Loads the config file or preset, then applies overrides and the
/// --seed/--replications/--out flags (in that order).
json resolve_config(const CommonOptions &options);

/// Synthesizes every configured policy, simulates all of them on common
/// random numbers and writes manifest.json, gains_<policy>.csv,
/// traj_<policy>.csv, summary.json and kkt.json into the output directory.
int run_command(const CommonOptions &options, std::ostream &log);

/// Synthesis only: gain files, manifest, and a stability / inflation report.
int gains_command(const CommonOptions &options, std::ostream &log);

struct TuneOptions {
  std::vector<std::pair<double, double>> grid;
  std::optional<double> eps_s, eps_o;
};

/// "0,1,10" (mu_s values, mu_o = 0) or "0:0,1:0.5" (mu_s:mu_o pairs).
std::vector<std::pair<double, double>> parse_grid(const std::string &text);

/// Writes tune.csv (and tune_kkt.json when targets are given).
int tune_command(const CommonOptions &options, const TuneOptions &tune,
                 std::ostream &log);

/// {"error": {"code", "message", "field"}}
json error_json(const Error &error);
int exit_code(const Error &error);

} // namespace riskctl::cli
