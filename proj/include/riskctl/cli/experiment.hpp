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

#include "riskctl/evaluation.hpp"
#include "riskctl/model.hpp"

#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace riskctl::cli {

using nlohmann::json;

/// Built-in experiment configurations: "case1", "case2", "case3".
json preset(const std::string &name);
std::vector<std::string> preset_names();

json load_config_file(const std::string &path);

/// Applies "a.b.c=value". The value is parsed as JSON when possible and kept
/// as a string otherwise; numeric path segments index arrays.
void apply_override(json &config, const std::string &assignment);

/// 64-bit FNV-1a of the compact, key-sorted serialization, with run.out
/// left out so the same experiment hashes equally in any directory.
std::string config_hash(const json &config);

struct PolicySpec {
  std::string name;
  double mu_s = 0.0, mu_o = 0.0;
};

struct RunSettings {
  std::uint64_t seed = 1;
  int replications = 200;
  int hero_replication = 0;
  std::string out_dir = "out";
};

/// A validated configuration: the closed loop in deviation coordinates
/// around the regulation target plus what to synthesize and run.
struct Experiment {
  json config;
  std::string hash;
  ClosedLoopSetup setup;
  RegulationTarget target;
  Vector x0_absolute;
  std::vector<PolicySpec> policies;
  std::vector<double> leqg_thetas;
  RunSettings run;
  bool eps_s_given = false, eps_o_given = false;
};

/// Validates every block before any computation. Errors carry the dotted
/// path of the offending field.
Experiment build_experiment(const json &config);

} // namespace riskctl::cli
