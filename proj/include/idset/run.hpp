// Copyright 2026 The idset Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Batch runs behind the idset command line tool: configuration, JSON
// round-trips and the CSV/manifest artifacts of each command.

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "idset/catalog.hpp"
#include "idset/lp.hpp"
#include "idset/model.hpp"
#include "idset/sequential.hpp"

#include "json.hpp"

namespace idset {

enum class Command { kScan, kScanSequential, kInfer, kCoverage, kBench, kOracleCheck };
std::string_view ToString(Command command);
Command CommandFromString(std::string_view name);  // throws ConfigError

// Coordinate name and the values it takes; several entries form a product grid.
using GridOverride = std::vector<std::pair<std::string, std::vector<double>>>;

struct RunConfig {
  Command command = Command::kScan;
  std::string scenario_id = "design1";
  std::optional<Scenario> scenario;  // inline scenario, used instead of the id
  // Generating-parameter overrides applied before targets are installed.
  std::vector<std::pair<std::string, double>> theta_star;
  bool true_targets = false;  // add the counterfactual row at its true value
  std::optional<std::vector<double>> p_star;  // replaces the scenario's observable pmf
  GridOverride grid;  // empty: the scenario's own scan grid (coverage: theta*)
  std::string output_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;
  bool timing = false;  // emit wall-clock columns; otherwise "NA"
  lp::Options lp;

  // scan_sequential
  GaSettings ga;  // ga.seed is not stored; the run seed is used
  double q_step = 0.05;
  bool sequential_exact = true;

  // infer / coverage
  double alpha = 0.1;
  long n = 2000;
  int boot = 300;
  int reps = 200;
  std::optional<double> lambda_n;
  double epsilon = 1e-6;
  std::optional<std::vector<long>> counts;  // observed sample; drawn from p* when empty

  // bench
  int bench_reps = 3;

  // oracle_check: "small" (500 instances) or "tiny" (50)
  std::string suite = "small";

  bool operator==(const RunConfig&) const = default;
};

nlohmann::ordered_json ScenarioToJson(const Scenario& scenario);
Scenario ScenarioFromJson(const nlohmann::ordered_json& j);  // throws ConfigError

nlohmann::ordered_json RunConfigToJson(const RunConfig& config);
RunConfig RunConfigFromJson(const nlohmann::ordered_json& j);  // throws ConfigError
RunConfig LoadRunConfig(const std::string& path);

// Accepts {"name": [v, ...]} or {"name": {"lo": a, "hi": b, "step": h}}.
GridOverride ParseGridOverride(const nlohmann::ordered_json& j);

// Scenario after id lookup, overrides and targets; validated.
Scenario ResolveScenario(const RunConfig& config);
std::vector<ThetaPoint> ResolveGrid(const RunConfig& config, const Scenario& scenario);
Vector ResolvePStar(const RunConfig& config, const Scenario& scenario);

// 12 significant digits, "0" for signed zero, "inf" for the infeasible sentinel.
std::string FormatNumber(double value);
std::string ConfigHash(const RunConfig& config);

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::string> files;
  nlohmann::ordered_json summary;
};

// Throws ConfigError or solver errors.
RunOutcome Execute(const RunConfig& config);

// Maps errors to exit codes: 2 for configuration problems, 3 for solver
// failures, 1 for anything else; a failed oracle check also returns 1.
int RunAndReport(const RunConfig& config);

// Reads IDSET_LOG (error, warn, info, debug); default warn.
void ConfigureLogging();

}  // namespace idset
