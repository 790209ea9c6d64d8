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

// idset: command line front end for scans, sequential comparisons, inference
// jobs, coverage studies, timing and the oracle suite.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "idset/errors.hpp"
#include "idset/run.hpp"

namespace {

struct Flags {
  std::string scenario;
  std::string config;
  std::string output;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string grid_override;
  double alpha = 0.1;
  long n = 2000;
  int boot = 300;
  int reps = 200;
  int ga_pop = 64;
  int ga_gens = 200;
  double q_step = 0.05;
  double lambda_n = 0.0;
  int bench_reps = 3;
  std::string suite;
  bool timing = false;
  bool targets = false;
  bool no_exact = false;
};

}  // namespace

int main(int argc, char** argv) {
  idset::ConfigureLogging();
  CLI::App app{"Identified-set scans and inference on finite supports"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags f;
  auto* o_scenario = app.add_option("--scenario", f.scenario, "catalog scenario id");
  app.add_option("--config", f.config, "JSON run configuration; flags override it");
  auto* o_output = app.add_option("--output", f.output, "output directory");
  auto* o_seed = app.add_option("--seed", f.seed, "random seed");
  auto* o_threads = app.add_option("--threads", f.threads, "worker threads (0: OpenMP default)");
  auto* o_grid = app.add_option("--grid-override", f.grid_override,
                                R"(theta grid as JSON, e.g. {"beta2": {"lo": -1, "hi": 0, "step": 0.1}})");
  auto* o_alpha = app.add_option("--alpha", f.alpha, "test level");
  auto* o_n = app.add_option("--n", f.n, "sample size");
  auto* o_boot = app.add_option("--boot", f.boot, "bootstrap draws B");
  auto* o_reps = app.add_option("--reps", f.reps, "Monte Carlo replications");
  auto* o_pop = app.add_option("--ga-pop", f.ga_pop, "genetic search population");
  auto* o_gens = app.add_option("--ga-gens", f.ga_gens, "genetic search generations");
  auto* o_qstep = app.add_option("--q-step", f.q_step, "step of the x2 marginal grid");
  auto* o_lambda = app.add_option("--lambda-n", f.lambda_n, "penalty scale (default sqrt(n)/log(n))");
  auto* o_bench = app.add_option("--bench-reps", f.bench_reps, "passes over the grid when timing");
  auto* o_suite = app.add_option("--suite", f.suite, "oracle suite: small or tiny");
  auto* o_timing = app.add_flag("--timing", f.timing, "write wall-clock times instead of NA");
  auto* o_targets = app.add_flag("--targets", f.targets, "add the counterfactual row at its true value");
  auto* o_noexact = app.add_flag("--no-exact", f.no_exact, "skip the exact sequential program");

  for (auto c : {idset::Command::kScan, idset::Command::kScanSequential, idset::Command::kInfer,
                 idset::Command::kCoverage, idset::Command::kBench, idset::Command::kOracleCheck}) {
    app.add_subcommand(std::string(idset::ToString(c)));
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  idset::RunConfig config;
  try {
    if (!f.config.empty()) config = idset::LoadRunConfig(f.config);
    config.command = idset::CommandFromString(app.get_subcommands().front()->get_name());
    if (o_scenario->count()) {
      config.scenario_id = f.scenario;
      config.scenario.reset();
    }
    if (o_output->count()) config.output_dir = f.output;
    if (o_seed->count()) config.seed = f.seed;
    if (o_threads->count()) config.threads = f.threads;
    if (o_grid->count()) {
      try {
        config.grid = idset::ParseGridOverride(nlohmann::ordered_json::parse(f.grid_override));
      } catch (const nlohmann::json::exception& e) {
        throw idset::ConfigError(std::string("--grid-override: ") + e.what());
      }
    }
    if (o_alpha->count()) config.alpha = f.alpha;
    if (o_n->count()) config.n = f.n;
    if (o_boot->count()) config.boot = f.boot;
    if (o_reps->count()) config.reps = f.reps;
    if (o_pop->count()) config.ga.population = f.ga_pop;
    if (o_gens->count()) config.ga.generations = f.ga_gens;
    if (o_qstep->count()) config.q_step = f.q_step;
    if (o_lambda->count()) config.lambda_n = f.lambda_n;
    if (o_bench->count()) config.bench_reps = f.bench_reps;
    if (o_suite->count()) config.suite = f.suite;
    if (o_timing->count()) config.timing = true;
    if (o_targets->count()) config.true_targets = true;
    if (o_noexact->count()) config.sequential_exact = false;
    // Re-validate after flag overrides.
    config = idset::RunConfigFromJson(idset::RunConfigToJson(config));
  } catch (const idset::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  }
  return idset::RunAndReport(config);
}
