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

#include "idset/run.hpp"

#include <omp.h>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "idset/discrepancy.hpp"
#include "idset/errors.hpp"
#include "idset/inference.hpp"
#include "idset/oracle.hpp"

#ifndef IDSET_VERSION
#define IDSET_VERSION "0.0.0"
#endif

namespace idset {
namespace {

using Json = nlohmann::ordered_json;

constexpr std::uint64_t kDataStream = 0x44415441ULL;

void RejectUnknownKeys(const Json& j, std::initializer_list<std::string_view> allowed, std::string_view where) {
  if (!j.is_object()) throw ConfigError(std::string(where) + " must be a JSON object");
  for (const auto& item : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), item.key()) == allowed.end()) {
      throw ConfigError("unknown key '" + item.key() + "' in " + std::string(where));
    }
  }
}

template <typename T>
void Read(const Json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

Json ThetaToJson(const ThetaPoint& theta) {
  Json j = Json::object();
  for (int i = 0; i < theta.size(); ++i) j[theta.names()[i]] = theta.values()[i];
  return j;
}

ThetaPoint ThetaFromJson(const Json& j) {
  if (!j.is_object()) throw ConfigError("theta must be a JSON object");
  std::vector<std::string> names;
  std::vector<double> values;
  for (const auto& item : j.items()) {
    names.push_back(item.key());
    values.push_back(item.value().get<double>());
  }
  return ThetaPoint(names, values);
}

Json LpToJson(const lp::Options& o) {
  return Json{{"feasibility_tol", o.feasibility_tol}, {"optimality_tol", o.optimality_tol},
              {"pivot_tol", o.pivot_tol},             {"breakdown_tol", o.breakdown_tol},
              {"refactor_interval", o.refactor_interval}, {"max_iterations", o.max_iterations}};
}

lp::Options LpFromJson(const Json& j) {
  RejectUnknownKeys(j,
                    {"feasibility_tol", "optimality_tol", "pivot_tol", "breakdown_tol", "refactor_interval",
                     "max_iterations"},
                    "lp");
  lp::Options o;
  Read(j, "feasibility_tol", o.feasibility_tol);
  Read(j, "optimality_tol", o.optimality_tol);
  Read(j, "pivot_tol", o.pivot_tol);
  Read(j, "breakdown_tol", o.breakdown_tol);
  Read(j, "refactor_interval", o.refactor_interval);
  Read(j, "max_iterations", o.max_iterations);
  return o;
}

Json GaToJson(const GaSettings& g) {
  return Json{{"population", g.population},       {"generations", g.generations},
              {"mutation_sd", g.mutation_sd},     {"crossover_rate", g.crossover_rate},
              {"mutation_rate", g.mutation_rate}, {"elitism", g.elitism},
              {"tournament", g.tournament}};
}

GaSettings GaFromJson(const Json& j) {
  RejectUnknownKeys(j,
                    {"population", "generations", "mutation_sd", "crossover_rate", "mutation_rate", "elitism",
                     "tournament"},
                    "ga");
  GaSettings g;
  Read(j, "population", g.population);
  Read(j, "generations", g.generations);
  Read(j, "mutation_sd", g.mutation_sd);
  Read(j, "crossover_rate", g.crossover_rate);
  Read(j, "mutation_rate", g.mutation_rate);
  Read(j, "elitism", g.elitism);
  Read(j, "tournament", g.tournament);
  try {
    g.Validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return g;
}

std::vector<ThetaPoint> ProductGrid(const ThetaPoint& base, const GridOverride& grid) {
  std::vector<ThetaPoint> out{base};
  for (const auto& [name, values] : grid) {
    if (!base.has(name)) throw ConfigError("grid coordinate '" + name + "' is not a theta coordinate");
    std::vector<ThetaPoint> next;
    next.reserve(out.size() * values.size());
    for (const auto& t : out) {
      for (double v : values) next.push_back(t.with(name, v));
    }
    out = std::move(next);
  }
  return out;
}

class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path) : out_(path, std::ios::binary) {
    if (!out_) throw ConfigError("cannot write " + path.string());
  }
  void Row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::vector<std::string> ThetaHeader(const ThetaPoint& theta) {
  std::vector<std::string> h;
  for (const auto& name : theta.names()) h.push_back("theta_" + name);
  return h;
}

std::vector<std::string> ThetaCells(const ThetaPoint& theta) {
  std::vector<std::string> c;
  for (double v : theta.values()) c.push_back(FormatNumber(v));
  return c;
}

std::string Bool(bool b) { return b ? "1" : "0"; }

struct Context {
  const RunConfig& config;
  Scenario scenario;
  std::vector<ThetaPoint> grid;
  Vector p_star;
  std::filesystem::path dir;
  RunOutcome outcome;

  std::string Timing(double ms) const { return config.timing ? FormatNumber(ms) : "NA"; }
};

Json IntervalsToJson(const std::vector<ThetaPoint>& grid, const std::vector<DiscrepancyResult>& results) {
  Json j = Json::object();
  if (grid.empty()) return j;
  for (const auto& name : grid.front().names()) {
    bool varies = false;
    for (const auto& t : grid) varies = varies || t.at(name) != grid.front().at(name);
    if (!varies) continue;
    Json list = Json::array();
    for (const auto& iv : MemberIntervals(grid, results, name)) list.push_back(Json::array({iv.lo, iv.hi}));
    j[name] = list;
  }
  return j;
}

void RunScan(Context& ctx) {
  ScanOptions opts;
  opts.threads = ctx.config.threads;
  opts.lp = ctx.config.lp;
  const ThetaScan scan = Scan(MakeFactory(ctx.scenario), ctx.grid, ctx.p_star, opts);

  CsvWriter csv(ctx.dir / "scan.csv");
  auto header = ThetaHeader(ctx.grid.front());
  header.insert(header.end(), {"T", "member", "time_ms"});
  csv.Row(header);
  for (std::size_t i = 0; i < scan.grid.size(); ++i) {
    auto row = ThetaCells(scan.grid[i]);
    const auto& r = scan.results[i];
    row.insert(row.end(), {FormatNumber(r.T), Bool(r.member), ctx.Timing(r.solve_ms)});
    csv.Row(row);
  }
  ctx.outcome.files.push_back("scan.csv");
  ctx.outcome.summary["member_intervals"] = IntervalsToJson(scan.grid, scan.results);
  int members = 0;
  for (const auto& r : scan.results) members += r.member;
  ctx.outcome.summary["members"] = members;
}

void RunScanSequential(Context& ctx) {
  if (ctx.scenario.family == Family::kMaxScore) {
    throw ConfigError("scan_sequential needs a panel scenario");
  }
  const auto factory = MakeFactory(ctx.scenario);
  GaSettings ga = ctx.config.ga;
  ga.seed = ctx.config.seed;
  const bool exact = ctx.config.sequential_exact;

  CsvWriter csv(ctx.dir / "scan.csv");
  auto header = ThetaHeader(ctx.grid.front());
  header.insert(header.end(), {"T_strict", "T_sequential"});
  if (exact) header.push_back("T_sequential_exact");
  header.insert(header.end(), {"member_strict", "member_sequential"});
  if (exact) header.push_back("member_sequential_exact");
  header.push_back("time_ms");
  csv.Row(header);

  std::vector<DiscrepancyResult> strict_all, seq_all, exact_all;
  for (std::size_t i = 0; i < ctx.grid.size(); ++i) {
    const auto& theta = ctx.grid[i];
    const auto strict = ComputeT(factory(theta), ctx.p_star, ctx.config.lp);
    const auto seq = ComputeTSequential(ctx.scenario, theta, ctx.p_star, ga, ctx.config.q_step, ctx.config.threads);
    DiscrepancyResult ex;
    if (exact) ex = ComputeTSequentialExact(ctx.scenario, theta, ctx.p_star, ctx.config.q_step);
    spdlog::info("theta {}/{}: strict {:.6g} sequential {:.6g}", i + 1, ctx.grid.size(), strict.T, seq.T);

    auto row = ThetaCells(theta);
    row.insert(row.end(), {FormatNumber(strict.T), FormatNumber(seq.T)});
    if (exact) row.push_back(FormatNumber(ex.T));
    row.insert(row.end(), {Bool(strict.member), Bool(seq.member)});
    if (exact) row.push_back(Bool(ex.member));
    row.push_back(ctx.Timing(strict.solve_ms + seq.solve_ms + ex.solve_ms));
    csv.Row(row);
    strict_all.push_back(strict);
    seq_all.push_back(seq);
    if (exact) exact_all.push_back(ex);
  }
  ctx.outcome.files.push_back("scan.csv");
  ctx.outcome.summary["member_intervals_strict"] = IntervalsToJson(ctx.grid, strict_all);
  ctx.outcome.summary["member_intervals_sequential"] = IntervalsToJson(ctx.grid, seq_all);
  if (exact) ctx.outcome.summary["member_intervals_sequential_exact"] = IntervalsToJson(ctx.grid, exact_all);
}

InferenceOptions InferenceFrom(const RunConfig& c) {
  InferenceOptions o;
  o.alpha = c.alpha;
  o.boot = c.boot;
  o.seed = c.seed;
  o.epsilon = c.epsilon;
  o.lambda_n = c.lambda_n;
  o.threads = c.threads;
  o.lp = c.lp;
  return o;
}

void RunInfer(Context& ctx) {
  const auto& c = ctx.config;
  Sample sample;
  if (c.counts) {
    if (static_cast<Eigen::Index>(c.counts->size()) != ctx.p_star.size()) {
      throw ConfigError("counts must have one entry per observable point");
    }
    try {
      sample = Sample::FromCounts(*c.counts);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
  } else {
    sample = DrawSample(ctx.p_star, c.n, c.seed, kDataStream, 0);
  }
  const auto cs = ComputeConfidenceSet(MakeFactory(ctx.scenario), ctx.grid, sample, InferenceFrom(c));

  CsvWriter csv(ctx.dir / "inference.csv");
  auto header = ThetaHeader(ctx.grid.front());
  header.insert(header.end(), {"sqrt_n_Tn", "c_hat", "reject", "n", "B", "alpha", "seed"});
  csv.Row(header);
  int included = 0;
  for (std::size_t i = 0; i < cs.grid.size(); ++i) {
    auto row = ThetaCells(cs.grid[i]);
    const auto& r = cs.results[i];
    row.insert(row.end(), {FormatNumber(r.sqrt_n_Tn), FormatNumber(r.c_hat), Bool(r.reject),
                           std::to_string(sample.n), std::to_string(c.boot), FormatNumber(c.alpha),
                           std::to_string(c.seed)});
    csv.Row(row);
    included += cs.included[i];
  }
  ctx.outcome.files.push_back("inference.csv");
  ctx.outcome.summary["included"] = included;
}

void RunCoverage(Context& ctx) {
  const auto& c = ctx.config;
  const auto factory = MakeFactory(ctx.scenario);
  CsvWriter csv(ctx.dir / "coverage.csv");
  auto header = ThetaHeader(ctx.grid.front());
  header.insert(header.end(), {"reps", "covered", "coverage", "n", "B", "alpha", "seed"});
  csv.Row(header);
  Json rates = Json::array();
  for (const auto& theta : ctx.grid) {
    const auto cov = MonteCarloCoverage(factory(theta), ctx.p_star, c.n, c.reps, InferenceFrom(c));
    auto row = ThetaCells(theta);
    row.insert(row.end(), {std::to_string(cov.reps), std::to_string(cov.covered), FormatNumber(cov.coverage()),
                           std::to_string(c.n), std::to_string(c.boot), FormatNumber(c.alpha),
                           std::to_string(c.seed)});
    csv.Row(row);
    rates.push_back(cov.coverage());
  }
  ctx.outcome.files.push_back("coverage.csv");
  ctx.outcome.summary["coverage"] = rates;
}

void RunBench(Context& ctx) {
  const auto factory = MakeFactory(ctx.scenario);
  const FiniteModel probe = factory(ctx.scenario.theta_star);
  std::vector<double> ms;
  for (int rep = 0; rep < ctx.config.bench_reps; ++rep) {
    for (const auto& theta : ctx.grid) {
      const FiniteModel model = factory(theta);
      const auto t0 = std::chrono::steady_clock::now();
      const auto r = ComputeT(model, ctx.p_star, ctx.config.lp);
      const auto t1 = std::chrono::steady_clock::now();
      (void)r;
      ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
    }
  }
  std::sort(ms.begin(), ms.end());
  auto quantile = [&](double q) {
    const std::size_t k = static_cast<std::size_t>(std::ceil(q * ms.size())) - 1;
    return ms[std::min(k, ms.size() - 1)];
  };
  double mean = 0.0;
  for (double v : ms) mean += v;
  mean /= static_cast<double>(ms.size());

  CsvWriter csv(ctx.dir / "bench.csv");
  csv.Row({"scenario", "L", "M", "R", "mean_ms", "p50_ms", "p95_ms"});
  csv.Row({ctx.scenario.id, std::to_string(probe.L()), std::to_string(probe.M()), std::to_string(probe.R()),
           FormatNumber(mean), FormatNumber(quantile(0.5)), FormatNumber(quantile(0.95))});
  ctx.outcome.files.push_back("bench.csv");
  ctx.outcome.summary["evaluations"] = ms.size();
  ctx.outcome.summary["mean_ms"] = mean;
}

void RunOracleCheck(Context& ctx) {
  int count = 0;
  if (ctx.config.suite == "small") {
    count = 500;
  } else if (ctx.config.suite == "tiny") {
    count = 50;
  } else {
    throw ConfigError("unknown oracle suite: " + ctx.config.suite);
  }
  const auto rep = oracle::RunSuite(count, ctx.config.seed);
  CsvWriter csv(ctx.dir / "oracle.csv");
  csv.Row({"instances", "agreements", "band_disagreements", "outside_disagreements", "band_cases", "lp_members",
           "max_duality_gap", "max_bound_excess", "passed"});
  csv.Row({std::to_string(rep.instances), std::to_string(rep.agreements), std::to_string(rep.band_disagreements),
           std::to_string(rep.outside_disagreements), std::to_string(rep.band_cases),
           std::to_string(rep.lp_members), FormatNumber(rep.max_duality_gap), FormatNumber(rep.max_bound_excess),
           Bool(rep.passed())});
  ctx.outcome.files.push_back("oracle.csv");
  ctx.outcome.summary["passed"] = rep.passed();
  if (!rep.passed()) ctx.outcome.exit_code = 1;
}

Json VersionsJson() {
  return Json{{"idset", IDSET_VERSION},
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)},
              {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                    std::to_string(NLOHMANN_JSON_VERSION_PATCH)},
              {"compiler", __VERSION__}};
}

}  // namespace

std::string_view ToString(Command command) {
  switch (command) {
    case Command::kScan:
      return "scan";
    case Command::kScanSequential:
      return "scan_sequential";
    case Command::kInfer:
      return "infer";
    case Command::kCoverage:
      return "coverage";
    case Command::kBench:
      return "bench";
    case Command::kOracleCheck:
      return "oracle_check";
  }
  return "scan";
}

Command CommandFromString(std::string_view name) {
  for (Command c : {Command::kScan, Command::kScanSequential, Command::kInfer, Command::kCoverage, Command::kBench,
                    Command::kOracleCheck}) {
    if (ToString(c) == name) return c;
  }
  throw ConfigError("unknown command: " + std::string(name));
}

nlohmann::ordered_json ScenarioToJson(const Scenario& s) {
  return Json{{"id", s.id},
              {"family", ToString(s.family)},
              {"theta_star", ThetaToJson(s.theta_star)},
              {"scan_coordinate", s.scan_coordinate},
              {"scan_values", s.scan_values},
              {"x_grid", s.x_grid},
              {"u_grid", s.u_grid},
              {"uniform_errors", s.uniform_errors},
              {"partial_effect", s.partial_effect},
              {"alpha_grid", s.alpha_grid},
              {"v_grid", s.v_grid},
              {"x21_grid", s.x21_grid},
              {"x22_grid", s.x22_grid},
              {"equal_errors", s.equal_errors},
              {"asf", s.asf},
              {"pin_x_marginal", s.pin_x_marginal}};
}

Scenario ScenarioFromJson(const nlohmann::ordered_json& j) {
  try {
    RejectUnknownKeys(j,
                      {"id", "family", "theta_star", "scan_coordinate", "scan_values", "x_grid", "u_grid",
                       "uniform_errors", "partial_effect", "alpha_grid", "v_grid", "x21_grid", "x22_grid",
                       "equal_errors", "asf", "pin_x_marginal"},
                      "scenario");
    Scenario s;
    Read(j, "id", s.id);
    if (j.contains("family")) s.family = FamilyFromString(j.at("family").get<std::string>());
    if (!j.contains("theta_star")) throw ConfigError("scenario needs theta_star");
    s.theta_star = ThetaFromJson(j.at("theta_star"));
    Read(j, "scan_coordinate", s.scan_coordinate);
    Read(j, "scan_values", s.scan_values);
    Read(j, "x_grid", s.x_grid);
    Read(j, "u_grid", s.u_grid);
    Read(j, "uniform_errors", s.uniform_errors);
    Read(j, "partial_effect", s.partial_effect);
    Read(j, "alpha_grid", s.alpha_grid);
    Read(j, "v_grid", s.v_grid);
    Read(j, "x21_grid", s.x21_grid);
    Read(j, "x22_grid", s.x22_grid);
    Read(j, "equal_errors", s.equal_errors);
    Read(j, "asf", s.asf);
    Read(j, "pin_x_marginal", s.pin_x_marginal);
    ValidateScenario(s);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario: ") + e.what());
  }
}

GridOverride ParseGridOverride(const nlohmann::ordered_json& j) {
  if (!j.is_object()) throw ConfigError("grid override must be a JSON object");
  GridOverride out;
  try {
    for (const auto& item : j.items()) {
      const Json& v = item.value();
      std::vector<double> values;
      if (v.is_array()) {
        values = v.get<std::vector<double>>();
      } else if (v.is_object()) {
        RejectUnknownKeys(v, {"lo", "hi", "step"}, "grid range");
        const double lo = v.at("lo").get<double>(), hi = v.at("hi").get<double>();
        const double step = v.at("step").get<double>();
        if (!(step > 0.0) || hi < lo) throw ConfigError("grid range needs lo <= hi and step > 0");
        values = LinearGrid(lo, hi, step);
      } else if (v.is_number()) {
        values = {v.get<double>()};
      } else {
        throw ConfigError("grid entry '" + item.key() + "' must be a list, a range or a number");
      }
      if (values.empty()) throw ConfigError("grid entry '" + item.key() + "' is empty");
      out.emplace_back(item.key(), std::move(values));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("grid override: ") + e.what());
  }
  return out;
}

nlohmann::ordered_json RunConfigToJson(const RunConfig& c) {
  Json j;
  j["command"] = ToString(c.command);
  if (c.scenario) {
    j["scenario"] = ScenarioToJson(*c.scenario);
  } else {
    j["scenario"] = c.scenario_id;
  }
  Json ts = Json::object();
  for (const auto& [name, value] : c.theta_star) ts[name] = value;
  j["theta_star"] = ts;
  j["true_targets"] = c.true_targets;
  if (c.p_star) j["p_star"] = *c.p_star;
  Json grid = Json::object();
  for (const auto& [name, values] : c.grid) grid[name] = values;
  j["grid"] = grid;
  j["output_dir"] = c.output_dir;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["timing"] = c.timing;
  j["lp"] = LpToJson(c.lp);
  j["ga"] = GaToJson(c.ga);
  j["q_step"] = c.q_step;
  j["sequential_exact"] = c.sequential_exact;
  j["alpha"] = c.alpha;
  j["n"] = c.n;
  j["boot"] = c.boot;
  j["reps"] = c.reps;
  if (c.lambda_n) j["lambda_n"] = *c.lambda_n;
  j["epsilon"] = c.epsilon;
  if (c.counts) j["counts"] = *c.counts;
  j["bench_reps"] = c.bench_reps;
  j["suite"] = c.suite;
  return j;
}

RunConfig RunConfigFromJson(const nlohmann::ordered_json& j) {
  try {
    RejectUnknownKeys(j,
                      {"command", "scenario", "theta_star", "true_targets", "p_star", "grid", "output_dir", "seed",
                       "threads", "timing", "lp", "ga", "q_step", "sequential_exact", "alpha", "n", "boot", "reps",
                       "lambda_n", "epsilon", "counts", "bench_reps", "suite"},
                      "config");
    RunConfig c;
    if (j.contains("command")) c.command = CommandFromString(j.at("command").get<std::string>());
    if (j.contains("scenario")) {
      const Json& s = j.at("scenario");
      if (s.is_string()) {
        c.scenario_id = s.get<std::string>();
      } else {
        c.scenario = ScenarioFromJson(s);
        c.scenario_id = c.scenario->id;
      }
    }
    if (j.contains("theta_star")) {
      const Json& ts = j.at("theta_star");
      if (!ts.is_object()) throw ConfigError("theta_star must be a JSON object");
      for (const auto& item : ts.items()) c.theta_star.emplace_back(item.key(), item.value().get<double>());
    }
    Read(j, "true_targets", c.true_targets);
    if (j.contains("p_star")) c.p_star = j.at("p_star").get<std::vector<double>>();
    if (j.contains("grid")) c.grid = ParseGridOverride(j.at("grid"));
    Read(j, "output_dir", c.output_dir);
    Read(j, "seed", c.seed);
    Read(j, "threads", c.threads);
    Read(j, "timing", c.timing);
    if (j.contains("lp")) c.lp = LpFromJson(j.at("lp"));
    if (j.contains("ga")) c.ga = GaFromJson(j.at("ga"));
    Read(j, "q_step", c.q_step);
    Read(j, "sequential_exact", c.sequential_exact);
    Read(j, "alpha", c.alpha);
    Read(j, "n", c.n);
    Read(j, "boot", c.boot);
    Read(j, "reps", c.reps);
    if (j.contains("lambda_n")) c.lambda_n = j.at("lambda_n").get<double>();
    Read(j, "epsilon", c.epsilon);
    if (j.contains("counts")) c.counts = j.at("counts").get<std::vector<long>>();
    Read(j, "bench_reps", c.bench_reps);
    Read(j, "suite", c.suite);

    if (!(c.alpha > 0.0 && c.alpha < 1.0)) throw ConfigError("alpha must lie in (0, 1)");
    if (c.n < 1 || c.boot < 1 || c.reps < 1 || c.bench_reps < 1) {
      throw ConfigError("n, boot, reps and bench_reps must be positive");
    }
    if (c.threads < 0) throw ConfigError("threads must be >= 0");
    if (!(c.q_step > 0.0 && c.q_step <= 1.0)) throw ConfigError("q_step must lie in (0, 1]");
    if (c.lambda_n && !(*c.lambda_n >= 0.0)) throw ConfigError("lambda_n must be >= 0");
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
  return RunConfigFromJson(j);
}

Scenario ResolveScenario(const RunConfig& c) {
  Scenario s;
  if (c.scenario) {
    s = *c.scenario;
  } else {
    try {
      s = ScenarioById(c.scenario_id);
    } catch (const UnknownDesign& e) {
      throw ConfigError(e.what());
    }
  }
  for (const auto& [name, value] : c.theta_star) {
    if (!s.theta_star.has(name)) throw ConfigError("theta_star override '" + name + "' is not a theta coordinate");
    s.theta_star = s.theta_star.with(name, value);
  }
  if (c.true_targets) s = WithTrueTargets(s);
  ValidateScenario(s);
  return s;
}

std::vector<ThetaPoint> ResolveGrid(const RunConfig& c, const Scenario& s) {
  if (!c.grid.empty()) return ProductGrid(s.theta_star, c.grid);
  if (c.command == Command::kCoverage) return {s.theta_star};
  return ThetaGrid(s);
}

Vector ResolvePStar(const RunConfig& c, const Scenario& s) {
  const Vector truth = TrueDistribution(s).p_star.values();
  if (!c.p_star) return truth;
  if (static_cast<Eigen::Index>(c.p_star->size()) != truth.size()) {
    throw ConfigError("p_star must have " + std::to_string(truth.size()) + " entries");
  }
  const Vector p = Eigen::Map<const Vector>(c.p_star->data(), truth.size());
  if (p.minCoeff() < 0.0 || std::abs(p.sum() - 1.0) > 1e-9) throw ConfigError("p_star must be a pmf");
  return p;
}

std::string FormatNumber(double value) {
  if (value == 0.0) return "0";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  if (std::isnan(value)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

std::string ConfigHash(const RunConfig& config) {
  // FNV-1a over the canonical dump.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : RunConfigToJson(config).dump()) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

RunOutcome Execute(const RunConfig& config) {
  if (config.threads > 0) omp_set_num_threads(config.threads);
  Context ctx{config, {}, {}, {}, config.output_dir, {}};
  ctx.outcome.summary = Json::object();
  if (config.command != Command::kOracleCheck) {
    ctx.scenario = ResolveScenario(config);
    ctx.grid = ResolveGrid(config, ctx.scenario);
    ctx.p_star = ResolvePStar(config, ctx.scenario);
  }
  std::error_code ec;
  std::filesystem::create_directories(ctx.dir, ec);
  if (ec) throw ConfigError("cannot create output directory " + config.output_dir + ": " + ec.message());
  spdlog::info("{} on {} over {} theta points", ToString(config.command),
               config.command == Command::kOracleCheck ? config.suite : ctx.scenario.id, ctx.grid.size());

  switch (config.command) {
    case Command::kScan:
      RunScan(ctx);
      break;
    case Command::kScanSequential:
      RunScanSequential(ctx);
      break;
    case Command::kInfer:
      RunInfer(ctx);
      break;
    case Command::kCoverage:
      RunCoverage(ctx);
      break;
    case Command::kBench:
      RunBench(ctx);
      break;
    case Command::kOracleCheck:
      RunOracleCheck(ctx);
      break;
  }

  Json manifest;
  manifest["config"] = RunConfigToJson(config);
  manifest["config_hash"] = ConfigHash(config);
  Json grid = Json::array();
  for (const auto& t : ctx.grid) grid.push_back(ThetaToJson(t));
  manifest["grid"] = grid;
  manifest["outputs"] = ctx.outcome.files;
  manifest["summary"] = ctx.outcome.summary;
  manifest["versions"] = VersionsJson();
  std::ofstream out(ctx.dir / "manifest.json", std::ios::binary);
  if (!out) throw ConfigError("cannot write manifest.json");
  out << manifest.dump(2) << '\n';
  ctx.outcome.files.push_back("manifest.json");
  return ctx.outcome;
}

int RunAndReport(const RunConfig& config) {
  try {
    const auto outcome = Execute(config);
    for (const auto& f : outcome.files) spdlog::info("wrote {}", (std::filesystem::path(config.output_dir) / f).string());
    return outcome.exit_code;
  } catch (const ConfigError& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const GridMismatch& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const UnknownSubpopulationMass& e) {
    spdlog::error("config error: {}", e.what());
    return 2;
  } catch (const SolverError& e) {
    spdlog::error("solver failure: {}", e.what());
    return 3;
  } catch (const NumericalBreakdown& e) {
    spdlog::error("solver failure: {}", e.what());
    return 3;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
}

void ConfigureLogging() {
  if (!spdlog::get("idset")) spdlog::set_default_logger(spdlog::stderr_color_mt("idset"));
  spdlog::set_level(spdlog::level::warn);
  if (const char* env = std::getenv("IDSET_LOG")) {
    const auto level = spdlog::level::from_str(env);
    if (level != spdlog::level::off || std::string_view(env) == "off") spdlog::set_level(level);
  }
  spdlog::set_pattern("[%l] %v");
}

}  // namespace idset
