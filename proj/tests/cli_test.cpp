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

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "doctest.h"
#include "idset/errors.hpp"
#include "idset/run.hpp"

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

fs::path TempDir(const std::string& tag) {
  const fs::path p = fs::temp_directory_path() / ("idset_cli_" + std::to_string(::getpid()) + "_" + tag);
  fs::remove_all(p);
  return p;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) out.push_back(line);
  return out;
}

std::set<std::string> Keys(const Json& j) {
  std::set<std::string> k;
  for (const auto& item : j.items()) k.insert(item.key());
  return k;
}

int RunBinary(const std::string& args) {
  const std::string cmd = std::string(IDSET_CLI) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

idset::RunConfig FullConfig() {
  idset::RunConfig c;
  c.command = idset::Command::kInfer;
  c.scenario = idset::ScenarioById("design2");
  c.scenario_id = c.scenario->id;
  c.theta_star = {{"beta2", -0.25}};
  c.true_targets = true;
  c.p_star = std::vector<double>(4, 0.25);
  c.grid = {{"beta2", {-1.0, -0.5}}, {"beta1", {1.0}}};
  c.output_dir = "out";
  c.seed = 18446744073709551615ULL;
  c.threads = 2;
  c.timing = true;
  c.lp.max_iterations = 77;
  c.ga.population = 9;
  c.q_step = 0.1;
  c.sequential_exact = false;
  c.alpha = 0.05;
  c.n = 123;
  c.boot = 45;
  c.reps = 6;
  c.lambda_n = 1.5;
  c.epsilon = 1e-5;
  c.counts = std::vector<long>{1, 2, 3};
  c.bench_reps = 4;
  c.suite = "tiny";
  return c;
}

}  // namespace

TEST_CASE("number format") {
  CHECK(idset::FormatNumber(0.0) == "0");
  CHECK(idset::FormatNumber(-0.0) == "0");
  CHECK(idset::FormatNumber(0.35) == "0.35");
  CHECK(idset::FormatNumber(1.0 / 3.0) == "0.333333333333");
  CHECK(idset::FormatNumber(-1.25e-7) == "-1.25e-07");
  CHECK(idset::FormatNumber(std::numeric_limits<double>::infinity()) == "inf");
}

TEST_CASE("config round-trips through JSON") {
  const idset::RunConfig def;
  CHECK(idset::RunConfigFromJson(idset::RunConfigToJson(def)) == def);
  const idset::RunConfig full = FullConfig();
  const Json j = idset::RunConfigToJson(full);
  CHECK(idset::RunConfigFromJson(j) == full);
  CHECK(idset::RunConfigFromJson(Json::parse(j.dump())) == full);
  CHECK(idset::ConfigHash(full) == idset::ConfigHash(idset::RunConfigFromJson(j)));
  CHECK(idset::ConfigHash(full) != idset::ConfigHash(def));

  for (const auto& id : idset::ScenarioIds()) {
    const auto s = idset::ScenarioById(id);
    CHECK(idset::ScenarioFromJson(idset::ScenarioToJson(s)) == s);
  }
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"comand", "scan"}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"command", "plot"}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"alpha", 1.5}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"n", "many"}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"ga", {{"population", 1}}}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::RunConfigFromJson(Json{{"lp", {{"tol", 1}}}}), idset::ConfigError);
  CHECK_THROWS_AS(idset::ParseGridOverride(Json{{"beta2", {{"lo", 1}, {"hi", 0}, {"step", 0.1}}}}),
                  idset::ConfigError);
  CHECK_THROWS_AS(idset::ParseGridOverride(Json::array()), idset::ConfigError);

  idset::RunConfig c;
  c.scenario_id = "design9";
  CHECK_THROWS_AS(idset::ResolveScenario(c), idset::ConfigError);
  c.scenario_id = "design1";
  c.theta_star = {{"gamma", 1.0}};
  CHECK_THROWS_AS(idset::ResolveScenario(c), idset::ConfigError);
  c.theta_star.clear();
  c.p_star = std::vector<double>{0.5, 0.5};
  CHECK_THROWS_AS(idset::ResolvePStar(c, idset::ResolveScenario(c)), idset::ConfigError);
}

TEST_CASE("grid override") {
  const auto g = idset::ParseGridOverride(Json::parse(R"({"tau": {"lo": 0, "hi": 1, "step": 0.25}, "beta2": 0.5})"));
  REQUIRE(g.size() == 2);
  CHECK(g[0].first == "tau");
  CHECK(g[0].second == std::vector<double>{0, 0.25, 0.5, 0.75, 1});
  CHECK(g[1].second == std::vector<double>{0.5});

  idset::RunConfig c;
  c.scenario_id = "design1";
  c.true_targets = true;
  c.grid = {{"beta2", {-1, 0}}, {"pe", {0.1, 0.2, 0.3}}};
  const auto s = idset::ResolveScenario(c);
  const auto grid = idset::ResolveGrid(c, s);
  REQUIRE(grid.size() == 6);
  CHECK(grid[1].at("beta2") == -1);
  CHECK(grid[1].at("pe") == 0.2);
  CHECK(grid[5].at("beta2") == 0);

  c.grid.clear();
  c.command = idset::Command::kCoverage;
  CHECK(idset::ResolveGrid(c, s) == std::vector<idset::ThetaPoint>{s.theta_star});
}

TEST_CASE("published schema lists exactly the accepted keys") {
  std::ifstream in(IDSET_SCHEMA);
  REQUIRE(in);
  const Json schema = Json::parse(in);
  CHECK(Keys(schema.at("properties")) == Keys(idset::RunConfigToJson(FullConfig())));
  CHECK(Keys(schema.at("$defs").at("scenario").at("properties")) ==
        Keys(idset::ScenarioToJson(idset::ScenarioById("dgp2"))));
  CHECK(Keys(schema.at("properties").at("ga").at("properties")) == Keys(idset::RunConfigToJson({}).at("ga")));
  CHECK(Keys(schema.at("properties").at("lp").at("properties")) == Keys(idset::RunConfigToJson({}).at("lp")));
}

TEST_CASE("design 1 scan artifacts") {
  idset::RunConfig c;
  c.scenario_id = "design1";
  c.output_dir = TempDir("scan").string();
  const auto out = idset::Execute(c);
  CHECK(out.exit_code == 0);
  const auto lines = Lines(Slurp(fs::path(c.output_dir) / "scan.csv"));
  REQUIRE(lines.size() == 202);
  CHECK(lines[0] == "theta_beta1,theta_beta2,T,member,time_ms");
  CHECK(lines[1] == "1,-1.5,0.125,0,NA");
  CHECK(lines[101] == "1,-0.5,0,1,NA");
  CHECK(Slurp(fs::path(c.output_dir) / "scan.csv").find('\r') == std::string::npos);
  // Endpoints were cross-checked against the lattice oracle when this file was made.
  CHECK(Slurp(fs::path(c.output_dir) / "scan.csv") == Slurp(IDSET_GOLDEN_DESIGN1));

  std::ifstream in(fs::path(c.output_dir) / "manifest.json");
  const Json manifest = Json::parse(in);
  CHECK(idset::RunConfigFromJson(manifest.at("config")) == c);
  CHECK(manifest.at("config_hash") == idset::ConfigHash(c));
  CHECK(manifest.at("grid").size() == 201);
  CHECK(manifest.at("summary").at("member_intervals").at("beta2") == Json::parse("[[-1.0, -0.01]]"));
  fs::remove_all(c.output_dir);
}

TEST_CASE("identical seeds give byte-identical csv files") {
  for (auto cmd : {idset::Command::kScan, idset::Command::kInfer}) {
    idset::RunConfig c;
    c.command = cmd;
    c.scenario_id = "design3";
    c.seed = 99;
    c.n = 500;
    c.boot = 40;
    c.grid = {{"beta2", {-1.0, -0.5, 0.0}}};
    const std::string file = cmd == idset::Command::kScan ? "scan.csv" : "inference.csv";
    std::string first;
    for (int rep = 0; rep < 2; ++rep) {
      c.output_dir = TempDir("det" + std::to_string(rep)).string();
      c.threads = rep + 1;
      idset::Execute(c);
      const std::string text = Slurp(fs::path(c.output_dir) / file);
      if (rep == 0) first = text;
      CHECK(text == first);
      fs::remove_all(c.output_dir);
    }
    CHECK(!first.empty());
  }
}

TEST_CASE("sequential scan columns") {
  idset::RunConfig c;
  c.command = idset::Command::kScanSequential;
  c.scenario_id = "dgp2";
  c.q_step = 0.25;
  c.ga.population = 8;
  c.ga.generations = 3;
  c.grid = {{"beta2", {-2.0, -0.5}}};
  c.output_dir = TempDir("seq").string();
  idset::Execute(c);
  const auto lines = Lines(Slurp(fs::path(c.output_dir) / "scan.csv"));
  REQUIRE(lines.size() == 3);
  CHECK(lines[0] ==
        "theta_beta1,theta_beta2,T_strict,T_sequential,T_sequential_exact,member_strict,member_sequential,"
        "member_sequential_exact,time_ms");
  CHECK(lines[1].rfind("2,-2,0.0227272727273,", 0) == 0);
  fs::remove_all(c.output_dir);
}

TEST_CASE("binary exit codes") {
  const std::string dir = TempDir("bin").string();
  CHECK(RunBinary("scan --scenario design1 --output " + dir) == 0);
  CHECK(Lines(Slurp(fs::path(dir) / "scan.csv")).size() == 202);
  CHECK(RunBinary("bench --scenario design1 --bench-reps 1 --output " + dir) == 0);
  CHECK(Lines(Slurp(fs::path(dir) / "bench.csv"))[0] == "scenario,L,M,R,mean_ms,p50_ms,p95_ms");
  CHECK(RunBinary("oracle_check --suite tiny --output " + dir) == 0);
  CHECK(RunBinary("scan --scenario nowhere --output " + dir) == 2);
  CHECK(RunBinary("scan --alpha 2 --output " + dir) == 2);
  CHECK(RunBinary("scan --unknown-flag") == 2);
  CHECK(RunBinary("scan --config " + dir + "/missing.json") == 2);

  // A one-iteration cap makes the simplex give up.
  std::ofstream(fs::path(dir) / "cap.json") << R"({"scenario": "design4", "lp": {"max_iterations": 1}})";
  CHECK(RunBinary("scan --config " + dir + "/cap.json --output " + dir) == 3);

  // Flags override the config file.
  std::ofstream(fs::path(dir) / "cfg.json") << R"({"scenario": "design2", "grid": {"beta2": [0.0]}})";
  CHECK(RunBinary("scan --config " + dir + "/cfg.json --scenario design1 --output " + dir) == 0);
  std::ifstream in(fs::path(dir) / "manifest.json");
  const Json manifest = Json::parse(in);
  CHECK(manifest.at("config").at("scenario") == "design1");
  CHECK(manifest.at("grid").size() == 1);
  fs::remove_all(dir);
}
