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

#include <benchmark/benchmark.h>

#include "idset/catalog.hpp"
#include "idset/discrepancy.hpp"
#include "idset/inference.hpp"
#include "idset/sequential.hpp"

namespace {

using idset::Vector;

struct ScanFixture {
  idset::Scenario s = idset::ScenarioById("design3");
  idset::ModelFactory factory = idset::MakeFactory(s);
  std::vector<idset::ThetaPoint> grid = idset::ThetaGrid(s);
  Vector p = idset::TrueDistribution(s).p_star.values();
};

void BM_Scan(benchmark::State& state) {
  ScanFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::Scan(f.factory, f.grid, f.p));
}
void BM_ScanSerial(benchmark::State& state) {
  ScanFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::ScanSerial(f.factory, f.grid, f.p));
}

struct TestFixture {
  idset::Scenario s = idset::ScenarioById("design1");
  idset::FiniteModel model = idset::AssembleModel(s, s.theta_star);
  idset::Sample sample = idset::DrawSample(idset::TrueDistribution(s).p_star.values(), 2000, 1, 0, 0);
  idset::InferenceOptions options;
  TestFixture() { options.boot = 300; }
};

void BM_TestTheta(benchmark::State& state) {
  TestFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::TestTheta(f.model, f.sample, f.options));
}
void BM_TestThetaSerial(benchmark::State& state) {
  TestFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::TestThetaSerial(f.model, f.sample, f.options));
}

struct GaFixture {
  idset::Scenario s = idset::BuildDgp2();
  Vector p = idset::TrueDistribution(s).p_star.values();
  idset::ThetaPoint theta = s.theta_star.with("beta2", 2.0);
  idset::GaSettings ga;
  GaFixture() {
    ga.population = 32;
    ga.generations = 20;
  }
};

void BM_GeneticSearch(benchmark::State& state) {
  GaFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::ComputeTSequential(f.s, f.theta, f.p, f.ga, 0.25));
}
void BM_GeneticSearchSerial(benchmark::State& state) {
  GaFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::ComputeTSequentialSerial(f.s, f.theta, f.p, f.ga, 0.25));
}
void BM_SequentialExact(benchmark::State& state) {
  GaFixture f;
  for (auto _ : state) benchmark::DoNotOptimize(idset::ComputeTSequentialExact(f.s, f.theta, f.p, 0.05));
}

// One discrepancy evaluation at theta* + (0, 0.25).
void BM_Evaluate(benchmark::State& state, const std::string& id) {
  const auto s = idset::ScenarioById(id);
  const auto theta = s.theta_star.with("beta2", s.theta_star.at("beta2") + 0.25);
  const auto model = idset::AssembleModel(s, theta);
  const Vector p = idset::TrueDistribution(s).p_star.values();
  for (auto _ : state) benchmark::DoNotOptimize(idset::ComputeT(model, p));
  state.counters["M"] = model.M();
  state.counters["R"] = model.R();
}

}  // namespace

BENCHMARK(BM_Scan)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ScanSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TestTheta)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_TestThetaSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneticSearch)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GeneticSearchSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SequentialExact)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, design1, std::string("design1"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, design4, std::string("design4"))->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Evaluate, dgp1_p4_thin, std::string("dgp1_p4_thin"))->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
