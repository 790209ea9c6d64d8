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

// Sample analog of the discrepancy, the bootstrap comparison statistic,
// critical values, confidence sets and a Monte Carlo coverage harness.

#include <cstdint>
#include <optional>
#include <vector>

#include "idset/discrepancy.hpp"
#include "idset/model.hpp"

namespace idset {

struct Sample {
  std::vector<long> counts;  // per observable point
  long n = 0;

  // Throws std::invalid_argument unless counts are >= 0 and sum to n >= 1.
  static Sample FromCounts(std::vector<long> counts);
};

Vector EmpiricalPmf(const Sample& sample);

// sqrt(n) / log(n), capped at sqrt(n) for n < 3.
double DefaultLambda(long n);

// T computed on p_hat instead of p*; multiply by sqrt(n) for the statistic.
DiscrepancyResult ComputeTn(const FiniteModel& model, const Vector& p_hat, const lp::Options& options = {});

// sup over phi in [0,1]^L of sqrt(n) phi'(p_boot - p_hat) + lambda_n min(eta(phi), 0),
// where eta(phi) = phi'p_hat - max over the model of phi'Ctilde p. Solved as
// one LP with R + L rows.
double BootstrapStatistic(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                          double lambda_n, const lp::Options& options = {});
// The same value from the (phi, t, lambda) program with one row per latent
// point; for cross-checks on small models.
double BootstrapStatisticDirect(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                                double lambda_n, const lp::Options& options = {});

// inf{x : fraction of values <= x is at least 1 - alpha}.
double EmpiricalQuantile(std::vector<double> values, double alpha);

struct InferenceOptions {
  double alpha = 0.1;
  int boot = 300;
  std::uint64_t seed = 0;
  double epsilon = 1e-6;
  std::optional<double> lambda_n;  // DefaultLambda(n) when empty
  int threads = 0;
  lp::Options lp;
};

struct InferenceResult {
  double sqrt_n_Tn = 0.0;
  double lambda_n = 0.0;
  std::vector<double> boot_stats;
  double c_hat = 0.0;
  double epsilon_slack = 0.0;
  bool reject = false;
};

// Bootstrap test of one theta. Draw b uses the stream (seed, stream, b).
InferenceResult TestTheta(const FiniteModel& model, const Sample& sample, const InferenceOptions& options,
                          std::uint64_t stream = 0);
InferenceResult TestThetaSerial(const FiniteModel& model, const Sample& sample, const InferenceOptions& options,
                                std::uint64_t stream = 0);

struct ConfidenceSet {
  std::vector<ThetaPoint> grid;
  std::vector<InferenceResult> results;
  std::vector<bool> included;
};

// Grid point i is tested with stream i.
ConfidenceSet ComputeConfidenceSet(const ModelFactory& factory, const std::vector<ThetaPoint>& grid,
                                   const Sample& sample, const InferenceOptions& options);

// n draws from p under the stream (seed, stream, index).
Sample DrawSample(const Vector& p, long n, std::uint64_t seed, std::uint64_t stream, std::uint64_t index);

struct CoverageResult {
  int reps = 0;
  int covered = 0;
  double coverage() const { return reps > 0 ? static_cast<double>(covered) / reps : 0.0; }
};

// Fraction of replications, each a fresh sample of size n from p_true, in
// which theta is not rejected.
CoverageResult MonteCarloCoverage(const FiniteModel& model, const Vector& p_true, long n, int reps,
                                  const InferenceOptions& options);

}  // namespace idset
