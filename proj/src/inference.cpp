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

#include "idset/inference.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "idset/errors.hpp"
#include "idset/random.hpp"

namespace idset {

namespace {

constexpr std::uint64_t kSampleStream = 0x5a4d504c45ULL;
constexpr std::uint64_t kCoverageStream = 0x434f564552ULL;

void CheckInputs(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot) {
  model.Validate();
  if (p_hat.size() != model.L() || p_boot.size() != model.L()) {
    throw std::invalid_argument("pmf length differs from the observable support");
  }
}

double Solved(const lp::Solution& sol, const char* what) {
  if (!sol.optimal()) throw SolverError(std::string(what) + " reported " + std::string(lp::ToString(sol.status)));
  return sol.objective_value;
}

}  // namespace

Sample Sample::FromCounts(std::vector<long> counts) {
  Sample s;
  for (long c : counts) {
    if (c < 0) throw std::invalid_argument("negative count");
    s.n += c;
  }
  if (s.n < 1) throw std::invalid_argument("sample needs at least one observation");
  s.counts = std::move(counts);
  return s;
}

Vector EmpiricalPmf(const Sample& sample) {
  if (sample.n < 1) throw std::invalid_argument("empty sample");
  Vector p(static_cast<int>(sample.counts.size()));
  for (int i = 0; i < p.size(); ++i) p[i] = static_cast<double>(sample.counts[i]) / static_cast<double>(sample.n);
  return p;
}

double DefaultLambda(long n) {
  if (n < 1) throw std::invalid_argument("n must be positive");
  const double rn = std::sqrt(static_cast<double>(n));
  return rn / std::max(std::log(static_cast<double>(n)), 1.0);
}

DiscrepancyResult ComputeTn(const FiniteModel& model, const Vector& p_hat, const lp::Options& options) {
  return ComputeT(model, p_hat, options);
}

double BootstrapStatistic(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                          double lambda_n, const lp::Options& options) {
  CheckInputs(model, p_hat, p_boot);
  const int L = model.L(), M = model.M(), R = model.R();
  const Vector g = std::sqrt(static_cast<double>(n)) * (p_boot - p_hat);

  // Variables (pi, s, w): min sum s subject to A pi - b w = 0,
  // Ctilde pi + s - p_hat w >= g, 0 <= w <= lambda_n.
  lp::Problem prob = lp::Problem::NonNegative(M + L + 1);
  prob.objective.segment(M, L).setConstant(-1.0);
  prob.upper_bounds[M + L] = lambda_n;
  std::vector<Eigen::Triplet<double>> eq;
  const SparseMatrix& A = model.constraints.A();
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) eq.emplace_back(it.row(), it.col(), it.value());
  }
  for (int r = 0; r < R; ++r) {
    if (model.constraints.b()[r] != 0.0) eq.emplace_back(r, M + L, -model.constraints.b()[r]);
  }
  prob.eq_matrix.resize(R, M + L + 1);
  prob.eq_matrix.setFromTriplets(eq.begin(), eq.end());
  prob.eq_rhs = Vector::Zero(R);

  std::vector<Eigen::Triplet<double>> in;
  for (int m = 0; m < M; ++m) in.emplace_back(model.pushforward.target(m), m, -1.0);
  for (int l = 0; l < L; ++l) {
    in.emplace_back(l, M + l, -1.0);
    if (p_hat[l] != 0.0) in.emplace_back(l, M + L, p_hat[l]);
  }
  prob.ineq_matrix.resize(L, M + L + 1);
  prob.ineq_matrix.setFromTriplets(in.begin(), in.end());
  prob.ineq_rhs = -g;

  return -Solved(lp::Solve(prob, options), "bootstrap LP");
}

double BootstrapStatisticDirect(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                                double lambda_n, const lp::Options& options) {
  CheckInputs(model, p_hat, p_boot);
  const int L = model.L(), M = model.M(), R = model.R();
  const Vector g = std::sqrt(static_cast<double>(n)) * (p_boot - p_hat);

  // Variables (phi in [0,1], t <= 0, lambda free).
  const int t = L;
  lp::Problem prob = lp::Problem::NonNegative(L + 1 + R);
  prob.objective.head(L) = g;
  prob.objective[t] = lambda_n;
  for (int l = 0; l < L; ++l) prob.upper_bounds[l] = 1.0;
  prob.lower_bounds[t].reset();
  prob.upper_bounds[t] = 0.0;
  for (int r = 0; r < R; ++r) prob.lower_bounds[L + 1 + r].reset();

  // Row 0: t - phi'p_hat - lambda'b <= 0. Rows 1..M: A'lambda + Ctilde'phi <= 0.
  std::vector<Eigen::Triplet<double>> in;
  in.emplace_back(0, t, 1.0);
  for (int l = 0; l < L; ++l) {
    if (p_hat[l] != 0.0) in.emplace_back(0, l, -p_hat[l]);
  }
  for (int r = 0; r < R; ++r) {
    if (model.constraints.b()[r] != 0.0) in.emplace_back(0, L + 1 + r, -model.constraints.b()[r]);
  }
  const SparseMatrix& A = model.constraints.A();
  for (int k = 0; k < A.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(A, k); it; ++it) in.emplace_back(1 + it.col(), L + 1 + it.row(), it.value());
  }
  for (int m = 0; m < M; ++m) in.emplace_back(1 + m, model.pushforward.target(m), 1.0);
  prob.ineq_matrix.resize(1 + M, L + 1 + R);
  prob.ineq_matrix.setFromTriplets(in.begin(), in.end());
  prob.ineq_rhs = Vector::Zero(1 + M);

  return Solved(lp::Solve(prob, options), "direct bootstrap LP");
}

double EmpiricalQuantile(std::vector<double> values, double alpha) {
  if (values.empty()) throw std::invalid_argument("no values");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  std::sort(values.begin(), values.end());
  const double b = static_cast<double>(values.size());
  // Smallest k with k / B >= 1 - alpha; the slack absorbs rounding in (1 - alpha) B.
  long k = static_cast<long>(std::ceil((1.0 - alpha) * b - 1e-9));
  k = std::clamp(k, 1L, static_cast<long>(values.size()));
  return values[k - 1];
}

namespace {

InferenceResult Finish(const FiniteModel& model, const Sample& sample, const InferenceOptions& options,
                       std::vector<double> stats, double lambda_n) {
  InferenceResult r;
  r.lambda_n = lambda_n;
  const double tn = ComputeTn(model, EmpiricalPmf(sample), options.lp).T;
  r.sqrt_n_Tn = std::sqrt(static_cast<double>(sample.n)) * tn;
  r.c_hat = EmpiricalQuantile(stats, options.alpha);
  r.epsilon_slack = options.epsilon;
  r.reject = r.sqrt_n_Tn > r.c_hat + r.epsilon_slack;
  r.boot_stats = std::move(stats);
  return r;
}

double OneDraw(const FiniteModel& model, const Sample& sample, const Vector& p_hat, const InferenceOptions& options,
               double lambda_n, std::uint64_t stream, int b) {
  auto rng = StreamRng(options.seed, stream, static_cast<std::uint64_t>(b));
  const auto counts = Multinomial(rng, sample.n, p_hat);
  Vector p_boot(p_hat.size());
  for (int i = 0; i < p_boot.size(); ++i) p_boot[i] = static_cast<double>(counts[i]) / sample.n;
  return BootstrapStatistic(model, p_hat, p_boot, sample.n, lambda_n, options.lp);
}

void CheckOptions(const InferenceOptions& options) {
  if (options.boot < 1) throw std::invalid_argument("bootstrap count must be positive");
  if (!(options.alpha > 0.0 && options.alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
}

}  // namespace

InferenceResult TestTheta(const FiniteModel& model, const Sample& sample, const InferenceOptions& options,
                          std::uint64_t stream) {
  CheckOptions(options);
  const Vector p_hat = EmpiricalPmf(sample);
  const double lambda_n = options.lambda_n.value_or(DefaultLambda(sample.n));
  std::vector<double> stats(options.boot);
  std::exception_ptr failure;
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 4) num_threads(threads)
  for (int b = 0; b < options.boot; ++b) {
    try {
      stats[b] = OneDraw(model, sample, p_hat, options, lambda_n, stream, b);
    } catch (...) {
#pragma omp critical(idset_boot_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return Finish(model, sample, options, std::move(stats), lambda_n);
}

InferenceResult TestThetaSerial(const FiniteModel& model, const Sample& sample, const InferenceOptions& options,
                                std::uint64_t stream) {
  CheckOptions(options);
  const Vector p_hat = EmpiricalPmf(sample);
  const double lambda_n = options.lambda_n.value_or(DefaultLambda(sample.n));
  std::vector<double> stats(options.boot);
  for (int b = 0; b < options.boot; ++b) stats[b] = OneDraw(model, sample, p_hat, options, lambda_n, stream, b);
  return Finish(model, sample, options, std::move(stats), lambda_n);
}

ConfidenceSet ComputeConfidenceSet(const ModelFactory& factory, const std::vector<ThetaPoint>& grid,
                                   const Sample& sample, const InferenceOptions& options) {
  ConfidenceSet cs;
  cs.grid = grid;
  for (size_t i = 0; i < grid.size(); ++i) {
    cs.results.push_back(TestTheta(factory(grid[i]), sample, options, i));
    cs.included.push_back(!cs.results.back().reject);
  }
  return cs;
}

Sample DrawSample(const Vector& p, long n, std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  auto rng = StreamRng(seed, kSampleStream ^ stream, index);
  return Sample::FromCounts(Multinomial(rng, n, p));
}

CoverageResult MonteCarloCoverage(const FiniteModel& model, const Vector& p_true, long n, int reps,
                                  const InferenceOptions& options) {
  CoverageResult out;
  out.reps = reps;
  for (int r = 0; r < reps; ++r) {
    const Sample sample = DrawSample(p_true, n, options.seed, 0, static_cast<std::uint64_t>(r));
    const auto res = TestTheta(model, sample, options, kCoverageStream + static_cast<std::uint64_t>(r));
    if (!res.reject) ++out.covered;
  }
  return out;
}

}  // namespace idset
