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

#include "idset/discrepancy.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <limits>
#include <set>
#include <stdexcept>

#include <omp.h>

#include "idset/errors.hpp"

namespace idset {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void CheckPmf(const Vector& p_star, int L) {
  if (p_star.size() != L) throw std::invalid_argument("p_star length differs from the observable support");
  if (p_star.minCoeff() < -1e-10 || std::abs(p_star.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("p_star is not a pmf");
  }
}

DiscrepancyResult Excluded(int L, int R) {
  DiscrepancyResult r;
  r.T = std::numeric_limits<double>::infinity();
  r.phi_star = Vector::Zero(L);
  r.dual_lambda = Vector::Zero(R);
  r.member = false;
  r.status = lp::Status::kInfeasible;
  return r;
}

}  // namespace

Eigen::MatrixXd AssembleGameMatrix(const Vector& p_star, const PushforwardMatrix& pushforward) {
  if (p_star.size() != pushforward.rows()) throw std::invalid_argument("p_star length mismatch");
  Eigen::MatrixXd out = p_star.replicate(1, pushforward.cols());
  for (int m = 0; m < pushforward.cols(); ++m) out(pushforward.target(m), m) -= 1.0;
  return out;
}

DiscrepancyResult ComputeT(const FiniteModel& model, const Vector& p_star, const lp::Options& options) {
  const auto start = Clock::now();
  model.Validate();
  const int L = model.L(), M = model.M(), R = model.R();
  CheckPmf(p_star, L);

  // Variables (p, s) >= 0; maximize -sum s subject to A p = b and
  // -Ctilde p - s <= -p*.
  lp::Problem prob = lp::Problem::NonNegative(M + L);
  prob.objective.tail(L).setConstant(-1.0);
  prob.eq_matrix = model.constraints.A();
  prob.eq_matrix.conservativeResize(R, M + L);
  prob.eq_rhs = model.constraints.b();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(M + L);
  for (int m = 0; m < M; ++m) trips.emplace_back(model.pushforward.target(m), m, -1.0);
  for (int l = 0; l < L; ++l) trips.emplace_back(l, M + l, -1.0);
  prob.ineq_matrix.resize(L, M + L);
  prob.ineq_matrix.setFromTriplets(trips.begin(), trips.end());
  prob.ineq_rhs = -p_star;

  const lp::Solution sol = lp::Solve(prob, options);
  if (sol.status == lp::Status::kInfeasible) {
    auto r = Excluded(L, R);
    r.iterations = sol.iterations;
    r.solve_ms = ElapsedMs(start);
    return r;
  }
  if (sol.status != lp::Status::kOptimal) throw SolverError("discrepancy LP reported " + std::string(lp::ToString(sol.status)));

  DiscrepancyResult r;
  r.status = sol.status;
  r.T = -sol.objective_value > 0.0 ? -sol.objective_value : 0.0;
  r.phi_star = sol.dual.tail(L).cwiseMax(0.0).cwiseMin(1.0);
  r.dual_lambda = -sol.dual.head(R);
  r.dual_lambda[model.constraints.simplex_row()] += p_star.dot(r.phi_star);
  r.member = r.T <= kMembershipTol;
  r.duality_gap = sol.duality_gap();
  r.iterations = sol.iterations;
  r.solve_ms = ElapsedMs(start);
  return r;
}

DiscrepancyResult ComputeTDirect(const FiniteModel& model, const Vector& p_star, double phi_upper,
                                 const lp::Options& options) {
  const auto start = Clock::now();
  model.Validate();
  const int L = model.L(), M = model.M(), R = model.R();
  CheckPmf(p_star, L);
  if (!(phi_upper > 0.0)) throw std::invalid_argument("phi_upper must be positive");

  // Variables (lambda free, phi in [0, c]); rows A'lambda - C'phi <= 0.
  lp::Problem prob = lp::Problem::NonNegative(R + L);
  prob.objective.head(R) = model.constraints.b();
  for (int r = 0; r < R; ++r) prob.lower_bounds[r].reset();
  for (int l = 0; l < L; ++l) prob.upper_bounds[R + l] = phi_upper;
  const Eigen::MatrixXd game = AssembleGameMatrix(p_star, model.pushforward);
  const SparseMatrix at = model.constraints.A().transpose();
  std::vector<Eigen::Triplet<double>> trips;
  for (int k = 0; k < at.outerSize(); ++k) {
    for (SparseMatrix::InnerIterator it(at, k); it; ++it) trips.emplace_back(it.row(), it.col(), it.value());
  }
  for (int m = 0; m < M; ++m) {
    for (int l = 0; l < L; ++l) {
      if (game(l, m) != 0.0) trips.emplace_back(m, R + l, -game(l, m));
    }
  }
  prob.ineq_matrix.resize(M, R + L);
  prob.ineq_matrix.setFromTriplets(trips.begin(), trips.end());
  prob.ineq_rhs = Vector::Zero(M);

  const lp::Solution sol = lp::Solve(prob, options);
  if (sol.status == lp::Status::kUnbounded) {
    auto r = Excluded(L, R);
    r.status = sol.status;
    r.iterations = sol.iterations;
    r.solve_ms = ElapsedMs(start);
    return r;
  }
  if (sol.status != lp::Status::kOptimal) throw SolverError("direct discrepancy LP reported " + std::string(lp::ToString(sol.status)));
  DiscrepancyResult r;
  r.status = sol.status;
  r.T = sol.objective_value > 0.0 ? sol.objective_value : 0.0;
  r.dual_lambda = sol.primal.head(R);
  r.phi_star = sol.primal.tail(L);
  r.member = r.T <= kMembershipTol * phi_upper;
  r.duality_gap = sol.duality_gap();
  r.iterations = sol.iterations;
  r.solve_ms = ElapsedMs(start);
  return r;
}

DiscrepancyResult ComputeTExtremal(const Vector& p_star, const std::vector<Vector>& extreme_points,
                                   const lp::Options& options) {
  const auto start = Clock::now();
  if (extreme_points.empty()) throw std::invalid_argument("no extreme points supplied");
  const int L = static_cast<int>(p_star.size());
  CheckPmf(p_star, L);
  const int n = static_cast<int>(extreme_points.size());

  // Variables (z free, phi in [0,1]); rows z - phi'(p* - p_i) <= 0.
  lp::Problem prob = lp::Problem::NonNegative(1 + L);
  prob.objective[0] = 1.0;
  prob.lower_bounds[0].reset();
  for (int l = 0; l < L; ++l) prob.upper_bounds[1 + l] = 1.0;
  std::vector<Eigen::Triplet<double>> trips;
  for (int i = 0; i < n; ++i) {
    if (extreme_points[i].size() != L) throw std::invalid_argument("extreme point length mismatch");
    trips.emplace_back(i, 0, 1.0);
    for (int l = 0; l < L; ++l) {
      const double d = p_star[l] - extreme_points[i][l];
      if (d != 0.0) trips.emplace_back(i, 1 + l, -d);
    }
  }
  prob.ineq_matrix.resize(n, 1 + L);
  prob.ineq_matrix.setFromTriplets(trips.begin(), trips.end());
  prob.ineq_rhs = Vector::Zero(n);

  const lp::Solution sol = lp::Solve(prob, options);
  if (sol.status != lp::Status::kOptimal) throw SolverError("extremal LP reported " + std::string(lp::ToString(sol.status)));
  DiscrepancyResult r;
  r.T = sol.objective_value > 0.0 ? sol.objective_value : 0.0;
  r.phi_star = sol.primal.tail(L);
  r.member = r.T <= kMembershipTol;
  r.duality_gap = sol.duality_gap();
  r.iterations = sol.iterations;
  r.solve_ms = ElapsedMs(start);
  return r;
}

std::vector<MemberInterval> MemberIntervals(const std::vector<ThetaPoint>& grid,
                                            const std::vector<DiscrepancyResult>& results,
                                            const std::string& coordinate) {
  if (grid.size() != results.size()) throw std::invalid_argument("grid and results differ in length");
  std::vector<MemberInterval> out;
  const int n = static_cast<int>(grid.size());
  for (int i = 0; i < n; ++i) {
    if (!results[i].member) continue;
    const double v = grid[i].at(coordinate);
    if (!out.empty() && out.back().last == i - 1) {
      out.back().last = i;
      out.back().lo = std::min(out.back().lo, v);
      out.back().hi = std::max(out.back().hi, v);
    } else {
      out.push_back({v, v, i, i});
    }
  }
  return out;
}

namespace {

ThetaScan Summarize(std::vector<ThetaPoint> grid, std::vector<DiscrepancyResult> results) {
  ThetaScan scan;
  scan.grid = std::move(grid);
  scan.results = std::move(results);
  if (scan.grid.empty()) return scan;
  for (const auto& name : scan.grid.front().names()) {
    std::set<double> values;
    for (const auto& t : scan.grid) values.insert(t.at(name));
    if (values.size() > 1 || scan.grid.size() == 1) {
      scan.summary[name] = MemberIntervals(scan.grid, scan.results, name);
    }
  }
  return scan;
}

}  // namespace

ThetaScan Scan(const ModelFactory& factory, const std::vector<ThetaPoint>& grid, const Vector& p_star,
               const ScanOptions& options) {
  if (grid.empty()) throw std::invalid_argument("empty theta grid");
  const int n = static_cast<int>(grid.size());
  std::vector<DiscrepancyResult> results(n);
  std::exception_ptr failure;
  const int threads = options.threads > 0 ? options.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (int i = 0; i < n; ++i) {
    try {
      results[i] = ComputeT(factory(grid[i]), p_star, options.lp);
    } catch (...) {
#pragma omp critical(idset_scan_failure)
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return Summarize(grid, std::move(results));
}

ThetaScan ScanSerial(const ModelFactory& factory, const std::vector<ThetaPoint>& grid, const Vector& p_star,
                     const ScanOptions& options) {
  if (grid.empty()) throw std::invalid_argument("empty theta grid");
  std::vector<DiscrepancyResult> results;
  results.reserve(grid.size());
  for (const auto& theta : grid) results.push_back(ComputeT(factory(theta), p_star, options.lp));
  return Summarize(grid, std::move(results));
}

}  // namespace idset
