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

// Linear programming core: a bounded-variable two-phase revised primal simplex.
//
// Problems are stated as
//
//   maximize    c'x
//   subject to  E x  = e
//               G x <= g
//               l <= x <= u   (each bound optional)
//
// The solver keeps a dense explicit basis inverse updated by rank-one
// eliminations and reinverted by LU periodically, so the cost per iteration
// scales with the number of rows rather than the number of columns. Callers
// with many columns and few rows get the cheap side automatically.

#include <optional>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace idset::lp {

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Vector = Eigen::VectorXd;

enum class Status { kOptimal, kInfeasible, kUnbounded };

std::string_view ToString(Status status);

struct Problem {
  Vector objective;  // maximized
  SparseMatrix eq_matrix;
  Vector eq_rhs;
  SparseMatrix ineq_matrix;  // rows mean a.x <= r
  Vector ineq_rhs;
  std::vector<std::optional<double>> lower_bounds;
  std::vector<std::optional<double>> upper_bounds;

  // An empty problem over `num_vars` variables, all bounded below by zero.
  static Problem NonNegative(int num_vars);

  int num_vars() const { return static_cast<int>(objective.size()); }
  int num_eq() const { return static_cast<int>(eq_rhs.size()); }
  int num_ineq() const { return static_cast<int>(ineq_rhs.size()); }

  // Throws std::invalid_argument when dimensions or bounds are inconsistent.
  void Validate() const;
};

// Convenience for small hand-written problems.
SparseMatrix FromDense(const Eigen::MatrixXd& dense);

struct Options {
  double feasibility_tol = 1e-9;
  double optimality_tol = 1e-9;
  double pivot_tol = 1e-9;       // smallest pivot accepted in the ratio test
  double breakdown_tol = 1e-12;  // below this even Bland gives up
  // Reinversion cadence; 0 picks a default from the row count.
  int refactor_interval = 0;
  // 0 means 50 * (rows + cols) + 10000.
  long max_iterations = 0;

  bool operator==(const Options&) const = default;
};

struct Solution {
  Status status = Status::kInfeasible;
  // Optimal point; for kUnbounded the improving ray.
  Vector primal;
  // One multiplier per row, equality rows first. For a maximization with
  // a.x <= r rows the inequality multipliers are nonnegative.
  Vector dual;
  // c - A'y for the structural variables.
  Vector reduced_costs;
  // kInfeasible: Farkas row multipliers. kUnbounded: improving ray.
  Vector certificate;
  double objective_value = 0.0;
  double dual_objective = 0.0;
  long iterations = 0;
  bool used_bland = false;

  bool optimal() const { return status == Status::kOptimal; }
  double duality_gap() const { return std::abs(objective_value - dual_objective); }
};

Solution Solve(const Problem& problem, const Options& options = {});

// Diagnostics used by tests and the acceptance suite.
struct Certification {
  double max_primal_violation = 0.0;  // rows and bounds
  double max_dual_violation = 0.0;    // sign conditions on y and c - A'y
  double max_complementarity = 0.0;
  double duality_gap = 0.0;
};

Certification Certify(const Problem& problem, const Solution& solution);

}  // namespace idset::lp
