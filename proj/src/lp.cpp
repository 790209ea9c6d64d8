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

#include "idset/lp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "idset/errors.hpp"

namespace idset::lp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using RowMajorMatrix =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column kinds in the working problem: structural, then one slack per
// inequality row, then one artificial per row.
class RevisedSimplex {
 public:
  RevisedSimplex(const Problem& problem, const Options& options)
      : opt_(options),
        n_(problem.num_vars()),
        n_eq_(problem.num_eq()),
        n_ineq_(problem.num_ineq()),
        m_(n_eq_ + n_ineq_) {
    BuildRows(problem);
    ncols_ = n_ + n_ineq_ + m_;
    lower_.assign(ncols_, 0.0);
    upper_.assign(ncols_, kInf);
    cost_.assign(ncols_, 0.0);
    x_.assign(ncols_, 0.0);
    basic_pos_.assign(ncols_, -1);
    art_sign_.assign(m_, 1.0);
    for (int j = 0; j < n_; ++j) {
      lower_[j] = problem.lower_bounds[j].value_or(-kInf);
      upper_[j] = problem.upper_bounds[j].value_or(kInf);
      objective_[j] = problem.objective[j];
    }
    refactor_interval_ = opt_.refactor_interval > 0
                             ? opt_.refactor_interval
                             : (m_ <= 1500 ? 100 : 0);
    max_iterations_ = opt_.max_iterations > 0
                          ? opt_.max_iterations
                          : 50L * (m_ + ncols_) + 10000L;
    stall_limit_ = 5L * (m_ + n_ + n_ineq_);
  }

  Solution Run() {
    Solution sol;
    InitialBasis();
    // Phase 1: drive artificials with positive value to zero.
    std::fill(cost_.begin(), cost_.end(), 0.0);
    bool need_phase1 = false;
    for (int i = 0; i < m_; ++i) {
      const int a = ArtificialCol(i);
      if (basic_pos_[a] >= 0 && x_[a] > 0.0) {
        cost_[a] = -1.0;
        need_phase1 = true;
      }
    }
    if (need_phase1) {
      ComputeDuals();
      const Outcome phase1 = Iterate(/*phase=*/1);
      (void)phase1;
      double infeasibility = 0.0;
      for (int i = 0; i < m_; ++i) infeasibility += x_[ArtificialCol(i)];
      if (infeasibility > opt_.feasibility_tol * (1.0 + rhs_.lpNorm<Eigen::Infinity>())) {
        sol.status = Status::kInfeasible;
        sol.certificate = y_;
        sol.primal = Structural();
        sol.iterations = iterations_;
        sol.used_bland = bland_;
        return sol;
      }
    }
    for (int i = 0; i < m_; ++i) {
      const int a = ArtificialCol(i);
      upper_[a] = 0.0;
      x_[a] = 0.0;
    }
    std::fill(cost_.begin(), cost_.end(), 0.0);
    for (int j = 0; j < n_; ++j) cost_[j] = objective_[j];
    bland_ = false;
    stall_ = 0;
    RecomputeBasics();
    ComputeDuals();
    const Outcome phase2 = Iterate(/*phase=*/2);
    sol.iterations = iterations_;
    sol.used_bland = bland_;
    if (phase2 == Outcome::kUnbounded) {
      sol.status = Status::kUnbounded;
      sol.primal = ray_;
      sol.certificate = ray_;
      sol.objective_value = kInf;
      sol.dual_objective = kInf;
      return sol;
    }
    sol.status = Status::kOptimal;
    sol.primal = Structural();
    sol.dual = y_;
    sol.reduced_costs.resize(n_);
    double obj = 0.0;
    double dual_obj = y_.dot(rhs_);
    for (int j = 0; j < n_; ++j) {
      const double d = objective_[j] - ColumnDot(j, y_);
      sol.reduced_costs[j] = d;
      obj += objective_[j] * x_[j];
      // Bound terms of the dual objective; tiny reduced costs are noise.
      if (d > opt_.optimality_tol && std::isfinite(upper_[j])) {
        dual_obj += d * upper_[j];
      } else if (d < -opt_.optimality_tol && std::isfinite(lower_[j])) {
        dual_obj += d * lower_[j];
      } else {
        dual_obj += d * x_[j];
      }
    }
    sol.objective_value = obj;
    sol.dual_objective = dual_obj;
    return sol;
  }

 private:
  enum class Outcome { kOptimal, kUnbounded };

  void BuildRows(const Problem& p) {
    rhs_.resize(m_);
    rhs_.head(n_eq_) = p.eq_rhs;
    rhs_.tail(n_ineq_) = p.ineq_rhs;
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(p.eq_matrix.nonZeros() + p.ineq_matrix.nonZeros());
    for (int j = 0; j < p.eq_matrix.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(p.eq_matrix, j); it; ++it) {
        if (it.value() != 0.0) trips.emplace_back(it.row(), j, it.value());
      }
    }
    for (int j = 0; j < p.ineq_matrix.outerSize(); ++j) {
      for (SparseMatrix::InnerIterator it(p.ineq_matrix, j); it; ++it) {
        if (it.value() != 0.0) trips.emplace_back(n_eq_ + it.row(), j, it.value());
      }
    }
    a_.resize(m_, n_);
    a_.setFromTriplets(trips.begin(), trips.end());
    a_.makeCompressed();
    objective_.assign(n_, 0.0);
  }

  int SlackCol(int k) const { return n_ + k; }
  int ArtificialCol(int i) const { return n_ + n_ineq_ + i; }

  template <typename F>
  void ForColumn(int j, F&& f) const {
    if (j < n_) {
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) f(static_cast<int>(it.row()), it.value());
    } else if (j < n_ + n_ineq_) {
      f(n_eq_ + (j - n_), 1.0);
    } else {
      const int i = j - n_ - n_ineq_;
      f(i, art_sign_[i]);
    }
  }

  double ColumnDot(int j, const Vector& v) const {
    double s = 0.0;
    ForColumn(j, [&](int i, double a) { s += a * v[i]; });
    return s;
  }

  Vector Structural() const {
    Vector out(n_);
    for (int j = 0; j < n_; ++j) out[j] = x_[j];
    return out;
  }

  void InitialBasis() {
    for (int j = 0; j < ncols_; ++j) {
      if (std::isfinite(lower_[j])) {
        x_[j] = lower_[j];
      } else if (std::isfinite(upper_[j])) {
        x_[j] = upper_[j];
      } else {
        x_[j] = 0.0;
      }
    }
    Vector residual = rhs_;
    for (int j = 0; j < n_; ++j) {
      if (x_[j] == 0.0) continue;
      for (SparseMatrix::InnerIterator it(a_, j); it; ++it) residual[it.row()] -= it.value() * x_[j];
    }
    // Column singletons that can absorb a row's residual inside their bounds.
    std::vector<std::vector<int>> singletons(m_);
    for (int j = 0; j < n_; ++j) {
      if (a_.col(j).nonZeros() == 1) {
        SparseMatrix::InnerIterator it(a_, j);
        singletons[it.row()].push_back(j);
      }
    }
    basis_.assign(m_, -1);
    binv_ = RowMajorMatrix::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      const double r = residual[i];
      const bool is_ineq = i >= n_eq_;
      int chosen = -1;
      double diag = 1.0;
      if (is_ineq && r >= -opt_.feasibility_tol) {
        chosen = SlackCol(i - n_eq_);
        x_[chosen] = std::max(r, 0.0);
      } else {
        for (int j : singletons[i]) {
          if (basic_pos_[j] >= 0) continue;
          SparseMatrix::InnerIterator it(a_, j);
          const double v = x_[j] + r / it.value();
          if (v >= lower_[j] - opt_.feasibility_tol && v <= upper_[j] + opt_.feasibility_tol) {
            chosen = j;
            diag = it.value();
            x_[j] = std::clamp(v, lower_[j], upper_[j]);
            break;
          }
        }
        if (chosen < 0) {
          chosen = ArtificialCol(i);
          art_sign_[i] = r >= 0.0 ? 1.0 : -1.0;
          diag = art_sign_[i];
          x_[chosen] = std::abs(r);
          // Rows already satisfied never need their artificial to grow.
          if (x_[chosen] <= opt_.feasibility_tol) {
            x_[chosen] = 0.0;
            upper_[chosen] = 0.0;
          }
        }
      }
      basis_[i] = chosen;
      basic_pos_[chosen] = i;
      binv_(i, i) = 1.0 / diag;
    }
  }

  void ComputeDuals() {
    y_ = Vector::Zero(m_);
    for (int i = 0; i < m_; ++i) {
      const double c = cost_[basis_[i]];
      if (c != 0.0) y_ += c * binv_.row(i).transpose();
    }
  }

  void RecomputeBasics() {
    Vector r = rhs_;
    for (int j = 0; j < ncols_; ++j) {
      if (basic_pos_[j] >= 0 || x_[j] == 0.0) continue;
      ForColumn(j, [&](int i, double a) { r[i] -= a * x_[j]; });
    }
    const Vector xb = binv_ * r;
    for (int i = 0; i < m_; ++i) x_[basis_[i]] = xb[i];
  }

  void Refactor() {
    Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
    for (int i = 0; i < m_; ++i) {
      ForColumn(basis_[i], [&](int row, double a) { b(row, i) = a; });
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> lu(b);
    binv_ = lu.inverse();
    if (!binv_.allFinite()) throw NumericalBreakdown("singular basis during reinversion");
    RecomputeBasics();
    ComputeDuals();
    since_refactor_ = 0;
  }

  double PrimalResidual() const {
    Vector r = rhs_;
    for (int j = 0; j < ncols_; ++j) {
      if (x_[j] == 0.0) continue;
      ForColumn(j, [&](int i, double a) { r[i] -= a * x_[j]; });
    }
    return r.lpNorm<Eigen::Infinity>();
  }

  double DualResidual() const {
    double worst = 0.0;
    for (int i = 0; i < m_; ++i) {
      const int j = basis_[i];
      worst = std::max(worst, std::abs(cost_[j] - ColumnDot(j, y_)));
    }
    return worst;
  }

  bool IsFixed(int j) const { return upper_[j] - lower_[j] <= 0.0; }

  // Returns the entering column and its direction (+1 increase, -1 decrease).
  int Price(int* direction) const {
    int best = -1;
    double best_score = opt_.optimality_tol;
    for (int j = 0; j < ncols_; ++j) {
      if (basic_pos_[j] >= 0 || IsFixed(j)) continue;
      const double d = cost_[j] - ColumnDot(j, y_);
      int dir = 0;
      if (d > opt_.optimality_tol && x_[j] < upper_[j]) {
        dir = 1;
      } else if (d < -opt_.optimality_tol && x_[j] > lower_[j]) {
        dir = -1;
      }
      if (dir == 0) continue;
      if (bland_) {
        *direction = dir;
        return j;
      }
      if (std::abs(d) > best_score) {
        best_score = std::abs(d);
        best = j;
        *direction = dir;
      }
    }
    return best;
  }

  Outcome Iterate(int phase) {
    Vector alpha(m_);
    std::vector<int> nz;
    nz.reserve(m_);
    bool verified = false;
    double objective = PhaseObjective();
    double best_objective = objective;
    while (true) {
      if (iterations_ >= max_iterations_) {
        throw SolverError("simplex iteration limit reached");
      }
      if (refactor_interval_ > 0 && since_refactor_ >= refactor_interval_) {
        Refactor();
      } else if (refactor_interval_ == 0 && since_refactor_ >= 500) {
        if (PrimalResidual() > 10 * opt_.feasibility_tol ||
            DualResidual() > 10 * opt_.optimality_tol) {
          Refactor();
        } else {
          since_refactor_ = 0;
        }
      }
      int dir = 0;
      const int q = Price(&dir);
      if (q < 0) {
        if (!verified && since_refactor_ > 0 &&
            (PrimalResidual() > opt_.feasibility_tol || DualResidual() > opt_.optimality_tol)) {
          Refactor();
          verified = true;
          continue;
        }
        return Outcome::kOptimal;
      }
      verified = false;
      const double dq = cost_[q] - ColumnDot(q, y_);

      alpha.setZero();
      ForColumn(q, [&](int k, double a) { alpha.noalias() += a * binv_.col(k); });

      // Ratio test.
      double t_best = upper_[q] - lower_[q];  // bound flip
      int leave = -1;
      double leave_pivot = 0.0;
      for (int i = 0; i < m_; ++i) {
        const double a = alpha[i];
        if (std::abs(a) <= opt_.pivot_tol) continue;
        const int var = basis_[i];
        const double delta = -dir * a;
        double t;
        if (delta < 0.0) {
          if (!std::isfinite(lower_[var])) continue;
          t = (x_[var] - lower_[var]) / -delta;
        } else {
          if (!std::isfinite(upper_[var])) continue;
          t = (upper_[var] - x_[var]) / delta;
        }
        t = std::max(t, 0.0);
        const bool better = t < t_best - 1e-12;
        const bool tie = !better && t <= t_best + 1e-12 && leave >= 0;
        if (better || (tie && (bland_ ? var < basis_[leave] : std::abs(a) > std::abs(leave_pivot)))) {
          t_best = t;
          leave = i;
          leave_pivot = a;
        }
      }

      if (leave < 0 && !std::isfinite(t_best)) {
        if (phase == 1) throw NumericalBreakdown("phase one reported an unbounded direction");
        ray_ = Vector::Zero(n_);
        if (q < n_) ray_[q] = dir;
        for (int i = 0; i < m_; ++i) {
          if (basis_[i] < n_) ray_[basis_[i]] = -dir * alpha[i];
        }
        return Outcome::kUnbounded;
      }

      ++iterations_;
      ++since_refactor_;
      const double step = t_best;
      for (int i = 0; i < m_; ++i) {
        if (alpha[i] != 0.0) x_[basis_[i]] -= dir * step * alpha[i];
      }
      x_[q] += dir * step;

      if (leave < 0) {
        // Entering variable moves to its opposite bound; basis unchanged.
        x_[q] = dir > 0 ? upper_[q] : lower_[q];
      } else {
        if (std::abs(leave_pivot) < opt_.breakdown_tol) {
          if (bland_) throw NumericalBreakdown("pivot below breakdown tolerance under Bland's rule");
          bland_ = true;
          continue;
        }
        const int out = basis_[leave];
        x_[out] = (-dir * leave_pivot) < 0.0 ? lower_[out] : upper_[out];
        basic_pos_[out] = -1;
        basis_[leave] = q;
        basic_pos_[q] = leave;

        // Duals: y += (d_q / alpha_r) * row r of the old inverse.
        const double scale = dq / leave_pivot;
        nz.clear();
        for (int k = 0; k < m_; ++k) {
          if (binv_(leave, k) != 0.0) nz.push_back(k);
        }
        for (int k : nz) y_[k] += scale * binv_(leave, k);

        // Rank-one update of the explicit inverse, touching nonzeros only.
        const double inv_pivot = 1.0 / leave_pivot;
        for (int k : nz) binv_(leave, k) *= inv_pivot;
        for (int i = 0; i < m_; ++i) {
          if (i == leave) continue;
          const double a = alpha[i];
          if (a == 0.0) continue;
          for (int k : nz) binv_(i, k) -= a * binv_(leave, k);
        }
      }

      objective += std::abs(dq) * step;
      if (objective > best_objective + 1e-12 * (1.0 + std::abs(best_objective))) {
        best_objective = objective;
        stall_ = 0;
      } else if (++stall_ > stall_limit_ && !bland_) {
        bland_ = true;
      }
    }
  }

  double PhaseObjective() const {
    double s = 0.0;
    for (int j = 0; j < ncols_; ++j) s += cost_[j] * x_[j];
    return s;
  }

  Options opt_;
  int n_, n_eq_, n_ineq_, m_;
  int ncols_ = 0;
  SparseMatrix a_;
  Vector rhs_;
  std::vector<double> objective_;
  std::vector<double> lower_, upper_, cost_, x_;
  std::vector<int> basis_, basic_pos_;
  std::vector<double> art_sign_;
  RowMajorMatrix binv_;
  Vector y_;
  Vector ray_;
  long iterations_ = 0;
  long max_iterations_ = 0;
  long stall_ = 0;
  long stall_limit_ = 0;
  int refactor_interval_ = 0;
  int since_refactor_ = 0;
  bool bland_ = false;
};

}  // namespace

std::string_view ToString(Status status) {
  switch (status) {
    case Status::kOptimal:
      return "Optimal";
    case Status::kInfeasible:
      return "Infeasible";
    case Status::kUnbounded:
      return "Unbounded";
  }
  return "?";
}

Problem Problem::NonNegative(int num_vars) {
  Problem p;
  p.objective = Vector::Zero(num_vars);
  p.eq_matrix.resize(0, num_vars);
  p.eq_rhs.resize(0);
  p.ineq_matrix.resize(0, num_vars);
  p.ineq_rhs.resize(0);
  p.lower_bounds.assign(num_vars, 0.0);
  p.upper_bounds.assign(num_vars, std::nullopt);
  return p;
}

void Problem::Validate() const {
  const auto n = objective.size();
  if (eq_matrix.cols() != n || ineq_matrix.cols() != n) {
    throw std::invalid_argument("constraint matrix column count differs from objective length");
  }
  if (eq_matrix.rows() != eq_rhs.size() || ineq_matrix.rows() != ineq_rhs.size()) {
    throw std::invalid_argument("right-hand side length differs from row count");
  }
  if (static_cast<long>(lower_bounds.size()) != n || static_cast<long>(upper_bounds.size()) != n) {
    throw std::invalid_argument("bound vectors must have one entry per variable");
  }
  for (long j = 0; j < n; ++j) {
    if (lower_bounds[j] && upper_bounds[j] && *lower_bounds[j] > *upper_bounds[j]) {
      throw std::invalid_argument("lower bound exceeds upper bound for variable " + std::to_string(j));
    }
  }
}

SparseMatrix FromDense(const Eigen::MatrixXd& dense) { return dense.sparseView(0.0, 0.0); }

Solution Solve(const Problem& problem, const Options& options) {
  problem.Validate();
  // Contradictory bounds are infeasible without any pivoting.
  RevisedSimplex simplex(problem, options);
  return simplex.Run();
}

Certification Certify(const Problem& problem, const Solution& solution) {
  Certification c;
  if (!solution.optimal()) return c;
  const Vector& x = solution.primal;
  const Vector& y = solution.dual;
  const int n_eq = problem.num_eq();
  const Vector eq_res = problem.eq_matrix * x - problem.eq_rhs;
  const Vector ineq_slack = problem.ineq_rhs - problem.ineq_matrix * x;
  if (eq_res.size() > 0) c.max_primal_violation = eq_res.lpNorm<Eigen::Infinity>();
  for (int i = 0; i < ineq_slack.size(); ++i) {
    c.max_primal_violation = std::max(c.max_primal_violation, -ineq_slack[i]);
    c.max_dual_violation = std::max(c.max_dual_violation, -y[n_eq + i]);
    c.max_complementarity = std::max(c.max_complementarity, std::abs(y[n_eq + i] * ineq_slack[i]));
  }
  Vector aty = problem.objective;
  if (n_eq > 0) aty -= problem.eq_matrix.transpose() * y.head(n_eq);
  if (problem.num_ineq() > 0) aty -= problem.ineq_matrix.transpose() * y.tail(problem.num_ineq());
  for (int j = 0; j < x.size(); ++j) {
    const double lo = problem.lower_bounds[j].value_or(-kInf);
    const double hi = problem.upper_bounds[j].value_or(kInf);
    c.max_primal_violation = std::max({c.max_primal_violation, lo - x[j], x[j] - hi});
    const double d = aty[j];
    // d > 0 requires x at its upper bound, d < 0 at its lower bound.
    if (d > 0.0) {
      if (!std::isfinite(hi)) c.max_dual_violation = std::max(c.max_dual_violation, d);
      else c.max_complementarity = std::max(c.max_complementarity, d * (hi - x[j]));
    } else if (d < 0.0) {
      if (!std::isfinite(lo)) c.max_dual_violation = std::max(c.max_dual_violation, -d);
      else c.max_complementarity = std::max(c.max_complementarity, -d * (x[j] - lo));
    }
  }
  c.duality_gap = solution.duality_gap();
  return c;
}

}  // namespace idset::lp
