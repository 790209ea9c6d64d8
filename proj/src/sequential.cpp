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

#include "idset/sequential.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <exception>
#include <map>
#include <numeric>
#include <stdexcept>

#include <omp.h>

#include "idset/errors.hpp"
#include "idset/random.hpp"

namespace idset {

namespace {

using Clock = std::chrono::steady_clock;

double ElapsedMs(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::vector<Vector> QGrid(int parts, double step) {
  const double inv = 1.0 / step;
  const long total = std::lround(inv);
  if (!(step > 0.0) || total < 1 || std::abs(inv - static_cast<double>(total)) > 1e-9) {
    throw std::invalid_argument("q grid step must divide 1");
  }
  std::vector<Vector> out;
  std::vector<long> c(parts, 0);
  auto rec = [&](auto&& self, int pos, long left) -> void {
    if (pos == parts - 1) {
      c[pos] = left;
      Vector q(parts);
      for (int i = 0; i < parts; ++i) q[i] = static_cast<double>(c[i]) / static_cast<double>(total);
      out.push_back(q);
      return;
    }
    for (long k = 0; k <= left; ++k) {
      c[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  rec(rec, 0, total);
  return out;
}

// A cell program over pi(k1, k2, x2), k indexing groups of error values:
//   sum pi = 1
//   sum_k1 pi(k1, k2, x2) = q(x2) sum_{k', x2'} pi(k2, k', x2')   for all (k2, x2)
//   optionally sum_{k1, k2} pi(k1, k2, x2) = q(x2)               for all x2
// Each variable carries the weight phi(z) of the observable it produces.
struct CellProgram {
  int groups = 0;
  int n2 = 0;
  std::vector<int> z;  // observable per variable

  int var(int k1, int k2, int x2) const { return (k1 * groups + k2) * n2 + x2; }
  int size() const { return groups * groups * n2; }

  // Appends the rows of one cell to `trips` starting at row `row0`, with the
  // variables starting at column `col0`. The first row is the mass row.
  int Rows(const Vector& q, bool marginal_rows, int row0, int col0, std::vector<Eigen::Triplet<double>>& trips) const {
    int row = row0;
    for (int v = 0; v < size(); ++v) trips.emplace_back(row, col0 + v, 1.0);
    ++row;
    for (int k2 = 0; k2 < groups; ++k2) {
      for (int x2 = 0; x2 < n2; ++x2) {
        std::map<int, double> coef;
        for (int k1 = 0; k1 < groups; ++k1) coef[var(k1, k2, x2)] += 1.0;
        if (q[x2] != 0.0) {
          for (int kp = 0; kp < groups; ++kp) {
            for (int xp = 0; xp < n2; ++xp) coef[var(k2, kp, xp)] -= q[x2];
          }
        }
        for (auto [c, v] : coef) {
          if (v != 0.0) trips.emplace_back(row, col0 + c, v);
        }
        ++row;
      }
    }
    if (marginal_rows) {
      for (int x2 = 0; x2 < n2; ++x2) {
        for (int k1 = 0; k1 < groups; ++k1) {
          for (int k2 = 0; k2 < groups; ++k2) trips.emplace_back(row, col0 + var(k1, k2, x2), 1.0);
        }
        ++row;
      }
    }
    return row - row0;
  }

  double Solve(const Vector& phi, const Vector& q, bool marginal_rows) const {
    std::vector<Eigen::Triplet<double>> trips;
    const int rows = Rows(q, marginal_rows, 0, 0, trips);
    lp::Problem prob = lp::Problem::NonNegative(size());
    for (int v = 0; v < size(); ++v) prob.objective[v] = phi[z[v]];
    prob.eq_matrix.resize(rows, size());
    prob.eq_matrix.setFromTriplets(trips.begin(), trips.end());
    prob.eq_rhs = Vector::Zero(rows);
    prob.eq_rhs[0] = 1.0;
    if (marginal_rows) prob.eq_rhs.tail(n2) = q;
    const auto sol = lp::Solve(prob);
    if (!sol.optimal()) throw SolverError("sequential cell LP reported " + std::string(lp::ToString(sol.status)));
    return sol.objective_value;
  }
};

}  // namespace

void GaSettings::Validate() const {
  if (population < 2) throw std::invalid_argument("GA population must be at least 2");
  if (generations < 1) throw std::invalid_argument("GA needs at least one generation");
  if (elitism < 0 || elitism > population) throw std::invalid_argument("elitism out of range");
  if (tournament < 1) throw std::invalid_argument("tournament size must be positive");
  if (!(crossover_rate >= 0.0 && crossover_rate <= 1.0)) throw std::invalid_argument("crossover rate out of range");
  if (!(mutation_sd >= 0.0)) throw std::invalid_argument("mutation sd must be nonnegative");
}

SequentialModel::SequentialModel(const Scenario& scenario, const ThetaPoint& theta, double q_step)
    : scenario_(scenario), theta_(theta) {
  if (scenario.family == Family::kMaxScore) throw std::invalid_argument("sequential model needs a panel scenario");
  ValidateScenario(scenario);
  n22_ = static_cast<int>(scenario.x22_grid.size());
  L_ = 4 * static_cast<int>(scenario.x21_grid.size()) * n22_;
  const auto qs = QGrid(n22_, q_step);
  for (double a : scenario.alpha_grid) {
    for (int x1 = 0; x1 < static_cast<int>(scenario.x21_grid.size()); ++x1) {
      for (int qi = 0; qi < static_cast<int>(qs.size()); ++qi) cells_.push_back({a, x1, qi, qs[qi]});
    }
  }
}

int SequentialModel::Observable(double a, int x1_index, int x2_index, double v1, double v2) const {
  const auto out = EvaluatePanel(theta_.at("beta1"), theta_.at("beta2"), a, v1, v2,
                                 scenario_.x21_grid[x1_index], scenario_.x22_grid[x2_index]);
  return 4 * (x1_index * n22_ + x2_index) + out.offset();
}

SequentialModel::Grouping SequentialModel::GroupFor(double a, int x1_index) const {
  // Error values that produce the same outcomes in every role are interchangeable.
  Grouping g;
  std::map<std::vector<int>, int> ids;
  for (double v : scenario_.v_grid) {
    std::vector<int> signature;
    for (int x2 = 0; x2 < n22_; ++x2) {
      signature.push_back(Observable(a, x1_index, x2, v, 0.0) / 2 % 2);  // y1 bit
      signature.push_back(Observable(a, x1_index, x2, 0.0, v) % 2);      // y2 bit
    }
    auto [it, inserted] = ids.try_emplace(signature, static_cast<int>(g.representative.size()));
    if (inserted) g.representative.push_back(static_cast<int>(g.group_of_v.size()));
    g.group_of_v.push_back(it->second);
  }
  return g;
}

double SequentialModel::InnerValue(const Vector& phi, int cell) const {
  const SeqCell& c = cells_.at(cell);
  const Grouping g = GroupFor(c.a, c.x1_index);
  CellProgram prog;
  prog.groups = static_cast<int>(g.representative.size());
  prog.n2 = n22_;
  prog.z.resize(prog.size());
  for (int k1 = 0; k1 < prog.groups; ++k1) {
    for (int k2 = 0; k2 < prog.groups; ++k2) {
      for (int x2 = 0; x2 < n22_; ++x2) {
        prog.z[prog.var(k1, k2, x2)] = Observable(c.a, c.x1_index, x2, scenario_.v_grid[g.representative[k1]],
                                                  scenario_.v_grid[g.representative[k2]]);
      }
    }
  }
  return prog.Solve(phi, c.q, false);
}

double SequentialModel::InnerValueFull(const Vector& phi, int cell) const {
  const SeqCell& c = cells_.at(cell);
  CellProgram prog;
  prog.groups = static_cast<int>(scenario_.v_grid.size());
  prog.n2 = n22_;
  prog.z.resize(prog.size());
  for (int k1 = 0; k1 < prog.groups; ++k1) {
    for (int k2 = 0; k2 < prog.groups; ++k2) {
      for (int x2 = 0; x2 < n22_; ++x2) {
        prog.z[prog.var(k1, k2, x2)] = Observable(c.a, c.x1_index, x2, scenario_.v_grid[k1], scenario_.v_grid[k2]);
      }
    }
  }
  return prog.Solve(phi, c.q, true);
}

SeqEvaluation SequentialModel::Evaluate(const Vector& phi, const Vector& p_star) const {
  if (phi.size() != L_ || p_star.size() != L_) throw std::invalid_argument("phi or p* length mismatch");
  SeqEvaluation e;
  e.phi = phi;
  e.per_cell_values.resize(cells_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < cells_.size(); ++c) {
    e.per_cell_values[c] = InnerValue(phi, static_cast<int>(c));
    best = std::max(best, e.per_cell_values[c]);
  }
  e.eta = phi.dot(p_star) - best;
  return e;
}

double InnerLpValue(const Vector& phi, const Scenario& scenario, const ThetaPoint& theta, double a, int x1_index,
                    const Vector& q) {
  SequentialModel model(scenario, theta, 1.0);
  if (q.size() != static_cast<int>(scenario.x22_grid.size()) || q.minCoeff() < 0.0 ||
      std::abs(q.sum() - 1.0) > 1e-10) {
    throw std::invalid_argument("q must be a pmf over the x2 grid");
  }
  CellProgram prog;
  prog.groups = static_cast<int>(scenario.v_grid.size());
  prog.n2 = static_cast<int>(scenario.x22_grid.size());
  prog.z.resize(prog.size());
  for (int k1 = 0; k1 < prog.groups; ++k1) {
    for (int k2 = 0; k2 < prog.groups; ++k2) {
      for (int x2 = 0; x2 < prog.n2; ++x2) {
        prog.z[prog.var(k1, k2, x2)] =
            model.Observable(a, x1_index, x2, scenario.v_grid[k1], scenario.v_grid[k2]);
      }
    }
  }
  return prog.Solve(phi, q, true);
}

namespace {

constexpr std::uint64_t kGaStream = 0x4741ULL;

using Fitness = std::map<std::vector<double>, double>;

DiscrepancyResult RunGa(const Scenario& scenario, const ThetaPoint& theta, const Vector& p_star,
                        const GaSettings& ga, double q_step, bool parallel, int threads) {
  const auto start = Clock::now();
  ga.Validate();
  const SequentialModel model(scenario, theta, q_step);
  const int L = model.L();
  if (p_star.size() != L) throw std::invalid_argument("p* length mismatch");
  const double mutation_rate = ga.mutation_rate > 0.0 ? ga.mutation_rate : 1.0 / L;
  const int P = ga.population;

  Fitness cache;
  auto evaluate = [&](const std::vector<Vector>& pop) {
    std::vector<double> fit(pop.size());
    std::vector<int> todo;
    for (size_t i = 0; i < pop.size(); ++i) {
      auto it = cache.find(std::vector<double>(pop[i].data(), pop[i].data() + L));
      if (it != cache.end()) {
        fit[i] = it->second;
      } else {
        todo.push_back(static_cast<int>(i));
      }
    }
    std::exception_ptr failure;
    const int n = static_cast<int>(todo.size());
    const int nt = threads > 0 ? threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(nt) if (parallel)
    for (int j = 0; j < n; ++j) {
      try {
        fit[todo[j]] = model.Evaluate(pop[todo[j]], p_star).eta;
      } catch (...) {
#pragma omp critical(idset_ga_failure)
        if (!failure) failure = std::current_exception();
      }
    }
    if (failure) std::rethrow_exception(failure);
    for (int i : todo) cache[std::vector<double>(pop[i].data(), pop[i].data() + L)] = fit[i];
    return fit;
  };

  std::vector<Vector> pop;
  {
    auto rng = StreamRng(ga.seed, kGaStream, 0);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    pop.push_back(Vector::Zero(L));
    pop.push_back(Vector::Ones(L));
    // Alternate interior points with box vertices of random density.
    while (static_cast<int>(pop.size()) < P) {
      Vector phi(L);
      if (pop.size() % 2 == 0) {
        for (int l = 0; l < L; ++l) phi[l] = unit(rng);
      } else {
        const double density = unit(rng);
        for (int l = 0; l < L; ++l) phi[l] = unit(rng) < density ? 1.0 : 0.0;
      }
      pop.push_back(phi);
    }
  }
  std::vector<double> fit = evaluate(pop);

  for (int gen = 1; gen <= ga.generations; ++gen) {
    auto rng = StreamRng(ga.seed, kGaStream, static_cast<std::uint64_t>(gen));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> step(0.0, ga.mutation_sd);
    std::uniform_int_distribution<int> pick(0, P - 1);
    std::vector<int> order(P);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return fit[a] > fit[b]; });
    auto tournament = [&]() {
      int best = pick(rng);
      for (int k = 1; k < ga.tournament; ++k) {
        const int c = pick(rng);
        if (fit[c] > fit[best] || (fit[c] == fit[best] && c < best)) best = c;
      }
      return best;
    };
    std::vector<Vector> next;
    for (int e = 0; e < ga.elitism; ++e) next.push_back(pop[order[e]]);
    while (static_cast<int>(next.size()) < P) {
      const Vector& a = pop[tournament()];
      const Vector& b = pop[tournament()];
      Vector child(L);
      for (int l = 0; l < L; ++l) {
        child[l] = unit(rng) < ga.crossover_rate ? b[l] : a[l];
        if (unit(rng) < mutation_rate) child[l] = std::clamp(child[l] + step(rng), 0.0, 1.0);
      }
      next.push_back(child);
    }
    pop = std::move(next);
    fit = evaluate(pop);
  }

  // Best individual ever evaluated.
  DiscrepancyResult r;
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& [phi, f] : cache) {
    if (f > best) {
      best = f;
      r.phi_star = Eigen::Map<const Vector>(phi.data(), L);
    }
  }
  r.T = best > 0.0 ? best : 0.0;
  r.member = r.T <= kMembershipTol;
  r.iterations = static_cast<long>(cache.size());
  r.solve_ms = ElapsedMs(start);
  return r;
}

}  // namespace

DiscrepancyResult ComputeTSequential(const Scenario& scenario, const ThetaPoint& theta, const Vector& p_star,
                                     const GaSettings& ga, double q_step, int threads) {
  return RunGa(scenario, theta, p_star, ga, q_step, true, threads);
}

DiscrepancyResult ComputeTSequentialSerial(const Scenario& scenario, const ThetaPoint& theta,
                                           const Vector& p_star, const GaSettings& ga, double q_step) {
  return RunGa(scenario, theta, p_star, ga, q_step, false, 1);
}

DiscrepancyResult ComputeTSequentialExact(const Scenario& scenario, const ThetaPoint& theta,
                                          const Vector& p_star, double q_step) {
  const auto start = Clock::now();
  const SequentialModel model(scenario, theta, q_step);
  const int L = model.L();
  if (p_star.size() != L) throw std::invalid_argument("p* length mismatch");
  const int n22 = static_cast<int>(scenario.x22_grid.size());

  // Columns: per cell its pi block and its mass w_c, then slacks s.
  // Rows: sum_c w_c = 1; per cell sum pi - w_c = 0 and the homogeneous
  // coupling rows; then coverage rows -(images) - s <= -p*.
  std::vector<Eigen::Triplet<double>> eq, cover;
  std::vector<double> objective;
  int col = 0, row = 1;
  std::vector<int> mass_cols;
  for (const auto& cell : model.cells()) {
    // Reuse the grouped program layout of this cell.
    std::map<std::vector<int>, int> ids;
    std::vector<int> reps;
    for (int vi = 0; vi < static_cast<int>(scenario.v_grid.size()); ++vi) {
      const double v = scenario.v_grid[vi];
      std::vector<int> sig;
      for (int x2 = 0; x2 < n22; ++x2) {
        sig.push_back(model.Observable(cell.a, cell.x1_index, x2, v, 0.0) / 2 % 2);
        sig.push_back(model.Observable(cell.a, cell.x1_index, x2, 0.0, v) % 2);
      }
      if (ids.try_emplace(sig, static_cast<int>(reps.size())).second) reps.push_back(vi);
    }
    CellProgram prog;
    prog.groups = static_cast<int>(reps.size());
    prog.n2 = n22;
    prog.z.resize(prog.size());
    for (int k1 = 0; k1 < prog.groups; ++k1) {
      for (int k2 = 0; k2 < prog.groups; ++k2) {
        for (int x2 = 0; x2 < n22; ++x2) {
          prog.z[prog.var(k1, k2, x2)] = model.Observable(cell.a, cell.x1_index, x2, scenario.v_grid[reps[k1]],
                                                          scenario.v_grid[reps[k2]]);
        }
      }
    }
    const int cell_rows = prog.Rows(cell.q, false, row, col, eq);
    const int w = col + prog.size();
    eq.emplace_back(row, w, -1.0);  // first row of the block is the cell mass
    eq.emplace_back(0, w, 1.0);
    for (int v = 0; v < prog.size(); ++v) cover.emplace_back(prog.z[v], col + v, -1.0);
    mass_cols.push_back(w);
    row += cell_rows;
    col = w + 1;
  }
  const int n = col + L;
  for (int l = 0; l < L; ++l) cover.emplace_back(l, col + l, -1.0);

  lp::Problem prob = lp::Problem::NonNegative(n);
  prob.objective.tail(L).setConstant(-1.0);
  prob.eq_matrix.resize(row, n);
  prob.eq_matrix.setFromTriplets(eq.begin(), eq.end());
  prob.eq_rhs = Vector::Zero(row);
  prob.eq_rhs[0] = 1.0;
  prob.ineq_matrix.resize(L, n);
  prob.ineq_matrix.setFromTriplets(cover.begin(), cover.end());
  prob.ineq_rhs = -p_star;
  const auto sol = lp::Solve(prob);
  if (!sol.optimal()) throw SolverError("sequential hull LP reported " + std::string(lp::ToString(sol.status)));

  DiscrepancyResult r;
  r.T = -sol.objective_value > 0.0 ? -sol.objective_value : 0.0;
  r.phi_star = sol.dual.tail(L).cwiseMax(0.0).cwiseMin(1.0);
  r.member = r.T <= kMembershipTol;
  r.duality_gap = sol.duality_gap();
  r.iterations = sol.iterations;
  r.solve_ms = ElapsedMs(start);
  return r;
}

}  // namespace idset
