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

// Discrepancy under sequential exogeneity for binary-choice panels: the
// period-2 error given (a, x1, x2) is distributed as the period-1 error given
// (a, x1). The model side decomposes into cells (a, x1, q), q being the law of
// x2 given (a, x1) on a finite grid; each cell is a linear program over joint
// pmfs of (v1, v2, x2).

#include <cstdint>
#include <vector>

#include "idset/catalog.hpp"
#include "idset/discrepancy.hpp"

namespace idset {

struct GaSettings {
  int population = 64;
  int generations = 200;
  double mutation_sd = 0.1;
  double crossover_rate = 0.5;  // per-gene probability of taking the second parent
  double mutation_rate = 0.25;  // per-gene probability of a Gaussian step; 0 means 1/L
  int elitism = 2;
  int tournament = 5;
  std::uint64_t seed = 0;

  // Throws std::invalid_argument unless population >= 2 and generations >= 1.
  void Validate() const;

  bool operator==(const GaSettings&) const = default;
};

struct SeqCell {
  double a = 0.0;
  int x1_index = 0;
  int q_index = 0;
  Vector q;  // pmf over the x2 grid
};

struct SeqEvaluation {
  Vector phi;
  double eta = 0.0;  // phi'p* - max over cells
  std::vector<double> per_cell_values;
};

// All (a, x1, q) cells of a scenario at one theta. q ranges over pmfs on the
// x2 grid whose coordinates are multiples of q_step.
class SequentialModel {
 public:
  SequentialModel(const Scenario& scenario, const ThetaPoint& theta, double q_step);

  int L() const { return L_; }
  const std::vector<SeqCell>& cells() const { return cells_; }
  const Scenario& scenario() const { return scenario_; }
  const ThetaPoint& theta() const { return theta_; }

  // max over admissible pi of E_pi[phi(z)], with v values grouped by the
  // outcomes they produce (exact, a few dozen variables).
  double InnerValue(const Vector& phi, int cell) const;
  // Same value from the ungrouped program over every (v1, v2, x2).
  double InnerValueFull(const Vector& phi, int cell) const;

  SeqEvaluation Evaluate(const Vector& phi, const Vector& p_star) const;

  // Observable index of latent (v1, v2) at cell (a, x1) and x2 grid index.
  int Observable(double a, int x1_index, int x2_index, double v1, double v2) const;

 private:
  struct Grouping {
    std::vector<int> group_of_v;         // per v grid point
    std::vector<int> representative;     // one v index per group
  };
  Grouping GroupFor(double a, int x1_index) const;

  Scenario scenario_;
  ThetaPoint theta_;
  int L_ = 0;
  int n22_ = 0;
  std::vector<SeqCell> cells_;
};

// Value of one cell for explicit (a, x1, q), from the ungrouped program.
double InnerLpValue(const Vector& phi, const Scenario& scenario, const ThetaPoint& theta, double a, int x1_index,
                    const Vector& q);

// Lower bound on the sequential discrepancy from a genetic search over phi.
// Individuals of a generation are evaluated in parallel.
DiscrepancyResult ComputeTSequential(const Scenario& scenario, const ThetaPoint& theta, const Vector& p_star,
                                     const GaSettings& ga, double q_step = 0.05, int threads = 0);
// Reference with serial evaluation; identical output.
DiscrepancyResult ComputeTSequentialSerial(const Scenario& scenario, const ThetaPoint& theta,
                                           const Vector& p_star, const GaSettings& ga, double q_step = 0.05);

// Exact value of the same sup over phi: the defender mixes over cells, so the
// problem is one LP over the convex hull of all cell image sets.
DiscrepancyResult ComputeTSequentialExact(const Scenario& scenario, const ThetaPoint& theta,
                                          const Vector& p_star, double q_step = 0.05);

}  // namespace idset
