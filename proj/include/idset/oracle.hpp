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

// Brute-force lattice checks for small models: enumerate latent pmfs with a
// fixed denominator and feature vectors on a regular grid.

#include <cstdint>
#include <string>
#include <vector>

#include "idset/discrepancy.hpp"
#include "idset/model.hpp"

namespace idset::oracle {

struct LatticeSpec {
  int denominator = 60;  // latent coordinates in {0, 1/D, ..., 1}
  int phi_levels = 20;   // feature coordinates in {0, 1/q, ..., 1}
};

// Throws GuardRail unless M <= 6, L <= 6, D <= 60 and phi_levels <= 20.
void CheckGuardRails(const FiniteModel& model, const LatticeSpec& grid);

struct LatticeMembership {
  bool member = false;
  double best_tv = 0.0;  // +inf when no lattice pmf meets the relaxed rows
  long lattice_points = 0;
};

// Minimum total variation between p* and Ctilde p over lattice pmfs p with
// |A p - b| <= 1/(2D) rowwise; member iff it is at most 1/D.
LatticeMembership Membership(const FiniteModel& model, const Vector& p_star, const LatticeSpec& grid);

// max over the phi lattice of phi'p* - max over lattice pmfs of phi'Ctilde p.
// The exact vertices of the latent polytope are added to the lattice pmfs,
// which makes the result a lower bound on T for every grid.
double TBound(const FiniteModel& model, const Vector& p_star, const LatticeSpec& grid);

// Vertices of {p >= 0 : A p = b} by basis enumeration. Throws GuardRail for M > 12.
std::vector<Vector> LatentVertices(const FiniteModel& model);

struct BootstrapOracle {
  double lattice_value = 0.0;  // sup over the phi lattice only
  double exact_value = 0.0;    // lattice plus every vertex of the linearity arrangement
};

// Evaluates sqrt(n) phi'(p_boot - p_hat) + lambda_n min(eta(phi), 0) with
// eta(phi) = phi'p_hat - max over latent vertices of phi'Ctilde v, without any
// LP. The function is concave and piecewise linear on the arrangement cut
// out by the box faces, phi'(v_i - v_j) = 0 and eta_i(phi) = 0, so adding the
// arrangement vertices makes the supremum exact. Needs L <= 4 for the
// arrangement; throws GuardRail otherwise.
BootstrapOracle BootstrapValue(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                               double lambda_n, int phi_levels = 20);

struct Instance {
  FiniteModel model;
  Vector p_star;
};

// Random model over L <= 4 observables and M <= 5 latents with a simplex row
// and one integer moment row that some 1/60-lattice pmf satisfies exactly.
// p* has denominator 60 and is either generated by a feasible latent pmf or
// drawn at random.
Instance RandomInstance(std::uint64_t seed);

struct SuiteReport {
  int instances = 0;
  int agreements = 0;
  int band_disagreements = 0;     // verdicts differ and T < 2/D
  int outside_disagreements = 0;  // verdicts differ and T >= 2/D
  int band_cases = 0;             // instances with tol < T < 2/D
  int lp_members = 0;
  double max_duality_gap = 0.0;
  double max_bound_excess = 0.0;  // max of TBound - T over checked instances
  bool passed() const;
};

// Compares ComputeT with Membership on `count` random instances. The lower
// bound is checked on every `bound_every`-th instance at `bound_phi_levels`.
SuiteReport RunSuite(int count, std::uint64_t seed, int denominator = 60, int bound_every = 10,
                     int bound_phi_levels = 5);

}  // namespace idset::oracle
