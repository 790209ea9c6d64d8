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

// Discrepancy T(theta) between an observable pmf and the set of pmfs a finite
// model can generate, membership verdicts and grid scans.

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "idset/lp.hpp"
#include "idset/model.hpp"

namespace idset {

inline constexpr double kMembershipTol = 1e-7;

struct DiscrepancyResult {
  double T = 0.0;  // +inf when no latent pmf satisfies the constraints
  Vector phi_star;
  // One multiplier per constraint row, normalized so that
  // T = lambda'b and A'lambda <= (p*'phi) 1 - Ctilde'phi.
  Vector dual_lambda;
  bool member = false;
  double solve_ms = 0.0;
  lp::Status status = lp::Status::kOptimal;
  double duality_gap = 0.0;
  long iterations = 0;
};

// Entry (l, m) = p*_l - Ctilde(l, m).
Eigen::MatrixXd AssembleGameMatrix(const Vector& p_star, const PushforwardMatrix& pushforward);

// Solves min over feasible latent pmfs of sum_l (p* - Ctilde p)_l^+, whose
// value equals the maximin game value; the critic's phi and the multipliers
// are read off the row duals. Cost per iteration scales with R + L.
DiscrepancyResult ComputeT(const FiniteModel& model, const Vector& p_star, const lp::Options& options = {});

// Same value from the (lambda, phi) program with the feature box [0, phi_upper].
// One LP row per latent point, so this is only sensible for small M.
DiscrepancyResult ComputeTDirect(const FiniteModel& model, const Vector& p_star, double phi_upper = 1.0,
                                 const lp::Options& options = {});

// max z s.t. z <= phi'(p* - p_i) for every listed model pmf p_i, phi in [0,1]^L.
DiscrepancyResult ComputeTExtremal(const Vector& p_star, const std::vector<Vector>& extreme_points,
                                   const lp::Options& options = {});

using ModelFactory = std::function<FiniteModel(const ThetaPoint&)>;

struct MemberInterval {
  double lo = 0.0;
  double hi = 0.0;
  int first = 0;  // grid indices, inclusive
  int last = 0;
};

struct ThetaScan {
  std::vector<ThetaPoint> grid;
  std::vector<DiscrepancyResult> results;
  // Keyed by each coordinate that varies over the grid.
  std::map<std::string, std::vector<MemberInterval>> summary;
};

struct ScanOptions {
  int threads = 0;  // 0 keeps the OpenMP default
  lp::Options lp;
};

// Maximal runs of consecutive member points in grid order. A lone non-member
// point splits a run.
std::vector<MemberInterval> MemberIntervals(const std::vector<ThetaPoint>& grid,
                                            const std::vector<DiscrepancyResult>& results,
                                            const std::string& coordinate);

ThetaScan Scan(const ModelFactory& factory, const std::vector<ThetaPoint>& grid, const Vector& p_star,
               const ScanOptions& options = {});
// Reference single-threaded scan; results are identical to Scan.
ThetaScan ScanSerial(const ModelFactory& factory, const std::vector<ThetaPoint>& grid, const Vector& p_star,
                     const ScanOptions& options = {});

}  // namespace idset
