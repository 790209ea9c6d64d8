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

#include "idset/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "idset/errors.hpp"

namespace idset::oracle {

namespace {

// Calls visit(counts) for every vector of M nonnegative integers summing to D
// whose first entry is `first`.
template <class Visit>
void Compositions(int M, int D, int first, Visit&& visit) {
  std::vector<int> counts(M, 0);
  counts[0] = first;
  auto rec = [&](auto&& self, int pos, int left) -> void {
    if (pos == M - 1) {
      counts[pos] = left;
      visit(counts);
      return;
    }
    for (int k = 0; k <= left; ++k) {
      counts[pos] = k;
      self(self, pos + 1, left - k);
    }
  };
  if (M == 1) {
    if (first == D) visit(counts);
    return;
  }
  rec(rec, 1, D - first);
}

struct DenseModel {
  Eigen::MatrixXd A;
  Vector b;
  std::vector<int> target;
  int L;
};

DenseModel Densify(const FiniteModel& model) {
  return {Eigen::MatrixXd(model.constraints.A()), model.constraints.b(), model.pushforward.targets(), model.L()};
}

bool RowsHold(const DenseModel& dm, const std::vector<int>& counts, int D) {
  const double tol = 0.5 / D + 1e-12;
  for (int r = 0; r < dm.A.rows(); ++r) {
    double s = 0.0;
    for (size_t m = 0; m < counts.size(); ++m) s += dm.A(r, m) * counts[m];
    if (std::abs(s / D - dm.b[r]) > tol) return false;
  }
  return true;
}

}  // namespace

void CheckGuardRails(const FiniteModel& model, const LatticeSpec& grid) {
  if (model.M() > 6 || model.L() > 6) throw GuardRail("lattice oracle limited to M <= 6 and L <= 6");
  if (grid.denominator < 1 || grid.denominator > 60) throw GuardRail("lattice denominator must lie in [1, 60]");
  if (grid.phi_levels < 1 || grid.phi_levels > 20) throw GuardRail("phi_levels must lie in [1, 20]");
}

LatticeMembership Membership(const FiniteModel& model, const Vector& p_star, const LatticeSpec& grid) {
  CheckGuardRails(model, grid);
  const DenseModel dm = Densify(model);
  const int M = model.M(), D = grid.denominator;
  double best = std::numeric_limits<double>::infinity();
  long points = 0;
#pragma omp parallel for schedule(dynamic) reduction(min : best) reduction(+ : points)
  for (int first = 0; first <= D; ++first) {
    Vector image(dm.L);
    Compositions(M, D, first, [&](const std::vector<int>& counts) {
      ++points;
      if (!RowsHold(dm, counts, D)) return;
      image.setZero();
      for (int m = 0; m < M; ++m) image[dm.target[m]] += static_cast<double>(counts[m]) / D;
      best = std::min(best, 0.5 * (image - p_star).lpNorm<1>());
    });
  }
  return {best <= 1.0 / D + 1e-12, best, points};
}

double TBound(const FiniteModel& model, const Vector& p_star, const LatticeSpec& grid) {
  CheckGuardRails(model, grid);
  const DenseModel dm = Densify(model);
  const int M = model.M(), L = model.L(), D = grid.denominator;
  std::set<std::vector<int>> images;
#pragma omp parallel for schedule(dynamic)
  for (int first = 0; first <= D; ++first) {
    std::set<std::vector<int>> local;
    std::vector<int> image(L);
    Compositions(M, D, first, [&](const std::vector<int>& counts) {
      if (!RowsHold(dm, counts, D)) return;
      std::fill(image.begin(), image.end(), 0);
      for (int m = 0; m < M; ++m) image[dm.target[m]] += counts[m];
      local.insert(image);
    });
#pragma omp critical(idset_oracle_images)
    images.insert(local.begin(), local.end());
  }
  // Exact vertices join the lattice so that the defender side is never
  // underestimated; vertices off the 1/D lattice would otherwise be missed.
  const std::vector<Vector> vertices = LatentVertices(model);
  if (images.empty() && vertices.empty()) return std::numeric_limits<double>::infinity();
  Eigen::MatrixXd img(L, static_cast<int>(images.size() + vertices.size()));
  int col = 0;
  for (const auto& v : images) {
    for (int l = 0; l < L; ++l) img(l, col) = static_cast<double>(v[l]) / D;
    ++col;
  }
  for (const auto& v : vertices) img.col(col++) = model.pushforward.Apply(v);

  const int q = grid.phi_levels;
  long total = 1;
  for (int l = 0; l < L; ++l) total *= (q + 1);
  double best = -std::numeric_limits<double>::infinity();
#pragma omp parallel for schedule(static) reduction(max : best)
  for (long code = 0; code < total; ++code) {
    Vector phi(L);
    long c = code;
    for (int l = 0; l < L; ++l) {
      phi[l] = static_cast<double>(c % (q + 1)) / q;
      c /= (q + 1);
    }
    const double model_side = (phi.transpose() * img).maxCoeff();
    best = std::max(best, phi.dot(p_star) - model_side);
  }
  return best;
}

std::vector<Vector> LatentVertices(const FiniteModel& model) {
  const int M = model.M(), R = model.R();
  if (M > 12) throw GuardRail("vertex enumeration limited to M <= 12");
  const Eigen::MatrixXd A(model.constraints.A());
  const Vector& b = model.constraints.b();
  // Drop linearly dependent rows so that bases have full rank.
  Eigen::FullPivLU<Eigen::MatrixXd> row_lu(A.transpose());
  row_lu.setThreshold(1e-10);
  const int rank = static_cast<int>(row_lu.rank());
  Eigen::MatrixXd Ar(rank, M);
  Vector br(rank);
  {
    const auto perm = row_lu.permutationQ().indices();
    for (int i = 0; i < rank; ++i) {
      Ar.row(i) = A.row(perm[i]);
      br[i] = b[perm[i]];
    }
  }
  std::vector<Vector> out;
  std::vector<bool> pick(M, false);
  std::fill(pick.begin(), pick.begin() + rank, true);
  do {
    std::vector<int> cols;
    for (int m = 0; m < M; ++m) {
      if (pick[m]) cols.push_back(m);
    }
    Eigen::MatrixXd B(rank, rank);
    for (int k = 0; k < rank; ++k) B.col(k) = Ar.col(cols[k]);
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) continue;
    const Vector x = lu.solve(br);
    if (x.minCoeff() < -1e-12) continue;
    Vector p = Vector::Zero(M);
    for (int k = 0; k < rank; ++k) p[cols[k]] = std::max(x[k], 0.0);
    if ((A * p - b).lpNorm<Eigen::Infinity>() > 1e-9) continue;
    bool dup = false;
    for (const auto& v : out) dup = dup || (v - p).lpNorm<Eigen::Infinity>() < 1e-12;
    if (!dup) out.push_back(p);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  (void)R;
  return out;
}

BootstrapOracle BootstrapValue(const FiniteModel& model, const Vector& p_hat, const Vector& p_boot, long n,
                               double lambda_n, int phi_levels) {
  const int L = model.L();
  if (L > 4) throw GuardRail("bootstrap oracle limited to L <= 4");
  if (phi_levels < 1 || phi_levels > 20) throw GuardRail("phi_levels must lie in [1, 20]");
  std::vector<Vector> images;
  for (const auto& v : LatentVertices(model)) images.push_back(model.pushforward.Apply(v));
  if (images.empty()) throw std::invalid_argument("model admits no latent pmf");
  const Vector g = std::sqrt(static_cast<double>(n)) * (p_boot - p_hat);
  auto value = [&](const Vector& phi) {
    double defender = -std::numeric_limits<double>::infinity();
    for (const auto& v : images) defender = std::max(defender, phi.dot(v));
    const double eta = phi.dot(p_hat) - defender;
    return g.dot(phi) + lambda_n * std::min(eta, 0.0);
  };

  BootstrapOracle out;
  out.lattice_value = -std::numeric_limits<double>::infinity();
  long total = 1;
  for (int l = 0; l < L; ++l) total *= (phi_levels + 1);
  for (long code = 0; code < total; ++code) {
    Vector phi(L);
    long c = code;
    for (int l = 0; l < L; ++l) {
      phi[l] = static_cast<double>(c % (phi_levels + 1)) / phi_levels;
      c /= (phi_levels + 1);
    }
    out.lattice_value = std::max(out.lattice_value, value(phi));
  }

  // Hyperplanes h'phi = c.
  std::vector<std::pair<Vector, double>> planes;
  for (int l = 0; l < L; ++l) {
    planes.emplace_back(Vector::Unit(L, l), 0.0);
    planes.emplace_back(Vector::Unit(L, l), 1.0);
  }
  for (size_t i = 0; i < images.size(); ++i) {
    planes.emplace_back(p_hat - images[i], 0.0);
    for (size_t j = i + 1; j < images.size(); ++j) planes.emplace_back(images[i] - images[j], 0.0);
  }
  const int H = static_cast<int>(planes.size());
  double best = out.lattice_value;
  std::vector<bool> pick(H, false);
  std::fill(pick.begin(), pick.begin() + std::min(L, H), true);
  do {
    Eigen::MatrixXd B(L, L);
    Vector rhs(L);
    int k = 0;
    for (int h = 0; h < H; ++h) {
      if (!pick[h]) continue;
      B.row(k) = planes[h].first.transpose();
      rhs[k++] = planes[h].second;
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
    if (!lu.isInvertible()) continue;
    const Vector phi = lu.solve(rhs);
    if (phi.minCoeff() < -1e-12 || phi.maxCoeff() > 1 + 1e-12) continue;
    best = std::max(best, value(phi.cwiseMax(0.0).cwiseMin(1.0)));
  } while (std::prev_permutation(pick.begin(), pick.end()));
  out.exact_value = best;
  return out;
}

Instance RandomInstance(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform_int = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  const int L = uniform_int(2, 4);
  const int M = uniform_int(2, 5);
  constexpr int kDen = 60;

  auto lattice_pmf = [&](int n) {
    // Uniform composition of kDen into n parts via sorted cut points.
    std::vector<int> cuts{0, kDen};
    for (int i = 0; i < n - 1; ++i) cuts.push_back(uniform_int(0, kDen));
    std::sort(cuts.begin(), cuts.end());
    Vector p(n);
    for (int i = 0; i < n; ++i) p[i] = static_cast<double>(cuts[i + 1] - cuts[i]) / kDen;
    return p;
  };

  std::vector<int> target(M);
  for (auto& t : target) t = uniform_int(0, L - 1);
  std::vector<double> zs(L), ws(M);
  for (int l = 0; l < L; ++l) zs[l] = l;
  for (int m = 0; m < M; ++m) ws[m] = m;

  Instance inst;
  inst.model.z_support = FiniteSupport::Product({"z"}, {zs});
  inst.model.w_support = FiniteSupport::Product({"w"}, {ws});
  inst.model.pushforward = PushforwardMatrix(L, target);

  const Vector anchor = lattice_pmf(M);
  ConstraintRow moment;
  moment.tag = RowTag::kMoment;
  for (int m = 0; m < M; ++m) {
    const int a = uniform_int(-2, 2);
    if (a != 0) moment.entries.emplace_back(m, a);
  }
  if (moment.entries.empty()) moment.entries.emplace_back(uniform_int(0, M - 1), 1.0);
  for (auto [m, a] : moment.entries) moment.rhs += a * anchor[m];
  moment.rhs = std::round(moment.rhs * kDen) / kDen;
  inst.model.constraints = ConstraintSystem(M, {SimplexRow(M), moment});

  switch (uniform_int(0, 2)) {
    case 0:
      inst.p_star = inst.model.pushforward.Apply(anchor);
      break;
    case 1:
      inst.p_star = inst.model.pushforward.Apply(lattice_pmf(M));
      break;
    default:
      inst.p_star = lattice_pmf(L);
      break;
  }
  return inst;
}

bool SuiteReport::passed() const {
  return instances > 0 && outside_disagreements == 0 && band_disagreements < 0.05 * instances &&
         max_bound_excess <= 1e-9 && max_duality_gap < 1e-8;
}

SuiteReport RunSuite(int count, std::uint64_t seed, int denominator, int bound_every, int bound_phi_levels) {
  SuiteReport report;
  const LatticeSpec grid{denominator, bound_phi_levels};
  const double band = 2.0 / denominator;
  for (int i = 0; i < count; ++i) {
    const Instance inst = RandomInstance(seed + static_cast<std::uint64_t>(i));
    const DiscrepancyResult lp = ComputeT(inst.model, inst.p_star);
    const LatticeMembership lat = Membership(inst.model, inst.p_star, grid);
    ++report.instances;
    if (lp.member) ++report.lp_members;
    if (std::isfinite(lp.T)) report.max_duality_gap = std::max(report.max_duality_gap, lp.duality_gap);
    if (lp.T > kMembershipTol && lp.T < band) ++report.band_cases;
    if (lp.member == lat.member) {
      ++report.agreements;
    } else if (lp.T < band) {
      ++report.band_disagreements;
    } else {
      ++report.outside_disagreements;
    }
    if (bound_every > 0 && i % bound_every == 0) {
      const double bound = TBound(inst.model, inst.p_star, grid);
      report.max_bound_excess = std::max(report.max_bound_excess, bound - lp.T);
    }
  }
  return report;
}

}  // namespace idset::oracle
