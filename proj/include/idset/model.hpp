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

// Finite-support model at one parameter point: supports of observables and
// latents, the 0/1 pushforward matrix, and the linear restrictions on the
// latent pmf.

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

namespace idset {

using Vector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;

// A pmf over a finite support.
class ProbabilityVector {
 public:
  ProbabilityVector() = default;
  // Throws std::invalid_argument unless entries are >= 0 and sum to 1 within tol.
  explicit ProbabilityVector(Vector values, double tol = 1e-10);
  static ProbabilityVector FromWeights(const Vector& weights);

  const Vector& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int i) const { return values_[i]; }

 private:
  Vector values_;
};

using SupportPoint = std::vector<double>;

class FiniteSupport {
 public:
  FiniteSupport() = default;
  // Throws std::invalid_argument on duplicate points or arity mismatch.
  FiniteSupport(std::vector<std::string> fields, std::vector<SupportPoint> points);

  // Cartesian product in lexicographic order: the first grid varies slowest
  // and each grid keeps its declared order.
  static FiniteSupport Product(std::vector<std::string> fields,
                               const std::vector<std::vector<double>>& grids);

  int size() const { return static_cast<int>(points_.size()); }
  const SupportPoint& operator[](int i) const { return points_[i]; }
  const std::vector<SupportPoint>& points() const { return points_; }
  const std::vector<std::string>& fields() const { return fields_; }
  // Throws std::out_of_range for an unknown field.
  int field(std::string_view name) const;
  std::optional<int> find(const SupportPoint& point) const;

 private:
  std::vector<std::string> fields_;
  std::vector<SupportPoint> points_;
  std::map<SupportPoint, int> index_;
};

class ThetaPoint {
 public:
  ThetaPoint() = default;
  ThetaPoint(std::vector<std::string> names, std::vector<double> values);

  const std::vector<std::string>& names() const { return names_; }
  const std::vector<double>& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  bool has(std::string_view name) const;
  double at(std::string_view name) const;
  ThetaPoint with(std::string_view name, double value) const;

  bool operator==(const ThetaPoint&) const = default;

 private:
  std::vector<std::string> names_;
  std::vector<double> values_;
};

// Column-stochastic 0/1 matrix: each latent point maps to one observable.
class PushforwardMatrix {
 public:
  PushforwardMatrix() = default;
  PushforwardMatrix(int rows, std::vector<int> target_of_column);

  int rows() const { return rows_; }
  int cols() const { return static_cast<int>(target_.size()); }
  int target(int column) const { return target_[column]; }
  const std::vector<int>& targets() const { return target_; }
  double operator()(int row, int column) const { return target_[column] == row ? 1.0 : 0.0; }

  // Model pmf of observables induced by a latent pmf.
  Vector Apply(const Vector& latent) const;
  // phi' Ctilde as a row over latent points.
  Vector PullBack(const Vector& phi) const;
  SparseMatrix ToSparse() const;
  Eigen::MatrixXd ToDense() const;

 private:
  int rows_ = 0;
  std::vector<int> target_;
};

enum class RowTag { kSimplex, kMedianZero, kMoment, kStationarity, kCounterfactual };
std::string_view ToString(RowTag tag);

struct ConstraintRow {
  std::vector<std::pair<int, double>> entries;  // (latent column, coefficient)
  double rhs = 0.0;
  RowTag tag = RowTag::kMoment;
};

class ConstraintSystem {
 public:
  ConstraintSystem() = default;
  // Throws std::invalid_argument unless exactly one simplex row is present.
  ConstraintSystem(int columns, std::vector<ConstraintRow> rows);

  int rows() const { return static_cast<int>(b_.size()); }
  int cols() const { return static_cast<int>(a_.cols()); }
  const SparseMatrix& A() const { return a_; }
  const Vector& b() const { return b_; }
  const std::vector<RowTag>& tags() const { return tags_; }
  int simplex_row() const { return simplex_row_; }

  // Appends rows; the result must still carry exactly one simplex row.
  ConstraintSystem Extended(std::vector<ConstraintRow> extra) const;
  // Largest |A p - b| for a latent pmf.
  double Residual(const Vector& latent) const;

 private:
  std::vector<ConstraintRow> source_;
  SparseMatrix a_;
  Vector b_;
  std::vector<RowTag> tags_;
  int simplex_row_ = -1;
};

struct FiniteModel {
  FiniteSupport z_support;
  FiniteSupport w_support;
  ThetaPoint theta;
  PushforwardMatrix pushforward;
  ConstraintSystem constraints;

  int L() const { return z_support.size(); }
  int M() const { return w_support.size(); }
  int R() const { return constraints.rows(); }
  // Throws std::invalid_argument on dimension mismatch.
  void Validate() const;
};

using OutcomePredicate =
    std::function<bool(std::span<const double> z, std::span<const double> w, const ThetaPoint&)>;

// Entry (l, m) = predicate(z_l, w_m, theta). Throws InvalidOutcomeMap when a
// column does not select exactly one observable point.
PushforwardMatrix BuildPushforward(const FiniteSupport& z_support, const FiniteSupport& w_support,
                                   const OutcomePredicate& predicate, const ThetaPoint& theta);

ConstraintRow SimplexRow(int support_size);

// One row per x-block of an (x..., u) support: +1 on u < 0, -1 on u > 0.
// `u_field` names the error coordinate; every other field identifies the block.
// Throws DegenerateSupport when a block lacks negative or positive u.
std::vector<ConstraintRow> MedianZeroRows(const FiniteSupport& w_support, std::string_view u_field);

// Equal marginals of two error coordinates within each block formed by the
// remaining fields: for every block and grid value u, +1 where u1 = u != u2
// and -1 where u2 = u != u1. Zero rows are dropped. Throws GridMismatch when
// the two coordinates take different value sets.
std::vector<ConstraintRow> StationarityRows(const FiniteSupport& w_support, std::string_view u1_field,
                                            std::string_view u2_field);

struct CounterfactualTarget {
  std::string name;
  double value = 0.0;  // tau
  // Coefficient on each latent point; zero outside the subpopulation.
  std::function<double(std::span<const double> w)> coefficient;
  std::optional<double> subpopulation_mass;
};

// Row sum_w coefficient(w) p_W(w) = value * mass for each target. Throws
// UnknownSubpopulationMass when a mass is missing and std::invalid_argument
// when the coefficient vanishes on every latent point.
std::vector<ConstraintRow> CounterfactualRows(const FiniteSupport& w_support,
                                              const std::vector<CounterfactualTarget>& targets);

// Index comparisons on grids built from decimal steps use this slack so that
// ties such as 0.5 - 0.5 >= 0 resolve the same way regardless of rounding.
inline constexpr double kIndexTol = 1e-9;
inline bool NonNegativeIndex(double v) { return v >= -kIndexTol; }

// Evenly spaced grid from `first` to `last`, each value rounded to 1e-12 so
// that decimal grids reproduce exactly.
std::vector<double> LinearGrid(double first, double last, double step);

}  // namespace idset
