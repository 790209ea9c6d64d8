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

#include "idset/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>

#include "idset/errors.hpp"

namespace idset {

ProbabilityVector::ProbabilityVector(Vector values, double tol) : values_(std::move(values)) {
  if (values_.size() == 0) throw std::invalid_argument("empty probability vector");
  if (values_.minCoeff() < -tol) throw std::invalid_argument("negative probability");
  if (std::abs(values_.sum() - 1.0) > tol) {
    throw std::invalid_argument("probabilities do not sum to one");
  }
}

ProbabilityVector ProbabilityVector::FromWeights(const Vector& weights) {
  const double total = weights.sum();
  if (!(total > 0.0) || weights.minCoeff() < 0.0) {
    throw std::invalid_argument("weights must be nonnegative with positive total");
  }
  return ProbabilityVector(weights / total);
}

FiniteSupport::FiniteSupport(std::vector<std::string> fields, std::vector<SupportPoint> points)
    : fields_(std::move(fields)), points_(std::move(points)) {
  for (int i = 0; i < size(); ++i) {
    if (points_[i].size() != fields_.size()) throw std::invalid_argument("support point arity mismatch");
    if (!index_.emplace(points_[i], i).second) throw std::invalid_argument("duplicate support point");
  }
}

FiniteSupport FiniteSupport::Product(std::vector<std::string> fields,
                                     const std::vector<std::vector<double>>& grids) {
  if (fields.size() != grids.size()) throw std::invalid_argument("one grid per field required");
  std::vector<SupportPoint> points{SupportPoint{}};
  for (const auto& grid : grids) {
    if (grid.empty()) throw std::invalid_argument("empty grid");
    std::vector<SupportPoint> next;
    next.reserve(points.size() * grid.size());
    for (const auto& prefix : points) {
      for (double v : grid) {
        SupportPoint p = prefix;
        p.push_back(v);
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return FiniteSupport(std::move(fields), std::move(points));
}

int FiniteSupport::field(std::string_view name) const {
  for (size_t i = 0; i < fields_.size(); ++i) {
    if (fields_[i] == name) return static_cast<int>(i);
  }
  throw std::out_of_range("unknown support field: " + std::string(name));
}

std::optional<int> FiniteSupport::find(const SupportPoint& point) const {
  auto it = index_.find(point);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

ThetaPoint::ThetaPoint(std::vector<std::string> names, std::vector<double> values)
    : names_(std::move(names)), values_(std::move(values)) {
  if (names_.size() != values_.size()) throw std::invalid_argument("theta names/values mismatch");
}

bool ThetaPoint::has(std::string_view name) const {
  return std::find(names_.begin(), names_.end(), name) != names_.end();
}

double ThetaPoint::at(std::string_view name) const {
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return values_[i];
  }
  throw std::out_of_range("unknown theta coordinate: " + std::string(name));
}

ThetaPoint ThetaPoint::with(std::string_view name, double value) const {
  ThetaPoint out = *this;
  for (size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) {
      out.values_[i] = value;
      return out;
    }
  }
  out.names_.emplace_back(name);
  out.values_.push_back(value);
  return out;
}

PushforwardMatrix::PushforwardMatrix(int rows, std::vector<int> target_of_column)
    : rows_(rows), target_(std::move(target_of_column)) {
  for (int t : target_) {
    if (t < 0 || t >= rows_) throw std::invalid_argument("pushforward target out of range");
  }
}

Vector PushforwardMatrix::Apply(const Vector& latent) const {
  Vector out = Vector::Zero(rows_);
  for (int m = 0; m < cols(); ++m) out[target_[m]] += latent[m];
  return out;
}

Vector PushforwardMatrix::PullBack(const Vector& phi) const {
  Vector out(cols());
  for (int m = 0; m < cols(); ++m) out[m] = phi[target_[m]];
  return out;
}

SparseMatrix PushforwardMatrix::ToSparse() const {
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(target_.size());
  for (int m = 0; m < cols(); ++m) trips.emplace_back(target_[m], m, 1.0);
  SparseMatrix s(rows_, cols());
  s.setFromTriplets(trips.begin(), trips.end());
  return s;
}

Eigen::MatrixXd PushforwardMatrix::ToDense() const { return Eigen::MatrixXd(ToSparse()); }

std::string_view ToString(RowTag tag) {
  switch (tag) {
    case RowTag::kSimplex:
      return "simplex";
    case RowTag::kMedianZero:
      return "median_zero";
    case RowTag::kMoment:
      return "moment";
    case RowTag::kStationarity:
      return "stationarity";
    case RowTag::kCounterfactual:
      return "counterfactual";
  }
  return "?";
}

ConstraintSystem::ConstraintSystem(int columns, std::vector<ConstraintRow> rows) : source_(std::move(rows)) {
  std::vector<Eigen::Triplet<double>> trips;
  b_.resize(static_cast<int>(source_.size()));
  for (int r = 0; r < static_cast<int>(source_.size()); ++r) {
    const auto& row = source_[r];
    for (const auto& [col, v] : row.entries) {
      if (col < 0 || col >= columns) throw std::invalid_argument("constraint column out of range");
      trips.emplace_back(r, col, v);
    }
    b_[r] = row.rhs;
    tags_.push_back(row.tag);
    if (row.tag == RowTag::kSimplex) {
      if (simplex_row_ >= 0) throw std::invalid_argument("more than one simplex row");
      simplex_row_ = r;
    }
  }
  if (simplex_row_ < 0) throw std::invalid_argument("constraint system lacks a simplex row");
  a_.resize(static_cast<int>(source_.size()), columns);
  a_.setFromTriplets(trips.begin(), trips.end());
  a_.makeCompressed();
}

ConstraintSystem ConstraintSystem::Extended(std::vector<ConstraintRow> extra) const {
  std::vector<ConstraintRow> all = source_;
  for (auto& r : extra) all.push_back(std::move(r));
  return ConstraintSystem(cols(), std::move(all));
}

double ConstraintSystem::Residual(const Vector& latent) const {
  if (rows() == 0) return 0.0;
  return (a_ * latent - b_).lpNorm<Eigen::Infinity>();
}

void FiniteModel::Validate() const {
  if (pushforward.rows() != L() || pushforward.cols() != M() || constraints.cols() != M()) {
    throw std::invalid_argument("model dimensions inconsistent with supports");
  }
}

PushforwardMatrix BuildPushforward(const FiniteSupport& z_support, const FiniteSupport& w_support,
                                   const OutcomePredicate& predicate, const ThetaPoint& theta) {
  std::vector<int> target(w_support.size(), -1);
  for (int m = 0; m < w_support.size(); ++m) {
    int hits = 0;
    for (int l = 0; l < z_support.size(); ++l) {
      if (predicate(z_support[l], w_support[m], theta)) {
        ++hits;
        target[m] = l;
      }
    }
    if (hits != 1) {
      throw InvalidOutcomeMap("latent point " + std::to_string(m) + " maps to " + std::to_string(hits) +
                              " observable points");
    }
  }
  return PushforwardMatrix(z_support.size(), std::move(target));
}

ConstraintRow SimplexRow(int support_size) {
  if (support_size < 1) throw std::invalid_argument("simplex row needs a nonempty support");
  ConstraintRow row;
  row.tag = RowTag::kSimplex;
  row.rhs = 1.0;
  row.entries.reserve(support_size);
  for (int m = 0; m < support_size; ++m) row.entries.emplace_back(m, 1.0);
  return row;
}

namespace {

SupportPoint BlockKey(const SupportPoint& p, std::initializer_list<int> skip) {
  SupportPoint key;
  for (int i = 0; i < static_cast<int>(p.size()); ++i) {
    if (std::find(skip.begin(), skip.end(), i) == skip.end()) key.push_back(p[i]);
  }
  return key;
}

}  // namespace

std::vector<ConstraintRow> MedianZeroRows(const FiniteSupport& w_support, std::string_view u_field) {
  const int u = w_support.field(u_field);
  std::map<SupportPoint, ConstraintRow> blocks;
  std::vector<SupportPoint> order;
  std::map<SupportPoint, std::pair<bool, bool>> signs;
  for (int m = 0; m < w_support.size(); ++m) {
    const auto key = BlockKey(w_support[m], {u});
    auto [it, inserted] = blocks.try_emplace(key);
    if (inserted) {
      it->second.tag = RowTag::kMedianZero;
      order.push_back(key);
    }
    const double uv = w_support[m][u];
    if (uv < 0.0) {
      it->second.entries.emplace_back(m, 1.0);
      signs[key].first = true;
    } else if (uv > 0.0) {
      it->second.entries.emplace_back(m, -1.0);
      signs[key].second = true;
    }
  }
  std::vector<ConstraintRow> rows;
  for (const auto& key : order) {
    const auto [neg, pos] = signs[key];
    if (!neg || !pos) throw DegenerateSupport("median-zero block lacks negative or positive error values");
    rows.push_back(std::move(blocks[key]));
  }
  return rows;
}

std::vector<ConstraintRow> StationarityRows(const FiniteSupport& w_support, std::string_view u1_field,
                                            std::string_view u2_field) {
  const int f1 = w_support.field(u1_field);
  const int f2 = w_support.field(u2_field);
  std::set<double> grid1, grid2;
  for (const auto& p : w_support.points()) {
    grid1.insert(p[f1]);
    grid2.insert(p[f2]);
  }
  if (grid1 != grid2) throw GridMismatch("error grids of the two periods differ");
  const std::vector<double> grid(grid1.begin(), grid1.end());

  // Row for (block, u) collects +1 where u1 = u != u2 and -1 where u2 = u != u1.
  std::map<SupportPoint, int> block_id;
  std::vector<SupportPoint> blocks;
  std::vector<int> block_of(w_support.size());
  for (int m = 0; m < w_support.size(); ++m) {
    const auto key = BlockKey(w_support[m], {f1, f2});
    auto [it, inserted] = block_id.try_emplace(key, static_cast<int>(blocks.size()));
    if (inserted) blocks.push_back(key);
    block_of[m] = it->second;
  }
  const int nu = static_cast<int>(grid.size());
  auto grid_index = [&](double v) {
    return static_cast<int>(std::lower_bound(grid.begin(), grid.end(), v) - grid.begin());
  };
  std::vector<ConstraintRow> candidates(blocks.size() * nu);
  for (auto& r : candidates) r.tag = RowTag::kStationarity;
  for (int m = 0; m < w_support.size(); ++m) {
    const double a = w_support[m][f1];
    const double b = w_support[m][f2];
    if (a == b) continue;
    candidates[block_of[m] * nu + grid_index(a)].entries.emplace_back(m, 1.0);
    candidates[block_of[m] * nu + grid_index(b)].entries.emplace_back(m, -1.0);
  }
  std::vector<ConstraintRow> rows;
  for (auto& r : candidates) {
    if (!r.entries.empty()) rows.push_back(std::move(r));
  }
  return rows;
}

std::vector<ConstraintRow> CounterfactualRows(const FiniteSupport& w_support,
                                              const std::vector<CounterfactualTarget>& targets) {
  std::vector<ConstraintRow> rows;
  for (const auto& t : targets) {
    if (!t.subpopulation_mass) {
      throw UnknownSubpopulationMass("no subpopulation mass supplied for target '" + t.name + "'");
    }
    ConstraintRow row;
    row.tag = RowTag::kCounterfactual;
    row.rhs = t.value * *t.subpopulation_mass;
    for (int m = 0; m < w_support.size(); ++m) {
      const double c = t.coefficient(w_support[m]);
      if (c != 0.0) row.entries.emplace_back(m, c);
    }
    if (row.entries.empty()) {
      throw std::invalid_argument("counterfactual target '" + t.name + "' selects no latent point");
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

std::vector<double> LinearGrid(double first, double last, double step) {
  if (!(step > 0.0)) throw std::invalid_argument("grid step must be positive");
  const long count = std::lround((last - first) / step);
  if (count < 0) throw std::invalid_argument("grid end precedes start");
  std::vector<double> out;
  out.reserve(count + 1);
  for (long i = 0; i <= count; ++i) {
    const double v = first + static_cast<double>(i) * step;
    out.push_back(std::round(v * 1e12) / 1e12);
  }
  return out;
}

}  // namespace idset
