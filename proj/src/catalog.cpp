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

#include "idset/catalog.hpp"

#include <cmath>
#include <memory>
#include <stdexcept>

#include "idset/errors.hpp"

namespace idset {

std::string_view ToString(Family family) {
  switch (family) {
    case Family::kMaxScore:
      return "maxscore_cs";
    case Family::kPanelStrict:
      return "panel_strict";
    case Family::kPanelSequential:
      return "panel_sequential";
  }
  return "?";
}

Family FamilyFromString(std::string_view name) {
  for (Family f : {Family::kMaxScore, Family::kPanelStrict, Family::kPanelSequential}) {
    if (ToString(f) == name) return f;
  }
  throw ConfigError("unknown model family: " + std::string(name));
}

namespace {

bool IsPanel(const Scenario& s) { return s.family != Family::kMaxScore; }

double Beta(const ThetaPoint& theta, const char* name) { return theta.at(name); }

bool MaxScoreY(const ThetaPoint& theta, double x, double u) {
  return NonNegativeIndex(Beta(theta, "beta1") + Beta(theta, "beta2") * x - u);
}

double ErrorWeight(const Scenario& s, double u) { return s.uniform_errors ? 1.0 : 1.0 / (1.0 + u * u); }

int Index(const std::vector<double>& grid, double v) {
  for (size_t i = 0; i < grid.size(); ++i) {
    if (grid[i] == v) return static_cast<int>(i);
  }
  return -1;
}

Vector MaxScoreLatentTruth(const Scenario& s) {
  const int nx = static_cast<int>(s.x_grid.size());
  const int nu = static_cast<int>(s.u_grid.size());
  Vector p(nx * nu);
  double z = 0.0;
  for (double u : s.u_grid) z += ErrorWeight(s, u);
  for (int i = 0; i < nx; ++i) {
    for (int j = 0; j < nu; ++j) p[i * nu + j] = ErrorWeight(s, s.u_grid[j]) / z / nx;
  }
  return p;
}

Vector PanelLatentTruth(const Scenario& s) {
  const auto w = LatentSupport(s);
  Vector p(w.size());
  for (int m = 0; m < w.size(); ++m) {
    const double a = w[m][0], v1 = w[m][1], v2 = w[m][2];
    if (s.equal_errors) {
      p[m] = v1 == v2 ? 1.0 : 0.0;
    } else {
      p[m] = std::exp(-0.5 * (v1 * v1 + v2 * v2 + a * a));
    }
  }
  // (a, V) is independent of X and X is uniform, so normalizing the whole
  // vector gives the right product law.
  return p / p.sum();
}

// One row per covariate cell but the last, which the simplex row implies.
std::vector<ConstraintRow> XMarginalRows(const std::vector<int>& cell_of_column, int cells, double mass) {
  std::vector<ConstraintRow> rows(cells > 0 ? cells - 1 : 0);
  for (auto& r : rows) r.rhs = mass;
  for (int m = 0; m < static_cast<int>(cell_of_column.size()); ++m) {
    if (cell_of_column[m] < cells - 1) rows[cell_of_column[m]].entries.emplace_back(m, 1.0);
  }
  return rows;
}

double XCellMass(const Scenario& s) {
  return 1.0 / static_cast<double>(s.x21_grid.size() * s.x22_grid.size());
}

double TruePartialEffect(const Scenario& s, const ThetaPoint& theta) {
  const double x0 = s.x_grid.front();
  double num = 0.0, den = 0.0;
  for (double u : s.u_grid) {
    const double w = ErrorWeight(s, u);
    num += w * (static_cast<double>(MaxScoreY(theta, x0 + 1, u)) - static_cast<double>(MaxScoreY(theta, x0, u)));
    den += w;
  }
  return num / den;
}

double TrueAsf(const Scenario& s, const ThetaPoint& theta) {
  const auto w = LatentSupport(s);
  const Vector p = PanelLatentTruth(s);
  const double beta2 = theta.at("beta2");
  double num = 0.0, den = 0.0;
  for (int m = 0; m < w.size(); ++m) {
    if (w[m][3] != 0.0 || w[m][4] != 1.0) continue;
    den += p[m];
    if (NonNegativeIndex(beta2 + w[m][0] + w[m][1])) num += p[m];
  }
  return num / den;
}

// Theta-free pieces of a panel model, reused across a scan.
struct PanelSkeleton {
  FiniteSupport z;
  FiniteSupport w;
  std::vector<ConstraintRow> base_rows;
  std::vector<int> x_cell;  // covariate cell of each latent point
  std::vector<int> asf_columns;
};

std::shared_ptr<const PanelSkeleton> MakePanelSkeleton(const Scenario& s) {
  auto sk = std::make_shared<PanelSkeleton>();
  sk->z = ObservableSupport(s);
  sk->w = LatentSupport(s);
  sk->base_rows.push_back(SimplexRow(sk->w.size()));
  for (auto& r : StationarityRows(sk->w, "v1", "v2")) sk->base_rows.push_back(std::move(r));
  const int n22 = static_cast<int>(s.x22_grid.size());
  sk->x_cell.resize(sk->w.size());
  for (int m = 0; m < sk->w.size(); ++m) {
    const auto& pt = sk->w[m];
    sk->x_cell[m] = Index(s.x21_grid, pt[3]) * n22 + Index(s.x22_grid, pt[4]);
    if (pt[3] == 0.0 && pt[4] == 1.0) sk->asf_columns.push_back(m);
  }
  if (s.pin_x_marginal) {
    const int cells = static_cast<int>(s.x21_grid.size()) * n22;
    for (auto& r : XMarginalRows(sk->x_cell, cells, XCellMass(s))) sk->base_rows.push_back(std::move(r));
  }
  return sk;
}

FiniteModel PanelFromSkeleton(const Scenario& s, const PanelSkeleton& sk, const ThetaPoint& theta) {
  FiniteModel model;
  model.z_support = sk.z;
  model.w_support = sk.w;
  model.theta = theta;
  const double beta1 = theta.at("beta1"), beta2 = theta.at("beta2");
  std::vector<int> target(sk.w.size());
  for (int m = 0; m < sk.w.size(); ++m) {
    const auto& p = sk.w[m];
    target[m] = 4 * sk.x_cell[m] + EvaluatePanel(beta1, beta2, p[0], p[1], p[2], p[3], p[4]).offset();
  }
  model.pushforward = PushforwardMatrix(sk.z.size(), std::move(target));
  std::vector<ConstraintRow> rows = sk.base_rows;
  if (s.asf) {
    ConstraintRow row;
    row.tag = RowTag::kCounterfactual;
    row.rhs = theta.at("tau") * XCellMass(s);
    for (int m : sk.asf_columns) {
      if (NonNegativeIndex(beta2 + sk.w[m][0] + sk.w[m][1])) row.entries.emplace_back(m, 1.0);
    }
    // An empty row forces tau = 0; keep it so the verdict stays correct.
    rows.push_back(std::move(row));
  }
  model.constraints = ConstraintSystem(sk.w.size(), std::move(rows));
  return model;
}

}  // namespace

PanelOutcome EvaluatePanel(double beta1, double beta2, double a, double v1, double v2, double x21, double x22) {
  return {NonNegativeIndex(beta2 * x21 + a + v1), NonNegativeIndex(beta1 + beta2 * x22 + a + v2)};
}

Scenario BuildMaxScoreDesign(const std::string& design_id) {
  Scenario s;
  s.id = "design" + design_id;
  s.family = Family::kMaxScore;
  s.theta_star = ThetaPoint({"beta1", "beta2"}, {1.0, -0.5});
  s.scan_values = LinearGrid(-1.5, 0.5, 0.01);
  if (design_id == "1") {
    s.x_grid = {0, 1};
    s.u_grid = {-1, 0, 1};
  } else if (design_id == "2") {
    s.x_grid = {0, 1};
    s.u_grid = LinearGrid(-5, 5, 0.1);
  } else if (design_id == "3") {
    s.x_grid = LinearGrid(-3, 3, 1);
    s.u_grid = LinearGrid(-5, 5, 0.1);
  } else if (design_id == "4" || design_id == "4b") {
    s.x_grid = LinearGrid(-3, 3, 0.25);
    s.u_grid = LinearGrid(-5, 5, 0.1);
    s.uniform_errors = design_id == "4b";
  } else {
    throw UnknownDesign("unknown maximum score design: " + design_id);
  }
  return s;
}

Scenario BuildDgp1(int p, bool thin_v) {
  if (p < 1) throw std::invalid_argument("dgp1 needs p >= 1");
  Scenario s;
  s.id = "dgp1_p" + std::to_string(p) + (thin_v ? "_thin" : "");
  s.family = Family::kPanelStrict;
  s.theta_star = ThetaPoint({"beta1", "beta2"}, {1.0, -0.5});
  s.scan_values = LinearGrid(-1.5, 0.5, 0.05);
  s.alpha_grid = LinearGrid(-2, 2, 1);
  s.v_grid = thin_v ? LinearGrid(-3, 3, 0.5) : LinearGrid(-3, 3, 0.1);
  s.x21_grid = {0};
  s.x22_grid = LinearGrid(-p, p, 1);
  return s;
}

Scenario BuildDgp2() {
  Scenario s;
  s.id = "dgp2";
  s.family = Family::kPanelSequential;
  s.theta_star = ThetaPoint({"beta1", "beta2"}, {2.0, -0.5});
  s.scan_values = LinearGrid(-3, 2, 0.25);
  s.alpha_grid = {0};
  s.v_grid = LinearGrid(-3, 3, 0.6);
  s.x21_grid = {0, 1};
  s.x22_grid = {0, 1};
  s.equal_errors = true;
  return s;
}

Scenario WithTrueTargets(Scenario s) {
  if (IsPanel(s)) {
    s.asf = true;
    s.theta_star = s.theta_star.with("tau", TrueAsf(s, s.theta_star));
  } else {
    s.partial_effect = true;
    s.theta_star = s.theta_star.with("pe", TruePartialEffect(s, s.theta_star));
  }
  return s;
}

std::vector<std::string> ScenarioIds() {
  return {"design1", "design2", "design3", "design4", "design4b", "dgp1_p4", "dgp1_p5", "dgp1_p10", "dgp2"};
}

Scenario ScenarioById(const std::string& id) {
  if (id.rfind("design", 0) == 0) return BuildMaxScoreDesign(id.substr(6));
  if (id == "dgp2") return BuildDgp2();
  for (int p : {4, 5, 10}) {
    const std::string base = "dgp1_p" + std::to_string(p);
    if (id == base) return BuildDgp1(p, false);
    if (id == base + "_thin") return BuildDgp1(p, true);
  }
  throw UnknownDesign("unknown scenario id: " + id);
}

void ValidateScenario(const Scenario& s) {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError(what);
  };
  require(!s.scan_values.empty(), "scan grid is empty");
  require(s.theta_star.has("beta1") && s.theta_star.has("beta2"), "theta needs beta1 and beta2");
  require(s.theta_star.has(s.scan_coordinate), "scan coordinate is not a theta coordinate");
  if (s.family == Family::kMaxScore) {
    require(!s.x_grid.empty() && !s.u_grid.empty(), "maximum score grids must be nonempty");
  } else {
    require(!s.alpha_grid.empty() && !s.v_grid.empty() && !s.x21_grid.empty() && !s.x22_grid.empty(),
            "panel grids must be nonempty");
    if (s.asf) {
      require(Index(s.x21_grid, 0.0) >= 0 && Index(s.x22_grid, 1.0) >= 0,
              "ASF subpopulation (x21, x22) = (0, 1) is not in the covariate grid");
    }
  }
}

FiniteSupport ObservableSupport(const Scenario& s) {
  if (s.family == Family::kMaxScore) return FiniteSupport::Product({"x", "y"}, {s.x_grid, {1, 0}});
  return FiniteSupport::Product({"x21", "x22", "y1", "y2"}, {s.x21_grid, s.x22_grid, {1, 0}, {1, 0}});
}

FiniteSupport LatentSupport(const Scenario& s) {
  if (s.family == Family::kMaxScore) return FiniteSupport::Product({"x", "u"}, {s.x_grid, s.u_grid});
  return FiniteSupport::Product({"a", "v1", "v2", "x21", "x22"},
                                {s.alpha_grid, s.v_grid, s.v_grid, s.x21_grid, s.x22_grid});
}

TruePmf TrueDistribution(const Scenario& s) {
  const Vector latent = IsPanel(s) ? PanelLatentTruth(s) : MaxScoreLatentTruth(s);
  const FiniteModel model = AssembleModel(s, s.theta_star);
  Vector p = model.pushforward.Apply(latent);
  return {ProbabilityVector(p / p.sum()), ProbabilityVector(latent)};
}

FiniteModel AssembleMaxScoreModel(const Scenario& s, const ThetaPoint& theta) {
  if (s.family != Family::kMaxScore) throw std::invalid_argument("not a maximum score scenario");
  FiniteModel model;
  model.z_support = ObservableSupport(s);
  model.w_support = LatentSupport(s);
  model.theta = theta;
  const int nu = static_cast<int>(s.u_grid.size());
  std::vector<int> target(model.w_support.size());
  for (int m = 0; m < model.w_support.size(); ++m) {
    const int xi = m / nu;
    target[m] = 2 * xi + (MaxScoreY(theta, s.x_grid[xi], s.u_grid[m % nu]) ? 0 : 1);
  }
  model.pushforward = PushforwardMatrix(model.z_support.size(), std::move(target));

  std::vector<ConstraintRow> rows{SimplexRow(model.w_support.size())};
  for (auto& r : MedianZeroRows(model.w_support, "u")) rows.push_back(std::move(r));
  if (s.pin_x_marginal) {
    std::vector<int> cell(model.w_support.size());
    for (int m = 0; m < model.w_support.size(); ++m) cell[m] = m / nu;
    const int nx = static_cast<int>(s.x_grid.size());
    for (auto& r : XMarginalRows(cell, nx, 1.0 / nx)) rows.push_back(std::move(r));
  }
  if (s.partial_effect) {
    const double x0 = s.x_grid.front();
    CounterfactualTarget pe;
    pe.name = "pe";
    pe.value = theta.at("pe");
    pe.subpopulation_mass = 1.0 / static_cast<double>(s.x_grid.size());
    pe.coefficient = [&](std::span<const double> w) {
      if (w[0] != x0) return 0.0;
      return static_cast<double>(MaxScoreY(theta, x0 + 1, w[1])) - static_cast<double>(MaxScoreY(theta, x0, w[1]));
    };
    ConstraintRow row;
    row.tag = RowTag::kCounterfactual;
    row.rhs = pe.value * *pe.subpopulation_mass;
    for (int m = 0; m < model.w_support.size(); ++m) {
      const double c = pe.coefficient(model.w_support[m]);
      if (c != 0.0) row.entries.emplace_back(m, c);
    }
    // A zero effect row pins pe to 0, which is still a valid restriction.
    rows.push_back(std::move(row));
  }
  model.constraints = ConstraintSystem(model.w_support.size(), std::move(rows));
  return model;
}

FiniteModel AssemblePanelModel(const Scenario& s, const ThetaPoint& theta) {
  if (!IsPanel(s)) throw std::invalid_argument("not a panel scenario");
  return PanelFromSkeleton(s, *MakePanelSkeleton(s), theta);
}

FiniteModel AssembleModel(const Scenario& s, const ThetaPoint& theta) {
  return IsPanel(s) ? AssemblePanelModel(s, theta) : AssembleMaxScoreModel(s, theta);
}

ModelFactory MakeFactory(const Scenario& scenario) {
  ValidateScenario(scenario);
  if (!IsPanel(scenario)) {
    return [scenario](const ThetaPoint& theta) { return AssembleMaxScoreModel(scenario, theta); };
  }
  auto sk = MakePanelSkeleton(scenario);
  return [scenario, sk](const ThetaPoint& theta) { return PanelFromSkeleton(scenario, *sk, theta); };
}

std::vector<ThetaPoint> ThetaGrid(const Scenario& s) {
  std::vector<ThetaPoint> grid;
  grid.reserve(s.scan_values.size());
  for (double v : s.scan_values) grid.push_back(s.theta_star.with(s.scan_coordinate, v));
  return grid;
}

}  // namespace idset
