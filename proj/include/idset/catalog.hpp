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

// Model families and data generating processes: the cross-sectional maximum
// score designs and the two binary-choice panels.

#include <string>
#include <vector>

#include "idset/discrepancy.hpp"
#include "idset/model.hpp"

namespace idset {

enum class Family { kMaxScore, kPanelStrict, kPanelSequential };
std::string_view ToString(Family family);
Family FamilyFromString(std::string_view name);  // throws ConfigError

struct Scenario {
  std::string id;
  Family family = Family::kMaxScore;
  // Generating parameter, including any counterfactual targets at their true
  // values ("pe" for maximum score, "tau" for panels).
  ThetaPoint theta_star;
  std::string scan_coordinate = "beta2";
  std::vector<double> scan_values;

  // Maximum score: W = (x, u), Z = (x, y).
  std::vector<double> x_grid;
  std::vector<double> u_grid;
  bool uniform_errors = false;  // U|X uniform instead of proportional to 1/(1+u^2)
  bool partial_effect = false;  // add the x -> x+1 effect row at x_grid[0]

  // Panels: W = (a, v1, v2, x21, x22), Z = (x21, x22, y1, y2).
  std::vector<double> alpha_grid;
  std::vector<double> v_grid;
  std::vector<double> x21_grid;
  std::vector<double> x22_grid;
  bool equal_errors = false;  // V1 = V2 and a + V uniform; otherwise Gaussian weights
  // Period-1 ASF at x = 1 for the subpopulation (x21, x22) = (0, 1).
  bool asf = false;

  // Fix P(X = x) at its known value; off by default since T already embeds p*.
  bool pin_x_marginal = false;

  bool operator==(const Scenario&) const = default;
};

struct TruePmf {
  ProbabilityVector p_star;        // over the observable support
  ProbabilityVector latent_truth;  // over the latent support
};

// design_id in {"1", "2", "3", "4", "4b"}; throws UnknownDesign otherwise.
Scenario BuildMaxScoreDesign(const std::string& design_id);
// thin_v replaces the 61-point V grid by {-3, -2.5, ..., 3}.
Scenario BuildDgp1(int p, bool thin_v = false);
Scenario BuildDgp2();
// design1..design4b, dgp1_p4, dgp1_p5, dgp1_p10 (optionally with a "_thin"
// suffix) and dgp2. Throws UnknownDesign.
Scenario ScenarioById(const std::string& id);
std::vector<std::string> ScenarioIds();

// Enables the family's counterfactual row and stores its true value in
// theta_star.
Scenario WithTrueTargets(Scenario scenario);

// Checks grids and flags for consistency; throws ConfigError.
void ValidateScenario(const Scenario& scenario);

FiniteSupport ObservableSupport(const Scenario& scenario);
FiniteSupport LatentSupport(const Scenario& scenario);
// Latent pmf under the generating process and its image at theta_star.
TruePmf TrueDistribution(const Scenario& scenario);

FiniteModel AssembleMaxScoreModel(const Scenario& scenario, const ThetaPoint& theta);
// Strict exogeneity: simplex, stationarity given (a, x), optional ASF row.
FiniteModel AssemblePanelModel(const Scenario& scenario, const ThetaPoint& theta);
// Dispatches on the family; sequential panels get their strict model.
FiniteModel AssembleModel(const Scenario& scenario, const ThetaPoint& theta);
ModelFactory MakeFactory(const Scenario& scenario);

// theta_star with the scan coordinate replaced by each scan value.
std::vector<ThetaPoint> ThetaGrid(const Scenario& scenario);

struct PanelOutcome {
  bool y1 = false;
  bool y2 = false;
  // Offset of (y1, y2) within a covariate cell of the observable support.
  int offset() const { return (y1 ? 0 : 2) + (y2 ? 0 : 1); }
};
// Y_1 = 1{beta2 x21 + a + v1 >= 0}, Y_2 = 1{beta1 + beta2 x22 + a + v2 >= 0}.
PanelOutcome EvaluatePanel(double beta1, double beta2, double a, double v1, double v2, double x21, double x22);

}  // namespace idset
