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

#include <cmath>

#include "doctest.h"
#include "idset/catalog.hpp"
#include "idset/errors.hpp"
#include "idset/oracle.hpp"

namespace {

using idset::Vector;

double Width(const idset::ThetaScan& scan) {
  const auto& iv = scan.summary.at("beta2");
  if (iv.empty()) return 0.0;
  return iv.back().hi - iv.front().lo;
}

idset::ThetaScan ScanScenario(const idset::Scenario& s) {
  return idset::Scan(idset::MakeFactory(s), idset::ThetaGrid(s), idset::TrueDistribution(s).p_star.values());
}

}  // namespace

TEST_CASE("design 1 truth") {
  const auto s = idset::ScenarioById("design1");
  const auto truth = idset::TrueDistribution(s);
  const Vector latent = truth.latent_truth.values();
  CHECK(latent[0] == doctest::Approx(0.125));
  CHECK(latent[1] == doctest::Approx(0.25));
  CHECK(latent[2] == doctest::Approx(0.125));
  CHECK(2 * latent.segment(3, 3) == (Vector(3) << 0.25, 0.5, 0.25).finished());
  const Vector p = truth.p_star.values();
  CHECK(p == (Vector(4) << 0.5, 0, 0.375, 0.125).finished());
}

TEST_CASE("design grids") {
  const auto d2 = idset::ScenarioById("design2");
  CHECK(d2.u_grid.size() == 101);
  CHECK(d2.u_grid[50] == 0.0);
  CHECK(idset::ScenarioById("design3").x_grid.size() == 7);
  const auto d4 = idset::ScenarioById("design4");
  const auto d4b = idset::ScenarioById("design4b");
  CHECK(d4.x_grid.size() == 25);
  CHECK(d4.x_grid == d4b.x_grid);
  CHECK(d4.u_grid == d4b.u_grid);
  CHECK_FALSE(d4.uniform_errors);
  CHECK(d4b.uniform_errors);
  const Vector t4b = idset::TrueDistribution(d4b).latent_truth.values();
  CHECK(t4b.maxCoeff() == doctest::Approx(t4b.minCoeff()));
  CHECK(idset::ThetaGrid(d4).size() == 201);
  CHECK_THROWS_AS(idset::ScenarioById("design5"), idset::UnknownDesign);
  CHECK_THROWS_AS(idset::ScenarioById("dgp3"), idset::UnknownDesign);
}

TEST_CASE("maximum score pushforward matches the generic builder") {
  for (const char* id : {"design1", "design3"}) {
    const auto s = idset::ScenarioById(id);
    auto predicate = [](std::span<const double> z, std::span<const double> w, const idset::ThetaPoint& t) {
      if (z[0] != w[0]) return false;
      return (z[1] == 1.0) == idset::NonNegativeIndex(t.at("beta1") + t.at("beta2") * w[0] - w[1]);
    };
    for (double b2 : {-1.0, -0.5, 0.25}) {
      const auto theta = s.theta_star.with("beta2", b2);
      const auto model = idset::AssembleModel(s, theta);
      const auto generic = idset::BuildPushforward(model.z_support, model.w_support, predicate, theta);
      CHECK(generic.targets() == model.pushforward.targets());
    }
  }
}

TEST_CASE("dgp1 supports") {
  const auto s = idset::BuildDgp1(4);
  CHECK(s.alpha_grid.size() == 5);
  CHECK(s.v_grid.size() == 61);
  const auto truth = idset::TrueDistribution(s);
  const auto w = idset::LatentSupport(s);
  CHECK(w.size() == 5 * 61 * 61 * 9);
  CHECK(idset::ObservableSupport(s).size() == 36);
  const Vector& p = truth.latent_truth.values();
  int mode = 0;
  p.maxCoeff(&mode);
  CHECK(w[mode][0] == 0.0);
  CHECK(w[mode][1] == 0.0);
  CHECK(w[mode][2] == 0.0);
  // X22 is uniform on {-4, ..., 4}.
  std::vector<double> mass(9, 0.0);
  for (int m = 0; m < w.size(); ++m) mass[static_cast<int>(w[m][4]) + 4] += p[m];
  for (double v : mass) CHECK(v == doctest::Approx(1.0 / 9));
  const auto thin = idset::ScenarioById("dgp1_p4_thin");
  CHECK(thin.v_grid.size() == 13);
  CHECK(idset::AssembleModel(thin, thin.theta_star).R() == 5 * 9 * 13 + 1);
}

TEST_CASE("dgp2 supports") {
  const auto s = idset::BuildDgp2();
  REQUIRE(s.v_grid.size() == 11);
  CHECK(s.v_grid[1] - s.v_grid[0] == doctest::Approx(0.6));
  const auto w = idset::LatentSupport(s);
  const Vector p = idset::TrueDistribution(s).latent_truth.values();
  std::vector<double> by_v(11, 0.0), by_x(4, 0.0);
  for (int m = 0; m < w.size(); ++m) {
    if (p[m] > 0) CHECK(w[m][1] == w[m][2]);
    by_v[static_cast<int>(std::lround((w[m][1] + 3) / 0.6))] += p[m];
    by_x[static_cast<int>(2 * w[m][3] + w[m][4])] += p[m];
  }
  for (double v : by_v) CHECK(v == doctest::Approx(1.0 / 11));
  for (double v : by_x) CHECK(v == doctest::Approx(0.25));
  CHECK(s.theta_star.at("beta1") == 2.0);
}

TEST_CASE("truth satisfies every constraint and is a member") {
  for (const char* id : {"design1", "design2", "design3", "design4", "design4b", "dgp2", "dgp1_p4_thin"}) {
    for (bool targets : {false, true}) {
      auto s = idset::ScenarioById(id);
      if (targets) s = idset::WithTrueTargets(s);
      const auto truth = idset::TrueDistribution(s);
      const auto model = idset::AssembleModel(s, s.theta_star);
      CAPTURE(id);
      CHECK(model.constraints.Residual(truth.latent_truth.values()) < 1e-12);
      const auto r = idset::ComputeT(model, truth.p_star.values());
      CHECK(r.T <= 1e-9);
      CHECK(r.member);
      CHECK(r.duality_gap < 1e-8);
    }
  }
}

TEST_CASE("pinning the covariate marginal only adds restrictions") {
  for (const char* id : {"design1", "design3", "dgp2", "dgp1_p4_thin"}) {
    auto s = idset::ScenarioById(id);
    auto pinned = s;
    pinned.pin_x_marginal = true;
    const auto truth = idset::TrueDistribution(s);
    const int cells = s.family == idset::Family::kMaxScore
                          ? static_cast<int>(s.x_grid.size())
                          : static_cast<int>(s.x21_grid.size() * s.x22_grid.size());
    CAPTURE(id);
    const auto base = idset::MakeFactory(s), pin = idset::MakeFactory(pinned);
    CHECK(pin(s.theta_star).R() == base(s.theta_star).R() + cells - 1);
    CHECK(pin(s.theta_star).constraints.Residual(truth.latent_truth.values()) < 1e-12);
    for (double b2 : {-1.5, -0.5, 0.0, 0.5}) {
      const auto theta = s.theta_star.with("beta2", b2);
      const double t0 = idset::ComputeT(base(theta), truth.p_star.values()).T;
      const double t1 = idset::ComputeT(pin(theta), truth.p_star.values()).T;
      CHECK(t1 >= t0 - 1e-9);
    }
    CHECK(idset::ComputeT(pin(s.theta_star), truth.p_star.values()).member);
  }
}

TEST_CASE("partial-effect and ASF targets") {
  const auto d1 = idset::WithTrueTargets(idset::ScenarioById("design1"));
  // Moving x from 0 to 1 at beta = (1, -0.5) switches u = 1 from y = 1 to 0.
  CHECK(d1.theta_star.at("pe") == doctest::Approx(-0.25));
  const auto model = idset::AssembleModel(d1, d1.theta_star);
  CHECK(model.constraints.tags().back() == idset::RowTag::kCounterfactual);
  const auto dense = Eigen::MatrixXd(model.constraints.A());
  CHECK(dense.row(model.R() - 1) == (Eigen::RowVectorXd(6) << 0, 0, -1, 0, 0, 0).finished());
  CHECK(model.constraints.b()[model.R() - 1] == doctest::Approx(-0.125));

  const auto g = idset::WithTrueTargets(idset::ScenarioById("dgp2"));
  const double tau = g.theta_star.at("tau");
  CHECK(tau > 0.0);
  CHECK(tau < 1.0);
  // a + V uniform on 11 points: P(-0.5 + s >= 0) counts s in {0.6, ..., 3}.
  CHECK(tau == doctest::Approx(5.0 / 11));
}

TEST_CASE("design 1 member set") {
  const auto s = idset::ScenarioById("design1");
  const auto scan = ScanScenario(s);
  const auto& iv = scan.summary.at("beta2");
  REQUIRE(iv.size() == 1);
  CHECK(iv[0].lo == doctest::Approx(-1.0));
  CHECK(iv[0].hi == doctest::Approx(-0.01));
  CHECK(iv[0].last - iv[0].first + 1 == 100);

  // Spot checks around both ends against the lattice oracle.
  const auto truth = idset::TrueDistribution(s);
  for (double b2 : {-1.01, -1.0, -0.5, -0.01, 0.0}) {
    const auto model = idset::AssembleModel(s, s.theta_star.with("beta2", b2));
    const auto lp = idset::ComputeT(model, truth.p_star.values());
    const auto lat = idset::oracle::Membership(model, truth.p_star.values(), {60, 10});
    CAPTURE(b2);
    CHECK(lp.member == lat.member);
  }
}

TEST_CASE("more regressor variation never widens the set") {
  const double w2 = Width(ScanScenario(idset::ScenarioById("design2")));
  const double w3 = Width(ScanScenario(idset::ScenarioById("design3")));
  const double w4 = Width(ScanScenario(idset::ScenarioById("design4")));
  CHECK(w2 >= w3);
  CHECK(w3 >= w4);
  CHECK(w4 > 0.0);
}
