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
#include <random>

#include "doctest.h"
#include "idset/catalog.hpp"
#include "idset/discrepancy.hpp"
#include "idset/oracle.hpp"

namespace {

using idset::Vector;

idset::FiniteModel WorkedModel() {
  auto s = idset::ScenarioById("design1");
  return idset::AssembleModel(s, s.theta_star);
}

Vector WorkedPstar() { return (Vector(4) << 0.15, 0.35, 0.25, 0.25).finished(); }

idset::FiniteModel Tiny(const Eigen::MatrixXd& c, std::vector<idset::ConstraintRow> extra = {}) {
  idset::FiniteModel m;
  std::vector<double> zs(c.rows()), ws(c.cols());
  for (int l = 0; l < c.rows(); ++l) zs[l] = l;
  std::vector<int> target(c.cols());
  for (int k = 0; k < c.cols(); ++k) {
    ws[k] = k;
    c.col(k).maxCoeff(&target[k]);
  }
  m.z_support = idset::FiniteSupport::Product({"z"}, {zs});
  m.w_support = idset::FiniteSupport::Product({"w"}, {ws});
  m.pushforward = idset::PushforwardMatrix(static_cast<int>(c.rows()), target);
  extra.insert(extra.begin(), idset::SimplexRow(static_cast<int>(c.cols())));
  m.constraints = idset::ConstraintSystem(static_cast<int>(c.cols()), extra);
  return m;
}

// min over the model of phi'(p* - Ctilde p), by a separate LP over p.
double Defender(const idset::FiniteModel& model, const Vector& p_star, const Vector& phi) {
  idset::lp::Problem prob = idset::lp::Problem::NonNegative(model.M());
  prob.objective = model.pushforward.PullBack(phi);
  prob.eq_matrix = model.constraints.A();
  prob.eq_rhs = model.constraints.b();
  const auto sol = idset::lp::Solve(prob);
  REQUIRE(sol.optimal());
  return phi.dot(p_star) - sol.objective_value;
}

}  // namespace

TEST_CASE("game matrix") {
  const auto id = Tiny(Eigen::MatrixXd::Identity(2, 2));
  const Eigen::MatrixXd g = idset::AssembleGameMatrix((Vector(2) << 0.5, 0.5).finished(), id.pushforward);
  CHECK(g == (Eigen::MatrixXd(2, 2) << -0.5, 0.5, 0.5, -0.5).finished());

  const auto model = WorkedModel();
  const Vector p = WorkedPstar();
  const Eigen::MatrixXd c = idset::AssembleGameMatrix(p, model.pushforward);
  const Eigen::MatrixXd dense = model.pushforward.ToDense();
  for (int m = 0; m < 6; ++m) CHECK((c.col(m) - (p - dense.col(m))).norm() == 0.0);
  CHECK(c(0, 0) == doctest::Approx(-0.85));
  CHECK(c(1, 3) == doctest::Approx(0.35));
}

TEST_CASE("worked exclusion instance") {
  const auto model = WorkedModel();
  const Vector p = WorkedPstar();
  const auto r = idset::ComputeT(model, p);
  CHECK(r.T == doctest::Approx(0.35).epsilon(1e-9));
  CHECK_FALSE(r.member);
  CHECK(r.duality_gap < 1e-12);
  // The returned critic attains the value against the best defender.
  CHECK(Defender(model, p, r.phi_star) == doctest::Approx(0.35).epsilon(1e-9));
  // The indicator of (x=0, y=0) is optimal: that row of Ctilde is zero.
  CHECK(Defender(model, p, (Vector(4) << 0, 1, 0, 0).finished()) == doctest::Approx(0.35));
  // lambda'b = T and A'lambda <= (p*'phi) 1 - Ctilde'phi.
  CHECK(r.dual_lambda.dot(model.constraints.b()) == doctest::Approx(0.35));
  const Vector slack = Vector::Constant(6, p.dot(r.phi_star)) - model.pushforward.PullBack(r.phi_star) -
                       model.constraints.A().transpose() * r.dual_lambda;
  CHECK(slack.minCoeff() > -1e-9);

  const auto direct = idset::ComputeTDirect(model, p);
  CHECK(direct.T == doctest::Approx(0.35).epsilon(1e-9));
}

TEST_CASE("data generated by the model give zero") {
  std::mt19937_64 rng(3);
  const auto model = WorkedModel();
  for (int trial = 0; trial < 20; ++trial) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    // Symmetric in u within each x block, so median-zero holds.
    Vector pw(6);
    for (int x = 0; x < 2; ++x) {
      const double tail = u(rng), mid = u(rng);
      pw.segment(3 * x, 3) << tail, mid, tail;
    }
    pw /= pw.sum();
    const auto r = idset::ComputeT(model, model.pushforward.Apply(pw));
    CHECK(r.T <= 1e-12);
    CHECK(r.member);
    CHECK(r.T >= 0.0);
  }
}

TEST_CASE("infeasible constraints give an infinite sentinel") {
  idset::ConstraintRow impossible;
  impossible.entries = {{0, 1.0}};
  impossible.rhs = 2.0;
  const auto model = Tiny(Eigen::MatrixXd::Identity(2, 2), {impossible});
  const auto r = idset::ComputeT(model, (Vector(2) << 0.5, 0.5).finished());
  CHECK(std::isinf(r.T));
  CHECK_FALSE(r.member);
  CHECK(std::isinf(idset::ComputeTDirect(model, (Vector(2) << 0.5, 0.5).finished()).T));
}

TEST_CASE("both LP orientations agree on random instances") {
  for (std::uint64_t seed = 0; seed < 150; ++seed) {
    const auto inst = idset::oracle::RandomInstance(seed);
    const auto a = idset::ComputeT(inst.model, inst.p_star);
    const auto b = idset::ComputeTDirect(inst.model, inst.p_star);
    CHECK(a.T == doctest::Approx(b.T).epsilon(1e-9));
    CHECK(a.member == b.member);
    CHECK(a.dual_lambda.dot(inst.model.constraints.b()) == doctest::Approx(a.T).epsilon(1e-9));
    CHECK(Defender(inst.model, inst.p_star, a.phi_star) == doctest::Approx(a.T).epsilon(1e-9));
  }
}

TEST_CASE("feature box scaling multiplies T") {
  for (std::uint64_t seed = 200; seed < 260; ++seed) {
    const auto inst = idset::oracle::RandomInstance(seed);
    const auto base = idset::ComputeT(inst.model, inst.p_star);
    for (double c : {0.25, 2.0, 7.0}) {
      const auto scaled = idset::ComputeTDirect(inst.model, inst.p_star, c);
      CHECK(scaled.T == doctest::Approx(c * base.T).epsilon(1e-9));
      CHECK(scaled.member == base.member);
    }
  }
}

TEST_CASE("extra constraints never decrease T") {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> coef(-2, 2);
  std::uniform_real_distribution<double> rhs(-0.5, 0.5);
  for (std::uint64_t seed = 300; seed < 400; ++seed) {
    const auto inst = idset::oracle::RandomInstance(seed);
    const auto base = idset::ComputeT(inst.model, inst.p_star);
    idset::ConstraintRow row;
    for (int m = 0; m < inst.model.M(); ++m) row.entries.emplace_back(m, coef(rng));
    row.rhs = rhs(rng);
    auto bigger = inst.model;
    bigger.constraints = inst.model.constraints.Extended({row});
    const auto more = idset::ComputeT(bigger, inst.p_star);
    CHECK(more.T >= base.T - 1e-12);
  }
}

TEST_CASE("extremal-point program") {
  const Vector half = (Vector(2) << 0.5, 0.5).finished();
  CHECK(idset::ComputeTExtremal(half, {half}).T == doctest::Approx(0.0));
  const auto r = idset::ComputeTExtremal(half, {(Vector(2) << 1, 0).finished()});
  CHECK(r.T == doctest::Approx(0.5));
  CHECK(r.phi_star[0] == doctest::Approx(0.0));
  CHECK(r.phi_star[1] == doctest::Approx(1.0));

  const auto model = WorkedModel();
  std::vector<Vector> images;
  for (const auto& v : idset::oracle::LatentVertices(model)) images.push_back(model.pushforward.Apply(v));
  CHECK(images.size() >= 2);
  const auto ex = idset::ComputeTExtremal(WorkedPstar(), images);
  CHECK(ex.T == doctest::Approx(0.35).epsilon(1e-8));

  for (std::uint64_t seed = 500; seed < 600; ++seed) {
    const auto inst = idset::oracle::RandomInstance(seed);
    std::vector<Vector> imgs;
    for (const auto& v : idset::oracle::LatentVertices(inst.model)) imgs.push_back(inst.model.pushforward.Apply(v));
    REQUIRE_FALSE(imgs.empty());
    CHECK(std::abs(idset::ComputeTExtremal(inst.p_star, imgs).T - idset::ComputeT(inst.model, inst.p_star).T) < 1e-8);
  }
}

TEST_CASE("member intervals split at gaps") {
  std::vector<idset::ThetaPoint> grid;
  std::vector<idset::DiscrepancyResult> res;
  const bool pattern[] = {false, true, true, false, true, false, true, true};
  for (int i = 0; i < 8; ++i) {
    grid.emplace_back(std::vector<std::string>{"b"}, std::vector<double>{0.1 * i});
    idset::DiscrepancyResult r;
    r.member = pattern[i];
    res.push_back(r);
  }
  const auto iv = idset::MemberIntervals(grid, res, "b");
  REQUIRE(iv.size() == 3);
  CHECK(iv[0].first == 1);
  CHECK(iv[0].last == 2);
  CHECK(iv[1].lo == doctest::Approx(0.4));
  CHECK(iv[1].hi == doctest::Approx(0.4));
  CHECK(iv[2].hi == doctest::Approx(0.7));
}

TEST_CASE("parallel scan matches the serial reference") {
  const auto s = idset::ScenarioById("design3");
  const auto truth = idset::TrueDistribution(s);
  const auto grid = idset::ThetaGrid(s);
  const auto par = idset::Scan(idset::MakeFactory(s), grid, truth.p_star.values());
  const auto ser = idset::ScanSerial(idset::MakeFactory(s), grid, truth.p_star.values());
  REQUIRE(par.results.size() == grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    CHECK(par.results[i].T == ser.results[i].T);
    CHECK(par.results[i].member == ser.results[i].member);
  }
  CHECK(par.summary.count("beta2") == 1);
  CHECK(par.summary.count("beta1") == 0);

  const auto one = idset::Scan(idset::MakeFactory(s), {s.theta_star}, truth.p_star.values());
  CHECK(one.results[0].member);
}
