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

#include "doctest.h"
#include "idset/catalog.hpp"
#include "idset/errors.hpp"
#include "idset/oracle.hpp"

namespace {

using idset::Vector;
namespace oracle = idset::oracle;

idset::FiniteModel TwoPoint(std::vector<int> target) {
  idset::FiniteModel m;
  m.z_support = idset::FiniteSupport::Product({"z"}, {{0, 1}});
  m.w_support = idset::FiniteSupport::Product({"w"}, {{0, 1}});
  m.pushforward = idset::PushforwardMatrix(2, std::move(target));
  m.constraints = idset::ConstraintSystem(2, {idset::SimplexRow(2)});
  return m;
}

idset::FiniteModel Worked() {
  const auto s = idset::ScenarioById("design1");
  return idset::AssembleModel(s, s.theta_star);
}

const Vector kHalf = (Vector(2) << 0.5, 0.5).finished();
const Vector kWorked = (Vector(4) << 0.15, 0.35, 0.25, 0.25).finished();

}  // namespace

TEST_CASE("lattice membership on two points") {
  const auto id = oracle::Membership(TwoPoint({0, 1}), kHalf, {2, 4});
  CHECK(id.member);
  CHECK(id.best_tv == 0.0);
  const auto lumped = oracle::Membership(TwoPoint({0, 0}), kHalf, {60, 4});
  CHECK_FALSE(lumped.member);
  CHECK(lumped.best_tv == doctest::Approx(0.5));
}

TEST_CASE("lattice checks on the worked instance") {
  const auto model = Worked();
  const auto mem = oracle::Membership(model, kWorked, {60, 20});
  CHECK_FALSE(mem.member);
  CHECK(mem.best_tv >= 0.35 - 1e-12);
  CHECK(mem.lattice_points == 8259888);  // C(65, 5)
  const double bound = oracle::TBound(model, kWorked, {60, 20});
  CHECK(bound >= 0.34);
  CHECK(bound <= 0.35 + 1e-12);
  CHECK(bound >= 0.35 - 1.0 / 60);
}

TEST_CASE("lattice bound is small inside the identified set") {
  const auto s = idset::ScenarioById("design1");
  const auto truth = idset::TrueDistribution(s);
  const double bound = oracle::TBound(Worked(), truth.p_star.values(), {60, 10});
  CHECK(bound <= 2.0 / 10);
  CHECK(bound <= 1e-12);
}

TEST_CASE("guard rails") {
  const auto big = idset::AssembleModel(idset::ScenarioById("design2"), idset::ScenarioById("design2").theta_star);
  CHECK_THROWS_AS(oracle::Membership(big, Vector::Constant(4, 0.25), {10, 5}), idset::GuardRail);
  CHECK_THROWS_AS(oracle::Membership(Worked(), kWorked, {61, 5}), idset::GuardRail);
  CHECK_THROWS_AS(oracle::TBound(Worked(), kWorked, {60, 21}), idset::GuardRail);
  CHECK_THROWS_AS(oracle::Membership(Worked(), kWorked, {0, 5}), idset::GuardRail);
}

TEST_CASE("latent vertices of the worked polytope") {
  const auto v = oracle::LatentVertices(Worked());
  // Per x block the median-zero slice of the simplex has vertices at u = 0
  // and at the symmetric pair, so there are 2 x 2 product vertices.
  CHECK(v.size() == 4);
  for (const auto& p : v) {
    CHECK(p.minCoeff() >= 0.0);
    CHECK(Worked().constraints.Residual(p) < 1e-12);
  }
}

TEST_CASE("random instances are deterministic and well formed") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto a = oracle::RandomInstance(seed);
    const auto b = oracle::RandomInstance(seed);
    CHECK(a.p_star == b.p_star);
    CHECK(a.model.L() <= 4);
    CHECK(a.model.M() <= 5);
    CHECK(a.model.R() == 2);
    CHECK(a.p_star.sum() == doctest::Approx(1.0));
    CHECK(std::abs(std::round(a.p_star[0] * 60) - a.p_star[0] * 60) < 1e-9);
  }
}

TEST_CASE("lower bound never exceeds T") {
  for (std::uint64_t seed = 1000; seed < 1040; ++seed) {
    const auto inst = oracle::RandomInstance(seed);
    const double t = idset::ComputeT(inst.model, inst.p_star).T;
    CHECK(oracle::TBound(inst.model, inst.p_star, {30, 6}) <= t + 1e-9);
  }
}

TEST_CASE("oracle suite agrees with the LP") {
  const auto report = oracle::RunSuite(200, 777);
  CHECK(report.instances == 200);
  CHECK(report.outside_disagreements == 0);
  CHECK(report.band_disagreements < 10);
  CHECK(report.max_bound_excess <= 1e-9);
  CHECK(report.max_duality_gap < 1e-8);
  CHECK(report.lp_members > 0);
  CHECK(report.lp_members < 200);
  CHECK(report.passed());
}
