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
#include "idset/sequential.hpp"

namespace {

using idset::Vector;

idset::GaSettings SmallGa(std::uint64_t seed = 5) {
  idset::GaSettings ga;
  ga.population = 16;
  ga.generations = 15;
  ga.seed = seed;
  return ga;
}

Vector RandomPhi(std::mt19937_64& rng, int L) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Vector phi(L);
  for (int l = 0; l < L; ++l) phi[l] = u(rng);
  return phi;
}

// Largest P(X2 = x2, V1 in A, V2 in B) over r = law of V1 on the 1/60 lattice.
// V2 given x2 has law r; V1 given x2 may be any a with q a <= r, so the
// coupling bound min(a(A), r(B)) is attained with a(A) = min(1, r(A)/q).
// Only the masses of the four atoms cut out by A and B matter.
double EventBound(const std::vector<bool>& in_a, const std::vector<bool>& in_b, double q) {
  bool present[4] = {false, false, false, false};
  for (std::size_t k = 0; k < in_a.size(); ++k) present[2 * in_a[k] + in_b[k]] = true;
  const int D = 60;
  double best = 0.0;
  for (int c0 = 0; c0 <= D; ++c0) {
    for (int c1 = 0; c0 + c1 <= D; ++c1) {
      for (int c2 = 0; c0 + c1 + c2 <= D; ++c2) {
        const int c[4] = {c0, c1, c2, D - c0 - c1 - c2};
        bool ok = true;
        for (int j = 0; j < 4; ++j) ok = ok && (present[j] || c[j] == 0);
        if (!ok) continue;
        const double ra = static_cast<double>(c[2] + c[3]) / D;
        const double rb = static_cast<double>(c[1] + c[3]) / D;
        best = std::max(best, q * std::min(std::min(1.0, ra / q), rb));
      }
    }
  }
  return best;
}

}  // namespace

TEST_CASE("cell grid") {
  const auto s = idset::BuildDgp2();
  const idset::SequentialModel m(s, s.theta_star, 0.05);
  CHECK(m.L() == 16);
  CHECK(m.cells().size() == 42);
  CHECK(m.cells()[0].q == (Vector(2) << 0, 1).finished());
  CHECK(m.cells()[20].q == (Vector(2) << 1, 0).finished());
  CHECK_THROWS(idset::SequentialModel(s, s.theta_star, 0.3));
  CHECK_THROWS(idset::SequentialModel(idset::ScenarioById("design1"), s.theta_star, 0.05));
}

TEST_CASE("constant features") {
  const auto s = idset::BuildDgp2();
  const idset::SequentialModel m(s, s.theta_star.with("beta2", 0.7), 0.25);
  for (int c = 0; c < static_cast<int>(m.cells().size()); ++c) {
    CHECK(m.InnerValue(Vector::Ones(16), c) == doctest::Approx(1.0));
    CHECK(m.InnerValue(Vector::Zero(16), c) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(m.InnerValueFull(Vector::Ones(16), c) == doctest::Approx(1.0));
  }
}

TEST_CASE("grouped and full cell programs agree") {
  std::mt19937_64 rng(8);
  const auto s = idset::BuildDgp2();
  for (double b2 : {-1.3, 0.0, 0.9}) {
    const idset::SequentialModel m(s, s.theta_star.with("beta2", b2), 0.25);
    for (int t = 0; t < 5; ++t) {
      const Vector phi = RandomPhi(rng, 16);
      for (int c = 0; c < static_cast<int>(m.cells().size()); ++c) {
        CHECK(m.InnerValue(phi, c) == doctest::Approx(m.InnerValueFull(phi, c)).epsilon(1e-10));
      }
    }
  }
}

TEST_CASE("indicator features against a coupling bound") {
  const auto s = idset::BuildDgp2();
  const auto theta = s.theta_star;
  const idset::SequentialModel m(s, theta, 0.05);
  const Vector q = (Vector(2) << 0.5, 0.5).finished();
  for (int x2 = 0; x2 < 2; ++x2) {
    for (int y1 : {1, 0}) {
      for (int y2 : {1, 0}) {
        const int z = 4 * x2 + (y1 ? 0 : 2) + (y2 ? 0 : 1);
        Vector phi = Vector::Zero(16);
        phi[z] = 1.0;
        std::vector<bool> in_a, in_b;
        for (double v : s.v_grid) {
          in_a.push_back((m.Observable(0.0, 0, x2, v, 0.0) / 2 % 2 == 0) == (y1 == 1));
          in_b.push_back((m.Observable(0.0, 0, x2, 0.0, v) % 2 == 0) == (y2 == 1));
        }
        const double lp = idset::InnerLpValue(phi, s, theta, 0.0, 0, q);
        CAPTURE(z);
        CHECK(lp == doctest::Approx(EventBound(in_a, in_b, 0.5)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("positive homogeneity of the cell value") {
  std::mt19937_64 rng(9);
  const auto s = idset::BuildDgp2();
  const idset::SequentialModel m(s, s.theta_star.with("beta2", 0.4), 0.25);
  for (int t = 0; t < 5; ++t) {
    const Vector phi = RandomPhi(rng, 16);
    for (double c : {0.0, 0.3, 0.8}) {
      CHECK(m.InnerValue(c * phi, 3) == doctest::Approx(c * m.InnerValue(phi, 3)).epsilon(1e-10));
    }
  }
}

TEST_CASE("truth is a member under sequential exogeneity") {
  const auto s = idset::BuildDgp2();
  const Vector p = idset::TrueDistribution(s).p_star.values();
  CHECK(idset::ComputeTSequentialExact(s, s.theta_star, p).T <= 1e-9);
  CHECK(idset::ComputeTSequential(s, s.theta_star, p, SmallGa()).member);
}

TEST_CASE("sequential discrepancy is dominated by the strict one") {
  const auto s = idset::BuildDgp2();
  const Vector p = idset::TrueDistribution(s).p_star.values();
  const auto factory = idset::MakeFactory(s);
  for (double b2 : {-2.5, -1.5, 0.0, 1.0, 2.0}) {
    const auto theta = s.theta_star.with("beta2", b2);
    const double strict = idset::ComputeT(factory(theta), p).T;
    const auto exact = idset::ComputeTSequentialExact(s, theta, p);
    const auto ga = idset::ComputeTSequential(s, theta, p, SmallGa());
    CAPTURE(b2);
    CHECK(exact.T <= strict + 1e-9);
    CHECK(ga.T <= exact.T + 1e-9);
    // The hull critic attains the exact value against every cell.
    const idset::SequentialModel m(s, theta, 0.05);
    CHECK(m.Evaluate(exact.phi_star, p).eta == doctest::Approx(exact.T).epsilon(1e-9));
  }
}

TEST_CASE("refining the q grid never increases T") {
  const auto s = idset::BuildDgp2();
  const Vector p = idset::TrueDistribution(s).p_star.values();
  for (double b2 : {-3.0, -1.5, 1.0, 2.0}) {
    const auto theta = s.theta_star.with("beta2", b2);
    CHECK(idset::ComputeTSequentialExact(s, theta, p, 0.05).T <=
          idset::ComputeTSequentialExact(s, theta, p, 0.25).T + 1e-12);
  }
}

TEST_CASE("genetic search is deterministic") {
  const auto s = idset::BuildDgp2();
  const Vector p = idset::TrueDistribution(s).p_star.values();
  const auto theta = s.theta_star.with("beta2", 3.0);
  idset::GaSettings ga = SmallGa(11);
  ga.generations = 100;
  const auto a = idset::ComputeTSequential(s, theta, p, ga, 0.25);
  const auto b = idset::ComputeTSequential(s, theta, p, ga, 0.25);
  const auto c = idset::ComputeTSequentialSerial(s, theta, p, ga, 0.25);
  CHECK(a.T == b.T);
  CHECK(a.T == c.T);
  CHECK(a.phi_star == c.phi_star);
  CHECK(a.T == doctest::Approx(idset::ComputeTSequentialExact(s, theta, p, 0.25).T).epsilon(1e-9));

  idset::GaSettings bad;
  bad.population = 1;
  CHECK_THROWS(bad.Validate());
  bad.population = 4;
  bad.generations = 0;
  CHECK_THROWS(bad.Validate());
}
