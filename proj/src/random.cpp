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

#include "idset/random.hpp"

#include <algorithm>

namespace idset {

std::vector<long> Multinomial(std::mt19937_64& rng, long n, const Eigen::VectorXd& p) {
  std::vector<long> counts(p.size(), 0);
  long left = n;
  double mass = 1.0;
  for (int i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
    counts[i] = std::binomial_distribution<long>(left, q)(rng);
    left -= counts[i];
    mass -= p[i];
  }
  if (p.size() > 0) counts[p.size() - 1] += left;
  return counts;
}

}  // namespace idset
