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

// Counter-based seeding: every (seed, stream, index) triple gets its own
// generator, so results do not depend on evaluation order or thread count.

#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace idset {

inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t StreamSeed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return SplitMix64(SplitMix64(SplitMix64(seed) ^ stream) ^ index);
}

inline std::mt19937_64 StreamRng(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  return std::mt19937_64(StreamSeed(seed, stream, index));
}

// n draws from the pmf p, returned as counts per category.
std::vector<long> Multinomial(std::mt19937_64& rng, long n, const Eigen::VectorXd& p);

}  // namespace idset
