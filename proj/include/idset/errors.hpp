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

#include <stdexcept>
#include <string>

namespace idset {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Pivot magnitudes collapsed even under Bland's rule.
class NumericalBreakdown : public Error {
 public:
  using Error::Error;
};

class SolverError : public Error {
 public:
  using Error::Error;
};

class InvalidOutcomeMap : public Error {
 public:
  using Error::Error;
};

class DegenerateSupport : public Error {
 public:
  using Error::Error;
};

class UnknownSubpopulationMass : public Error {
 public:
  using Error::Error;
};

class GridMismatch : public Error {
 public:
  using Error::Error;
};

class GuardRail : public Error {
 public:
  using Error::Error;
};

class UnknownDesign : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace idset
