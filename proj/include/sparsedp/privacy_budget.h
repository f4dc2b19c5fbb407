// Copyright 2026 The sparsedp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPARSEDP_PRIVACY_BUDGET_H_
#define SPARSEDP_PRIVACY_BUDGET_H_

#include <cmath>
#include <sstream>
#include <string>

#include "sparsedp/error.h"

namespace sparsedp {

// An (epsilon, delta) differential privacy guarantee. Epsilon may be +inf
// (no guarantee) but never negative or NaN.
class PrivacyBudget {
 public:
  PrivacyBudget() = default;
  PrivacyBudget(double epsilon, double delta) : epsilon_(epsilon), delta_(delta) {
    require(!std::isnan(epsilon) && epsilon >= 0.0,
            ErrorCode::kInvalidParameter,
            "epsilon must be nonnegative, got " + std::to_string(epsilon));
    require(!std::isnan(delta) && delta >= 0.0 && delta <= 1.0,
            ErrorCode::kInvalidParameter,
            "delta must lie in [0, 1], got " + std::to_string(delta));
  }

  double epsilon() const { return epsilon_; }
  double delta() const { return delta_; }

  std::string to_string() const {
    std::ostringstream out;
    out.precision(17);
    out << "(" << epsilon_ << ", " << delta_ << ")";
    return out.str();
  }

  friend bool operator==(const PrivacyBudget&, const PrivacyBudget&) = default;

 private:
  double epsilon_ = 0.0;
  double delta_ = 0.0;
};

}  // namespace sparsedp

#endif  // SPARSEDP_PRIVACY_BUDGET_H_
