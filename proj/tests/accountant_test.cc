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

#include <cmath>
#include <functional>
#include <limits>

#include "gtest/gtest.h"
#include "sparsedp/sparsedp.h"
#include "testing.h"

namespace sparsedp {
namespace {

namespace oracle = testing::oracle;

void ExpectCode(ErrorCode expected, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), expected) << e.what();
  }
}

TEST(AmplifyTest, ScalesLinearly) {
  const PrivacyBudget b = amplify_by_sampling(PrivacyBudget(0.5, 1e-6), SamplingRate(0.1));
  EXPECT_DOUBLE_EQ(b.epsilon(), 0.05);
  EXPECT_DOUBLE_EQ(b.delta(), 1e-7);
  const PrivacyBudget same = amplify_by_sampling(PrivacyBudget(0.7, 1e-3), SamplingRate(1.0));
  EXPECT_EQ(same, PrivacyBudget(0.7, 1e-3));
}

TEST(AmplifyTest, RefusesEpsilonAboveOne) {
  ExpectCode(ErrorCode::kAssumptionViolated,
             [] { amplify_by_sampling(PrivacyBudget(1.5, 1e-6), SamplingRate(0.1)); });
  ExpectCode(ErrorCode::kInvalidParameter, [] { SamplingRate(0.0); });
  ExpectCode(ErrorCode::kInvalidParameter, [] { SamplingRate(1.5); });
}

TEST(StrongComposeTest, WorkedExample) {
  const PrivacyBudget b = strong_compose({PrivacyBudget(0.1, 0.0), 100, 1e-5});
  EXPECT_NEAR(b.epsilon(), 5.850, 5e-4);
  EXPECT_DOUBLE_EQ(b.delta(), 1e-5);
}

TEST(StrongComposeTest, ZeroEpsilon) {
  const PrivacyBudget b = strong_compose({PrivacyBudget(0.0, 0.0), 50, 1e-4});
  EXPECT_EQ(b.epsilon(), 0.0);
  EXPECT_DOUBLE_EQ(b.delta(), 1e-4);
}

TEST(StrongComposeTest, SingleStepNeverBelowEpsilon) {
  for (double eps : {1e-4, 0.01, 0.3, 1.0, 3.0}) {
    for (double slack : {0.5, 0.1, 1e-9}) {
      EXPECT_GE(strong_compose({PrivacyBudget(eps, 0.0), 1, slack}).epsilon(), eps);
    }
  }
}

TEST(StrongComposeTest, MonotoneInStepsAndEpsilon) {
  double prev = 0.0;
  for (std::int64_t k = 1; k <= 2000; k += 37) {
    const double e = strong_compose({PrivacyBudget(0.05, 1e-9), k, 1e-6}).epsilon();
    EXPECT_GE(e, prev);
    prev = e;
  }
  prev = 0.0;
  for (double eps = 0.0; eps <= 2.0; eps += 0.05) {
    const double e = strong_compose({PrivacyBudget(eps, 0.0), 40, 1e-6}).epsilon();
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(StrongComposeTest, ValidatesPlan) {
  ExpectCode(ErrorCode::kInvalidParameter,
             [] { strong_compose({PrivacyBudget(0.1, 0.0), 0, 1e-5}); });
  ExpectCode(ErrorCode::kInvalidParameter,
             [] { strong_compose({PrivacyBudget(0.1, 0.0), 5, 0.0}); });
}

// 10 / (2 sqrt(2e4 ln 2e5)) = 10 / 988.2 = 1.0120e-2.
TEST(ErmStepBudgetTest, WorkedExample) {
  const PrivacyBudget step = sparse_erm_step_budget(PrivacyBudget(1.0, 1e-5), 10000, 10);
  EXPECT_NEAR(step.epsilon(), 1.0120e-2, 5e-6);
  EXPECT_DOUBLE_EQ(step.delta(), 5e-9);
}

TEST(ErmStepBudgetTest, SingleStepSingleGroup) {
  const PrivacyBudget step = sparse_erm_step_budget(PrivacyBudget(2.0, 1e-4), 1, 1);
  EXPECT_NEAR(step.epsilon(), 2.0 / (2.0 * std::sqrt(2.0 * std::log(2e4))), 1e-15);
}

TEST(ErmStepBudgetTest, RefusesTooManyGroups) {
  ExpectCode(ErrorCode::kAssumptionViolated,
             [] { sparse_erm_step_budget(PrivacyBudget(1.0, 1e-5), 10, 100); });
}

TEST(ErmStepBudgetTest, RoundTripNeverExceedsTotal) {
  NoiseSource rng(17);
  int checked = 0;
  for (int trial = 0; trial < 2000 && checked < 300; ++trial) {
    const double delta = std::pow(10.0, -2.0 - 8.0 * rng.uniform());
    const double eps = 0.05 + rng.uniform() * std::log(2.0 / delta);
    const auto t = static_cast<std::int64_t>(1 + rng.uniform_index(100000));
    const auto max_m = static_cast<std::int64_t>(10.0 * std::sqrt(static_cast<double>(t)));
    const auto m = static_cast<std::int64_t>(1 + rng.uniform_index(max_m));
    const PrivacyBudget total(eps, delta);
    const PrivacyBudget step = sparse_erm_step_budget(total, t, m);
    if (step.epsilon() > 1.0) continue;
    ++checked;
    const PrivacyBudget spent = sparse_erm_spent(step, t, m, delta);
    EXPECT_LE(spent.epsilon(), eps * (1 + 1e-9)) << eps << " " << delta << " " << t << " " << m;
    EXPECT_LE(spent.delta(), delta * (1 + 1e-9));
    const PrivacyBudget back = sparse_erm_total_budget(step, t, m);
    EXPECT_LE(oracle::rel_err(back.epsilon(), eps), 1e-9);
    EXPECT_LE(oracle::rel_err(back.delta(), delta), 1e-9);
  }
  EXPECT_GE(checked, 300);
}

TEST(SparseSgdBudgetTest, WorkedExample) {
  const SparseSgdAccount acc = sparse_sgd_account(0.01, 1e-8, 0.5, 20, 200000, 10000);
  EXPECT_NEAR(acc.hypothesis_lhs, 2.44e-3, 5e-6);
  EXPECT_DOUBLE_EQ(acc.hypothesis_rhs, 1e-2);
  EXPECT_NEAR(acc.total.epsilon(), 4.12, 0.01);
  EXPECT_DOUBLE_EQ(acc.total.delta(), 4e-8);
  EXPECT_NEAR(acc.selection_share + acc.noise_share, acc.total.epsilon(), 1e-12);
}

TEST(SparseSgdBudgetTest, InfiniteNoiseAndNoSelectionCostsNothing) {
  const PrivacyBudget b = sparse_sgd_total_budget(
      0.0, 1e-8, std::numeric_limits<double>::infinity(), 20, 200000, 10000);
  EXPECT_EQ(b.epsilon(), 0.0);
}

TEST(SparseSgdBudgetTest, RefusesWhenHypothesisFails) {
  // 200000 steps at sigma = 0.5 puts the left side above 1/sqrt(T).
  ExpectCode(ErrorCode::kAssumptionViolated,
             [] { sparse_sgd_total_budget(0.01, 1e-8, 0.5, 20, 200000, 200000); });
}

TEST(SparseSgdBudgetTest, RefusesWhenLogArgumentTooSmall) {
  ExpectCode(ErrorCode::kAssumptionViolated,
             [] { sparse_sgd_total_budget(0.0, 0.9, 1e6, 20, 200, 3); });
}

// The composed per-step guarantee is bounded by the simplified form, which
// is bounded by the stated total.
TEST(SparseSgdBudgetTest, ProofInequalityChainHolds) {
  NoiseSource rng(23);
  int checked = 0;
  for (int trial = 0; trial < 5000 && checked < 200; ++trial) {
    const auto b = static_cast<std::int64_t>(1 + rng.uniform_index(64));
    const auto n = static_cast<std::int64_t>(b * (100 + rng.uniform_index(100000)));
    const auto t = static_cast<std::int64_t>(1 + rng.uniform_index(50000));
    const double dp = std::pow(10.0, -6.0 - 6.0 * rng.uniform());
    const double sigma = 0.3 + 20.0 * rng.uniform();
    const double eps_sel = 2.0 * rng.uniform();
    SparseSgdAccount acc;
    try {
      acc = sparse_sgd_account(eps_sel, dp, sigma, b, n, t);
    } catch (const Error&) {
      continue;
    }
    ++checked;
    const double eps_tilde = acc.per_step.epsilon();
    const double delta_tilde = acc.per_step.delta();
    const double td = static_cast<double>(t);
    const double composed =
        strong_compose({PrivacyBudget(eps_tilde, delta_tilde), t, td * delta_tilde})
            .epsilon();
    const double simplified =
        2.0 * eps_tilde * std::sqrt(2.0 * td * std::log(1.0 / (td * delta_tilde)));
    EXPECT_LE(composed, simplified * (1 + 1e-12));
    EXPECT_LE(simplified, acc.total.epsilon() * (1 + 1e-12));
  }
  EXPECT_GE(checked, 200);
}

TEST(NumericSparseAlphaTest, WorkedExample) {
  const double a = numeric_sparse_alpha(1.0, 1000, 5, 0.05, PrivacyBudget(1.0, 1e-5));
  EXPECT_NEAR(a, 2015.5, 0.5);
  EXPECT_LE(oracle::rel_err(a, oracle::ns_alpha(1, 1000, 5, 0.05, 1, 1e-5)), 1e-12);
}

TEST(NumericSparseAlphaTest, Scaling) {
  const PrivacyBudget b(1.0, 1e-5);
  const double a = numeric_sparse_alpha(1.0, 1000, 5, 0.05, b);
  EXPECT_NEAR(numeric_sparse_alpha(2.0, 1000, 5, 0.05, b), 2.0 * a, 1e-9);
  EXPECT_NEAR(numeric_sparse_alpha(1.0, 1000, 5, 0.05, PrivacyBudget(2.0, 1e-5)), a / 2.0,
              1e-9);
  ExpectCode(ErrorCode::kInvalidParameter,
             [&] { numeric_sparse_alpha(1.0, 1000, 5, 1.0, b); });
  ExpectCode(ErrorCode::kInvalidParameter,
             [&] { numeric_sparse_alpha(1.0, 1000, 5, 0.0, b); });
}

TEST(ErmSensitivityTest, TwoC2MOverN) {
  const SensitivityBound s = sparse_erm_sensitivity(0.5, 20, 2000);
  EXPECT_EQ(s.norm, SensitivityBound::Norm::kLInf);
  EXPECT_DOUBLE_EQ(s.value, 0.01);
  const double alpha = sparse_erm_alpha(0.5, 1000, 10, 20, 2000, PrivacyBudget(0.1, 1e-8));
  const double direct = 40.0 * 0.5 * 20 * (std::log(1000.0) + std::log(4.0 * 10 * 2000)) *
                        std::sqrt(10 * std::log(2e8)) / (2000 * 0.1);
  EXPECT_NEAR(alpha, direct, 1e-9 * direct);
}

}  // namespace
}  // namespace sparsedp
