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

// Privacy arithmetic: amplification by subsampling, strong (advanced)
// composition, and the closed-form budgets of the sparse DP-ERM and sparse
// DP-SGD trainers. Every function is pure.
//
// When a theorem's hypothesis fails the accountant throws
// kAssumptionViolated instead of reporting a guarantee it cannot certify.

#ifndef SPARSEDP_ACCOUNTANT_H_
#define SPARSEDP_ACCOUNTANT_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>

#include "sparsedp/error.h"
#include "sparsedp/privacy_budget.h"

namespace sparsedp {

class SamplingRate {
 public:
  explicit SamplingRate(double gamma) : gamma_(gamma) {
    require(gamma > 0.0 && gamma <= 1.0, ErrorCode::kInvalidParameter,
            "sampling rate must lie in (0, 1], got " + std::to_string(gamma));
  }
  static SamplingRate of(std::int64_t sampled, std::int64_t population) {
    require(sampled > 0 && population > 0, ErrorCode::kInvalidParameter,
            "sampling rate needs positive counts");
    return SamplingRate(static_cast<double>(sampled) /
                        static_cast<double>(population));
  }
  double gamma() const { return gamma_; }

 private:
  double gamma_;
};

struct SensitivityBound {
  enum class Norm { kL2, kLInf };
  Norm norm = Norm::kL2;
  double value = 0.0;
};

struct CompositionPlan {
  PrivacyBudget per_step;
  std::int64_t steps = 1;
  double slack_delta = 0.0;

  void validate() const {
    require(steps >= 1, ErrorCode::kInvalidParameter,
            "composition needs at least one step");
    require(slack_delta > 0.0 && slack_delta < 1.0,
            ErrorCode::kInvalidParameter, "slack delta must lie in (0, 1)");
  }
};

// (gamma eps, gamma delta); the lemma requires eps <= 1.
inline PrivacyBudget amplify_by_sampling(const PrivacyBudget& base,
                                         const SamplingRate& rate) {
  require(base.epsilon() <= 1.0, ErrorCode::kAssumptionViolated,
          "amplification by sampling is stated only for epsilon <= 1, got " +
              std::to_string(base.epsilon()));
  return PrivacyBudget(rate.gamma() * base.epsilon(),
                       rate.gamma() * base.delta());
}

// k eps (e^eps - 1) + eps sqrt(2 k log(1 / slack)), k delta + slack.
// The delta is capped at 1, where the statement becomes vacuous.
inline PrivacyBudget strong_compose(const CompositionPlan& plan) {
  plan.validate();
  const double k = static_cast<double>(plan.steps);
  const double eps = plan.per_step.epsilon();
  const double total_eps =
      k * eps * std::expm1(eps) +
      eps * std::sqrt(2.0 * k * std::log(1.0 / plan.slack_delta));
  const double total_delta =
      std::min(1.0, k * plan.per_step.delta() + plan.slack_delta);
  return PrivacyBudget(total_eps, total_delta);
}

// Per-iteration budget for sparse DP-ERM over m groups and T iterations:
// eps' = eps m / (2 sqrt(2 T log(2 / delta))), delta' = delta m / (2 T).
// Requires m <= 10 sqrt(T).
inline PrivacyBudget sparse_erm_step_budget(const PrivacyBudget& total,
                                            std::int64_t iterations,
                                            std::int64_t groups) {
  require(iterations >= 1 && groups >= 1, ErrorCode::kInvalidParameter,
          "iterations and groups must be positive");
  require(total.epsilon() > 0.0 && total.delta() > 0.0 && total.delta() < 1.0,
          ErrorCode::kBudgetOutOfRange,
          "sparse ERM needs epsilon > 0 and 0 < delta < 1");
  const double t = static_cast<double>(iterations);
  const double m = static_cast<double>(groups);
  require(m <= 10.0 * std::sqrt(t), ErrorCode::kAssumptionViolated,
          "the sparse ERM privacy theorem assumes m <= 10 sqrt(T); got m = " +
              std::to_string(groups) + ", T = " + std::to_string(iterations));
  const double eps_step =
      total.epsilon() * m / (2.0 * std::sqrt(2.0 * t * std::log(2.0 / total.delta())));
  const double delta_step = total.delta() * m / (2.0 * t);
  return PrivacyBudget(eps_step, delta_step);
}

// The guarantee certified for a full sparse DP-ERM run that used the given
// per-iteration budget; inverts sparse_erm_step_budget.
inline PrivacyBudget sparse_erm_total_budget(const PrivacyBudget& step,
                                             std::int64_t iterations,
                                             std::int64_t groups) {
  const double t = static_cast<double>(iterations);
  const double m = static_cast<double>(groups);
  const double delta = 2.0 * t * step.delta() / m;
  const double eps =
      2.0 * step.epsilon() * std::sqrt(2.0 * t * std::log(2.0 / delta)) / m;
  return PrivacyBudget(eps, delta);
}

// Budget actually composed after `steps` sparse DP-ERM iterations: each
// iteration's budget amplified by the 1/m group pick, composed with slack
// delta / 2.
inline PrivacyBudget sparse_erm_spent(const PrivacyBudget& step,
                                      std::int64_t steps, std::int64_t groups,
                                      double total_delta) {
  const PrivacyBudget amplified =
      amplify_by_sampling(step, SamplingRate(1.0 / static_cast<double>(groups)));
  return strong_compose({amplified, steps, total_delta / 2.0});
}

// l-infinity sensitivity of the group-mean gradient: 2 c2 m / n.
inline SensitivityBound sparse_erm_sensitivity(double c2, std::int64_t groups,
                                               std::int64_t samples) {
  return {SensitivityBound::Norm::kLInf,
          2.0 * c2 * static_cast<double>(groups) / static_cast<double>(samples)};
}

// NumericSparse accuracy threshold
// 20 s (log p + log(4 c1 / beta)) sqrt(c1 log(2 / delta)) / eps.
inline double numeric_sparse_alpha(double s, std::int64_t p, std::int64_t c1,
                                   double beta, const PrivacyBudget& budget) {
  require(beta > 0.0 && beta < 1.0, ErrorCode::kInvalidParameter,
          "beta must lie in (0, 1)");
  require(s > 0.0 && p >= 1 && c1 >= 1, ErrorCode::kInvalidParameter,
          "numeric_sparse_alpha needs s > 0, p >= 1, c1 >= 1");
  require(budget.epsilon() > 0.0 && budget.delta() > 0.0 && budget.delta() < 1.0,
          ErrorCode::kBudgetOutOfRange, "numeric_sparse_alpha needs eps > 0, 0 < delta < 1");
  const double c = static_cast<double>(c1);
  return 20.0 * s *
         (std::log(static_cast<double>(p)) + std::log(4.0 * c / beta)) *
         std::sqrt(c * std::log(2.0 / budget.delta())) / budget.epsilon();
}

// Threshold used by sparse DP-ERM: the NumericSparse alpha at sensitivity
// 2 c2 m / n and failure probability beta = 1 / n, which equals
// 40 c2 m (log p + log(4 c1 n)) sqrt(c1 log(2 / delta')) / (n eps').
inline double sparse_erm_alpha(double c2, std::int64_t p, std::int64_t c1,
                               std::int64_t groups, std::int64_t samples,
                               const PrivacyBudget& step) {
  return numeric_sparse_alpha(sparse_erm_sensitivity(c2, groups, samples).value,
                              p, c1, 1.0 / static_cast<double>(samples), step);
}

// Epsilon of one Gaussian noise step with noise multiplier sigma relative to
// the l2 sensitivity bound: 2 sqrt(2 log(1.25 / delta')) / sigma.
inline double gaussian_step_epsilon(double delta_prime, double sigma) {
  require(sigma > 0.0, ErrorCode::kInvalidParameter,
          "noise multiplier must be positive");
  return 2.0 * std::sqrt(2.0 * std::log(1.25 / delta_prime)) / sigma;
}

struct SparseSgdAccount {
  PrivacyBudget per_step;    // after amplification by b / n
  PrivacyBudget total;
  double hypothesis_lhs = 0.0;  // (b / n)(eps' + 2 sqrt(2 log(1.25/delta')) / sigma)
  double hypothesis_rhs = 0.0;  // 1 / sqrt(T)
  double selection_share = 0.0;  // part of total epsilon due to eps'
  double noise_share = 0.0;      // part of total epsilon due to the noise
};

// Full accounting for the sparse DP-SGD trainer. The total is
// (4 b sqrt(T log(n / (2 b T delta'))) / n * (eps' + 2 sqrt(2 log(1.25 /
// delta')) / sigma), 4 b T delta' / n), which holds when
// (b / n)(eps' + 2 sqrt(2 log(1.25 / delta')) / sigma) <= 1 / sqrt(T).
inline SparseSgdAccount sparse_sgd_account(double eps_sel, double delta_prime,
                                           double sigma, std::int64_t b,
                                           std::int64_t n, std::int64_t steps) {
  require(eps_sel >= 0.0 && std::isfinite(eps_sel), ErrorCode::kInvalidParameter,
          "selection epsilon must be finite and nonnegative");
  require(delta_prime > 0.0 && delta_prime < 1.0, ErrorCode::kBudgetOutOfRange,
          "delta' must lie in (0, 1)");
  require(b >= 1 && n >= b && steps >= 1, ErrorCode::kInvalidParameter,
          "need 1 <= b <= n and T >= 1");
  const double bd = static_cast<double>(b);
  const double nd = static_cast<double>(n);
  const double td = static_cast<double>(steps);
  const double noise_eps =
      std::isinf(sigma) ? 0.0 : gaussian_step_epsilon(delta_prime, sigma);
  const double per_step_eps = bd / nd * (eps_sel + noise_eps);

  SparseSgdAccount account;
  account.hypothesis_lhs = per_step_eps;
  account.hypothesis_rhs = 1.0 / std::sqrt(td);
  require(account.hypothesis_lhs <= account.hypothesis_rhs,
          ErrorCode::kAssumptionViolated,
          "the sparse DP-SGD privacy theorem assumes (b/n)(eps' + 2 sqrt(2 "
          "log(1.25/delta'))/sigma) <= 1/sqrt(T); got " +
              std::to_string(account.hypothesis_lhs) + " > " +
              std::to_string(account.hypothesis_rhs));
  const double log_arg = nd / (2.0 * bd * td * delta_prime);
  require(log_arg > std::exp(1.0), ErrorCode::kAssumptionViolated,
          "the sparse DP-SGD bound needs n > 2 e b T delta'");
  const double factor = 4.0 * bd * std::sqrt(td * std::log(log_arg)) / nd;
  const double total_delta = 4.0 * bd * td * delta_prime / nd;
  require(total_delta <= 1.0, ErrorCode::kAssumptionViolated,
          "total delta exceeds 1");
  account.per_step = PrivacyBudget(per_step_eps, 2.0 * bd * delta_prime / nd);
  account.total = PrivacyBudget(factor * (eps_sel + noise_eps), total_delta);
  account.selection_share = factor * eps_sel;
  account.noise_share = factor * noise_eps;
  return account;
}

inline PrivacyBudget sparse_sgd_total_budget(double eps_sel, double delta_prime,
                                             double sigma, std::int64_t b,
                                             std::int64_t n, std::int64_t steps) {
  return sparse_sgd_account(eps_sel, delta_prime, sigma, b, n, steps).total;
}

}  // namespace sparsedp

#endif  // SPARSEDP_ACCOUNTANT_H_
