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

// Generalized linear models whose per-sample gradients inherit the sparsity
// of their inputs, datasets partitioned into groups with sparse summed
// gradients, and differentially private ERM that releases only the large
// coordinates of each group gradient through NumericSparse.

#ifndef SPARSEDP_SPARSE_ERM_H_
#define SPARSEDP_SPARSE_ERM_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsedp/accountant.h"
#include "sparsedp/error.h"
#include "sparsedp/mechanisms.h"
#include "sparsedp/noise_source.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/sparse_vector.h"

namespace sparsedp {

// Logistic regression: Phi(z) = log(1 + e^z), Phi'(z) = sigmoid(z).
struct LogisticLink {
  static double cumulant(double z) {
    return std::max(z, 0.0) + std::log1p(std::exp(-std::fabs(z)));
  }
  static double mean(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
  }
};

template <class Link = LogisticLink>
struct GlmModel {
  std::vector<double> weights;

  GlmModel() = default;
  explicit GlmModel(std::size_t dimension) : weights(dimension, 0.0) {}
  explicit GlmModel(std::vector<double> w) : weights(std::move(w)) {}

  std::size_t dimension() const { return weights.size(); }
};

struct LabeledSample {
  SparseVector x;
  double y = 0.0;
};

namespace internal {
inline void check_label(double y) {
  require(y >= 0.0 && y <= 1.0, ErrorCode::kInvalidParameter,
          "label must lie in [0, 1], got " + std::to_string(y));
}
}  // namespace internal

// Phi(<x, w>) - y <x, w>
template <class Link = LogisticLink>
double glm_loss(std::span<const double> weights, const SparseVector& x,
                double y) {
  internal::check_label(y);
  const double z = x.dot(weights);
  return Link::cumulant(z) - y * z;
}

template <class Link>
double glm_loss(const GlmModel<Link>& model, const SparseVector& x, double y) {
  return glm_loss<Link>(model.weights, x, y);
}

// (Phi'(<x, w>) - y) x; the support never leaves that of x.
template <class Link = LogisticLink>
SparseVector glm_gradient(std::span<const double> weights,
                          const SparseVector& x, double y) {
  internal::check_label(y);
  const double residual = Link::mean(x.dot(weights)) - y;
  SparseVector g = x;
  g.scale(residual);
  return g;
}

template <class Link>
SparseVector glm_gradient(const GlmModel<Link>& model, const SparseVector& x,
                          double y) {
  return glm_gradient<Link>(model.weights, x, y);
}

// Adapter exposing a GLM to the generic trainer.
template <class Link = LogisticLink>
class GlmObjective {
 public:
  using Sample = LabeledSample;

  explicit GlmObjective(std::size_t dimension) : dimension_(dimension) {}

  std::size_t dimension() const { return dimension_; }
  double loss(std::span<const double> w, const Sample& s) const {
    return glm_loss<Link>(w, s.x, s.y);
  }
  SparseVector gradient(std::span<const double> w, const Sample& s) const {
    return glm_gradient<Link>(w, s.x, s.y);
  }

 private:
  std::size_t dimension_;
};

// Samples partitioned into m equally sized groups. c1 bounds the support of
// every group's summed gradient and c2 bounds every gradient coordinate.
class GroupedDataset {
 public:
  enum class SupportCheck { kEnforce, kSkip };

  GroupedDataset(std::vector<std::vector<LabeledSample>> groups,
                 std::size_t dimension, std::size_t c1, double c2,
                 SupportCheck check = SupportCheck::kEnforce)
      : groups_(std::move(groups)), dimension_(dimension), c1_(c1), c2_(c2) {
    require(!groups_.empty(), ErrorCode::kInput, "dataset has no groups");
    require(c1_ >= 1, ErrorCode::kInvalidParameter, "c1 must be at least 1");
    require(c2_ > 0.0, ErrorCode::kInvalidParameter, "c2 must be positive");
    const std::size_t size = groups_.front().size();
    require(size >= 1, ErrorCode::kInput, "groups must not be empty");
    for (std::size_t i = 0; i < groups_.size(); ++i) {
      require(groups_[i].size() == size, ErrorCode::kInput,
              "group " + std::to_string(i) + " has " +
                  std::to_string(groups_[i].size()) + " samples, expected " +
                  std::to_string(size) +
                  "; n must be divisible by m with equal groups");
      for (const LabeledSample& s : groups_[i]) {
        require(s.x.dimension() == dimension_, ErrorCode::kDimensionMismatch,
                "sample dimension differs from dataset dimension");
        internal::check_label(s.y);
      }
      if (check == SupportCheck::kEnforce) {
        require(group_support(i) <= c1_, ErrorCode::kInput,
                "group " + std::to_string(i) + " has a feature support of " +
                    std::to_string(group_support(i)) + " > c1 = " +
                    std::to_string(c1_));
      }
    }
  }

  std::size_t num_groups() const { return groups_.size(); }
  std::size_t group_size() const { return groups_.front().size(); }
  std::size_t num_samples() const { return num_groups() * group_size(); }
  std::size_t dimension() const { return dimension_; }
  std::size_t c1() const { return c1_; }
  double c2() const { return c2_; }
  const std::vector<LabeledSample>& group(std::size_t i) const {
    return groups_.at(i);
  }
  const std::vector<std::vector<LabeledSample>>& groups() const {
    return groups_;
  }

  // Size of the union of feature supports within group i.
  std::size_t group_support(std::size_t i) const {
    std::vector<std::size_t> all;
    for (const LabeledSample& s : groups_.at(i)) {
      all.insert(all.end(), s.x.indices().begin(), s.x.indices().end());
    }
    std::sort(all.begin(), all.end());
    return static_cast<std::size_t>(
        std::unique(all.begin(), all.end()) - all.begin());
  }

  std::vector<LabeledSample> flatten() const {
    std::vector<LabeledSample> out;
    out.reserve(num_samples());
    for (const auto& g : groups_) out.insert(out.end(), g.begin(), g.end());
    return out;
  }

 private:
  std::vector<std::vector<LabeledSample>> groups_;
  std::size_t dimension_;
  std::size_t c1_;
  double c2_;
};

template <class Link = LogisticLink>
double mean_loss(const GroupedDataset& data, std::span<const double> w) {
  double sum = 0.0;
  for (const auto& group : data.groups()) {
    for (const LabeledSample& s : group) sum += glm_loss<Link>(w, s.x, s.y);
  }
  return sum / static_cast<double>(data.num_samples());
}

struct GroupSparsityReport {
  bool pass = true;
  std::size_t worst_support = 0;
  std::size_t worst_group = 0;
  std::size_t worst_probe = 0;
};

// Checks that every group's summed gradient has at most c1 nonzero
// coordinates at each probe point.
template <class Link = LogisticLink>
GroupSparsityReport verify_group_sparsity(
    const GroupedDataset& data, std::span<const std::vector<double>> probes) {
  GroupSparsityReport report;
  std::vector<double> sum(data.dimension());
  for (std::size_t p = 0; p < probes.size(); ++p) {
    require(probes[p].size() == data.dimension(), ErrorCode::kDimensionMismatch,
            "probe dimension differs from dataset dimension");
    for (std::size_t i = 0; i < data.num_groups(); ++i) {
      std::fill(sum.begin(), sum.end(), 0.0);
      for (const LabeledSample& s : data.group(i)) {
        glm_gradient<Link>(probes[p], s.x, s.y).add_to(sum);
      }
      const auto support = static_cast<std::size_t>(
          std::count_if(sum.begin(), sum.end(), [](double v) { return v != 0.0; }));
      if (support > report.worst_support) {
        report.worst_support = support;
        report.worst_group = i;
        report.worst_probe = p;
      }
    }
  }
  report.pass = report.worst_support <= data.c1();
  return report;
}

// Largest |gradient coordinate| over all samples and probes; compare with
// the declared c2.
template <class Link = LogisticLink>
double max_gradient_coordinate(const GroupedDataset& data,
                               std::span<const std::vector<double>> probes) {
  double worst = 0.0;
  for (const auto& w : probes) {
    for (const auto& group : data.groups()) {
      for (const LabeledSample& s : group) {
        const SparseVector g = glm_gradient<Link>(w, s.x, s.y);
        for (double v : g.values()) worst = std::max(worst, std::fabs(v));
      }
    }
  }
  return worst;
}

struct ErmStepMetrics {
  std::int64_t step = 0;
  double train_loss = 0.0;
  std::size_t grad_support_size = 0;
  double eps_spent = 0.0;
};

struct SparseErmOptions {
  // Test hooks: kNoiseFree with a tiny alpha_override turns every iteration
  // into an exact gradient step restricted to the c1 first nonzero
  // coordinates.
  NoiseMode noise = NoiseMode::kPrivate;
  std::optional<double> alpha_override;
};

template <class Link = LogisticLink>
struct SparseErmResult {
  GlmModel<Link> model;
  std::vector<ErmStepMetrics> steps;
  double initial_loss = 0.0;
  PrivacyBudget step_budget;
  // Guarantee certified for the run, recomputed from the per-iteration
  // budget actually used.
  PrivacyBudget certified;
  double alpha = 0.0;
  double s_inf = 0.0;
};

// Streams forked from the caller's NoiseSource.
inline constexpr std::uint64_t kErmGroupStream = 1;
inline constexpr std::uint64_t kErmMechanismStream = 2;

// Runs T iterations. Each picks a group uniformly with replacement, forms
// its mean gradient (m / n) sum_j grad l(w; d_j), privatizes it with
// NumericSparse at threshold sparse_erm_alpha and per-iteration budget
// sparse_erm_step_budget, and steps w <- w - eta * Delta.
template <class Link = LogisticLink>
SparseErmResult<Link> dp_sparse_erm_train(const GroupedDataset& data,
                                          GlmModel<Link> model,
                                          const PrivacyBudget& total,
                                          double eta, std::int64_t iterations,
                                          NoiseSource& rng,
                                          const SparseErmOptions& options = {}) {
  require(model.dimension() == data.dimension(), ErrorCode::kDimensionMismatch,
          "model and dataset dimensions differ");
  require(eta >= 0.0 && std::isfinite(eta), ErrorCode::kInvalidParameter,
          "learning rate must be finite and nonnegative");
  require(iterations >= 1, ErrorCode::kInvalidParameter,
          "need at least one iteration");
  const auto m = static_cast<std::int64_t>(data.num_groups());
  const auto n = static_cast<std::int64_t>(data.num_samples());
  const auto p = static_cast<std::int64_t>(data.dimension());
  const auto c1 = static_cast<std::int64_t>(data.c1());

  SparseErmResult<Link> result;
  result.step_budget = sparse_erm_step_budget(total, iterations, m);
  // Refuses up front when the per-iteration epsilon is outside the
  // amplification lemma's domain.
  sparse_erm_spent(result.step_budget, iterations, m, total.delta());
  result.certified = sparse_erm_total_budget(result.step_budget, iterations, m);
  result.s_inf = sparse_erm_sensitivity(data.c2(), m, n).value;
  result.alpha = options.alpha_override.value_or(
      sparse_erm_alpha(data.c2(), p, c1, m, n, result.step_budget));
  const NumericSparseParams params{result.alpha, data.c1(), result.step_budget,
                                   result.s_inf};

  NoiseSource group_rng = rng.fork(kErmGroupStream);
  NoiseSource noise_rng = rng.fork(kErmMechanismStream);
  const double scale = static_cast<double>(m) / static_cast<double>(n);
  std::vector<double> gradient(data.dimension());

  result.initial_loss = mean_loss<Link>(data, model.weights);
  result.steps.reserve(static_cast<std::size_t>(iterations));
  for (std::int64_t t = 0; t < iterations; ++t) {
    const auto& group = data.group(group_rng.uniform_index(data.num_groups()));
    std::fill(gradient.begin(), gradient.end(), 0.0);
    for (const LabeledSample& s : group) {
      glm_gradient<Link>(model.weights, s.x, s.y).add_to(gradient);
    }
    for (double& v : gradient) v *= scale;

    const SparseVector update =
        numeric_sparse_scan(gradient, params, noise_rng, options.noise).estimate;
    for (std::size_t k = 0; k < update.stored(); ++k) {
      model.weights[update.indices()[k]] -= eta * update.values()[k];
    }

    ErmStepMetrics metrics;
    metrics.step = t + 1;
    metrics.train_loss = mean_loss<Link>(data, model.weights);
    metrics.grad_support_size = update.nnz();
    metrics.eps_spent =
        sparse_erm_spent(result.step_budget, t + 1, m, total.delta()).epsilon();
    result.steps.push_back(metrics);
  }
  result.model = std::move(model);
  return result;
}

}  // namespace sparsedp

#endif  // SPARSEDP_SPARSE_ERM_H_
