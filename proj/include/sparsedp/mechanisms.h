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

// Randomized differential privacy primitives: Laplace and Gaussian noise,
// the NumericSparse variant of the sparse vector technique, and private
// top-k coordinate selection with the exponential mechanism.
//
// Logarithms are natural throughout. Noise is drawn in input-index order, so
// a fixed NoiseSource seed reproduces every output exactly.

#ifndef SPARSEDP_MECHANISMS_H_
#define SPARSEDP_MECHANISMS_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "sparsedp/error.h"
#include "sparsedp/noise_source.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/sparse_vector.h"

namespace sparsedp {

// Draw from Laplace(0, scale) by inverting the CDF of a single uniform draw.
inline double laplace_sample(double scale, NoiseSource& rng) {
  require(scale > 0.0 && std::isfinite(scale), ErrorCode::kInvalidParameter,
          "Laplace scale must be positive and finite, got " +
              std::to_string(scale));
  const double u = rng.uniform() - 0.5;
  const double magnitude = -scale * std::log(1.0 - 2.0 * std::fabs(u));
  return u < 0.0 ? -magnitude : magnitude;
}

// Variance of the Gaussian mechanism, 2 log(1.25 / delta) s2^2 / epsilon^2,
// valid for 0 < epsilon <= 1 and 0 < delta < 1.
inline double gaussian_mechanism_variance(double l2_sensitivity,
                                          const PrivacyBudget& budget) {
  require(budget.epsilon() > 0.0 && budget.epsilon() <= 1.0,
          ErrorCode::kBudgetOutOfRange,
          "the Gaussian mechanism calibration holds only for 0 < epsilon <= 1, "
          "got epsilon = " + std::to_string(budget.epsilon()));
  require(budget.delta() > 0.0 && budget.delta() < 1.0,
          ErrorCode::kBudgetOutOfRange,
          "the Gaussian mechanism needs 0 < delta < 1");
  require(l2_sensitivity > 0.0 && std::isfinite(l2_sensitivity),
          ErrorCode::kInvalidParameter,
          "l2 sensitivity must be positive and finite");
  return 2.0 * std::log(1.25 / budget.delta()) * l2_sensitivity *
         l2_sensitivity / (budget.epsilon() * budget.epsilon());
}

inline std::vector<double> gaussian_mechanism(std::span<const double> v,
                                              double l2_sensitivity,
                                              const PrivacyBudget& budget,
                                              NoiseSource& rng) {
  const double stddev =
      std::sqrt(gaussian_mechanism_variance(l2_sensitivity, budget));
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x += stddev * rng.standard_normal();
  return out;
}

// Every coordinate is perturbed, including those absent from the sparse
// input, so the output is dense.
inline std::vector<double> gaussian_mechanism(const SparseVector& v,
                                              double l2_sensitivity,
                                              const PrivacyBudget& budget,
                                              NoiseSource& rng) {
  const std::vector<double> dense = v.to_dense();
  return gaussian_mechanism(dense, l2_sensitivity, budget, rng);
}

struct NumericSparseParams {
  double alpha = 0.0;     // threshold
  std::size_t c1 = 1;     // maximum number of answered coordinates
  PrivacyBudget budget;   // (epsilon, delta) for the whole scan
  double s_inf = 0.0;     // l-infinity sensitivity of the input
};

// kNoiseFree replaces every Laplace draw with zero. It exists for
// degeneration tests and carries no privacy guarantee.
enum class NoiseMode { kPrivate, kNoiseFree };

struct NumericSparseOutcome {
  SparseVector estimate;
  // Number of coordinates examined before the scan stopped.
  std::size_t scanned = 0;
  // True when the scan stopped because c1 answers were given.
  bool cap_reached = false;
};

// Laplace scale unit s * sqrt(32 c1 log(2 / delta)) / epsilon.
inline double numeric_sparse_noise_unit(const NumericSparseParams& params,
                                        double epsilon) {
  return params.s_inf *
         std::sqrt(32.0 * static_cast<double>(params.c1) *
                   std::log(2.0 / params.budget.delta())) /
         epsilon;
}

inline void validate(const NumericSparseParams& params) {
  require(params.c1 >= 1, ErrorCode::kInvalidParameter, "c1 must be at least 1");
  require(params.alpha > 0.0 && std::isfinite(params.alpha),
          ErrorCode::kInvalidParameter, "threshold alpha must be positive");
  require(params.s_inf > 0.0 && std::isfinite(params.s_inf),
          ErrorCode::kInvalidParameter, "sensitivity s_inf must be positive");
  require(params.budget.epsilon() > 0.0 && std::isfinite(params.budget.epsilon()),
          ErrorCode::kBudgetOutOfRange, "NumericSparse needs a finite epsilon > 0");
  require(params.budget.delta() > 0.0 && params.budget.delta() < 1.0,
          ErrorCode::kBudgetOutOfRange, "NumericSparse needs 0 < delta < 1");
}

// Scans u in index order. Each coordinate's |u_i| plus Lap(2 sigma(eps1))
// noise is compared against a noisy threshold alpha + Lap(sigma(eps1)),
// which is redrawn after every answer. Answered coordinates are released as
// u_i + Lap(2 sigma(eps2)), with eps1 = 0.95 eps and eps2 = 0.05 eps. The
// scan stops as soon as c1 coordinates have been answered.
inline NumericSparseOutcome numeric_sparse_scan(
    std::span<const double> u, const NumericSparseParams& params,
    NoiseSource& rng, NoiseMode mode = NoiseMode::kPrivate) {
  validate(params);
  const double eps = params.budget.epsilon();
  const double threshold_scale = numeric_sparse_noise_unit(params, 0.95 * eps);
  const double answer_scale = 2.0 * numeric_sparse_noise_unit(params, 0.05 * eps);
  auto lap = [&](double scale) {
    return mode == NoiseMode::kPrivate ? laplace_sample(scale, rng) : 0.0;
  };

  NumericSparseOutcome outcome;
  std::vector<std::size_t> indices;
  std::vector<double> values;
  std::size_t count = 0;
  double noisy_threshold = params.alpha + lap(threshold_scale);
  for (std::size_t i = 0; i < u.size(); ++i) {
    outcome.scanned = i + 1;
    const double query_noise = lap(2.0 * threshold_scale);
    if (std::fabs(u[i]) + query_noise >= noisy_threshold) {
      indices.push_back(i);
      values.push_back(u[i] + lap(answer_scale));
      ++count;
      if (count >= params.c1) {
        outcome.cap_reached = true;
        break;
      }
      noisy_threshold = params.alpha + lap(threshold_scale);
    }
  }
  outcome.estimate = SparseVector(u.size(), std::move(indices), std::move(values));
  return outcome;
}

inline SparseVector numeric_sparse(std::span<const double> u,
                                   const NumericSparseParams& params,
                                   NoiseSource& rng) {
  return numeric_sparse_scan(u, params, rng).estimate;
}

inline SparseVector numeric_sparse(const SparseVector& u,
                                   const NumericSparseParams& params,
                                   NoiseSource& rng) {
  const std::vector<double> dense = u.to_dense();
  return numeric_sparse(dense, params, rng);
}

// Per-draw epsilon of the exponential selection,
// eps' / sqrt(2 k log(1 / delta')).
inline double exp_selection_epsilon(const PrivacyBudget& budget, std::size_t k) {
  require(budget.delta() > 0.0 && budget.delta() < 1.0,
          ErrorCode::kBudgetOutOfRange,
          "exponential selection needs 0 < delta' < 1");
  require(k >= 1, ErrorCode::kEmptySelection, "selection of zero coordinates");
  return budget.epsilon() /
         std::sqrt(2.0 * static_cast<double>(k) * std::log(1.0 / budget.delta()));
}

namespace internal {

// Binary sum tree over nonnegative weights supporting proportional draws
// and removal in O(log p).
class SumTree {
 public:
  explicit SumTree(std::span<const double> weights) {
    leaves_ = 1;
    while (leaves_ < weights.size()) leaves_ *= 2;
    tree_.assign(2 * leaves_, 0.0);
    std::copy(weights.begin(), weights.end(), tree_.begin() + leaves_);
    for (std::size_t node = leaves_ - 1; node >= 1; --node) {
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    }
  }

  double total() const { return tree_[1]; }
  double weight(std::size_t leaf) const { return tree_[leaves_ + leaf]; }

  std::size_t draw(NoiseSource& rng) const {
    double target = rng.uniform() * tree_[1];
    std::size_t node = 1;
    while (node < leaves_) {
      const std::size_t left = 2 * node;
      if (target < tree_[left] || tree_[left + 1] <= 0.0) {
        node = left;
      } else {
        target -= tree_[left];
        node = left + 1;
      }
    }
    return node - leaves_;
  }

  void remove(std::size_t leaf) {
    std::size_t node = leaves_ + leaf;
    tree_[node] = 0.0;
    for (node /= 2; node >= 1; node /= 2) {
      tree_[node] = tree_[2 * node] + tree_[2 * node + 1];
    }
  }

 private:
  std::size_t leaves_ = 1;
  std::vector<double> tree_;
};

}  // namespace internal

// Draws floor(gamma p) coordinates sequentially without replacement, each
// with probability proportional to exp(eps'' |g_k| / (2 s0)) where every
// |g_k| is first clipped to s0.
inline SelectionMask exp_select_topk(std::span<const double> g, double gamma,
                                     const PrivacyBudget& budget, double s0,
                                     NoiseSource& rng) {
  require(s0 > 0.0, ErrorCode::kInvalidParameter, "s0 must be positive");
  const std::size_t p = g.size();
  const std::size_t k = selection_size(p, gamma);
  require(k >= 1, ErrorCode::kEmptySelection,
          "floor(gamma * p) is zero for gamma = " + std::to_string(gamma) +
              ", p = " + std::to_string(p));
  const double eps_draw = exp_selection_epsilon(budget, k);

  std::vector<double> scores(p);
  double top = 0.0;
  for (std::size_t i = 0; i < p; ++i) {
    scores[i] = std::min(std::fabs(g[i]), s0);
    top = std::max(top, scores[i]);
  }
  // Shifting by the top score leaves the distribution unchanged and keeps
  // every weight in (0, 1].
  for (double& s : scores) s = std::exp(eps_draw * (s - top) / (2.0 * s0));

  internal::SumTree tree(scores);
  std::vector<std::size_t> selected;
  selected.reserve(k);
  while (selected.size() < k) {
    const std::size_t index = tree.draw(rng);
    if (index >= p || tree.weight(index) <= 0.0) continue;
    selected.push_back(index);
    tree.remove(index);
  }
  return SelectionMask(p, k, std::move(selected));
}

// A uniformly random floor(gamma p)-subset of [0, p); data independent, so
// it consumes no privacy budget.
inline SelectionMask uniform_select(std::size_t p, double gamma,
                                    NoiseSource& rng) {
  const std::size_t k = selection_size(p, gamma);
  require(k >= 1, ErrorCode::kEmptySelection,
          "floor(gamma * p) is zero for gamma = " + std::to_string(gamma) +
              ", p = " + std::to_string(p));
  if (k == p) return SelectionMask::all(p);
  // Floyd's algorithm.
  std::vector<char> seen(p, 0);
  std::vector<std::size_t> selected;
  selected.reserve(k);
  for (std::size_t j = p - k; j < p; ++j) {
    const std::size_t t = rng.uniform_index(j + 1);
    const std::size_t pick = seen[t] ? j : t;
    seen[pick] = 1;
    selected.push_back(pick);
  }
  return SelectionMask(p, k, std::move(selected));
}

}  // namespace sparsedp

#endif  // SPARSEDP_MECHANISMS_H_
