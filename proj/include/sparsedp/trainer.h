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

// Differentially private optimization with sparse gradients for any
// differentiable model: per-sample l2 clipping, private coordinate
// selection, a second clipping of the selected gradient and Gaussian noise
// on the selected coordinates only. Also the dense DP-SGD baseline and a
// non-private baseline.

#ifndef SPARSEDP_TRAINER_H_
#define SPARSEDP_TRAINER_H_

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sparsedp/accountant.h"
#include "sparsedp/error.h"
#include "sparsedp/mechanisms.h"
#include "sparsedp/noise_source.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/sparse_vector.h"

namespace sparsedp {

// A model whose per-sample gradient is returned as a SparseVector over the
// flattened parameter vector.
template <class M>
concept DifferentiableObjective =
    requires(const M& m, std::span<const double> w, const typename M::Sample& s) {
      { m.dimension() } -> std::convertible_to<std::size_t>;
      { m.loss(w, s) } -> std::convertible_to<double>;
      { m.gradient(w, s) } -> std::same_as<SparseVector>;
    };

// Clipping bounds. +infinity disables a clip.
struct ClipSpec {
  double s0 = 0.1;   // per-coordinate bound on selection scores
  double s1 = 15.0;  // per-sample l2 bound
  double s2 = 1.0;   // l2 bound after selection

  static ClipSpec disabled() {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return {inf, inf, inf};
  }
  void validate() const {
    require(s0 > 0.0 && s1 > 0.0 && s2 > 0.0, ErrorCode::kInvalidParameter,
            "clipping bounds must be positive");
  }
};

struct ExponentialSelection {
  PrivacyBudget budget;
};
struct SparseVectorSelection {
  PrivacyBudget budget;
  double alpha = 0.0;
  std::size_t c1 = 0;  // 0 selects floor(gamma p)
};
// Spends no selection epsilon; delta' still enters the accounting of the
// noisy update.
struct UniformSelection {
  double delta = 0.0;
};

using SelectionStrategy =
    std::variant<ExponentialSelection, SparseVectorSelection, UniformSelection>;

enum class UpdateRule { kSgd, kAdam };

struct TrainConfig {
  std::size_t batch_size = 20;
  double learning_rate = 0.001;
  int epochs = 20;
  double sigma = 0.5;
  double gamma = 0.001;
  ClipSpec clip;
  SelectionStrategy selection = UniformSelection{};
  std::uint64_t seed = 1;
  UpdateRule update = UpdateRule::kSgd;
  // Clip per-sample gradients at s1 in the non-private baseline too.
  bool clip_non_private = false;

  void validate() const {
    require(batch_size >= 1, ErrorCode::kInvalidParameter, "batch size must be >= 1");
    require(learning_rate > 0.0, ErrorCode::kInvalidParameter,
            "learning rate must be positive");
    require(epochs >= 1, ErrorCode::kInvalidParameter, "epochs must be >= 1");
    require(sigma >= 0.0, ErrorCode::kInvalidParameter,
            "noise multiplier must be nonnegative");
    require(gamma > 0.0 && gamma <= 1.0, ErrorCode::kInvalidParameter,
            "gamma must lie in (0, 1]");
    clip.validate();
  }
};

enum class TrainMode { kNonPrivate, kDpSgd, kSparseExp, kSparseSv, kSparseUniform };

inline std::string_view to_string(TrainMode mode) {
  switch (mode) {
    case TrainMode::kNonPrivate:
      return "non_private";
    case TrainMode::kDpSgd:
      return "dp_sgd";
    case TrainMode::kSparseExp:
      return "sparse_exp";
    case TrainMode::kSparseSv:
      return "sparse_sv";
    case TrainMode::kSparseUniform:
      return "sparse_uniform";
  }
  return "unknown";
}

inline TrainMode parse_train_mode(std::string_view name) {
  for (TrainMode mode : {TrainMode::kNonPrivate, TrainMode::kDpSgd,
                         TrainMode::kSparseExp, TrainMode::kSparseSv,
                         TrainMode::kSparseUniform}) {
    if (to_string(mode) == name) return mode;
  }
  fail(ErrorCode::kInput, "unknown training mode '" + std::string(name) + "'");
}

inline bool is_sparse(TrainMode mode) {
  return mode == TrainMode::kSparseExp || mode == TrainMode::kSparseSv ||
         mode == TrainMode::kSparseUniform;
}

// g / max(1, ||g|| / bound); zero stays zero.
inline SparseVector clip_l2(SparseVector g, double bound) {
  require(bound > 0.0, ErrorCode::kInvalidParameter, "clip bound must be positive");
  const double norm = g.l2_norm();
  if (norm > bound) g.scale(bound / norm);
  return g;
}

// Each of n indices is kept independently with probability `rate`, by
// geometric skipping over the gaps.
inline std::vector<std::size_t> poisson_batch(std::size_t n, double rate,
                                              NoiseSource& rng) {
  require(rate >= 0.0 && rate <= 1.0, ErrorCode::kInvalidParameter,
          "sampling rate must lie in [0, 1]");
  std::vector<std::size_t> batch;
  if (rate == 0.0 || n == 0) return batch;
  if (rate == 1.0) {
    batch.resize(n);
    for (std::size_t i = 0; i < n; ++i) batch[i] = i;
    return batch;
  }
  const double log_miss = std::log1p(-rate);
  double position = -1.0;
  for (;;) {
    const double gap = std::floor(std::log(rng.uniform()) / log_miss);
    position += gap + 1.0;
    if (position >= static_cast<double>(n)) break;
    batch.push_back(static_cast<std::size_t>(position));
  }
  return batch;
}

// Independent streams for batch sampling, selection and noise.
struct TrainerStreams {
  explicit TrainerStreams(std::uint64_t seed)
      : batch(NoiseSource(seed).fork(1)),
        selection(NoiseSource(seed).fork(2)),
        noise(NoiseSource(seed).fork(3)) {}

  NoiseSource batch;
  NoiseSource selection;
  NoiseSource noise;
};

// Applies a descent direction to a subset of coordinates, by plain SGD or by
// Adam with moment estimates kept only for touched coordinates.
class Optimizer {
 public:
  Optimizer(UpdateRule rule, double learning_rate, std::size_t dimension)
      : rule_(rule), learning_rate_(learning_rate) {
    if (rule_ == UpdateRule::kAdam) {
      first_.assign(dimension, 0.0);
      second_.assign(dimension, 0.0);
    }
  }

  void step(std::span<double> params, std::span<const std::size_t> coords,
            std::span<const double> direction) {
    if (rule_ == UpdateRule::kSgd) {
      for (std::size_t k = 0; k < coords.size(); ++k) {
        params[coords[k]] -= learning_rate_ * direction[k];
      }
      return;
    }
    constexpr double kBeta1 = 0.9;
    constexpr double kBeta2 = 0.999;
    constexpr double kEps = 1e-8;
    ++steps_;
    const double correction1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
    const double correction2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < coords.size(); ++k) {
      const std::size_t i = coords[k];
      first_[i] = kBeta1 * first_[i] + (1.0 - kBeta1) * direction[k];
      second_[i] = kBeta2 * second_[i] + (1.0 - kBeta2) * direction[k] * direction[k];
      params[i] -= learning_rate_ * (first_[i] / correction1) /
                   (std::sqrt(second_[i] / correction2) + kEps);
    }
  }

 private:
  UpdateRule rule_;
  double learning_rate_;
  std::int64_t steps_ = 0;
  std::vector<double> first_;
  std::vector<double> second_;
};

struct StepMetrics {
  double grad_norm = 0.0;     // ||g_hat||
  double masked_norm = 0.0;   // ||M . g_hat||
  double clipped_norm = 0.0;  // after the second clip
  double noise_stddev = 0.0;
  std::size_t mask_size = 0;
};

// (1 / b) sum_j clip(g_j, bound) over the batch, with the fixed denominator
// b rather than the realized batch size.
template <DifferentiableObjective M>
std::vector<double> clipped_mean_gradient(
    std::span<const double> params,
    std::span<const typename M::Sample> data,
    std::span<const std::size_t> batch, const M& model, double bound,
    std::size_t batch_size) {
  std::vector<double> mean(model.dimension(), 0.0);
  for (std::size_t j : batch) {
    require(j < data.size(), ErrorCode::kInvariantViolation,
            "batch index out of range");
    clip_l2(model.gradient(params, data[j]), bound).add_to(mean);
  }
  const double b = static_cast<double>(batch_size);
  for (double& v : mean) v /= b;
  return mean;
}

inline SelectionMask select_coordinates(std::span<const double> g_hat,
                                        const TrainConfig& cfg,
                                        NoiseSource& rng) {
  const std::size_t p = g_hat.size();
  const std::size_t cap = selection_size(p, cfg.gamma);
  return std::visit(
      [&](const auto& strategy) -> SelectionMask {
        using T = std::decay_t<decltype(strategy)>;
        if constexpr (std::is_same_v<T, ExponentialSelection>) {
          return exp_select_topk(g_hat, cfg.gamma, strategy.budget, cfg.clip.s0, rng);
        } else if constexpr (std::is_same_v<T, SparseVectorSelection>) {
          // Scores are clipped to s0 as for the exponential mechanism, so
          // their l-infinity sensitivity is s0. Answered values are discarded.
          const std::size_t c1 = strategy.c1 == 0 ? cap : strategy.c1;
          require(c1 >= 1, ErrorCode::kEmptySelection, "sparse vector cap is zero");
          std::vector<double> scores(g_hat.begin(), g_hat.end());
          for (double& s : scores) s = std::clamp(s, -cfg.clip.s0, cfg.clip.s0);
          const NumericSparseParams params{strategy.alpha, c1, strategy.budget,
                                           cfg.clip.s0};
          const SparseVector answered = numeric_sparse_scan(scores, params, rng).estimate;
          std::vector<std::size_t> idx(answered.indices().begin(),
                                       answered.indices().end());
          return SelectionMask(p, c1, std::move(idx));
        } else {
          return uniform_select(p, cfg.gamma, rng);
        }
      },
      cfg.selection);
}

// One iteration of the sparse private optimizer.
template <DifferentiableObjective M>
StepMetrics dp_sparse_step(std::span<double> params,
                           std::span<const typename M::Sample> data,
                           std::span<const std::size_t> batch, const M& model,
                           const TrainConfig& cfg, TrainerStreams& streams,
                           Optimizer& optimizer) {
  require(params.size() == model.dimension(), ErrorCode::kDimensionMismatch,
          "parameter vector does not match the model dimension");
  const std::vector<double> g_hat = clipped_mean_gradient(
      std::span<const double>(params), data, batch, model, cfg.clip.s1,
      cfg.batch_size);

  const SelectionMask mask = select_coordinates(g_hat, cfg, streams.selection);
  const std::size_t cap =
      std::holds_alternative<SparseVectorSelection>(cfg.selection) &&
              std::get<SparseVectorSelection>(cfg.selection).c1 != 0
          ? std::get<SparseVectorSelection>(cfg.selection).c1
          : selection_size(params.size(), cfg.gamma);
  require(mask.size() <= cap, ErrorCode::kInvariantViolation,
          "selection returned more coordinates than its cap");

  StepMetrics metrics;
  double g_sq = 0.0;
  for (double v : g_hat) g_sq += v * v;
  metrics.grad_norm = std::sqrt(g_sq);
  metrics.mask_size = mask.size();

  std::vector<double> delta(mask.size());
  double delta_sq = 0.0;
  for (std::size_t k = 0; k < mask.size(); ++k) {
    delta[k] = g_hat[mask.indices()[k]];
    delta_sq += delta[k] * delta[k];
  }
  metrics.masked_norm = std::sqrt(delta_sq);
  if (metrics.masked_norm > cfg.clip.s2) {
    const double factor = cfg.clip.s2 / metrics.masked_norm;
    for (double& v : delta) v *= factor;
  }
  double clipped_sq = 0.0;
  for (double v : delta) clipped_sq += v * v;
  metrics.clipped_norm = std::sqrt(clipped_sq);

  const double b = static_cast<double>(cfg.batch_size);
  metrics.noise_stddev =
      cfg.sigma == 0.0 ? 0.0 : cfg.sigma * std::min(cfg.clip.s1 / b, cfg.clip.s2);
  if (metrics.noise_stddev > 0.0) {
    for (double& v : delta) v += metrics.noise_stddev * streams.noise.standard_normal();
  }
  optimizer.step(params, mask.indices(), delta);
  return metrics;
}

namespace internal {
inline std::vector<std::size_t> all_coordinates(std::size_t p) {
  std::vector<std::size_t> all(p);
  for (std::size_t i = 0; i < p; ++i) all[i] = i;
  return all;
}
}  // namespace internal

// Standard DP-SGD: clip at s1, average over b, add N(0, sigma^2 s1^2 / b^2)
// to every coordinate.
template <DifferentiableObjective M>
StepMetrics dp_sgd_step(std::span<double> params,
                        std::span<const typename M::Sample> data,
                        std::span<const std::size_t> batch, const M& model,
                        const TrainConfig& cfg, TrainerStreams& streams,
                        Optimizer& optimizer) {
  require(params.size() == model.dimension(), ErrorCode::kDimensionMismatch,
          "parameter vector does not match the model dimension");
  std::vector<double> g_hat = clipped_mean_gradient(
      std::span<const double>(params), data, batch, model, cfg.clip.s1,
      cfg.batch_size);
  StepMetrics metrics;
  double g_sq = 0.0;
  for (double v : g_hat) g_sq += v * v;
  metrics.grad_norm = metrics.masked_norm = metrics.clipped_norm = std::sqrt(g_sq);
  metrics.mask_size = g_hat.size();
  const double b = static_cast<double>(cfg.batch_size);
  metrics.noise_stddev = cfg.sigma == 0.0 ? 0.0 : cfg.sigma * cfg.clip.s1 / b;
  if (metrics.noise_stddev > 0.0) {
    for (double& v : g_hat) v += metrics.noise_stddev * streams.noise.standard_normal();
  }
  const std::vector<std::size_t> all = internal::all_coordinates(g_hat.size());
  optimizer.step(params, all, g_hat);
  return metrics;
}

template <DifferentiableObjective M>
StepMetrics non_private_step(std::span<double> params,
                             std::span<const typename M::Sample> data,
                             std::span<const std::size_t> batch, const M& model,
                             const TrainConfig& cfg, Optimizer& optimizer) {
  const double bound = cfg.clip_non_private
                           ? cfg.clip.s1
                           : std::numeric_limits<double>::infinity();
  const std::vector<double> g_hat = clipped_mean_gradient(
      std::span<const double>(params), data, batch, model, bound, cfg.batch_size);
  StepMetrics metrics;
  double g_sq = 0.0;
  for (double v : g_hat) g_sq += v * v;
  metrics.grad_norm = metrics.masked_norm = metrics.clipped_norm = std::sqrt(g_sq);
  metrics.mask_size = g_hat.size();
  const std::vector<std::size_t> all = internal::all_coordinates(g_hat.size());
  optimizer.step(params, all, g_hat);
  return metrics;
}

struct EpochMetrics {
  int epoch = 0;
  double train_loss = 0.0;
  double test_loss = 0.0;
  std::optional<PrivacyBudget> spent;  // cumulative guarantee, if accounted
  double mean_mask_size = 0.0;
};

struct TrainResult {
  std::vector<double> params;
  std::vector<EpochMetrics> epochs;
  std::optional<PrivacyBudget> budget;
  std::int64_t steps = 0;
  double initial_train_loss = 0.0;
  double initial_test_loss = 0.0;
};

// Returns the guarantee of `steps` iterations over n training samples, or
// nullopt when the mode is not accounted here. Throws to refuse.
using Accountant = std::function<std::optional<PrivacyBudget>(
    const TrainConfig&, TrainMode, std::int64_t n, std::int64_t steps)>;

inline PrivacyBudget selection_budget(const TrainConfig& cfg) {
  return std::visit(
      [](const auto& s) -> PrivacyBudget {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, UniformSelection>) {
          return PrivacyBudget(0.0, s.delta);
        } else {
          return s.budget;
        }
      },
      cfg.selection);
}

// Sparse modes are accounted with the closed-form sparse DP-SGD bound
// (uniform selection spends no epsilon). DP-SGD's noise multiplier comes
// from an external accountant and is not re-derived; the non-private mode
// has no guarantee.
inline std::optional<PrivacyBudget> standard_accountant(const TrainConfig& cfg,
                                                        TrainMode mode,
                                                        std::int64_t n,
                                                        std::int64_t steps) {
  if (!is_sparse(mode)) return std::nullopt;
  const PrivacyBudget sel = selection_budget(cfg);
  const double eps_sel = mode == TrainMode::kSparseUniform ? 0.0 : sel.epsilon();
  return sparse_sgd_total_budget(eps_sel, sel.delta(), cfg.sigma,
                                 static_cast<std::int64_t>(cfg.batch_size), n,
                                 steps);
}

struct TrainOptions {
  Accountant accountant = standard_accountant;
  std::function<void(const EpochMetrics&)> on_epoch;
};

template <DifferentiableObjective M>
double mean_objective(const M& model, std::span<const double> params,
                      std::span<const typename M::Sample> data) {
  if (data.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& s : data) sum += model.loss(params, s);
  return sum / static_cast<double>(data.size());
}

inline std::int64_t steps_per_epoch(std::size_t n, std::size_t batch_size) {
  return std::max<std::int64_t>(1, static_cast<std::int64_t>(n / batch_size));
}

inline void check_mode_matches_selection(TrainMode mode, const TrainConfig& cfg) {
  const bool ok =
      (mode == TrainMode::kSparseExp &&
       std::holds_alternative<ExponentialSelection>(cfg.selection)) ||
      (mode == TrainMode::kSparseSv &&
       std::holds_alternative<SparseVectorSelection>(cfg.selection)) ||
      (mode == TrainMode::kSparseUniform &&
       std::holds_alternative<UniformSelection>(cfg.selection)) ||
      !is_sparse(mode);
  require(ok, ErrorCode::kInvalidParameter,
          "selection strategy does not match mode " + std::string(to_string(mode)));
}

// Runs epochs * floor(n / b) steps of the chosen step function, evaluating
// the full train and held-out loss after each epoch. The accountant runs
// before the first step, so a refusal aborts before any training.
template <DifferentiableObjective M>
TrainResult train(const M& model, std::span<const typename M::Sample> train_set,
                  std::span<const typename M::Sample> test_set,
                  std::vector<double> init_params, const TrainConfig& cfg,
                  TrainMode mode, const TrainOptions& options = {}) {
  cfg.validate();
  check_mode_matches_selection(mode, cfg);
  require(init_params.size() == model.dimension(), ErrorCode::kDimensionMismatch,
          "initial parameters do not match the model dimension");
  require(!train_set.empty() && cfg.batch_size <= train_set.size(),
          ErrorCode::kInput, "batch size exceeds the training set");
  const auto n = static_cast<std::int64_t>(train_set.size());
  const std::int64_t per_epoch = steps_per_epoch(train_set.size(), cfg.batch_size);

  TrainResult result;
  result.steps = per_epoch * cfg.epochs;
  if (options.accountant) {
    result.budget = options.accountant(cfg, mode, n, result.steps);
  }

  result.params = std::move(init_params);
  std::span<double> params(result.params);
  TrainerStreams streams(cfg.seed);
  Optimizer optimizer(cfg.update, cfg.learning_rate, model.dimension());
  const double rate = static_cast<double>(cfg.batch_size) / static_cast<double>(n);

  result.initial_train_loss = mean_objective(model, params, train_set);
  result.initial_test_loss = mean_objective(model, params, test_set);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    double mask_total = 0.0;
    for (std::int64_t s = 0; s < per_epoch; ++s) {
      const std::vector<std::size_t> batch =
          poisson_batch(train_set.size(), rate, streams.batch);
      StepMetrics metrics;
      switch (mode) {
        case TrainMode::kNonPrivate:
          metrics = non_private_step(params, train_set, batch, model, cfg, optimizer);
          break;
        case TrainMode::kDpSgd:
          metrics = dp_sgd_step(params, train_set, batch, model, cfg, streams, optimizer);
          break;
        default:
          metrics = dp_sparse_step(params, train_set, batch, model, cfg, streams,
                                   optimizer);
          break;
      }
      mask_total += static_cast<double>(metrics.mask_size);
    }
    EpochMetrics em;
    em.epoch = epoch;
    em.train_loss = mean_objective(model, params, train_set);
    em.test_loss = mean_objective(model, params, test_set);
    em.mean_mask_size = mask_total / static_cast<double>(per_epoch);
    if (options.accountant && result.budget) {
      em.spent = epoch == cfg.epochs
                     ? result.budget
                     : options.accountant(cfg, mode, n, per_epoch * epoch);
    }
    if (options.on_epoch) options.on_epoch(em);
    result.epochs.push_back(em);
  }
  return result;
}

}  // namespace sparsedp

#endif  // SPARSEDP_TRAINER_H_
