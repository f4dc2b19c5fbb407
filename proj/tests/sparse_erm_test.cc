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
#include <vector>

#include "gtest/gtest.h"
#include "testing.h"

namespace sparsedp {
namespace {

void ExpectCode(ErrorCode expected, const std::function<void()>& fn) {
  try {
    fn();
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), expected) << e.what();
  }
}

long double ScalarLogisticLoss(const std::vector<double>& w, const std::vector<double>& x,
                               double y) {
  long double z = 0.0L;
  for (std::size_t i = 0; i < w.size(); ++i) z += static_cast<long double>(w[i]) * x[i];
  return std::log1p(std::exp(z)) - y * z;
}

TEST(GlmLossTest, ZeroWeights) {
  const SparseVector x(5, {1, 3}, {2.0, -1.0});
  const std::vector<double> w(5, 0.0);
  EXPECT_NEAR(glm_loss(w, x, 1.0), std::log(2.0), 1e-15);
  EXPECT_NEAR(glm_loss(w, SparseVector(5), 0.3), std::log(2.0), 1e-15);
}

TEST(GlmLossTest, MatchesScalarOracle) {
  NoiseSource rng(1);
  for (int trial = 0; trial < 200; ++trial) {
    const std::vector<double> w = testing::random_vector(12, 3.0, rng);
    const std::vector<double> dense = testing::random_vector(12, 1.0, rng);
    const double y = rng.uniform();
    const double got = glm_loss(w, SparseVector::from_dense(dense), y);
    EXPECT_LE(testing::oracle::rel_err(got, ScalarLogisticLoss(w, dense, y)), 1e-12);
  }
}

TEST(GlmLossTest, StableForLargeMargins) {
  const SparseVector x(1, {0}, {1.0});
  EXPECT_NEAR(glm_loss(std::vector<double>{800.0}, x, 1.0), 0.0, 1e-12);
  EXPECT_NEAR(glm_loss(std::vector<double>{-800.0}, x, 0.0), 0.0, 1e-12);
  EXPECT_NEAR(glm_loss(std::vector<double>{800.0}, x, 0.0), 800.0, 1e-9);
}

TEST(GlmLossTest, Errors) {
  const SparseVector x(3, {0}, {1.0});
  ExpectCode(ErrorCode::kDimensionMismatch, [&] { glm_loss(std::vector<double>(2), x, 1.0); });
  ExpectCode(ErrorCode::kInvalidParameter, [&] { glm_loss(std::vector<double>(3), x, 1.5); });
}

TEST(GlmGradientTest, ZeroWeightsHalfResidual) {
  const SparseVector x(5, {0, 4}, {2.0, -4.0});
  const SparseVector g = glm_gradient(std::vector<double>(5, 0.0), x, 1.0);
  EXPECT_EQ(g.to_dense(), (std::vector<double>{-1.0, 0, 0, 0, 2.0}));
}

TEST(GlmGradientTest, SupportWithinFeatureSupport) {
  NoiseSource rng(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::vector<double> w = testing::random_vector(50, 2.0, rng);
    const SelectionMask s = uniform_select(50, 0.06, rng);
    std::vector<std::pair<std::size_t, double>> e;
    for (std::size_t i : s.indices()) e.emplace_back(i, 2.0 * rng.uniform() - 1.0);
    const SparseVector x = SparseVector::from_unsorted(50, e);
    const SparseVector g = glm_gradient(w, x, rng.uniform());
    EXPECT_LE(g.nnz(), 3u);
    for (std::size_t i : g.indices()) EXPECT_TRUE(s.contains(i));
  }
}

TEST(GlmGradientTest, FiniteDifferences) {
  NoiseSource rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const std::vector<double> w = testing::random_vector(8, 1.5, rng);
    const SparseVector x = SparseVector::from_dense(testing::random_vector(8, 1.0, rng));
    const double y = rng.uniform();
    const std::vector<double> g = glm_gradient(w, x, y).to_dense();
    const double err = testing::max_fd_error(
        [&](std::span<const double> v) { return glm_loss(v, x, y); }, w, g);
    EXPECT_LT(err, 1e-5);
  }
}

GroupedDataset SmallDataset(NoiseSource& rng, std::size_t p = 40, std::size_t support = 4,
                            std::size_t n = 60, std::size_t m = 6) {
  auto syn = testing::make_sparse_logistic(p, support, n, m, rng);
  return GroupedDataset(std::move(syn.groups), p, support, 1.0);
}

TEST(GroupedDatasetTest, RejectsUnevenGroups) {
  std::vector<std::vector<LabeledSample>> groups(2);
  groups[0].push_back({SparseVector(3), 1.0});
  groups[0].push_back({SparseVector(3), 1.0});
  groups[1].push_back({SparseVector(3), 0.0});
  ExpectCode(ErrorCode::kInput, [&] { GroupedDataset(groups, 3, 1, 1.0); });
}

TEST(GroupedDatasetTest, RejectsSupportAboveC1) {
  std::vector<std::vector<LabeledSample>> groups(1);
  groups[0].push_back({SparseVector(5, {0, 1}, {1, 1}), 1.0});
  groups[0].push_back({SparseVector(5, {2}, {1}), 0.0});
  ExpectCode(ErrorCode::kInput, [&] { GroupedDataset(groups, 5, 2, 1.0); });
  EXPECT_NO_THROW(GroupedDataset(groups, 5, 3, 1.0));
}

TEST(VerifyGroupSparsityTest, PassesOnSharedSupports) {
  NoiseSource rng(4);
  const GroupedDataset data = SmallDataset(rng);
  std::vector<std::vector<double>> probes;
  for (int i = 0; i < 100; ++i) probes.push_back(testing::random_vector(40, 1.0, rng));
  const GroupSparsityReport r = verify_group_sparsity(data, probes);
  EXPECT_TRUE(r.pass);
  EXPECT_LE(r.worst_support, 4u);
  EXPECT_LE(max_gradient_coordinate(data, probes), data.c2());
}

TEST(VerifyGroupSparsityTest, ForeignCoordinateFails) {
  NoiseSource rng(5);
  auto syn = testing::make_sparse_logistic(40, 4, 60, 6, rng);
  // Give one sample in group 2 a coordinate outside its group's support.
  const auto& first = syn.groups[2][0].x;
  std::size_t foreign = 0;
  while (first.at(foreign) != 0.0) ++foreign;
  std::vector<std::pair<std::size_t, double>> e;
  for (std::size_t k = 0; k < first.stored(); ++k) {
    e.emplace_back(first.indices()[k], first.values()[k]);
  }
  e.emplace_back(foreign, 1.0);
  syn.groups[2][0].x = SparseVector::from_unsorted(40, e);
  const GroupedDataset data(std::move(syn.groups), 40, 4, 1.0,
                            GroupedDataset::SupportCheck::kSkip);
  const std::vector<std::vector<double>> probes{testing::random_vector(40, 1.0, rng)};
  const GroupSparsityReport r = verify_group_sparsity(data, probes);
  EXPECT_FALSE(r.pass);
  EXPECT_EQ(r.worst_support, 5u);
  EXPECT_EQ(r.worst_group, 2u);
}

TEST(DpSparseErmTest, ZeroLearningRateLeavesWeights) {
  NoiseSource rng(6);
  const GroupedDataset data = SmallDataset(rng);
  NoiseSource run(1);
  const auto result = dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(1.0, 1e-5),
                                          0.0, 1, run);
  EXPECT_EQ(result.model.weights, std::vector<double>(40, 0.0));
  ASSERT_EQ(result.steps.size(), 1u);
}

TEST(DpSparseErmTest, RefusesTooManyGroups) {
  NoiseSource rng(7);
  const GroupedDataset data = SmallDataset(rng, 40, 4, 60, 30);
  NoiseSource run(1);
  ExpectCode(ErrorCode::kAssumptionViolated, [&] {
    dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(1.0, 1e-5), 0.1, 4, run);
  });
}

TEST(DpSparseErmTest, CertifiedBudgetEqualsRequested) {
  NoiseSource rng(8);
  const GroupedDataset data = SmallDataset(rng);
  NoiseSource run(2);
  const PrivacyBudget total(2.0, 1e-5);
  const auto result = dp_sparse_erm_train(data, GlmModel<>(40), total, 0.1, 50, run);
  EXPECT_LE(testing::oracle::rel_err(result.certified.epsilon(), 2.0), 1e-9);
  EXPECT_LE(testing::oracle::rel_err(result.certified.delta(), 1e-5), 1e-9);
  EXPECT_LE(result.steps.back().eps_spent, 2.0 * (1 + 1e-9));
  EXPECT_DOUBLE_EQ(result.s_inf, 2.0 * 1.0 * 6 / 60);
}

TEST(DpSparseErmTest, EachStepTouchesAtMostC1Coordinates) {
  NoiseSource rng(9);
  const GroupedDataset data = SmallDataset(rng, 40, 4, 60, 6);
  NoiseSource run(3);
  SparseErmOptions options;
  options.alpha_override = 1e-3;  // admits many candidates so the cap binds
  const auto result =
      dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(15.0, 1e-3), 0.1, 200, run, options);
  for (const ErmStepMetrics& s : result.steps) EXPECT_LE(s.grad_support_size, 4u);
}

// With noise removed and a threshold below every gradient coordinate, each
// iteration is an exact gradient step on the picked group's mean gradient.
TEST(DpSparseErmTest, NoiseFreeEqualsGradientDescent) {
  NoiseSource rng(10);
  const GroupedDataset data = SmallDataset(rng);
  SparseErmOptions options;
  options.noise = NoiseMode::kNoiseFree;
  options.alpha_override = 1e-300;
  NoiseSource run(4);
  const auto result = dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(1.0, 1e-5),
                                          0.5, 64, run, options);

  NoiseSource replay(4);
  NoiseSource groups = replay.fork(kErmGroupStream);
  std::vector<double> w(40, 0.0), grad(40);
  const double scale = 6.0 / 60.0;
  for (int t = 0; t < 64; ++t) {
    const auto& group = data.group(groups.uniform_index(6));
    std::fill(grad.begin(), grad.end(), 0.0);
    for (const LabeledSample& s : group) glm_gradient(w, s.x, s.y).add_to(grad);
    for (std::size_t i = 0; i < 40; ++i) w[i] -= 0.5 * (grad[i] * scale);
  }
  EXPECT_EQ(result.model.weights, w);
  EXPECT_LT(result.steps.back().train_loss, result.initial_loss);
}

TEST(DpSparseErmTest, SeedReproducible) {
  NoiseSource rng(11);
  const GroupedDataset data = SmallDataset(rng);
  SparseErmOptions options;
  options.alpha_override = 0.05;
  NoiseSource a(5), b(5);
  const auto ra = dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(5.0, 1e-5), 0.3, 30, a, options);
  const auto rb = dp_sparse_erm_train(data, GlmModel<>(40), PrivacyBudget(5.0, 1e-5), 0.3, 30, b, options);
  EXPECT_EQ(ra.model.weights, rb.model.weights);
}

// p = 1000, c1 = 10, m = 20, n = 2000, eps = 4, delta = 1e-5. Alpha grows
// with T, and T = 66 is the smallest count whose per-iteration epsilon is at
// most 1 as amplification by sampling requires.
struct ErmTask {
  GroupedDataset data;
  std::int64_t iterations;
};

ErmTask FullScaleTask(std::uint64_t seed) {
  NoiseSource rng(seed);
  auto syn = testing::make_sparse_logistic(1000, 10, 2000, 20, rng);
  return {GroupedDataset(std::move(syn.groups), 1000, 10, 1.0), 66};
}

TEST(DpSparseErmTest, SyntheticTaskLossDecreasesAtCalibratedThreshold) {
  double initial = 0.0, final_loss = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const ErmTask task = FullScaleTask(seed);
    NoiseSource run(100 + seed);
    const auto r = dp_sparse_erm_train(task.data, GlmModel<>(1000), PrivacyBudget(4.0, 1e-5),
                                       1.0, task.iterations, run);
    initial += r.initial_loss / 5;
    final_loss += r.steps.back().train_loss / 5;
  }
  EXPECT_LT(final_loss, initial)
      << "the calibrated threshold exceeds every achievable gradient coordinate";
}

// The threshold at this scale is about 77 c2 while group-mean gradient
// coordinates never exceed c2, so no coordinate is released.
TEST(DpSparseErmTest, SyntheticTaskThresholdExceedsGradientBound) {
  const ErmTask task = FullScaleTask(1);
  NoiseSource run(101);
  const auto r = dp_sparse_erm_train(task.data, GlmModel<>(1000), PrivacyBudget(4.0, 1e-5),
                                     1.0, task.iterations, run);
  EXPECT_GT(r.alpha, 50.0 * task.data.c2());
  for (const ErmStepMetrics& s : r.steps) EXPECT_EQ(s.grad_support_size, 0u);
  EXPECT_EQ(r.steps.back().train_loss, r.initial_loss);
}

}  // namespace
}  // namespace sparsedp
