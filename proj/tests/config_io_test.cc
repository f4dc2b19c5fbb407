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

#include <filesystem>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "sparsedp/config.h"
#include "sparsedp/io.h"
#include "testing.h"

namespace sparsedp {
namespace {

ErrorCode CodeOf(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an error";
  return ErrorCode::kInvariantViolation;
}

TEST(ExperimentConfigTest, SerializeRoundTrips) {
  ExperimentConfig cfg;
  cfg.set("train.sigma", "0.75");
  cfg.apply_override("mode = sparse_sv");
  cfg.apply_override("data.stopwords=");
  const ExperimentConfig back = ExperimentConfig::parse(cfg.serialize());
  EXPECT_EQ(back, cfg);
  EXPECT_EQ(back.get_double("train.sigma"), 0.75);
  EXPECT_EQ(back.mode(), TrainMode::kSparseSv);
}

TEST(ExperimentConfigTest, ParseSkipsCommentsAndTrims) {
  const ExperimentConfig cfg =
      ExperimentConfig::parse("# comment\n\n  seed =  42 \r\nclip.s2=inf\n");
  EXPECT_EQ(cfg.get_u64("seed"), 42u);
  EXPECT_TRUE(std::isinf(cfg.get_double("clip.s2")));
}

TEST(ExperimentConfigTest, Errors) {
  EXPECT_EQ(CodeOf([] { ExperimentConfig::parse("no_such_key = 1\n"); }), ErrorCode::kInput);
  EXPECT_EQ(CodeOf([] { ExperimentConfig::parse("seed 1\n"); }), ErrorCode::kInput);
  ExperimentConfig cfg;
  EXPECT_EQ(CodeOf([&] { cfg.apply_override("seed"); }), ErrorCode::kInput);
  cfg.set("seed", "-3");
  EXPECT_EQ(CodeOf([&] { cfg.get_u64("seed"); }), ErrorCode::kInput);
  cfg.set("train.sigma", "abc");
  EXPECT_EQ(CodeOf([&] { cfg.get_double("train.sigma"); }), ErrorCode::kInput);
  cfg.set("train.clip_nonprivate", "maybe");
  EXPECT_EQ(CodeOf([&] { cfg.get_bool("train.clip_nonprivate"); }), ErrorCode::kInput);
  cfg.set("mode", "fancy");
  EXPECT_EQ(CodeOf([&] { cfg.mode(); }), ErrorCode::kInput);
}

TEST(ExperimentConfigTest, TrainConfigPerMode) {
  ExperimentConfig cfg;
  cfg.set("mode", "dp_sgd");
  EXPECT_EQ(cfg.train_config().sigma, cfg.get_double("train.dpsgd_sigma"));
  cfg.set("mode", "sparse_exp");
  const TrainConfig exp = cfg.train_config();
  EXPECT_EQ(exp.sigma, cfg.get_double("train.sigma"));
  ASSERT_TRUE(std::holds_alternative<ExponentialSelection>(exp.selection));
  EXPECT_EQ(std::get<ExponentialSelection>(exp.selection).budget.epsilon(), 16.0);
  cfg.set("mode", "sparse_uniform");
  const TrainConfig uni = cfg.train_config();
  ASSERT_TRUE(std::holds_alternative<UniformSelection>(uni.selection));
  EXPECT_EQ(std::get<UniformSelection>(uni.selection).delta, 1.25e-7);
  cfg.set("train.optimizer", "rmsprop");
  EXPECT_EQ(CodeOf([&] { cfg.train_config(); }), ErrorCode::kInput);
}

TEST(IoTest, VocabularyRoundTrip) {
  const Vocabulary v({"alpha", "beta", "gamma"}, {5, 3, 1});
  const Vocabulary back = parse_vocabulary(format_vocabulary(v));
  EXPECT_EQ(back.tokens(), v.tokens());
}

TEST(IoTest, SamplesRoundTripAndValidation) {
  NoiseSource rng(1);
  std::vector<CbowSample> samples;
  for (int i = 0; i < 50; ++i) samples.push_back(testing::random_cbow_sample(40, 4, rng));
  EXPECT_EQ(parse_samples(format_samples(samples), 40), samples);
  EXPECT_EQ(CodeOf([&] { parse_samples(format_samples(samples), 10); }), ErrorCode::kInput);
  EXPECT_EQ(CodeOf([] { parse_samples("1,x,3\n", 10); }), ErrorCode::kInput);
}

TEST(IoTest, CheckpointRoundTripIsExact) {
  NoiseSource rng(2);
  Checkpoint ckpt{3, 4, testing::random_vector(12, 1.0, rng)};
  ckpt.params[0] = 1e-300;
  ckpt.params[1] = -0.1;
  const Checkpoint back = parse_checkpoint(format_checkpoint(ckpt));
  EXPECT_EQ(back.rows, 3u);
  EXPECT_EQ(back.cols, 4u);
  EXPECT_EQ(back.params, ckpt.params);
  EXPECT_EQ(CodeOf([] { parse_checkpoint("# params 4 2 2\n1\n2\n3\n"); }), ErrorCode::kInput);
  EXPECT_EQ(CodeOf([] { parse_checkpoint("# params 5 2 2\n"); }), ErrorCode::kInput);
}

TEST(IoTest, CanariesRoundTrip) {
  NoiseSource rng(3);
  const auto canaries = random_phrases(30, 20, rng);
  EXPECT_EQ(parse_canaries(format_canaries(canaries), 30), canaries);
  EXPECT_EQ(CodeOf([] { parse_canaries("1 2\n", 30); }), ErrorCode::kInput);
  EXPECT_EQ(CodeOf([] { parse_canaries("1 2 30\n", 30); }), ErrorCode::kInput);
}

TEST(IoTest, GroupedDatasetRoundTrip) {
  NoiseSource rng(4);
  auto syn = testing::make_sparse_logistic(30, 3, 40, 4, rng);
  const GroupedDataset data(std::move(syn.groups), 30, 3, 1.0);
  const GroupedDataset back = parse_grouped_dataset(format_grouped_dataset(data), 30, 3, 1.0);
  ASSERT_EQ(back.num_groups(), 4u);
  for (std::size_t g = 0; g < 4; ++g) {
    ASSERT_EQ(back.group(g).size(), data.group(g).size());
    for (std::size_t j = 0; j < data.group(g).size(); ++j) {
      EXPECT_EQ(back.group(g)[j].x.to_dense(), data.group(g)[j].x.to_dense());
      EXPECT_EQ(back.group(g)[j].y, data.group(g)[j].y);
    }
  }
  EXPECT_EQ(CodeOf([] { parse_grouped_dataset("0 1 30:1\n", 30, 3, 1.0); }),
            ErrorCode::kInput);
  EXPECT_EQ(CodeOf([] { parse_grouped_dataset("0 1 4\n", 30, 3, 1.0); }), ErrorCode::kInput);
}

TEST(IoTest, CanaryReportRecords) {
  CanaryReport report;
  report.canaries = {Canary{{0, 1, 2}}};
  report.perplexities = {3.5};
  report.ranks = {17};
  report.n_c = 9;
  report.fit.histogram = {1, 0};
  const Vocabulary v({"x", "y", "z"}, {});
  const std::string text = format_canary_report(report, &v);
  const auto lines = internal::split_lines(text);
  ASSERT_EQ(lines.size(), 2u);
  const Json first = Json::parse(lines[0]);
  EXPECT_EQ(first["rank"], 17);
  EXPECT_EQ(first["words"][2], "z");
  const Json summary = Json::parse(lines[1]);
  EXPECT_EQ(summary["n_c"], 9);
  EXPECT_EQ(summary["histogram"].size(), 2u);
}

TEST(IoTest, ReadMissingFileNamesPath) {
  try {
    read_file("/nonexistent/sparsedp/file.txt");
    ADD_FAILURE() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
    EXPECT_NE(std::string(e.what()).find("/nonexistent/sparsedp/file.txt"), std::string::npos);
  }
}

TEST(IoTest, WriteCreatesDirectories) {
  const auto dir = std::filesystem::temp_directory_path() / "sparsedp_io_test" / "nested";
  std::filesystem::remove_all(dir.parent_path());
  write_file(dir / "f.txt", "hello\n");
  EXPECT_EQ(read_file(dir / "f.txt"), "hello\n");
  std::filesystem::remove_all(dir.parent_path());
}

}  // namespace
}  // namespace sparsedp
