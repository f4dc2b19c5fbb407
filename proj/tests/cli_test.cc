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

#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <string>

#include "gtest/gtest.h"
#include "sparsedp/io.h"

namespace sparsedp {
namespace {

namespace fs = std::filesystem;

struct RunResult {
  int code = -1;
  std::string output;
};

RunResult RunCli(const std::string& args) {
  const std::string cmd = std::string(SPARSEDP_CLI) + " " + args + " 2>&1";
  RunResult r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (pipe == nullptr) return r;
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class CliTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / "sparsedp_cli_test";
    fs::remove_all(root_);
    fs::create_directories(root_);
    // A small but complete pipeline: 50 words, 8 dimensions, 20 canaries.
    common_ = " -s data.corpus=" + std::string(SPARSEDP_SOURCE_DIR) +
              "/data/tiny_corpus.txt -s data.dir=" + (root_ / "data").string() +
              " -s output.dir=" + (root_ / "run").string() +
              " -s data.vocab_size=50 -s data.train_size=2000 -s data.val_size=200"
              " -s data.test_size=200 -s data.negatives=4 -s model.dim=8"
              " -s canary.count=20 -s canary.n_c=2 -s canary.sample_size=200"
              " -s canary.control_count=20 -s canary.bins=2 -s train.epochs=1 -s train.gamma=0.1"
              " -s train.sigma=2 -s selection.epsilon=2 -s train.learning_rate=0.05";
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static RunResult Cli(const std::string& sub, const std::string& extra = "") {
    return RunCli(sub + common_ + " " + extra);
  }

  static inline fs::path root_;
  static inline std::string common_;
};

TEST_F(CliTest, PipelineRunsAndIsDeterministic) {
  const RunResult pre = Cli("preprocess");
  ASSERT_EQ(pre.code, 0) << pre.output;
  for (const char* f : {"vocab.txt", "train.csv", "val.csv", "test.csv", "canaries.txt",
                        "meta.json"}) {
    EXPECT_TRUE(fs::exists(root_ / "data" / f)) << f;
  }
  const Json meta = Json::parse(read_file(root_ / "data" / "meta.json"));
  EXPECT_EQ(meta["n_c"], 2);
  EXPECT_EQ(meta["train"], 2000 + 20 * 2 * 6);

  const RunResult first = Cli("train", "--mode sparse_exp");
  ASSERT_EQ(first.code, 0) << first.output;
  const std::string metrics = read_file(root_ / "run" / "metrics.jsonl");
  const std::string checkpoint = read_file(root_ / "run" / "checkpoint.txt");
  const RunResult second = Cli("train", "--mode sparse_exp");
  ASSERT_EQ(second.code, 0) << second.output;
  EXPECT_EQ(read_file(root_ / "run" / "metrics.jsonl"), metrics);
  EXPECT_EQ(read_file(root_ / "run" / "checkpoint.txt"), checkpoint);
  const Json header = Json::parse(internal::split_lines(metrics)[0]);
  EXPECT_EQ(header["record"], "header");
  EXPECT_TRUE(header["epsilon"].is_number());

  const RunResult eval = Cli("canary-eval");
  ASSERT_EQ(eval.code, 0) << eval.output;
  const auto lines = internal::split_lines(read_file(root_ / "run" / "canary_report.jsonl"));
  EXPECT_GE(lines.size(), 21u);
}

TEST_F(CliTest, BudgetPrintsTotalOrNull) {
  const RunResult sparse = Cli("budget", "--n 2240 --mode sparse_exp");
  ASSERT_EQ(sparse.code, 0) << sparse.output;
  const auto lines = internal::split_lines(sparse.output);
  ASSERT_EQ(lines.size(), 2u);
  EXPECT_TRUE(Json::parse(lines[1])["epsilon"].is_number());

  const RunResult dpsgd = Cli("budget", "--n 2240 --mode dp_sgd");
  ASSERT_EQ(dpsgd.code, 0) << dpsgd.output;
  EXPECT_TRUE(Json::parse(dpsgd.output)["epsilon"].is_null());
}

TEST_F(CliTest, FullScaleBudgetIsRefused) {
  const RunResult r = RunCli("budget -c " + std::string(SPARSEDP_SOURCE_DIR) +
                          "/configs/paper.conf --n 200000");
  EXPECT_EQ(r.code, 3) << r.output;
  EXPECT_NE(r.output.find("hypothesis_lhs"), std::string::npos);
  EXPECT_NE(r.output.find("error:"), std::string::npos);
}

TEST_F(CliTest, InputErrorsExitTwo) {
  const RunResult missing = Cli("preprocess", "--corpus /nonexistent/corpus.txt");
  EXPECT_EQ(missing.code, 2);
  EXPECT_NE(missing.output.find("/nonexistent/corpus.txt"), std::string::npos);
  EXPECT_EQ(Cli("budget", "-s no.such.key=1").code, 2);
  EXPECT_EQ(RunCli("").code, 2);
  EXPECT_EQ(RunCli("frobnicate").code, 2);
}

}  // namespace
}  // namespace sparsedp
