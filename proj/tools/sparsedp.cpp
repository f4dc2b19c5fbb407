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

// Batch driver. Exit codes: 0 success, 1 internal invariant violation,
// 2 input or parameter error, 3 privacy-accounting refusal.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sparsedp/sparsedp.h"

namespace fs = std::filesystem;
using namespace sparsedp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInvariant = 1;
constexpr int kExitInput = 2;
constexpr int kExitRefused = 3;

// Stream ids forked from the master seed, one per pipeline stage.
constexpr std::uint64_t kPreprocessStream = 10;
constexpr std::uint64_t kCanaryInsertStream = 11;
constexpr std::uint64_t kInitStream = 20;
constexpr std::uint64_t kRankStream = 30;
constexpr std::uint64_t kControlStream = 31;
constexpr std::uint64_t kErmStream = 40;

struct CommonOptions {
  std::string config_path;
  std::vector<std::string> overrides;
};

ExperimentConfig load_config(const CommonOptions& opts) {
  ExperimentConfig cfg;
  if (!opts.config_path.empty()) cfg = ExperimentConfig::parse(read_file(opts.config_path));
  for (const std::string& o : opts.overrides) cfg.apply_override(o);
  return cfg;
}

unsigned thread_count(const ExperimentConfig& cfg) {
  if (const char* env = std::getenv("SPARSEDP_THREADS"); env != nullptr && *env != '\0') {
    const auto n = internal::parse_number<unsigned>(env, "SPARSEDP_THREADS");
    return n == 0 ? 1 : n;
  }
  const auto n = cfg.get_u64("threads");
  return n == 0 ? 1 : static_cast<unsigned>(n);
}

fs::path data_dir(const ExperimentConfig& cfg) { return cfg.get("data.dir"); }
fs::path output_dir(const ExperimentConfig& cfg) { return cfg.get("output.dir"); }

int cmd_preprocess(const ExperimentConfig& cfg) {
  const fs::path corpus_path = cfg.get("data.corpus");
  require(fs::exists(corpus_path), ErrorCode::kIo,
          "corpus file '" + corpus_path.string() + "' does not exist");
  const std::string corpus = read_file(corpus_path);
  const std::string& stop_path = cfg.get("data.stopwords");
  const StopWords stop =
      stop_path.empty() ? StopWords::english() : StopWords::parse(read_file(stop_path));

  const NoiseSource master(cfg.get_u64("seed"));
  NoiseSource rng = master.fork(kPreprocessStream);
  CorpusSplits splits = preprocess(corpus, cfg.preprocess_config(), stop, rng);

  const std::size_t count = cfg.get_size("canary.count");
  const std::size_t n_c = cfg.get_size("canary.n_c");
  std::vector<Canary> canaries;
  std::size_t inserted_samples = 0;
  if (count > 0 && n_c > 0) {
    NoiseSource canary_rng = master.fork(kCanaryInsertStream);
    const std::size_t before = splits.train.size();
    CanaryInsertion ins = generate_and_insert(
        std::move(splits.train), splits.vocab.size(), count, n_c,
        cfg.get_size("data.window"), cfg.get_size("data.negatives"), canary_rng);
    splits.train = std::move(ins.samples);
    canaries = std::move(ins.canaries);
    inserted_samples = splits.train.size() - before;
  }

  const fs::path dir = data_dir(cfg);
  write_file(dir / "vocab.txt", format_vocabulary(splits.vocab));
  write_file(dir / "train.csv", format_samples(splits.train));
  write_file(dir / "val.csv", format_samples(splits.val));
  write_file(dir / "test.csv", format_samples(splits.test));
  write_file(dir / "canaries.txt", format_canaries(canaries));
  const Json meta{{"vocab_size", splits.vocab.size()},
                  {"train", splits.train.size()},
                  {"val", splits.val.size()},
                  {"test", splits.test.size()},
                  {"canaries", canaries.size()},
                  {"n_c", canaries.empty() ? 0 : n_c},
                  {"canary_samples", inserted_samples}};
  write_file(dir / "meta.json", meta.dump(2) + "\n");
  std::cout << meta.dump() << "\n";
  return kExitOk;
}

Vocabulary load_vocab(const ExperimentConfig& cfg) {
  return parse_vocabulary(read_file(data_dir(cfg) / "vocab.txt"));
}

std::int64_t train_size_for_budget(const ExperimentConfig& cfg,
                                   std::optional<std::int64_t> n_flag) {
  if (n_flag) return *n_flag;
  const fs::path train_path = data_dir(cfg) / "train.csv";
  if (fs::exists(train_path)) {
    const Json meta = Json::parse(read_file(data_dir(cfg) / "meta.json"));
    return meta.at("train").get<std::int64_t>();
  }
  return static_cast<std::int64_t>(cfg.get_size("data.train_size"));
}

int cmd_budget(const ExperimentConfig& cfg, std::optional<std::int64_t> n_flag) {
  const TrainMode mode = cfg.mode();
  const TrainConfig tc = cfg.train_config();
  tc.validate();
  const std::int64_t n = train_size_for_budget(cfg, n_flag);
  const std::int64_t steps =
      steps_per_epoch(static_cast<std::size_t>(n), tc.batch_size) * tc.epochs;
  Json out{{"mode", to_string(mode)}, {"n", n}, {"b", tc.batch_size},
           {"steps", steps},         {"sigma", tc.sigma}};
  if (is_sparse(mode)) {
    const PrivacyBudget sel = selection_budget(tc);
    const double eps_sel = mode == TrainMode::kSparseUniform ? 0.0 : sel.epsilon();
    out["selection_epsilon"] = eps_sel;
    out["delta_prime"] = sel.delta();
    // Print the hypothesis before a possible refusal.
    const double noise_eps = gaussian_step_epsilon(sel.delta(), tc.sigma);
    const double lhs = static_cast<double>(tc.batch_size) / static_cast<double>(n) *
                       (eps_sel + noise_eps);
    out["hypothesis_lhs"] = lhs;
    out["hypothesis_rhs"] = 1.0 / std::sqrt(static_cast<double>(steps));
    std::cout << out.dump() << "\n";
    const SparseSgdAccount acc = sparse_sgd_account(
        eps_sel, sel.delta(), tc.sigma, static_cast<std::int64_t>(tc.batch_size), n, steps);
    const Json total{{"epsilon", acc.total.epsilon()},
                     {"delta", acc.total.delta()},
                     {"selection_share", acc.selection_share},
                     {"noise_share", acc.noise_share},
                     {"per_step_epsilon", acc.per_step.epsilon()},
                     {"per_step_delta", acc.per_step.delta()}};
    std::cout << total.dump() << "\n";
  } else {
    out["epsilon"] = nullptr;
    out["delta"] = nullptr;
    out["note"] = mode == TrainMode::kDpSgd
                      ? "noise multiplier is taken from an external accountant"
                      : "no privacy guarantee";
    std::cout << out.dump() << "\n";
  }
  return kExitOk;
}

int cmd_train(const ExperimentConfig& cfg) {
  const TrainMode mode = cfg.mode();
  const TrainConfig tc = cfg.train_config();
  const Vocabulary vocab = load_vocab(cfg);
  const fs::path dir = data_dir(cfg);
  const std::vector<CbowSample> train_set =
      parse_samples(read_file(dir / "train.csv"), vocab.size());
  const std::vector<CbowSample> test_set =
      parse_samples(read_file(dir / "test.csv"), vocab.size());
  const std::size_t dim = cfg.get_size("model.dim");
  require(dim >= 1, ErrorCode::kInvalidParameter, "model.dim must be >= 1");
  const CbowObjective model(vocab.size(), dim);

  NoiseSource init_rng = NoiseSource(tc.seed).fork(kInitStream);
  EmbeddingTable table = EmbeddingTable::random(vocab.size(), dim, init_rng);

  const fs::path out_dir = output_dir(cfg);
  fs::create_directories(out_dir);
  const fs::path metrics_path = out_dir / "metrics.jsonl";
  std::ofstream metrics;

  TrainOptions options;
  options.on_epoch = [&](const EpochMetrics& m) {
    metrics << epoch_json(m).dump() << "\n";
    metrics.flush();
    std::cerr << "epoch " << m.epoch << " train_loss " << m.train_loss << "\n";
  };
  // The accountant runs before any step; open the metrics file only once it
  // has accepted, so a refusal leaves no partial output.
  const Accountant inner = standard_accountant;
  options.accountant = [&](const TrainConfig& c, TrainMode md, std::int64_t n,
                           std::int64_t steps) {
    const auto budget = inner(c, md, n, steps);
    if (!metrics.is_open()) {
      metrics.open(metrics_path, std::ios::binary | std::ios::trunc);
      require(metrics.good(), ErrorCode::kIo, "cannot write '" + metrics_path.string() + "'");
      Json header{{"record", "header"},
                  {"mode", to_string(md)},
                  {"n", n},
                  {"steps", steps},
                  {"sigma", c.sigma}};
      merge_into(header, budget_json(budget));
      header["config"] = cfg.values();
      metrics << header.dump() << "\n";
    }
    return budget;
  };

  const TrainResult result =
      train(model, std::span<const CbowSample>(train_set),
            std::span<const CbowSample>(test_set), std::move(table.data), tc, mode, options);
  write_file(out_dir / "checkpoint.txt",
             format_checkpoint({vocab.size(), dim, result.params}));
  return kExitOk;
}

int cmd_canary_eval(const ExperimentConfig& cfg, std::string checkpoint_path,
                    std::string report_path) {
  if (checkpoint_path.empty()) checkpoint_path = (output_dir(cfg) / "checkpoint.txt").string();
  if (report_path.empty()) report_path = (output_dir(cfg) / "canary_report.jsonl").string();
  require(fs::exists(checkpoint_path), ErrorCode::kIo,
          "checkpoint '" + checkpoint_path + "' does not exist");
  const Vocabulary vocab = load_vocab(cfg);
  const Checkpoint ckpt = parse_checkpoint(read_file(checkpoint_path));
  require(ckpt.rows == vocab.size(), ErrorCode::kInput,
          "checkpoint rows differ from the vocabulary size");
  const EmbeddingView table(ckpt.params, ckpt.rows, ckpt.cols);
  const fs::path dir = data_dir(cfg);
  const std::vector<Canary> canaries =
      parse_canaries(read_file(dir / "canaries.txt"), vocab.size());
  require(!canaries.empty(), ErrorCode::kInput,
          "no canaries were inserted; set canary.count and canary.n_c before preprocess");
  const Json meta = Json::parse(read_file(dir / "meta.json"));

  const std::uint64_t seed = cfg.get_u64("seed");
  CanaryEvalConfig ec;
  ec.sample_size = cfg.get_size("canary.sample_size");
  ec.bins = cfg.get_size("canary.bins");
  ec.threads = thread_count(cfg);
  ec.seed = NoiseSource(seed).fork(kRankStream).next_u64();
  const CanaryReport report =
      evaluate_canaries(table, canaries, ec, meta.at("n_c").get<std::size_t>());

  NoiseSource control_rng = NoiseSource(seed).fork(kControlStream);
  const std::vector<Canary> controls = random_phrases(
      vocab.size(), cfg.get_size("canary.control_count"), control_rng, canaries);
  CanaryEvalConfig cc = ec;
  cc.seed = control_rng.next_u64();
  const CanaryReport control = evaluate_canaries(table, controls, cc, 0);

  std::string out = format_canary_report(report, &vocab);
  Json control_summary{{"summary", "control"}, {"count", controls.size()}};
  merge_into(control_summary, fit_json(control.fit));
  out += control_summary.dump() + "\n";
  write_file(report_path, out);
  std::cout << Json{{"n_c", report.n_c},
                    {"p_value", report.fit.p_value},
                    {"distance", report.fit.distance},
                    {"control_p_value", control.fit.p_value}}
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_erm_train(const ExperimentConfig& cfg) {
  const std::string& path = cfg.get("erm.data");
  require(!path.empty(), ErrorCode::kInput, "erm.data is not set");
  const GroupedDataset data = parse_grouped_dataset(
      read_file(path), cfg.get_size("erm.dim"), cfg.get_size("erm.c1"),
      cfg.get_double("erm.c2"));
  const PrivacyBudget total(cfg.get_double("erm.epsilon"), cfg.get_double("erm.delta"));
  SparseErmOptions options;
  if (!cfg.get("erm.alpha").empty()) options.alpha_override = cfg.get_double("erm.alpha");
  NoiseSource rng = NoiseSource(cfg.get_u64("seed")).fork(kErmStream);
  const auto result = dp_sparse_erm_train(
      data, GlmModel<>(data.dimension()), total, cfg.get_double("erm.learning_rate"),
      static_cast<std::int64_t>(cfg.get_u64("erm.steps")), rng, options);

  std::string metrics;
  Json header{{"record", "header"},
              {"groups", data.num_groups()},
              {"n", data.num_samples()},
              {"alpha", result.alpha},
              {"initial_loss", result.initial_loss}};
  merge_into(header, budget_json(result.certified));
  metrics += header.dump() + "\n";
  for (const ErmStepMetrics& m : result.steps) metrics += erm_step_json(m).dump() + "\n";
  const fs::path out_dir = output_dir(cfg);
  write_file(out_dir / "erm_metrics.jsonl", metrics);
  write_file(out_dir / "erm_model.txt",
             format_checkpoint({data.dimension(), 1, result.model.weights}));
  return kExitOk;
}

int exit_code_for(const Error& e) {
  if (e.is_accounting_refusal()) return kExitRefused;
  if (e.code() == ErrorCode::kInvariantViolation) return kExitInvariant;
  return kExitInput;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Differentially private training with sparse gradients"};
  app.require_subcommand(1);
  CommonOptions common;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("-c,--config", common.config_path, "Config file (key = value)");
    sub->add_option("-s,--set", common.overrides, "Override a config key: key=value");
  };

  auto* pre = app.add_subcommand("preprocess", "Build vocabulary and sample files");
  add_common(pre);
  std::string corpus;
  pre->add_option("--corpus", corpus, "Corpus path (overrides data.corpus)");

  auto* trn = app.add_subcommand("train", "Train embeddings and write metrics");
  add_common(trn);
  std::string mode;
  trn->add_option("--mode", mode, "Training mode (overrides mode)");

  auto* can = app.add_subcommand("canary-eval", "Rank inserted canaries");
  add_common(can);
  std::string checkpoint, report;
  can->add_option("--checkpoint", checkpoint, "Checkpoint (default output.dir)");
  can->add_option("--report", report, "Report path (default output.dir)");

  auto* bud = app.add_subcommand("budget", "Print the privacy accounting of a config");
  add_common(bud);
  std::optional<std::int64_t> n_flag;
  bud->add_option("--n", n_flag, "Training set size");
  bud->add_option("--mode", mode, "Training mode (overrides mode)");

  auto* erm = app.add_subcommand("erm-train", "Private sparse GLM training");
  add_common(erm);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitInput;
  }

  try {
    ExperimentConfig cfg = load_config(common);
    if (!corpus.empty()) cfg.set("data.corpus", corpus);
    if (!mode.empty()) cfg.set("mode", mode);
    if (pre->parsed()) return cmd_preprocess(cfg);
    if (trn->parsed()) return cmd_train(cfg);
    if (can->parsed()) return cmd_canary_eval(cfg, checkpoint, report);
    if (bud->parsed()) return cmd_budget(cfg, n_flag);
    if (erm->parsed()) return cmd_erm_train(cfg);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e);
  } catch (const Json::exception& e) {
    std::cerr << "error: malformed JSON: " << e.what() << "\n";
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInvariant;
  }
  return kExitInvariant;
}
