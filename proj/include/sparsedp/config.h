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

// Flat `key = value` experiment configuration. Lines starting with '#' are
// comments. Every key has a default and unknown keys are rejected, so a
// typo cannot silently fall back to a default.

#ifndef SPARSEDP_CONFIG_H_
#define SPARSEDP_CONFIG_H_

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <string_view>

#include "sparsedp/embedding.h"
#include "sparsedp/error.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/trainer.h"

namespace sparsedp {

namespace internal {

inline std::string_view trim(std::string_view s) {
  const auto not_space = [](char ch) { return ch != ' ' && ch != '\t' && ch != '\r'; };
  std::size_t b = 0, e = s.size();
  while (b < e && !not_space(s[b])) ++b;
  while (e > b && !not_space(s[e - 1])) --e;
  return s.substr(b, e - b);
}

}  // namespace internal

class ExperimentConfig {
 public:
  ExperimentConfig() : values_(defaults()) {}

  static const std::map<std::string, std::string>& defaults() {
    static const std::map<std::string, std::string> kDefaults = {
        {"seed", "1"},
        {"mode", "sparse_exp"},
        {"threads", "1"},
        {"data.corpus", "data/tiny_corpus.txt"},
        {"data.dir", "out/data"},
        {"data.stopwords", ""},
        {"data.vocab_size", "1000"},
        {"data.window", "4"},
        {"data.negatives", "8"},
        {"data.train_size", "200000"},
        {"data.val_size", "100000"},
        {"data.test_size", "200000"},
        {"model.dim", "100"},
        {"train.batch_size", "20"},
        {"train.learning_rate", "0.001"},
        {"train.epochs", "20"},
        {"train.sigma", "0.5"},
        {"train.dpsgd_sigma", "0.32"},
        {"train.gamma", "0.001"},
        {"train.optimizer", "sgd"},
        {"train.clip_nonprivate", "false"},
        {"clip.s0", "0.1"},
        {"clip.s1", "15"},
        {"clip.s2", "1"},
        {"selection.epsilon", "16"},
        {"selection.delta", "1.25e-07"},
        {"selection.sv_alpha", "0.02"},
        {"selection.sv_c1", "0"},
        {"canary.count", "1000"},
        {"canary.n_c", "3"},
        {"canary.sample_size", "10000"},
        {"canary.bins", "10"},
        {"canary.control_count", "1000"},
        {"output.dir", "out/run"},
        {"erm.data", ""},
        {"erm.dim", "0"},
        {"erm.c1", "0"},
        {"erm.c2", "1"},
        {"erm.epsilon", "1"},
        {"erm.delta", "1e-05"},
        {"erm.steps", "100"},
        {"erm.learning_rate", "0.1"},
        {"erm.alpha", ""},
    };
    return kDefaults;
  }

  static ExperimentConfig parse(std::string_view text) {
    ExperimentConfig cfg;
    std::size_t line_no = 0;
    while (!text.empty()) {
      const std::size_t nl = text.find('\n');
      const std::string_view raw = text.substr(0, nl);
      text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
      ++line_no;
      const std::string_view line = internal::trim(raw);
      if (line.empty() || line.front() == '#') continue;
      const std::size_t eq = line.find('=');
      require(eq != std::string_view::npos, ErrorCode::kInput,
              "config line " + std::to_string(line_no) + ": expected key = value");
      cfg.set(std::string(internal::trim(line.substr(0, eq))),
              std::string(internal::trim(line.substr(eq + 1))));
    }
    return cfg;
  }

  // Applies "key=value".
  void apply_override(std::string_view assignment) {
    const std::size_t eq = assignment.find('=');
    require(eq != std::string_view::npos, ErrorCode::kInput,
            "override '" + std::string(assignment) + "' is not key=value");
    set(std::string(internal::trim(assignment.substr(0, eq))),
        std::string(internal::trim(assignment.substr(eq + 1))));
  }

  std::string serialize() const {
    std::ostringstream out;
    out << "# sparsedp experiment config\n";
    for (const auto& [key, value] : values_) out << key << " = " << value << "\n";
    return out.str();
  }

  void set(const std::string& key, std::string value) {
    const auto it = values_.find(key);
    require(it != values_.end(), ErrorCode::kInput, "unknown config key '" + key + "'");
    it->second = std::move(value);
  }

  const std::string& get(const std::string& key) const {
    const auto it = values_.find(key);
    require(it != values_.end(), ErrorCode::kInput, "unknown config key '" + key + "'");
    return it->second;
  }

  double get_double(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "inf") return std::numeric_limits<double>::infinity();
    double out = 0.0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    require(res.ec == std::errc() && res.ptr == v.data() + v.size() && !std::isnan(out),
            ErrorCode::kInput, "config key '" + key + "': '" + v + "' is not a number");
    return out;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const std::string& v = get(key);
    std::uint64_t out = 0;
    const auto res = std::from_chars(v.data(), v.data() + v.size(), out);
    require(res.ec == std::errc() && res.ptr == v.data() + v.size(), ErrorCode::kInput,
            "config key '" + key + "': '" + v + "' is not a nonnegative integer");
    return out;
  }

  std::size_t get_size(const std::string& key) const {
    return static_cast<std::size_t>(get_u64(key));
  }

  bool get_bool(const std::string& key) const {
    const std::string& v = get(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    fail(ErrorCode::kInput, "config key '" + key + "': '" + v + "' is not a boolean");
  }

  TrainMode mode() const { return parse_train_mode(get("mode")); }

  PreprocessConfig preprocess_config() const {
    PreprocessConfig p;
    p.vocab_size = get_size("data.vocab_size");
    p.window = get_size("data.window");
    p.negatives = get_size("data.negatives");
    p.train_size = get_size("data.train_size");
    p.val_size = get_size("data.val_size");
    p.test_size = get_size("data.test_size");
    return p;
  }

  // The DP-SGD baseline uses its own noise multiplier; every other mode uses
  // train.sigma.
  TrainConfig train_config() const {
    TrainConfig t;
    t.batch_size = get_size("train.batch_size");
    t.learning_rate = get_double("train.learning_rate");
    const std::uint64_t epochs = get_u64("train.epochs");
    require(epochs <= 1000000, ErrorCode::kInput, "train.epochs is too large");
    t.epochs = static_cast<int>(epochs);
    const TrainMode m = mode();
    t.sigma = get_double(m == TrainMode::kDpSgd ? "train.dpsgd_sigma" : "train.sigma");
    t.gamma = get_double("train.gamma");
    t.clip = {get_double("clip.s0"), get_double("clip.s1"), get_double("clip.s2")};
    t.seed = get_u64("seed");
    t.clip_non_private = get_bool("train.clip_nonprivate");
    const std::string& opt = get("train.optimizer");
    if (opt == "sgd") {
      t.update = UpdateRule::kSgd;
    } else if (opt == "adam") {
      t.update = UpdateRule::kAdam;
    } else {
      fail(ErrorCode::kInput, "train.optimizer must be sgd or adam, got '" + opt + "'");
    }
    const PrivacyBudget sel(get_double("selection.epsilon"), get_double("selection.delta"));
    switch (m) {
      case TrainMode::kSparseExp:
        t.selection = ExponentialSelection{sel};
        break;
      case TrainMode::kSparseSv:
        t.selection = SparseVectorSelection{sel, get_double("selection.sv_alpha"),
                                            get_size("selection.sv_c1")};
        break;
      default:
        t.selection = UniformSelection{sel.delta()};
        break;
    }
    return t;
  }

  const std::map<std::string, std::string>& values() const { return values_; }

  friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace sparsedp

#endif  // SPARSEDP_CONFIG_H_
