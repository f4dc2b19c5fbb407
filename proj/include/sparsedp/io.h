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

// On-disk formats: vocabulary (one token per line), CBOW samples
// (comma-separated target,context,negatives...), parameter checkpoints,
// canary lists, grouped GLM datasets and JSON-lines metrics and reports.

#ifndef SPARSEDP_IO_H_
#define SPARSEDP_IO_H_

#include <charconv>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "sparsedp/embedding.h"
#include "sparsedp/error.h"
#include "sparsedp/memorization.h"
#include "sparsedp/privacy_budget.h"
#include "sparsedp/sparse_erm.h"
#include "sparsedp/trainer.h"

namespace sparsedp {

using Json = nlohmann::ordered_json;

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), ErrorCode::kIo, "cannot write '" + path.string() + "'");
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  out.close();
  require(!out.fail(), ErrorCode::kIo, "failed writing '" + path.string() + "'");
}

namespace internal {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  while (!text.empty()) {
    const std::size_t nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    text = nl == std::string_view::npos ? std::string_view() : text.substr(nl + 1);
  }
  return lines;
}

template <class T>
T parse_number(std::string_view s, std::string_view what) {
  T out{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  require(res.ec == std::errc() && res.ptr == s.data() + s.size(), ErrorCode::kInput,
          "malformed " + std::string(what) + " '" + std::string(s) + "'");
  return out;
}

inline std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = s.find(sep, start);
    out.push_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace internal

// Vocabulary

inline std::string format_vocabulary(const Vocabulary& vocab) {
  std::string out;
  for (const std::string& t : vocab.tokens()) out += t + "\n";
  return out;
}

inline Vocabulary parse_vocabulary(std::string_view text) {
  std::vector<std::string> tokens;
  for (std::string_view line : internal::split_lines(text)) tokens.emplace_back(line);
  return Vocabulary(std::move(tokens), {});
}

// CBOW samples

inline std::string format_samples(std::span<const CbowSample> samples) {
  std::string out;
  for (const CbowSample& s : samples) {
    out += std::to_string(s.target) + "," + std::to_string(s.context);
    for (TokenId n : s.negatives) out += "," + std::to_string(n);
    out += "\n";
  }
  return out;
}

inline std::vector<CbowSample> parse_samples(std::string_view text,
                                             std::size_t vocab_size) {
  std::vector<CbowSample> out;
  std::size_t line_no = 0;
  for (std::string_view line : internal::split_lines(text)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = internal::split(line, ',');
    require(fields.size() >= 2, ErrorCode::kInput,
            "sample line " + std::to_string(line_no) + " needs target,context");
    std::vector<TokenId> ids;
    for (std::string_view f : fields) {
      const auto id = internal::parse_number<TokenId>(f, "token id");
      require(id < vocab_size, ErrorCode::kInput,
              "sample line " + std::to_string(line_no) + ": token id " +
                  std::to_string(id) + " outside the vocabulary");
      ids.push_back(id);
    }
    out.push_back({ids[0], ids[1], std::vector<TokenId>(ids.begin() + 2, ids.end())});
  }
  return out;
}

// Checkpoints: "# params <p> <rows> <cols>" then one value per line.

struct Checkpoint {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> params;
};

inline std::string format_checkpoint(const Checkpoint& ckpt) {
  require(ckpt.params.size() == ckpt.rows * ckpt.cols, ErrorCode::kDimensionMismatch,
          "checkpoint shape does not match its parameter count");
  std::string out = "# params " + std::to_string(ckpt.params.size()) + " " +
                    std::to_string(ckpt.rows) + " " + std::to_string(ckpt.cols) + "\n";
  for (double v : ckpt.params) out += internal::format_double(v) + "\n";
  return out;
}

inline Checkpoint parse_checkpoint(std::string_view text) {
  const auto lines = internal::split_lines(text);
  require(!lines.empty(), ErrorCode::kInput, "empty checkpoint");
  const auto header = internal::split_ws(lines[0]);
  require(header.size() == 5 && header[0] == "#" && header[1] == "params",
          ErrorCode::kInput, "checkpoint header must be '# params <p> <rows> <cols>'");
  Checkpoint ckpt;
  const auto p = internal::parse_number<std::size_t>(header[2], "parameter count");
  ckpt.rows = internal::parse_number<std::size_t>(header[3], "row count");
  ckpt.cols = internal::parse_number<std::size_t>(header[4], "column count");
  require(p == ckpt.rows * ckpt.cols, ErrorCode::kInput,
          "checkpoint parameter count differs from rows x cols");
  ckpt.params.reserve(p);
  for (std::size_t i = 1; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    ckpt.params.push_back(internal::parse_number<double>(lines[i], "parameter"));
  }
  require(ckpt.params.size() == p, ErrorCode::kInput,
          "checkpoint has " + std::to_string(ckpt.params.size()) +
              " values, header says " + std::to_string(p));
  return ckpt;
}

// Canaries: three token ids per line.

inline std::string format_canaries(std::span<const Canary> canaries) {
  std::string out;
  for (const Canary& c : canaries) {
    out += std::to_string(c.tokens[0]) + " " + std::to_string(c.tokens[1]) + " " +
           std::to_string(c.tokens[2]) + "\n";
  }
  return out;
}

inline std::vector<Canary> parse_canaries(std::string_view text, std::size_t vocab_size) {
  std::vector<Canary> out;
  for (std::string_view line : internal::split_lines(text)) {
    const auto fields = internal::split_ws(line);
    if (fields.empty()) continue;
    require(fields.size() == 3, ErrorCode::kInput, "a canary line has three token ids");
    Canary c;
    for (std::size_t i = 0; i < 3; ++i) {
      c.tokens[i] = internal::parse_number<TokenId>(fields[i], "token id");
      require(c.tokens[i] < vocab_size, ErrorCode::kInput,
              "canary token outside the vocabulary");
    }
    out.push_back(c);
  }
  return out;
}

// Grouped GLM data: "<group> <label> <index>:<value> ..." per line, indices
// zero-based. Groups are ordered by id.
inline GroupedDataset parse_grouped_dataset(std::string_view text, std::size_t dimension,
                                            std::size_t c1, double c2) {
  require(dimension >= 1, ErrorCode::kInvalidParameter, "dataset dimension must be set");
  std::map<std::int64_t, std::vector<LabeledSample>> by_group;
  std::size_t line_no = 0;
  for (std::string_view line : internal::split_lines(text)) {
    ++line_no;
    const auto fields = internal::split_ws(line);
    if (fields.empty() || fields[0].front() == '#') continue;
    require(fields.size() >= 2, ErrorCode::kInput,
            "dataset line " + std::to_string(line_no) + " needs a group and a label");
    const auto group = internal::parse_number<std::int64_t>(fields[0], "group id");
    const auto label = internal::parse_number<double>(fields[1], "label");
    std::vector<std::pair<std::size_t, double>> entries;
    for (std::size_t k = 2; k < fields.size(); ++k) {
      const std::size_t colon = fields[k].find(':');
      require(colon != std::string_view::npos, ErrorCode::kInput,
              "dataset line " + std::to_string(line_no) + ": expected index:value");
      const auto idx =
          internal::parse_number<std::size_t>(fields[k].substr(0, colon), "feature index");
      require(idx < dimension, ErrorCode::kInput,
              "dataset line " + std::to_string(line_no) + ": feature index " +
                  std::to_string(idx) + " >= dimension " + std::to_string(dimension));
      entries.emplace_back(
          idx, internal::parse_number<double>(fields[k].substr(colon + 1), "feature value"));
    }
    by_group[group].push_back(
        {SparseVector::from_unsorted(dimension, std::move(entries)), label});
  }
  std::vector<std::vector<LabeledSample>> groups;
  for (auto& [id, samples] : by_group) groups.push_back(std::move(samples));
  return GroupedDataset(std::move(groups), dimension, c1, c2);
}

inline std::string format_grouped_dataset(const GroupedDataset& data) {
  std::string out;
  for (std::size_t g = 0; g < data.num_groups(); ++g) {
    for (const LabeledSample& s : data.group(g)) {
      out += std::to_string(g) + " " + internal::format_double(s.y);
      for (std::size_t k = 0; k < s.x.stored(); ++k) {
        out += " " + std::to_string(s.x.indices()[k]) + ":" +
               internal::format_double(s.x.values()[k]);
      }
      out += "\n";
    }
  }
  return out;
}

// JSON records

inline void merge_into(Json& dst, const Json& src) {
  for (auto it = src.begin(); it != src.end(); ++it) dst[it.key()] = it.value();
}

inline Json budget_json(const std::optional<PrivacyBudget>& b) {
  if (!b) return Json{{"epsilon", nullptr}, {"delta", nullptr}};
  return Json{{"epsilon", b->epsilon()}, {"delta", b->delta()}};
}

inline Json epoch_json(const EpochMetrics& m) {
  Json j;
  j["epoch"] = m.epoch;
  j["train_loss"] = m.train_loss;
  j["test_loss"] = m.test_loss;
  j["eps_total"] = m.spent ? Json(m.spent->epsilon()) : Json(nullptr);
  j["delta_total"] = m.spent ? Json(m.spent->delta()) : Json(nullptr);
  j["mean_mask_size"] = m.mean_mask_size;
  return j;
}

inline Json erm_step_json(const ErmStepMetrics& m) {
  return Json{{"step", m.step},
              {"train_loss", m.train_loss},
              {"grad_support_size", m.grad_support_size},
              {"eps_spent", m.eps_spent}};
}

inline Json fit_json(const ChiSquaredFit& fit) {
  return Json{{"statistic", fit.statistic},
              {"p_value", fit.p_value},
              {"distance", fit.distance},
              {"histogram", fit.histogram}};
}

// One record per canary, then a summary record.
inline std::string format_canary_report(const CanaryReport& report,
                                        const Vocabulary* vocab = nullptr) {
  std::string out;
  for (std::size_t i = 0; i < report.canaries.size(); ++i) {
    const Canary& c = report.canaries[i];
    Json j;
    j["canary"] = c.tokens;
    if (vocab != nullptr) {
      j["words"] = {vocab->token(c.tokens[0]), vocab->token(c.tokens[1]),
                    vocab->token(c.tokens[2])};
    }
    j["perplexity"] = report.perplexities[i];
    j["rank"] = report.ranks[i];
    out += j.dump() + "\n";
  }
  Json summary;
  summary["summary"] = "canaries";
  summary["n_c"] = report.n_c;
  summary["count"] = report.canaries.size();
  merge_into(summary, fit_json(report.fit));
  out += summary.dump() + "\n";
  return out;
}

}  // namespace sparsedp

#endif  // SPARSEDP_IO_H_
