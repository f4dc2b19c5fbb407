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

// CBOW word embeddings trained with negative sampling over a single shared
// embedding table, plus the corpus preprocessing that produces
// (target, context, negatives) samples.

#ifndef SPARSEDP_EMBEDDING_H_
#define SPARSEDP_EMBEDDING_H_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <utility>
#include <vector>

#include "sparsedp/error.h"
#include "sparsedp/noise_source.h"
#include "sparsedp/sparse_vector.h"

namespace sparsedp {

using TokenId = std::uint32_t;

class StopWords {
 public:
  StopWords() = default;
  explicit StopWords(std::unordered_set<std::string> words)
      : words_(std::move(words)) {}

  static StopWords english() {
    static const char* const kWords[] = {
        "a",     "about", "above", "after", "again", "against", "all",   "am",
        "an",    "and",   "any",   "are",   "as",    "at",      "be",    "because",
        "been",  "before", "being", "below", "between", "both", "but",   "by",
        "can",   "could", "did",   "do",    "does",  "doing",   "down",  "during",
        "each",  "few",   "for",   "from",  "further", "had",   "has",   "have",
        "having", "he",   "her",   "here",  "hers",  "herself", "him",   "himself",
        "his",   "how",   "i",     "if",    "in",    "into",    "is",    "it",
        "its",   "itself", "just", "me",    "more",  "most",    "my",    "myself",
        "no",    "nor",   "not",   "now",   "of",    "off",     "on",    "once",
        "only",  "or",    "other", "our",   "ours",  "ourselves", "out", "over",
        "own",   "same",  "she",   "should", "so",   "some",    "such",  "than",
        "that",  "the",   "their", "theirs", "them", "themselves", "then", "there",
        "these", "they",  "this",  "those", "through", "to",    "too",   "under",
        "until", "up",    "very",  "was",   "we",    "were",    "what",  "when",
        "where", "which", "while", "who",   "whom",  "why",     "will",  "with",
        "would", "you",   "your",  "yours", "yourself", "yourselves"};
    std::unordered_set<std::string> words;
    for (const char* w : kWords) words.insert(w);
    return StopWords(std::move(words));
  }

  // One word per line; blank lines and '#' comments are ignored.
  static StopWords parse(std::string_view text) {
    std::unordered_set<std::string> words;
    std::size_t start = 0;
    while (start <= text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string_view::npos) end = text.size();
      std::string line(text.substr(start, end - start));
      line.erase(0, line.find_first_not_of(" \t\r"));
      line.erase(line.find_last_not_of(" \t\r") + 1);
      if (!line.empty() && line[0] != '#') {
        std::transform(line.begin(), line.end(), line.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        words.insert(line);
      }
      start = end + 1;
    }
    return StopWords(std::move(words));
  }

  bool contains(const std::string& word) const { return words_.count(word) > 0; }
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

// Lowercased words: maximal runs of ASCII letters, digits, apostrophes and
// non-ASCII bytes (so UTF-8 sequences stay inside words), with surrounding
// apostrophes stripped.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    const auto first = current.find_first_not_of('\'');
    if (first != std::string::npos) {
      const auto last = current.find_last_not_of('\'');
      tokens.push_back(current.substr(first, last - first + 1));
    }
    current.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'' || c >= 0x80) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      flush();
    }
  }
  if (!current.empty()) flush();
  return tokens;
}

class Vocabulary {
 public:
  Vocabulary() = default;

  // Tokens are taken in the given order; the line number is the index.
  Vocabulary(std::vector<std::string> tokens, std::vector<std::uint64_t> counts)
      : tokens_(std::move(tokens)), counts_(std::move(counts)) {
    if (counts_.empty()) counts_.assign(tokens_.size(), 0);
    require(counts_.size() == tokens_.size(), ErrorCode::kInput,
            "vocabulary counts and tokens differ in length");
    for (std::size_t i = 0; i < tokens_.size(); ++i) {
      require(!tokens_[i].empty(), ErrorCode::kInput, "empty vocabulary token");
      const bool inserted =
          index_.emplace(tokens_[i], static_cast<TokenId>(i)).second;
      require(inserted, ErrorCode::kInput,
              "duplicate vocabulary token '" + tokens_[i] + "'");
    }
  }

  // The `max_size` most frequent words that are not stop words; ties are
  // broken lexicographically.
  static Vocabulary build(std::span<const std::string> words, std::size_t max_size,
                          const StopWords& stop_words) {
    std::unordered_map<std::string, std::uint64_t> freq;
    for (const std::string& w : words) {
      if (!stop_words.contains(w)) ++freq[w];
    }
    std::vector<std::pair<std::string, std::uint64_t>> ranked(freq.begin(), freq.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.second != b.second ? a.second > b.second : a.first < b.first;
    });
    if (ranked.size() > max_size) ranked.resize(max_size);
    std::vector<std::string> tokens;
    std::vector<std::uint64_t> counts;
    for (auto& [w, c] : ranked) {
      tokens.push_back(std::move(w));
      counts.push_back(c);
    }
    return Vocabulary(std::move(tokens), std::move(counts));
  }

  std::size_t size() const { return tokens_.size(); }
  const std::string& token(TokenId id) const { return tokens_.at(id); }
  std::uint64_t count(TokenId id) const { return counts_.at(id); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  std::optional<TokenId> index_of(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  // Drops out-of-vocabulary words.
  std::vector<TokenId> encode(std::span<const std::string> words) const {
    std::vector<TokenId> ids;
    ids.reserve(words.size());
    for (const std::string& w : words) {
      if (auto id = index_of(w)) ids.push_back(*id);
    }
    return ids;
  }

 private:
  std::vector<std::string> tokens_;
  std::vector<std::uint64_t> counts_;
  std::unordered_map<std::string, TokenId> index_;
};

struct CbowSample {
  TokenId target = 0;
  TokenId context = 0;
  std::vector<TokenId> negatives;

  friend bool operator==(const CbowSample&, const CbowSample&) = default;
};

// Read-only view of a V x dim embedding table stored row-major in a flat
// parameter vector.
class EmbeddingView {
 public:
  EmbeddingView(std::span<const double> data, std::size_t rows, std::size_t cols)
      : data_(data), rows_(rows), cols_(cols) {
    require(data.size() == rows * cols, ErrorCode::kDimensionMismatch,
            "embedding storage does not match rows x cols");
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t r) const {
    require(r < rows_, ErrorCode::kInvalidParameter,
            "token index " + std::to_string(r) + " out of range");
    return data_.subspan(r * cols_, cols_);
  }

 private:
  std::span<const double> data_;
  std::size_t rows_;
  std::size_t cols_;
};

// Owning table; row count equals the vocabulary size.
struct EmbeddingTable {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  EmbeddingTable() = default;
  EmbeddingTable(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  EmbeddingView view() const { return EmbeddingView(data, rows, cols); }

  // Uniform in [-0.5 / dim, 0.5 / dim], the usual word2vec start.
  static EmbeddingTable random(std::size_t r, std::size_t c, NoiseSource& rng) {
    EmbeddingTable t(r, c);
    const double half = 0.5 / static_cast<double>(c);
    for (double& v : t.data) v = (2.0 * rng.uniform() - 1.0) * half;
    return t;
  }
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double sum = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) sum += a[i] * b[i];
  return sum;
}

// log(sigmoid(z)) without overflow.
inline double log_sigmoid(double z) {
  return z >= 0.0 ? -std::log1p(std::exp(-z)) : z - std::log1p(std::exp(z));
}

inline double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

// -log sigmoid(e_t . e_c) - sum_n log sigmoid(-e_t . e_n)
inline double cbow_loss(const EmbeddingView& table, const CbowSample& s) {
  const auto et = table.row(s.target);
  double loss = -log_sigmoid(dot(et, table.row(s.context)));
  for (TokenId n : s.negatives) loss -= log_sigmoid(-dot(et, table.row(n)));
  return loss;
}

// Gradient over the flattened table. Its support lies in the rows
// {target, context} and the negatives; repeated rows are summed.
inline SparseVector cbow_gradient(const EmbeddingView& table, const CbowSample& s) {
  const std::size_t dim = table.cols();
  const auto et = table.row(s.target);
  std::vector<std::pair<std::size_t, double>> entries;
  entries.reserve((3 + 2 * s.negatives.size()) * dim);
  auto add_row = [&](TokenId row, double coef, std::span<const double> v) {
    const std::size_t base = static_cast<std::size_t>(row) * dim;
    for (std::size_t j = 0; j < dim; ++j) entries.emplace_back(base + j, coef * v[j]);
  };
  const auto ec = table.row(s.context);
  // d/dz [-log sigmoid(z)] = sigmoid(z) - 1 = -sigmoid(-z)
  const double positive = -sigmoid(-dot(et, ec));
  add_row(s.target, positive, ec);
  add_row(s.context, positive, et);
  for (TokenId n : s.negatives) {
    const auto en = table.row(n);
    // d/dz [-log sigmoid(-z)] = sigmoid(z)
    const double negative = sigmoid(dot(et, en));
    add_row(s.target, negative, en);
    add_row(n, negative, et);
  }
  return SparseVector::from_unsorted(table.rows() * dim, std::move(entries));
}

class CbowObjective {
 public:
  using Sample = CbowSample;

  CbowObjective(std::size_t vocab_size, std::size_t dim)
      : vocab_size_(vocab_size), dim_(dim) {}

  std::size_t dimension() const { return vocab_size_ * dim_; }
  std::size_t vocab_size() const { return vocab_size_; }
  std::size_t dim() const { return dim_; }

  double loss(std::span<const double> w, const Sample& s) const {
    return cbow_loss(EmbeddingView(w, vocab_size_, dim_), s);
  }
  SparseVector gradient(std::span<const double> w, const Sample& s) const {
    return cbow_gradient(EmbeddingView(w, vocab_size_, dim_), s);
  }

 private:
  std::size_t vocab_size_;
  std::size_t dim_;
};

// Every ordered (target, context) pair at distance 1..window in the token
// stream.
inline std::vector<std::pair<TokenId, TokenId>> window_pairs(
    std::span<const TokenId> stream, std::size_t window) {
  std::vector<std::pair<TokenId, TokenId>> pairs;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const std::size_t lo = i >= window ? i - window : 0;
    const std::size_t hi = std::min(stream.size() - 1, i + window);
    for (std::size_t j = lo; j <= hi; ++j) {
      if (j != i) pairs.emplace_back(stream[i], stream[j]);
    }
  }
  return pairs;
}

// `count` distinct tokens drawn uniformly from the vocabulary, excluding the
// target and the context.
inline std::vector<TokenId> draw_negatives(std::size_t vocab_size, std::size_t count,
                                           TokenId target, TokenId context,
                                           NoiseSource& rng) {
  const std::size_t excluded = target == context ? 1 : 2;
  require(vocab_size >= count + excluded, ErrorCode::kInput,
          "vocabulary of " + std::to_string(vocab_size) + " is too small for " +
              std::to_string(count) + " negatives");
  std::vector<TokenId> out;
  out.reserve(count);
  while (out.size() < count) {
    const auto cand = static_cast<TokenId>(rng.uniform_index(vocab_size));
    if (cand == target || cand == context) continue;
    if (std::find(out.begin(), out.end(), cand) != out.end()) continue;
    out.push_back(cand);
  }
  return out;
}

template <class T>
void shuffle(std::vector<T>& items, NoiseSource& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::swap(items[i - 1], items[rng.uniform_index(i)]);
  }
}

struct PreprocessConfig {
  std::size_t vocab_size = 1000;
  std::size_t window = 4;
  std::size_t negatives = 8;
  // A zero train_size takes every pair left after validation and test.
  std::size_t train_size = 200000;
  std::size_t val_size = 100000;
  std::size_t test_size = 200000;
};

struct CorpusSplits {
  Vocabulary vocab;
  std::vector<CbowSample> train;
  std::vector<CbowSample> val;
  std::vector<CbowSample> test;
};

inline std::vector<CbowSample> attach_negatives(
    std::span<const std::pair<TokenId, TokenId>> pairs, std::size_t vocab_size,
    std::size_t negatives, NoiseSource& rng) {
  std::vector<CbowSample> out;
  out.reserve(pairs.size());
  for (const auto& [t, c] : pairs) {
    out.push_back({t, c, draw_negatives(vocab_size, negatives, t, c, rng)});
  }
  return out;
}

// Builds the vocabulary, emits every in-window pair, shuffles, attaches
// uniformly drawn negatives and splits into train / validation / test.
// Negatives are fixed here, not resampled per epoch.
inline CorpusSplits preprocess(std::string_view corpus, const PreprocessConfig& cfg,
                               const StopWords& stop_words, NoiseSource& rng) {
  require(cfg.window >= 1, ErrorCode::kInvalidParameter, "window must be >= 1");
  require(cfg.vocab_size >= 1, ErrorCode::kInvalidParameter,
          "vocabulary size must be >= 1");
  const std::vector<std::string> words = tokenize(corpus);
  require(!words.empty(), ErrorCode::kInput, "corpus is empty");

  CorpusSplits splits;
  splits.vocab = Vocabulary::build(words, cfg.vocab_size, stop_words);
  require(splits.vocab.size() > 0, ErrorCode::kInput,
          "corpus has no words outside the stop list");
  const std::vector<TokenId> stream = splits.vocab.encode(words);
  auto pairs = window_pairs(stream, cfg.window);

  const std::size_t held_out = cfg.val_size + cfg.test_size;
  const std::size_t wanted = held_out + (cfg.train_size == 0 ? 1 : cfg.train_size);
  require(pairs.size() >= wanted, ErrorCode::kInput,
          "corpus yields " + std::to_string(pairs.size()) +
              " pairs, fewer than the " + std::to_string(wanted) +
              " requested by the splits");
  shuffle(pairs, rng);
  const std::size_t train_size =
      cfg.train_size == 0 ? pairs.size() - held_out : cfg.train_size;
  pairs.resize(train_size + held_out);

  std::vector<CbowSample> all =
      attach_negatives(pairs, splits.vocab.size(), cfg.negatives, rng);
  const auto train_end = all.begin() + static_cast<std::ptrdiff_t>(train_size);
  const auto val_end = train_end + static_cast<std::ptrdiff_t>(cfg.val_size);
  splits.train.assign(all.begin(), train_end);
  splits.val.assign(train_end, val_end);
  splits.test.assign(val_end, all.end());
  return splits;
}

}  // namespace sparsedp

#endif  // SPARSEDP_EMBEDDING_H_
