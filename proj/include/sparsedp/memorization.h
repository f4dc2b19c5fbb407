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

// Secret-sharer style memorization audit: random three-word canaries are
// inserted into the training data, and after training each canary's
// log-perplexity is ranked against randomly sampled phrases sharing its
// first word. Without memorization the ranks are uniform, which is tested
// with Pearson's chi-squared statistic.

#ifndef SPARSEDP_MEMORIZATION_H_
#define SPARSEDP_MEMORIZATION_H_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>

#include "sparsedp/embedding.h"
#include "sparsedp/error.h"
#include "sparsedp/noise_source.h"

namespace sparsedp {

struct Canary {
  std::array<TokenId, 3> tokens{};

  friend bool operator==(const Canary&, const Canary&) = default;
};

inline std::vector<Canary> random_phrases(std::size_t vocab_size, std::size_t count,
                                          NoiseSource& rng,
                                          std::span<const Canary> exclude = {}) {
  require(vocab_size >= 2, ErrorCode::kInvalidParameter, "need at least two tokens");
  std::vector<Canary> out;
  out.reserve(count);
  while (out.size() < count) {
    Canary c;
    c.tokens[0] = static_cast<TokenId>(rng.uniform_index(vocab_size));
    c.tokens[1] = static_cast<TokenId>(rng.uniform_index(vocab_size));
    // Same distribution as the reference phrases in rank(): c2 != c1.
    c.tokens[2] = static_cast<TokenId>(rng.uniform_index(vocab_size - 1));
    if (c.tokens[2] >= c.tokens[1]) ++c.tokens[2];
    if (std::find(exclude.begin(), exclude.end(), c) != exclude.end()) continue;
    out.push_back(c);
  }
  return out;
}

struct CanaryInsertion {
  std::vector<CbowSample> samples;
  std::vector<Canary> canaries;
  // Number of canary occurrences inserted, count * n_c.
  std::size_t insertions = 0;
  // Samples contributed by one occurrence (its in-window pairs).
  std::size_t samples_per_insertion = 0;
};

// Draws `count` canaries uniformly from the vocabulary and inserts each one
// n_c times at uniformly random positions of the training samples. One
// occurrence contributes the in-window pairs of its three tokens as a
// contiguous block, each with fresh uniform negatives.
inline CanaryInsertion generate_and_insert(std::vector<CbowSample> samples,
                                           std::size_t vocab_size, std::size_t count,
                                           std::size_t n_c, std::size_t window,
                                           std::size_t negatives, NoiseSource& rng) {
  require(n_c >= 1, ErrorCode::kInvalidParameter,
          "each canary must be inserted at least once (n_c >= 1)");
  require(window >= 1, ErrorCode::kInvalidParameter, "window must be >= 1");

  CanaryInsertion out;
  out.canaries = random_phrases(vocab_size, count, rng);
  out.insertions = count * n_c;

  struct Block {
    std::size_t gap;
    std::vector<CbowSample> samples;
  };
  std::vector<Block> blocks;
  blocks.reserve(out.insertions);
  for (const Canary& c : out.canaries) {
    const auto pairs = window_pairs(c.tokens, window);
    out.samples_per_insertion = pairs.size();
    for (std::size_t r = 0; r < n_c; ++r) {
      blocks.push_back({0, attach_negatives(pairs, vocab_size, negatives, rng)});
    }
  }
  shuffle(blocks, rng);
  for (Block& b : blocks) b.gap = rng.uniform_index(samples.size() + 1);
  std::stable_sort(blocks.begin(), blocks.end(),
                   [](const Block& a, const Block& b) { return a.gap < b.gap; });

  out.samples.reserve(samples.size() + out.insertions * out.samples_per_insertion);
  std::size_t next_block = 0;
  for (std::size_t pos = 0; pos <= samples.size(); ++pos) {
    while (next_block < blocks.size() && blocks[next_block].gap == pos) {
      auto& block = blocks[next_block++].samples;
      std::move(block.begin(), block.end(), std::back_inserter(out.samples));
    }
    if (pos < samples.size()) out.samples.push_back(std::move(samples[pos]));
  }
  return out;
}

inline double log_sum_exp(std::span<const double> x) {
  double top = -std::numeric_limits<double>::infinity();
  for (double v : x) top = std::max(top, v);
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - top);
  return top + std::log(sum);
}

// -log P(c1 | c0) - log P(c2 | c1, c0), where P(next | context) is the
// softmax over the vocabulary of e_context . e_next and a two-word context
// is represented by the mean of its embeddings. Computed directly.
inline double log_perplexity(const EmbeddingView& table, const Canary& c) {
  const std::size_t vocab = table.rows();
  const auto e0 = table.row(c.tokens[0]);
  const auto e1 = table.row(c.tokens[1]);
  std::vector<double> mean(table.cols());
  for (std::size_t j = 0; j < mean.size(); ++j) mean[j] = 0.5 * (e0[j] + e1[j]);
  std::vector<double> first(vocab), second(vocab);
  for (std::size_t v = 0; v < vocab; ++v) {
    first[v] = dot(e0, table.row(v));
    second[v] = dot(mean, table.row(v));
  }
  return -(first[c.tokens[1]] - log_sum_exp(first)) -
         (second[c.tokens[2]] - log_sum_exp(second));
}

// Scores phrases from a precomputed Gram matrix G = E E^T, so that one
// phrase costs O(1) once the normalizer of its context is known. The
// two-word context logits are (G[c0] + G[c1]) / 2, algebraically equal to
// the mean-embedding form above.
class PhraseScorer {
 public:
  explicit PhraseScorer(const EmbeddingView& table) : vocab_(table.rows()) {
    require(vocab_ >= 2, ErrorCode::kInvalidParameter,
            "phrase scoring needs at least two tokens");
    gram_.resize(vocab_ * vocab_);
    for (std::size_t a = 0; a < vocab_; ++a) {
      for (std::size_t b = a; b < vocab_; ++b) {
        const double g = dot(table.row(a), table.row(b));
        gram_[a * vocab_ + b] = g;
        gram_[b * vocab_ + a] = g;
      }
    }
    single_lse_.resize(vocab_);
    for (std::size_t a = 0; a < vocab_; ++a) {
      single_lse_[a] = log_sum_exp(std::span<const double>(gram_).subspan(a * vocab_, vocab_));
    }
  }

  std::size_t vocab_size() const { return vocab_; }

  // Normalizers of P(. | c1, c0) for a fixed c0, filled lazily per c1.
  class ContextCache {
   public:
    ContextCache(const PhraseScorer& scorer, TokenId c0)
        : scorer_(scorer), c0_(c0),
          lse_(scorer.vocab_, std::numeric_limits<double>::quiet_NaN()),
          logits_(scorer.vocab_) {}

    TokenId first() const { return c0_; }

    double pair_lse(TokenId c1) {
      double& slot = lse_[c1];
      if (std::isnan(slot)) {
        for (std::size_t v = 0; v < logits_.size(); ++v) logits_[v] = scorer_.pair_logit(c0_, c1, v);
        slot = log_sum_exp(logits_);
      }
      return slot;
    }

   private:
    const PhraseScorer& scorer_;
    TokenId c0_;
    std::vector<double> lse_;
    std::vector<double> logits_;
  };

  double log_perplexity(ContextCache& cache, TokenId c1, TokenId c2) const {
    const TokenId c0 = cache.first();
    const double first = gram_[c0 * vocab_ + c1] - single_lse_[c0];
    const double second = pair_logit(c0, c1, c2) - cache.pair_lse(c1);
    return -first - second;
  }

  double log_perplexity(const Canary& c) const {
    ContextCache cache(*this, c.tokens[0]);
    return log_perplexity(cache, c.tokens[1], c.tokens[2]);
  }

 private:
  double pair_logit(TokenId c0, TokenId c1, std::size_t v) const {
    return 0.5 * (gram_[c0 * vocab_ + v] + gram_[c1 * vocab_ + v]);
  }

  std::size_t vocab_;
  std::vector<double> gram_;
  std::vector<double> single_lse_;
};

// Number of sampled phrases (c0, c1', c2'), c1' != c2', whose log-perplexity
// is at least the canary's. Pairs are drawn uniformly with replacement.
// Ties count, so a canary that is no more likely than any sample gets the
// full sample_size.
inline std::size_t rank(const PhraseScorer& scorer, const Canary& c,
                        std::size_t sample_size, NoiseSource& rng) {
  require(sample_size >= 1, ErrorCode::kInvalidParameter, "sample_size must be >= 1");
  const std::size_t vocab = scorer.vocab_size();
  PhraseScorer::ContextCache cache(scorer, c.tokens[0]);
  const double target = scorer.log_perplexity(cache, c.tokens[1], c.tokens[2]);
  std::size_t count = 0;
  for (std::size_t i = 0; i < sample_size; ++i) {
    const auto c1 = static_cast<TokenId>(rng.uniform_index(vocab));
    auto c2 = static_cast<TokenId>(rng.uniform_index(vocab - 1));
    if (c2 >= c1) ++c2;  // uniform over tokens other than c1
    if (scorer.log_perplexity(cache, c1, c2) >= target) ++count;
  }
  return count;
}

struct ChiSquaredFit {
  double statistic = 0.0;
  double p_value = 1.0;
  // statistic / number of ranks.
  double distance = 0.0;
  std::vector<std::size_t> histogram;
};

// Pearson goodness of fit of ranks in [0, sample_size] against the uniform
// distribution, over `bins` equal-width bins of the sample_size + 1 possible
// values, with bins - 1 degrees of freedom.
inline ChiSquaredFit chi_squared_uniform(std::span<const std::size_t> ranks,
                                         std::size_t bins, std::size_t sample_size) {
  require(bins >= 2, ErrorCode::kInvalidParameter, "need at least two bins");
  require(ranks.size() >= 5 * bins, ErrorCode::kInvalidParameter,
          "chi-squared test needs an expected count of at least 5 per bin: " +
              std::to_string(ranks.size()) + " ranks over " + std::to_string(bins) +
              " bins");
  ChiSquaredFit fit;
  fit.histogram.assign(bins, 0);
  require(sample_size < std::numeric_limits<std::size_t>::max() / bins,
          ErrorCode::kInvalidParameter, "sample size too large");
  for (std::size_t r : ranks) {
    require(r <= sample_size, ErrorCode::kInvalidParameter, "rank exceeds sample size");
    fit.histogram[r * bins / (sample_size + 1)]++;
  }
  const double expected = static_cast<double>(ranks.size()) / static_cast<double>(bins);
  for (std::size_t count : fit.histogram) {
    const double diff = static_cast<double>(count) - expected;
    fit.statistic += diff * diff / expected;
  }
  const boost::math::chi_squared_distribution<double> dist(static_cast<double>(bins - 1));
  fit.p_value = std::clamp(boost::math::cdf(boost::math::complement(dist, fit.statistic)),
                           0.0, 1.0);
  fit.distance = fit.statistic / static_cast<double>(ranks.size());
  return fit;
}

struct CanaryEvalConfig {
  std::size_t sample_size = 10000;
  std::size_t bins = 10;
  std::uint64_t seed = 1;
  unsigned threads = 1;
};

struct CanaryReport {
  std::vector<Canary> canaries;
  std::vector<double> perplexities;
  std::vector<std::size_t> ranks;
  ChiSquaredFit fit;
  std::size_t n_c = 0;
};

// Canary i samples its phrases from the stream forked at i, so results do
// not depend on the thread count.
inline CanaryReport evaluate_canaries(const EmbeddingView& table,
                                      std::span<const Canary> canaries,
                                      const CanaryEvalConfig& cfg, std::size_t n_c) {
  const PhraseScorer scorer(table);
  CanaryReport report;
  report.n_c = n_c;
  report.canaries.assign(canaries.begin(), canaries.end());
  report.perplexities.resize(canaries.size());
  report.ranks.resize(canaries.size());
  const NoiseSource master(cfg.seed);

  const std::function<void(std::size_t, std::size_t)> work = [&](std::size_t begin,
                                                                 std::size_t step) {
    for (std::size_t i = begin; i < canaries.size(); i += step) {
      NoiseSource rng = master.fork(i);
      report.perplexities[i] = scorer.log_perplexity(canaries[i]);
      report.ranks[i] = rank(scorer, canaries[i], cfg.sample_size, rng);
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(
      cfg.threads, static_cast<unsigned>(std::max<std::size_t>(1, canaries.size()))));
  if (threads == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t, threads);
  }
  report.fit = chi_squared_uniform(report.ranks, cfg.bins, cfg.sample_size);
  return report;
}

}  // namespace sparsedp

#endif  // SPARSEDP_MEMORIZATION_H_
