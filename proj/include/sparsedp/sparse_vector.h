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

#ifndef SPARSEDP_SPARSE_VECTOR_H_
#define SPARSEDP_SPARSE_VECTOR_H_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "sparsedp/error.h"

namespace sparsedp {

// Index/value pairs over a declared dimension. Indices are strictly
// increasing; stored values may be zero, so nnz() can be smaller than
// stored().
class SparseVector {
 public:
  SparseVector() = default;
  explicit SparseVector(std::size_t dimension) : dimension_(dimension) {}

  SparseVector(std::size_t dimension, std::vector<std::size_t> indices,
               std::vector<double> values)
      : dimension_(dimension),
        indices_(std::move(indices)),
        values_(std::move(values)) {
    require(indices_.size() == values_.size(), ErrorCode::kInvalidParameter,
            "index and value arrays differ in length");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      require(indices_[k] < dimension_, ErrorCode::kDimensionMismatch,
              "index " + std::to_string(indices_[k]) +
                  " out of range for dimension " + std::to_string(dimension_));
      require(k == 0 || indices_[k - 1] < indices_[k],
              ErrorCode::kInvalidParameter,
              "indices must be strictly increasing");
    }
  }

  // Sorts the entries and sums values that share an index.
  static SparseVector from_unsorted(
      std::size_t dimension,
      std::vector<std::pair<std::size_t, double>> entries) {
    std::stable_sort(entries.begin(), entries.end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<std::size_t> indices;
    std::vector<double> values;
    indices.reserve(entries.size());
    values.reserve(entries.size());
    for (const auto& [index, value] : entries) {
      if (!indices.empty() && indices.back() == index) {
        values.back() += value;
      } else {
        indices.push_back(index);
        values.push_back(value);
      }
    }
    return SparseVector(dimension, std::move(indices), std::move(values));
  }

  static SparseVector from_dense(std::span<const double> dense) {
    SparseVector out(dense.size());
    for (std::size_t i = 0; i < dense.size(); ++i) {
      if (dense[i] != 0.0) {
        out.indices_.push_back(i);
        out.values_.push_back(dense[i]);
      }
    }
    return out;
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t stored() const { return indices_.size(); }
  std::span<const std::size_t> indices() const { return indices_; }
  std::span<const double> values() const { return values_; }
  std::span<double> mutable_values() { return values_; }

  std::size_t nnz() const {
    return static_cast<std::size_t>(
        std::count_if(values_.begin(), values_.end(),
                      [](double v) { return v != 0.0; }));
  }

  double at(std::size_t index) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), index);
    if (it == indices_.end() || *it != index) return 0.0;
    return values_[static_cast<std::size_t>(it - indices_.begin())];
  }

  double squared_norm() const {
    double sum = 0.0;
    for (double v : values_) sum += v * v;
    return sum;
  }
  double l2_norm() const { return std::sqrt(squared_norm()); }

  double dot(std::span<const double> dense) const {
    require(dense.size() == dimension_, ErrorCode::kDimensionMismatch,
            "dot product of dimension " + std::to_string(dimension_) +
                " with " + std::to_string(dense.size()));
    double sum = 0.0;
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      sum += values_[k] * dense[indices_[k]];
    }
    return sum;
  }

  void scale(double factor) {
    for (double& v : values_) v *= factor;
  }

  // dense += weight * this
  void add_to(std::span<double> dense, double weight = 1.0) const {
    require(dense.size() == dimension_, ErrorCode::kDimensionMismatch,
            "accumulator dimension mismatch");
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      dense[indices_[k]] += weight * values_[k];
    }
  }

  std::vector<double> to_dense() const {
    std::vector<double> dense(dimension_, 0.0);
    for (std::size_t k = 0; k < indices_.size(); ++k) {
      dense[indices_[k]] = values_[k];
    }
    return dense;
  }

  friend bool operator==(const SparseVector&, const SparseVector&) = default;

 private:
  std::size_t dimension_ = 0;
  std::vector<std::size_t> indices_;
  std::vector<double> values_;
};

// A set of selected coordinates with a cardinality cap.
class SelectionMask {
 public:
  SelectionMask() = default;
  SelectionMask(std::size_t dimension, std::size_t cap,
                std::vector<std::size_t> selected)
      : dimension_(dimension), cap_(cap), selected_(std::move(selected)) {
    std::sort(selected_.begin(), selected_.end());
    require(std::adjacent_find(selected_.begin(), selected_.end()) ==
                selected_.end(),
            ErrorCode::kInvariantViolation, "mask holds a duplicate index");
    require(selected_.size() <= cap_, ErrorCode::kInvariantViolation,
            "mask holds " + std::to_string(selected_.size()) +
                " indices, above its cap of " + std::to_string(cap_));
    require(selected_.empty() || selected_.back() < dimension_,
            ErrorCode::kInvariantViolation, "mask index out of range");
  }

  static SelectionMask all(std::size_t dimension) {
    std::vector<std::size_t> every(dimension);
    for (std::size_t i = 0; i < dimension; ++i) every[i] = i;
    return SelectionMask(dimension, dimension, std::move(every));
  }

  std::size_t dimension() const { return dimension_; }
  std::size_t cap() const { return cap_; }
  std::size_t size() const { return selected_.size(); }
  std::span<const std::size_t> indices() const { return selected_; }

  bool contains(std::size_t index) const {
    return std::binary_search(selected_.begin(), selected_.end(), index);
  }

 private:
  std::size_t dimension_ = 0;
  std::size_t cap_ = 0;
  std::vector<std::size_t> selected_;
};

// Number of coordinates selected for sparsity parameter gamma over p
// coordinates, floor(gamma * p). The 1e-9 slack absorbs representation error
// such as 0.29 * 100 == 28.999999999999996.
inline std::size_t selection_size(std::size_t p, double gamma) {
  require(gamma > 0.0 && gamma <= 1.0, ErrorCode::kInvalidParameter,
          "gamma must lie in (0, 1]");
  return static_cast<std::size_t>(
      std::floor(gamma * static_cast<double>(p) + 1e-9));
}

}  // namespace sparsedp

#endif  // SPARSEDP_SPARSE_VECTOR_H_
