// Copyright 2026 The SHAPr Authors.
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

#pragma once

// Exact Shapley values of training records under a K-nearest-neighbour
// surrogate classifier built on model embeddings. For one test record the
// training set is sorted by distance, then contributions are filled in from
// the farthest record inwards; summing over the test set gives the score.
// Cost is O(n_test * n_train * log n_train).

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/mlp.hpp"
#include "shapr/parallel.hpp"

namespace shapr {

struct SortedNeighbors {
  std::vector<std::size_t> order;  // training indices, nearest first
  std::vector<double> distances;   // Euclidean, non-decreasing
};

// Ascending Euclidean distance; equal distances keep the smaller index first.
inline SortedNeighbors sort_neighbors(const RowMatrix& train_embeddings, const Vector& test_embedding) {
  require(train_embeddings.rows() > 0, ErrorCode::kInvalidArgument, "empty training set");
  require(train_embeddings.cols() == test_embedding.size(), ErrorCode::kDimensionMismatch,
          "embedding widths differ");
  const auto n = static_cast<std::size_t>(train_embeddings.rows());
  std::vector<std::pair<double, std::size_t>> keyed(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double d2 =
        (train_embeddings.row(static_cast<Eigen::Index>(i)).transpose() - test_embedding).squaredNorm();
    keyed[i] = {d2, i};
  }
  std::sort(keyed.begin(), keyed.end());
  SortedNeighbors out;
  out.order.reserve(n);
  out.distances.reserve(n);
  for (const auto& [d2, i] : keyed) {
    out.order.push_back(i);
    out.distances.push_back(std::sqrt(d2));
  }
  return out;
}

// Fraction of the first min(K, |S|) sorted labels that match; 0 for an empty set.
inline double knn_utility(std::span<const Label> sorted_labels, Label test_label, std::size_t k) {
  require(k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");
  const std::size_t top = std::min(k, sorted_labels.size());
  std::size_t hits = 0;
  for (std::size_t i = 0; i < top; ++i) hits += sorted_labels[i] == test_label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

// Contributions of each training record to one test record's utility, in
// sorted (nearest-first) order.
//
// The farthest record starts at match * min(K, N) / (K * N); each nearer
// record at 1-based rank i adds (match_i - match_{i+1}) / K * min(K, i) / i
// to its successor. For N >= K the start value reduces to match / N; the
// min(K, N) factor keeps the result exact when the training set is smaller
// than K.
inline std::vector<double> partial_contributions(std::span<const Label> sorted_labels,
                                                 Label test_label, std::size_t k) {
  require(!sorted_labels.empty(), ErrorCode::kInvalidArgument, "empty label list");
  require(k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");
  const std::size_t n = sorted_labels.size();
  const auto kd = static_cast<double>(k);
  auto match = [&](std::size_t pos) { return sorted_labels[pos] == test_label ? 1.0 : 0.0; };

  std::vector<double> phi(n);
  phi[n - 1] = match(n - 1) * static_cast<double>(std::min(k, n)) / (kd * static_cast<double>(n));
  for (std::size_t pos = n - 1; pos-- > 0;) {
    const std::size_t rank = pos + 1;
    const double scale = static_cast<double>(std::min(k, rank)) / static_cast<double>(rank);
    phi[pos] = phi[pos + 1] + (match(pos) - match(pos + 1)) / kd * scale;
  }
  return phi;
}

// Contributions for one test record mapped back to training-index order.
inline std::vector<double> test_record_contributions(const RowMatrix& train_embeddings,
                                                     std::span<const Label> train_labels,
                                                     const Vector& test_embedding, Label test_label,
                                                     std::size_t k) {
  const SortedNeighbors sorted = sort_neighbors(train_embeddings, test_embedding);
  std::vector<Label> sorted_labels(sorted.order.size());
  for (std::size_t r = 0; r < sorted.order.size(); ++r) sorted_labels[r] = train_labels[sorted.order[r]];
  const std::vector<double> phi_sorted = partial_contributions(sorted_labels, test_label, k);
  std::vector<double> phi(phi_sorted.size());
  for (std::size_t r = 0; r < sorted.order.size(); ++r) phi[sorted.order[r]] = phi_sorted[r];
  return phi;
}

enum class Aggregation { kSum, kMean };

struct ShaprOptions {
  std::size_t k = 5;
  std::optional<std::size_t> layer;  // defaults to the model's penultimate layer
  Aggregation aggregation = Aggregation::kSum;
  unsigned threads = 1;
};

// n_train x n_test matrix of per-test contributions.
inline Eigen::MatrixXd partial_contribution_matrix(const RowMatrix& train_embeddings,
                                                   std::span<const Label> train_labels,
                                                   const RowMatrix& test_embeddings,
                                                   std::span<const Label> test_labels, std::size_t k,
                                                   unsigned threads = 1) {
  require(static_cast<std::size_t>(train_embeddings.rows()) == train_labels.size(),
          ErrorCode::kLengthMismatch, "training embeddings and labels differ");
  require(static_cast<std::size_t>(test_embeddings.rows()) == test_labels.size(),
          ErrorCode::kLengthMismatch, "test embeddings and labels differ");
  Eigen::MatrixXd out(train_embeddings.rows(), test_embeddings.rows());
  parallel_for(test_labels.size(), threads, [&](std::size_t t) {
    const std::vector<double> phi = test_record_contributions(
        train_embeddings, train_labels, test_embeddings.row(static_cast<Eigen::Index>(t)).transpose(),
        test_labels[t], k);
    for (std::size_t i = 0; i < phi.size(); ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(t)) = phi[i];
    }
  });
  return out;
}

// Scores from precomputed embeddings. Test records are processed in fixed
// chunks whose columns are summed in test-index order, so the result is
// bit-identical for any thread count.
inline std::vector<double> shapr_from_embeddings(const RowMatrix& train_embeddings,
                                                 std::span<const Label> train_labels,
                                                 const RowMatrix& test_embeddings,
                                                 std::span<const Label> test_labels, std::size_t k,
                                                 unsigned threads = 1,
                                                 Aggregation aggregation = Aggregation::kSum) {
  require(train_embeddings.rows() > 0, ErrorCode::kInvalidArgument, "empty training set");
  require(test_embeddings.rows() > 0, ErrorCode::kInvalidArgument, "empty test set");
  require(train_embeddings.cols() == test_embeddings.cols(), ErrorCode::kDimensionMismatch,
          "embedding widths differ");
  require(static_cast<std::size_t>(train_embeddings.rows()) == train_labels.size(),
          ErrorCode::kLengthMismatch, "training embeddings and labels differ");
  require(static_cast<std::size_t>(test_embeddings.rows()) == test_labels.size(),
          ErrorCode::kLengthMismatch, "test embeddings and labels differ");
  require(k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");

  constexpr std::size_t kChunk = 64;
  const std::size_t n_train = train_labels.size();
  const std::size_t n_test = test_labels.size();
  std::vector<double> scores(n_train, 0.0);
  std::vector<std::vector<double>> columns(std::min(kChunk, n_test));
  for (std::size_t begin = 0; begin < n_test; begin += kChunk) {
    const std::size_t count = std::min(kChunk, n_test - begin);
    parallel_for(count, threads, [&](std::size_t c) {
      const std::size_t t = begin + c;
      columns[c] = test_record_contributions(
          train_embeddings, train_labels, test_embeddings.row(static_cast<Eigen::Index>(t)).transpose(),
          test_labels[t], k);
    });
    for (std::size_t c = 0; c < count; ++c) {
      for (std::size_t i = 0; i < n_train; ++i) scores[i] += columns[c][i];
    }
  }
  if (aggregation == Aggregation::kMean) {
    for (double& s : scores) s /= static_cast<double>(n_test);
  }
  return scores;
}

inline ScoreVector shapr_scores(const Model& m, const Dataset& train, const Dataset& test,
                                const ShaprOptions& options = {}) {
  require(!test.empty(), ErrorCode::kInvalidArgument, "test set is empty");
  require(!train.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  const std::size_t layer = options.layer.value_or(m.penultimate_layer());
  const RowMatrix train_emb = embed_batch(m, train.features(), layer);
  const RowMatrix test_emb = embed_batch(m, test.features(), layer);
  return ScoreVector::make(shapr_from_embeddings(train_emb, train.labels(), test_emb, test.labels(),
                                                 options.k, options.threads, options.aggregation),
                           MetricId::kShapr);
}

// Susceptible iff value > threshold.
inline std::vector<bool> classify_members(const ScoreVector& s) {
  std::vector<bool> flags(s.values.size());
  for (std::size_t i = 0; i < s.values.size(); ++i) flags[i] = s.values[i] > s.threshold;
  return flags;
}

}  // namespace shapr
