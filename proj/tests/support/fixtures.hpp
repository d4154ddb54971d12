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

// Shared fixtures and reference implementations for the test suites. The
// counting oracle below evaluates the Shapley sum by grouping subsets by
// size and by the record they push out of the top K, which is independent of
// both the recursion and the subset enumeration in the library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "shapr/shapr.hpp"

#define EXPECT_SHAPR_ERROR(statement, expected_code)                   \
  EXPECT_THROW(                                                        \
      {                                                                \
        try {                                                          \
          statement;                                                   \
        } catch (const ::shapr::Error& shapr_error_) {                 \
          EXPECT_EQ(shapr_error_.code(), expected_code);               \
          throw;                                                       \
        }                                                              \
      },                                                               \
      ::shapr::Error)

namespace shapr::testing {

inline long double choose(std::size_t n, std::size_t r) {
  if (r > n) return 0.0L;
  long double out = 1.0L;
  for (std::size_t i = 1; i <= r; ++i) out = out * static_cast<long double>(n - r + i) / static_cast<long double>(i);
  return out;
}

// Exact Shapley values for one test record under the KNN utility
// U(S) = (matches among the min(K, |S|) nearest of S) / K, in sorted order.
inline std::vector<double> counting_shapley(std::span<const Label> sorted_labels, Label test_label,
                                            std::size_t k) {
  const std::size_t n = sorted_labels.size();
  auto m = [&](std::size_t pos) { return sorted_labels[pos] == test_label ? 1.0L : 0.0L; };
  std::vector<double> phi(n);
  for (std::size_t p = 0; p < n; ++p) {
    const std::size_t closer = p;
    long double total = 0.0L;
    for (std::size_t s = 0; s < n; ++s) {
      long double sum = 0.0L;
      if (s < k) {
        sum = choose(n - 1, s) * m(p) / static_cast<long double>(k);
      } else {
        for (std::size_t c = 0; c < k && c <= closer; ++c) {
          for (std::size_t j = p + 1; j < n; ++j) {
            const long double ways =
                choose(closer, c) * choose(j - p - 1, k - c - 1) * choose(n - 1 - j, s - k);
            if (ways == 0.0L) continue;
            sum += ways * (m(p) - m(j)) / static_cast<long double>(k);
          }
        }
      }
      total += sum / choose(n - 1, s);
    }
    phi[p] = static_cast<double>(total / static_cast<long double>(n));
  }
  return phi;
}

// Summed counting-oracle values over a test set, in training-index order.
inline std::vector<double> counting_scores(const RowMatrix& train_emb, std::span<const Label> train_labels,
                                           const RowMatrix& test_emb, std::span<const Label> test_labels,
                                           std::size_t k) {
  std::vector<long double> acc(train_labels.size(), 0.0L);
  for (Eigen::Index t = 0; t < test_emb.rows(); ++t) {
    const SortedNeighbors sorted = sort_neighbors(train_emb, test_emb.row(t).transpose());
    std::vector<Label> labels;
    for (std::size_t i : sorted.order) labels.push_back(train_labels[i]);
    const std::vector<double> phi = counting_shapley(labels, test_labels[static_cast<std::size_t>(t)], k);
    for (std::size_t r = 0; r < phi.size(); ++r) acc[sorted.order[r]] += phi[r];
  }
  return {acc.begin(), acc.end()};
}

struct RandomInstance {
  RowMatrix train_emb;
  std::vector<Label> train_labels;
  RowMatrix test_emb;
  std::vector<Label> test_labels;
  std::size_t k = 1;
};

inline RandomInstance random_instance(Rng& rng, std::size_t max_train, std::size_t max_test, std::size_t max_k,
                                      std::size_t dim = 3, int n_classes = 3) {
  RandomInstance r;
  const auto n_train = 1 + static_cast<Eigen::Index>(uniform_index(rng, max_train));
  const auto n_test = 1 + static_cast<Eigen::Index>(uniform_index(rng, max_test));
  r.k = 1 + uniform_index(rng, max_k);
  r.train_emb.resize(n_train, static_cast<Eigen::Index>(dim));
  r.test_emb.resize(n_test, static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < r.train_emb.size(); ++i) r.train_emb.data()[i] = standard_normal(rng);
  for (Eigen::Index i = 0; i < r.test_emb.size(); ++i) r.test_emb.data()[i] = standard_normal(rng);
  for (Eigen::Index i = 0; i < n_train; ++i) r.train_labels.push_back(static_cast<Label>(uniform_index(rng, n_classes)));
  for (Eigen::Index i = 0; i < n_test; ++i) r.test_labels.push_back(static_cast<Label>(uniform_index(rng, n_classes)));
  return r;
}

// 400 records: 334 two-class blobs in 20 dimensions, 20% duplicated, 5%
// label-flipped.
inline Dataset desk_instance(std::uint64_t seed) {
  return with_memorization_structure(gaussian_blobs(167, 2, 20, 2.0, seed), 0.2, 0.05, seed).data;
}

// Trains long enough to reach (near) zero training error on desk_instance.
inline MlpConfig overfit_config(std::uint64_t seed) {
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 200;
  cfg.learning_rate = 0.1;
  cfg.seed = seed;
  return cfg;
}

inline double max_abs_diff(std::span<const double> a, std::span<const double> b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a[i] - b[i]));
  return worst;
}

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-8});
}

}  // namespace shapr::testing
