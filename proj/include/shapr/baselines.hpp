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

// Comparison metrics: the Bayes-posterior privacy risk score (SPRS), the
// naive leave-one-out memorization score, and the exhaustive Shapley
// enumeration that checks the recursive SHAPr computation.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <optional>
#include <span>
#include <vector>

#include "shapr/attacks.hpp"
#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/knn_shapley.hpp"
#include "shapr/mlp.hpp"
#include "shapr/parallel.hpp"

namespace shapr {

// Histogram estimate of P(Mentr | member, class) and P(Mentr | non-member,
// class): equal-width bins over the pooled range of the class, Laplace
// smoothed with one pseudo-count per bin.
class ClassConditionals {
 public:
  struct ClassBins {
    double lo = 0.0;
    double hi = 0.0;
    std::vector<double> member_mass;
    std::vector<double> nonmember_mass;
  };

  ClassConditionals(std::size_t n_bins, std::vector<std::optional<ClassBins>> classes)
      : n_bins_(n_bins), classes_(std::move(classes)) {}

  std::size_t n_bins() const { return n_bins_; }
  const std::optional<ClassBins>& class_bins(Label c) const {
    return classes_.at(static_cast<std::size_t>(c));
  }

  std::size_t bin_of(const ClassBins& bins, double value) const {
    if (n_bins_ == 1 || !(bins.hi > bins.lo)) return 0;
    const double pos = (value - bins.lo) / (bins.hi - bins.lo) * static_cast<double>(n_bins_);
    if (!(pos > 0.0)) return 0;
    return std::min(n_bins_ - 1, static_cast<std::size_t>(pos));
  }

  struct Pair {
    double member = 0.0;
    double nonmember = 0.0;
  };

  Pair lookup(double value, Label c) const {
    require(c >= 0 && static_cast<std::size_t>(c) < classes_.size(), ErrorCode::kOutOfRange,
            "class outside conditionals");
    const auto& bins = classes_[static_cast<std::size_t>(c)];
    require(bins.has_value(), ErrorCode::kInvalidArgument,
            "class " + std::to_string(c) + " had no records on either side");
    const std::size_t b = bin_of(*bins, value);
    return {bins->member_mass[b], bins->nonmember_mass[b]};
  }

 private:
  std::size_t n_bins_;
  std::vector<std::optional<ClassBins>> classes_;
};

inline ClassConditionals estimate_conditionals(std::span<const double> member_mentr,
                                               std::span<const Label> member_labels,
                                               std::span<const double> nonmember_mentr,
                                               std::span<const Label> nonmember_labels, int n_classes,
                                               std::size_t n_bins = 10) {
  require(!member_mentr.empty() && !nonmember_mentr.empty(), ErrorCode::kInvalidArgument,
          "both sides need at least one record");
  require(member_mentr.size() == member_labels.size() &&
              nonmember_mentr.size() == nonmember_labels.size(),
          ErrorCode::kLengthMismatch, "Mentr values and labels differ in length");
  require(n_bins >= 1, ErrorCode::kInvalidArgument, "need at least one bin");

  std::vector<std::optional<ClassConditionals::ClassBins>> classes(static_cast<std::size_t>(n_classes));
  const ClassConditionals shape(n_bins, {});
  for (int c = 0; c < n_classes; ++c) {
    std::vector<double> mc;
    std::vector<double> nc;
    for (std::size_t i = 0; i < member_mentr.size(); ++i) {
      if (member_labels[i] == c) mc.push_back(member_mentr[i]);
    }
    for (std::size_t i = 0; i < nonmember_mentr.size(); ++i) {
      if (nonmember_labels[i] == c) nc.push_back(nonmember_mentr[i]);
    }
    if (mc.empty() && nc.empty()) continue;
    ClassConditionals::ClassBins bins;
    bins.lo = std::numeric_limits<double>::infinity();
    bins.hi = -std::numeric_limits<double>::infinity();
    for (double v : mc) bins.lo = std::min(bins.lo, v), bins.hi = std::max(bins.hi, v);
    for (double v : nc) bins.lo = std::min(bins.lo, v), bins.hi = std::max(bins.hi, v);
    std::vector<double> m_counts(n_bins, 0.0);
    std::vector<double> n_counts(n_bins, 0.0);
    for (double v : mc) m_counts[shape.bin_of(bins, v)] += 1.0;
    for (double v : nc) n_counts[shape.bin_of(bins, v)] += 1.0;
    const double m_total = static_cast<double>(mc.size() + n_bins);
    const double n_total = static_cast<double>(nc.size() + n_bins);
    bins.member_mass.resize(n_bins);
    bins.nonmember_mass.resize(n_bins);
    for (std::size_t b = 0; b < n_bins; ++b) {
      bins.member_mass[b] = (m_counts[b] + 1.0) / m_total;
      bins.nonmember_mass[b] = (n_counts[b] + 1.0) / n_total;
    }
    classes[static_cast<std::size_t>(c)] = std::move(bins);
  }
  return ClassConditionals(n_bins, std::move(classes));
}

// Posterior membership probability with equal priors: a / (a + b).
inline double sprs_score(double p_member_cond, double p_nonmember_cond) {
  require(p_member_cond >= 0.0 && p_nonmember_cond >= 0.0, ErrorCode::kInvalidArgument,
          "conditionals must be non-negative");
  require(p_member_cond + p_nonmember_cond > 0.0, ErrorCode::kUndefined,
          "both conditionals are zero (empty bin)");
  const double num = 0.5 * p_member_cond;
  return num / (num + 0.5 * p_nonmember_cond);
}

struct SprsOptions {
  std::size_t n_bins = 10;
};

// The target model doubles as the shadow model: conditionals come from its
// own outputs on the member (train) and non-member (test) sets.
inline ScoreVector sprs_scores(const Model& m, const Dataset& train, const Dataset& test,
                               const SprsOptions& options = {}) {
  const std::vector<double> mm = mentr_all(m, train);
  const std::vector<double> nm = mentr_all(m, test);
  const ClassConditionals cond =
      estimate_conditionals(mm, train.labels(), nm, test.labels(), train.n_classes(), options.n_bins);
  std::vector<double> scores(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    const auto pair = cond.lookup(mm[i], train.label(i));
    scores[i] = sprs_score(pair.member, pair.nonmember);
  }
  return ScoreVector::make(std::move(scores), MetricId::kSprs);
}

struct LooOptions {
  std::size_t cap = 200;
  unsigned threads = 1;
};

struct LooResult {
  ScoreVector scores;
  double seconds = 0.0;
};

// |p_full(y_i | x_i) - p_without_i(y_i | x_i)| with one deterministic model
// per side. Every retraining reuses the full model's configuration and seed,
// so the difference reflects the removed record rather than a new draw of
// initial weights. Removing the only record leaves the untrained
// initialisation.
inline LooResult naive_loo_scores(const MlpConfig& cfg, const Dataset& train, const Dataset& /*test*/,
                                  const LooOptions& options = {}) {
  require(!train.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  require(train.size() <= options.cap, ErrorCode::kCapExceeded,
          "naive LOO limited to " + std::to_string(options.cap) + " records, got " +
              std::to_string(train.size()));
  const auto start = std::chrono::steady_clock::now();
  const Model full = train_mlp(cfg, train);
  const RowMatrix full_probs = predict_proba_batch(full, train.features());
  const std::size_t n = train.size();
  std::vector<double> scores(n);
  parallel_for(n, options.threads, [&](std::size_t i) {
    std::vector<std::size_t> keep;
    keep.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) keep.push_back(j);
    }
    const Model without = keep.empty() ? init_mlp(cfg, train.n_features())
                                       : train_mlp(cfg, train.subset(keep));
    const Vector p = predict_proba(without, train.row(i));
    const double p_full = full_probs(static_cast<Eigen::Index>(i), train.label(i));
    scores[i] = std::abs(p_full - p(train.label(i)));
  });
  const auto stop = std::chrono::steady_clock::now();
  return {ScoreVector::make(std::move(scores), MetricId::kLoo),
          std::chrono::duration<double>(stop - start).count()};
}

inline constexpr std::size_t kBruteForceCap = 12;

namespace detail {

// KNN utility of an arbitrary subset (bitmask over training indices),
// chosen directly by distance without any shared sorting state.
inline double subset_utility(std::uint32_t mask, std::span<const double> dist2,
                             std::span<const Label> labels, Label test_label, std::size_t k) {
  std::vector<std::size_t> members;
  for (std::size_t i = 0; i < dist2.size(); ++i) {
    if (mask & (1u << i)) members.push_back(i);
  }
  const std::size_t top = std::min(k, members.size());
  std::partial_sort(members.begin(), members.begin() + static_cast<std::ptrdiff_t>(top), members.end(),
                    [&](std::size_t a, std::size_t b) {
                      return dist2[a] != dist2[b] ? dist2[a] < dist2[b] : a < b;
                    });
  std::size_t hits = 0;
  for (std::size_t r = 0; r < top; ++r) hits += labels[members[r]] == test_label ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(k);
}

inline double binomial(std::size_t n, std::size_t r) {
  double out = 1.0;
  for (std::size_t i = 1; i <= r; ++i) out = out * static_cast<double>(n - r + i) / static_cast<double>(i);
  return out;
}

}  // namespace detail

// Shapley values by enumerating every subset of the other training records:
// phi_i = 1/N * sum_S [U(S + i) - U(S)] / C(N - 1, |S|), summed over test
// records.
inline std::vector<double> brute_force_shapley(const RowMatrix& train_embeddings,
                                               std::span<const Label> train_labels,
                                               const RowMatrix& test_embeddings,
                                               std::span<const Label> test_labels, std::size_t k) {
  const auto n = static_cast<std::size_t>(train_embeddings.rows());
  require(n >= 1, ErrorCode::kInvalidArgument, "empty training set");
  require(n <= kBruteForceCap, ErrorCode::kCapExceeded,
          "exhaustive Shapley limited to " + std::to_string(kBruteForceCap) + " training records");
  require(train_labels.size() == n && static_cast<std::size_t>(test_embeddings.rows()) == test_labels.size(),
          ErrorCode::kLengthMismatch, "embeddings and labels differ in length");
  require(train_embeddings.cols() == test_embeddings.cols(), ErrorCode::kDimensionMismatch,
          "embedding widths differ");
  require(k >= 1, ErrorCode::kInvalidArgument, "K must be >= 1");

  std::vector<double> phi(n, 0.0);
  std::vector<double> dist2(n);
  const std::uint32_t full = (1u << n) - 1u;
  for (std::size_t t = 0; t < test_labels.size(); ++t) {
    for (std::size_t i = 0; i < n; ++i) {
      dist2[i] = (train_embeddings.row(static_cast<Eigen::Index>(i)) -
                  test_embeddings.row(static_cast<Eigen::Index>(t)))
                     .squaredNorm();
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint32_t others = full & ~(1u << i);
      double total = 0.0;
      // Enumerate all submasks of `others`, including the empty set.
      for (std::uint32_t s = others;; s = (s - 1) & others) {
        const double gain = detail::subset_utility(s | (1u << i), dist2, train_labels, test_labels[t], k) -
                            detail::subset_utility(s, dist2, train_labels, test_labels[t], k);
        total += gain / detail::binomial(n - 1, static_cast<std::size_t>(std::popcount(s)));
        if (s == 0) break;
      }
      phi[i] += total / static_cast<double>(n);
    }
  }
  return phi;
}

}  // namespace shapr
