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

// Shared data model: datasets, score vectors, attack outcomes and
// experiment series. All types validate their invariants on construction
// and are immutable afterwards.

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "shapr/error.hpp"
#include "shapr/random.hpp"

namespace shapr {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Label = std::int32_t;

class Dataset {
 public:
  Dataset() = default;

  Dataset(RowMatrix features, std::vector<Label> labels, int n_classes,
          std::optional<std::vector<std::int32_t>> subgroup = std::nullopt,
          std::vector<std::string> subgroup_names = {})
      : features_(std::move(features)),
        labels_(std::move(labels)),
        subgroup_(std::move(subgroup)),
        subgroup_names_(std::move(subgroup_names)),
        n_classes_(n_classes) {
    require(n_classes_ >= 2, ErrorCode::kInvalidArgument, "n_classes must be >= 2");
    require(static_cast<std::size_t>(features_.rows()) == labels_.size(),
            ErrorCode::kLengthMismatch, "feature rows and label count differ");
    if (subgroup_) {
      require(subgroup_->size() == labels_.size(), ErrorCode::kLengthMismatch,
              "subgroup length differs from label count");
    }
    for (Label y : labels_) {
      require(y >= 0 && y < n_classes_, ErrorCode::kOutOfRange,
              "label " + std::to_string(y) + " outside [0, " + std::to_string(n_classes_) + ")");
    }
    require(features_.allFinite(), ErrorCode::kInvalidArgument, "features contain NaN or Inf");
  }

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  std::size_t n_features() const { return static_cast<std::size_t>(features_.cols()); }
  int n_classes() const { return n_classes_; }

  const RowMatrix& features() const { return features_; }
  const std::vector<Label>& labels() const { return labels_; }
  const std::optional<std::vector<std::int32_t>>& subgroup() const { return subgroup_; }
  const std::vector<std::string>& subgroup_names() const { return subgroup_names_; }
  bool has_subgroup() const { return subgroup_.has_value(); }

  Vector row(std::size_t i) const { return features_.row(static_cast<Eigen::Index>(i)).transpose(); }
  Label label(std::size_t i) const { return labels_[i]; }

  Dataset subset(std::span<const std::size_t> indices) const {
    RowMatrix x(static_cast<Eigen::Index>(indices.size()), features_.cols());
    std::vector<Label> y;
    y.reserve(indices.size());
    std::optional<std::vector<std::int32_t>> g;
    if (subgroup_) g.emplace().reserve(indices.size());
    for (std::size_t r = 0; r < indices.size(); ++r) {
      const std::size_t i = indices[r];
      require(i < size(), ErrorCode::kOutOfRange, "subset index out of range");
      x.row(static_cast<Eigen::Index>(r)) = features_.row(static_cast<Eigen::Index>(i));
      y.push_back(labels_[i]);
      if (g) g->push_back((*subgroup_)[i]);
    }
    return Dataset(std::move(x), std::move(y), n_classes_, std::move(g), subgroup_names_);
  }

  Dataset with_features(RowMatrix features) const {
    return Dataset(std::move(features), labels_, n_classes_, subgroup_, subgroup_names_);
  }

 private:
  RowMatrix features_;
  std::vector<Label> labels_;
  std::optional<std::vector<std::int32_t>> subgroup_;
  std::vector<std::string> subgroup_names_;
  int n_classes_ = 2;
};

// Stacks b under a. Subgroup codes survive only when both sides carry them.
inline Dataset concat(const Dataset& a, const Dataset& b) {
  require(a.n_features() == b.n_features(), ErrorCode::kDimensionMismatch,
          "cannot concatenate datasets of different widths");
  require(a.n_classes() == b.n_classes(), ErrorCode::kInvalidArgument,
          "cannot concatenate datasets with different class counts");
  RowMatrix x(static_cast<Eigen::Index>(a.size() + b.size()),
              static_cast<Eigen::Index>(a.n_features()));
  if (a.size() > 0) x.topRows(static_cast<Eigen::Index>(a.size())) = a.features();
  if (b.size() > 0) x.bottomRows(static_cast<Eigen::Index>(b.size())) = b.features();
  std::vector<Label> y = a.labels();
  y.insert(y.end(), b.labels().begin(), b.labels().end());
  std::optional<std::vector<std::int32_t>> g;
  if (a.subgroup() && b.subgroup()) {
    g = *a.subgroup();
    g->insert(g->end(), b.subgroup()->begin(), b.subgroup()->end());
  }
  return Dataset(std::move(x), std::move(y), a.n_classes(), std::move(g), a.subgroup_names());
}

struct Split {
  Dataset train;
  Dataset test;
};

// Seeded shuffle, then the first half trains and the second half tests. An
// odd leftover record is dropped so both halves have equal size.
inline Split split_balanced(const Dataset& ds, std::uint64_t seed) {
  require(ds.size() >= 2, ErrorCode::kInvalidArgument, "split needs at least 2 records");
  Rng rng = make_rng(seed, 0x5b1);
  const std::vector<std::size_t> order = permutation(ds.size(), rng);
  const std::size_t half = ds.size() / 2;
  const std::span<const std::size_t> all(order);
  return {ds.subset(all.first(half)), ds.subset(all.subspan(half, half))};
}

enum class MetricId { kShapr, kSprs, kLoo };

inline std::string metric_name(MetricId id) {
  switch (id) {
    case MetricId::kShapr: return "shapr";
    case MetricId::kSprs: return "sprs";
    case MetricId::kLoo: return "loo";
  }
  return "unknown";
}

inline double default_threshold(MetricId id) {
  return id == MetricId::kSprs ? 0.5 : 0.0;
}

struct ScoreVector {
  std::vector<double> values;
  MetricId metric_id = MetricId::kShapr;
  double threshold = 0.0;

  static ScoreVector make(std::vector<double> values, MetricId id) {
    return {std::move(values), id, default_threshold(id)};
  }

  std::size_t size() const { return values.size(); }

  double mean() const {
    if (values.empty()) return 0.0;
    double sum = 0.0;
    for (double v : values) sum += v;
    return sum / static_cast<double>(values.size());
  }
};

enum class AttackId { kIment, kIlira };

inline std::string attack_name(AttackId id) {
  return id == AttackId::kIment ? "iment" : "lira";
}

struct AttackOutcome {
  std::vector<bool> member_predictions;     // one per training record
  std::vector<bool> nonmember_predictions;  // one per test record
  AttackId attack_id = AttackId::kIment;
};

struct SeriesPoint {
  double mean_score = 0.0;
  double attack_accuracy = 0.0;
  std::optional<double> f1;
  std::optional<double> recall;
  // Noise study: mean score of the clean half (mean_score holds the noisy half).
  std::optional<double> secondary_mean_score;
};

class ExperimentSeries {
 public:
  ExperimentSeries(std::string knob_name, std::vector<double> knob_values,
                   std::vector<SeriesPoint> summaries)
      : knob_name_(std::move(knob_name)),
        knob_values_(std::move(knob_values)),
        summaries_(std::move(summaries)) {
    require(knob_values_.size() == summaries_.size(), ErrorCode::kLengthMismatch,
            "series needs one summary per knob value");
    for (std::size_t i = 1; i < knob_values_.size(); ++i) {
      require(knob_values_[i] > knob_values_[i - 1], ErrorCode::kInvalidArgument,
              "knob values must be strictly increasing");
    }
  }

  const std::string& knob_name() const { return knob_name_; }
  const std::vector<double>& knob_values() const { return knob_values_; }
  const std::vector<SeriesPoint>& summaries() const { return summaries_; }
  std::size_t size() const { return summaries_.size(); }

  // Noise study: correlation between the noisy-half mean score and the
  // noisy-half attack accuracy across the knob.
  std::optional<double> correlation;

 private:
  std::string knob_name_;
  std::vector<double> knob_values_;
  std::vector<SeriesPoint> summaries_;
};

}  // namespace shapr
