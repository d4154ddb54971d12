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

// Seeded synthetic datasets that stand in for real benchmarks and create
// controllable memorization regimes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/random.hpp"

namespace shapr {

// Class c is centred at separation * e_c with unit-variance isotropic noise.
// Records are interleaved by class: record i has label i % n_classes.
inline Dataset gaussian_blobs(std::size_t n_per_class, int n_classes, std::size_t n_features,
                              double separation, std::uint64_t seed) {
  require(n_per_class >= 1 && n_features >= 1, ErrorCode::kInvalidArgument, "counts must be positive");
  require(n_classes >= 2, ErrorCode::kInvalidArgument, "need at least 2 classes");
  require(n_features >= static_cast<std::size_t>(n_classes), ErrorCode::kDimensionMismatch,
          "axis-aligned centres need n_features >= n_classes");
  Rng rng = make_rng(seed, 0xb10b);
  const std::size_t n = n_per_class * static_cast<std::size_t>(n_classes);
  RowMatrix x(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n_features));
  std::vector<Label> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Label>(i % static_cast<std::size_t>(n_classes));
    y[i] = c;
    for (std::size_t f = 0; f < n_features; ++f) {
      x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(f)) = standard_normal(rng);
    }
    x(static_cast<Eigen::Index>(i), c) += separation;
  }
  return Dataset(std::move(x), std::move(y), n_classes);
}

enum class RecordTag { kHead, kTail, kOutlier };

struct TaggedDataset {
  Dataset data;
  std::vector<RecordTag> tags;
};

// Duplicates a head fraction of the records (each copy appended after the
// originals, both tagged head) and flips the label of a disjoint outlier
// fraction to a different class. Everything else stays tail.
inline TaggedDataset with_memorization_structure(const Dataset& base, double dup_fraction,
                                                 double outlier_fraction, std::uint64_t seed) {
  require(dup_fraction >= 0.0 && dup_fraction <= 1.0 && outlier_fraction >= 0.0 &&
              outlier_fraction <= 1.0 && dup_fraction + outlier_fraction <= 1.0 + 1e-12,
          ErrorCode::kInvalidArgument, "fractions must lie in [0, 1] and sum to at most 1");
  const std::size_t n = base.size();
  Rng rng = make_rng(seed, 0x3e3);
  const std::vector<std::size_t> order = permutation(n, rng);
  const auto n_dup = static_cast<std::size_t>(std::floor(dup_fraction * static_cast<double>(n)));
  const auto n_out = std::min(n - n_dup,
                              static_cast<std::size_t>(std::floor(outlier_fraction * static_cast<double>(n))));

  std::vector<RecordTag> tags(n, RecordTag::kTail);
  std::vector<Label> labels = base.labels();
  std::vector<std::size_t> dup_sources;
  for (std::size_t r = 0; r < n_dup; ++r) {
    tags[order[r]] = RecordTag::kHead;
    dup_sources.push_back(order[r]);
  }
  std::sort(dup_sources.begin(), dup_sources.end());
  for (std::size_t r = n_dup; r < n_dup + n_out; ++r) {
    const std::size_t i = order[r];
    tags[i] = RecordTag::kOutlier;
    const auto shift = static_cast<Label>(1 + uniform_index(rng, static_cast<std::uint64_t>(base.n_classes() - 1)));
    labels[i] = (labels[i] + shift) % base.n_classes();
  }
  Dataset relabelled(base.features(), std::move(labels), base.n_classes(), base.subgroup(),
                     base.subgroup_names());
  if (dup_sources.empty()) return {std::move(relabelled), std::move(tags)};
  Dataset out = concat(relabelled, relabelled.subset(dup_sources));
  tags.insert(tags.end(), dup_sources.size(), RecordTag::kHead);
  return {std::move(out), std::move(tags)};
}

// Two subgroups drawn from the same class-conditional blobs; group 1 ("B")
// has a fraction of its labels flipped. Subgroup codes are 0 = A, 1 = B.
inline Dataset two_group_blobs(std::size_t n_per_group, std::size_t n_features, double separation,
                               double b_label_noise, std::uint64_t seed) {
  require(b_label_noise >= 0.0 && b_label_noise <= 1.0, ErrorCode::kInvalidArgument,
          "label noise must lie in [0, 1]");
  const Dataset a = gaussian_blobs((n_per_group + 1) / 2, 2, n_features, separation, seed);
  const Dataset b = gaussian_blobs((n_per_group + 1) / 2, 2, n_features, separation, seed ^ 0xb0b0b0b0ULL);
  Rng rng = make_rng(seed, 0x9209);
  std::vector<Label> b_labels = b.labels();
  for (Label& y : b_labels) {
    if (uniform01(rng) < b_label_noise) y = 1 - y;
  }
  std::vector<std::int32_t> codes(a.size(), 0);
  codes.insert(codes.end(), b.size(), 1);
  const Dataset b_noisy(b.features(), std::move(b_labels), 2);
  const Dataset joined = concat(a, b_noisy);
  return Dataset(joined.features(), joined.labels(), 2, std::move(codes), {"A", "B"});
}

}  // namespace shapr
