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


#include <gtest/gtest.h>

#include "shapr/baselines.hpp"
#include "shapr/synth.hpp"
#include "support/fixtures.hpp"

namespace shapr {
namespace {

TEST(GaussianBlobs, ShapeLabelsAndDeterminism) {
  const Dataset a = gaussian_blobs(10, 3, 4, 2.0, 1);
  EXPECT_EQ(a.size(), 30u);
  EXPECT_EQ(a.n_features(), 4u);
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(a.label(i), static_cast<Label>(i % 3));
  const Dataset b = gaussian_blobs(10, 3, 4, 2.0, 1);
  EXPECT_EQ(a.features(), b.features());
  EXPECT_NE(a.features(), gaussian_blobs(10, 3, 4, 2.0, 2).features());
  EXPECT_SHAPR_ERROR((void)gaussian_blobs(10, 3, 2, 1.0, 0), ErrorCode::kDimensionMismatch);
  EXPECT_SHAPR_ERROR((void)gaussian_blobs(10, 1, 2, 1.0, 0), ErrorCode::kInvalidArgument);
}

TEST(GaussianBlobs, ZeroSeparationIsUninformative) {
  const Dataset ds = gaussian_blobs(2000, 2, 2, 0.0, 3);
  Eigen::RowVectorXd mean0 = Eigen::RowVectorXd::Zero(2);
  Eigen::RowVectorXd mean1 = Eigen::RowVectorXd::Zero(2);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    (ds.label(i) == 0 ? mean0 : mean1) += ds.features().row(static_cast<Eigen::Index>(i)) / 2000.0;
  }
  EXPECT_LT((mean0 - mean1).cwiseAbs().maxCoeff(), 0.15);
}

TEST(GaussianBlobs, WideSeparationIsLearnable) {
  const Split split = split_balanced(gaussian_blobs(100, 2, 4, 8.0, 4), 4);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 30;
  EXPECT_GE(accuracy(train_mlp(cfg, split.train), split.test), 0.95);
}

TEST(MemorizationStructure, IdentityFractions) {
  const Dataset base = gaussian_blobs(10, 2, 3, 1.0, 5);
  const TaggedDataset t = with_memorization_structure(base, 0.0, 0.0, 5);
  EXPECT_EQ(t.data.features(), base.features());
  EXPECT_EQ(t.data.labels(), base.labels());
  for (RecordTag tag : t.tags) EXPECT_EQ(tag, RecordTag::kTail);
}

TEST(MemorizationStructure, DuplicatesAndOutliers) {
  const Dataset base = gaussian_blobs(50, 2, 3, 1.0, 6);
  const TaggedDataset t = with_memorization_structure(base, 0.2, 0.1, 6);
  EXPECT_EQ(t.data.size(), 120u);
  ASSERT_EQ(t.tags.size(), 120u);
  std::size_t outliers = 0;
  for (std::size_t i = 0; i < base.size(); ++i) {
    if (t.tags[i] == RecordTag::kOutlier) {
      ++outliers;
      EXPECT_NE(t.data.label(i), base.label(i));
    } else {
      EXPECT_EQ(t.data.label(i), base.label(i));
    }
  }
  EXPECT_EQ(outliers, 10u);
  for (std::size_t i = 100; i < 120; ++i) {
    EXPECT_EQ(t.tags[i], RecordTag::kHead);
    bool found = false;
    for (std::size_t j = 0; j < 100 && !found; ++j) {
      found = t.data.features().row(static_cast<Eigen::Index>(i)) == t.data.features().row(static_cast<Eigen::Index>(j)) &&
              t.tags[j] == RecordTag::kHead;
    }
    EXPECT_TRUE(found);
  }
  EXPECT_SHAPR_ERROR((void)with_memorization_structure(base, 0.8, 0.5, 0), ErrorCode::kInvalidArgument);
}

TEST(MemorizationStructure, FullDuplicationMakesLooNegligible) {
  const Dataset base = gaussian_blobs(8, 2, 3, 1.0, 7);
  const TaggedDataset t = with_memorization_structure(base, 1.0, 0.0, 7);
  EXPECT_EQ(t.data.size(), 32u);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 40;
  const LooResult r = naive_loo_scores(cfg, t.data, t.data);
  EXPECT_LT(r.scores.mean(), 0.05);
}

TEST(TwoGroupBlobs, GroupsAndNoise) {
  const Dataset clean = two_group_blobs(40, 3, 2.0, 0.0, 1);
  const Dataset noisy = two_group_blobs(40, 3, 2.0, 1.0, 1);
  ASSERT_EQ(clean.size(), 80u);
  EXPECT_EQ(clean.subgroup_names(), (std::vector<std::string>{"A", "B"}));
  for (std::size_t i = 0; i < 80; ++i) {
    const bool in_b = (*clean.subgroup())[i] == 1;
    EXPECT_EQ(in_b, i >= 40);
    if (in_b) {
      EXPECT_NE(clean.label(i), noisy.label(i));
    } else {
      EXPECT_EQ(clean.label(i), noisy.label(i));
    }
  }
  EXPECT_SHAPR_ERROR((void)two_group_blobs(4, 3, 1.0, 1.5, 0), ErrorCode::kInvalidArgument);
}

}  // namespace
}  // namespace shapr
