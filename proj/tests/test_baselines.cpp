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

#include <numeric>

#include "shapr/baselines.hpp"
#include "shapr/synth.hpp"
#include "support/fixtures.hpp"

namespace shapr {
namespace {

TEST(Conditionals, MassesSumToOne) {
  Rng rng = make_rng(3);
  std::vector<double> mm(40);
  std::vector<double> nm(30);
  std::vector<Label> ml(40);
  std::vector<Label> nl(30);
  for (std::size_t i = 0; i < mm.size(); ++i) mm[i] = uniform(rng, 0, 2), ml[i] = static_cast<Label>(i % 3);
  for (std::size_t i = 0; i < nm.size(); ++i) nm[i] = uniform(rng, 1, 3), nl[i] = static_cast<Label>(i % 3);
  const ClassConditionals cond = estimate_conditionals(mm, ml, nm, nl, 3);
  for (Label c = 0; c < 3; ++c) {
    const auto& bins = cond.class_bins(c);
    ASSERT_TRUE(bins.has_value());
    EXPECT_NEAR(std::accumulate(bins->member_mass.begin(), bins->member_mass.end(), 0.0), 1.0, 1e-9);
    EXPECT_NEAR(std::accumulate(bins->nonmember_mass.begin(), bins->nonmember_mass.end(), 0.0), 1.0, 1e-9);
  }
  for (std::size_t i = 0; i < mm.size(); ++i) {
    const auto p = cond.lookup(mm[i], ml[i]);
    EXPECT_GT(p.member, 0.0);
    EXPECT_LE(p.member, 1.0);
  }
}

TEST(Conditionals, IdenticalSidesGiveEqualMasses) {
  const std::vector<double> v = {0.1, 0.5, 0.5, 0.9, 1.3};
  const std::vector<Label> l = {0, 0, 0, 0, 0};
  const ClassConditionals cond = estimate_conditionals(v, l, v, l, 2);
  EXPECT_EQ(cond.class_bins(0)->member_mass, cond.class_bins(0)->nonmember_mass);
  EXPECT_FALSE(cond.class_bins(1).has_value());
  EXPECT_SHAPR_ERROR((void)cond.lookup(0.5, 1), ErrorCode::kInvalidArgument);
}

TEST(Conditionals, SeparatedSidesByHand) {
  // Range [0, 1], ten bins of width 0.1: members land in bins 0 and 1,
  // non-members both in the last bin.
  const std::vector<double> members = {0.0, 0.1};
  const std::vector<double> nonmembers = {0.9, 1.0};
  const std::vector<Label> l = {0, 0};
  const ClassConditionals cond = estimate_conditionals(members, l, nonmembers, l, 2);
  const auto& b = *cond.class_bins(0);
  EXPECT_DOUBLE_EQ(b.member_mass[0], 2.0 / 12.0);
  EXPECT_DOUBLE_EQ(b.member_mass[1], 2.0 / 12.0);
  EXPECT_DOUBLE_EQ(b.member_mass[9], 1.0 / 12.0);
  EXPECT_DOUBLE_EQ(b.nonmember_mass[9], 3.0 / 12.0);
  EXPECT_DOUBLE_EQ(b.nonmember_mass[0], 1.0 / 12.0);
  EXPECT_GT(sprs_score(cond.lookup(0.05, 0).member, cond.lookup(0.05, 0).nonmember), 0.5);
  EXPECT_LT(sprs_score(cond.lookup(0.95, 0).member, cond.lookup(0.95, 0).nonmember), 0.5);
}

TEST(Conditionals, SingleBinIsUninformative) {
  const std::vector<double> members = {0.0, 0.3, 0.4};
  const std::vector<double> nonmembers = {0.9, 1.0, 2.0};
  const std::vector<Label> l = {1, 1, 1};
  const ClassConditionals cond = estimate_conditionals(members, l, nonmembers, l, 2, 1);
  for (double v : {0.0, 0.5, 2.0}) {
    const auto p = cond.lookup(v, 1);
    EXPECT_EQ(p.member, 1.0);
    EXPECT_EQ(p.nonmember, 1.0);
    EXPECT_EQ(sprs_score(p.member, p.nonmember), 0.5);
  }
}

TEST(SprsScore, Examples) {
  EXPECT_EQ(sprs_score(0.2, 0.2), 0.5);
  EXPECT_EQ(sprs_score(0.3, 0.0), 1.0);
  EXPECT_NEAR(sprs_score(0.3, 0.1), 0.75, 1e-12);
  EXPECT_SHAPR_ERROR((void)sprs_score(0.0, 0.0), ErrorCode::kUndefined);
  EXPECT_SHAPR_ERROR((void)sprs_score(-0.1, 0.2), ErrorCode::kInvalidArgument);
}

TEST(SprsScore, MonotoneAndBounded) {
  Rng rng = make_rng(8);
  for (int i = 0; i < 500; ++i) {
    const double a = uniform01(rng);
    const double b = uniform01(rng) + 1e-6;
    const double s = sprs_score(a, b);
    EXPECT_GE(s, 0.0);
    EXPECT_LE(s, 1.0);
    EXPECT_GE(sprs_score(a + 0.1, b), s);
  }
}

TEST(SprsScores, UniformModelGivesHalf) {
  // Equal class counts on both sides, so every class bin holds the same mass.
  const Dataset members = gaussian_blobs(10, 2, 3, 2.0, 1);
  const Dataset nonmembers = gaussian_blobs(10, 2, 3, 2.0, 2);
  std::vector<Layer> layers = {Layer{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                               Layer{Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)}};
  const Model flat(3, layers, {});
  const ScoreVector s = sprs_scores(flat, members, nonmembers);
  EXPECT_EQ(s.metric_id, MetricId::kSprs);
  EXPECT_EQ(s.threshold, 0.5);
  for (double v : s.values) EXPECT_DOUBLE_EQ(v, 0.5);
}

TEST(SprsScores, DuplicatesScoreAlike) {
  const Dataset base = gaussian_blobs(20, 2, 3, 2.0, 2);
  const std::vector<std::size_t> first = {0};
  const Dataset train = concat(base, base.subset(first));
  const Dataset test = gaussian_blobs(20, 2, 3, 2.0, 3);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 20;
  const ScoreVector s = sprs_scores(train_mlp(cfg, train), train, test);
  EXPECT_EQ(s.values.front(), s.values.back());
}

TEST(SprsScores, OverfitModelRanksMembersAboveHalf) {
  const Split split = split_balanced(testing::desk_instance(1), 1);
  const Model m = train_mlp(testing::overfit_config(1), split.train);
  EXPECT_GT(sprs_scores(m, split.train, split.test).mean(), 0.5);
}

TEST(NaiveLoo, DuplicatesScoreBelowUniqueRecords) {
  // Even records get a duplicate appended, odd records stay unique.
  const Dataset base = gaussian_blobs(20, 2, 5, 1.0, 4);
  std::vector<std::size_t> pairs;
  for (std::size_t i = 0; i < base.size(); i += 2) pairs.push_back(i);
  const Dataset train = concat(base, base.subset(pairs));
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 60;
  cfg.learning_rate = 0.1;
  const LooResult r = naive_loo_scores(cfg, train, train);
  ASSERT_EQ(r.scores.size(), 60u);
  EXPECT_EQ(r.scores.metric_id, MetricId::kLoo);
  double dup_mean = 0.0;
  double unique_mean = 0.0;
  for (std::size_t i = 0; i < 20; ++i) dup_mean += (r.scores.values[2 * i] + r.scores.values[40 + i]) / 40.0;
  for (std::size_t i = 0; i < 20; ++i) unique_mean += r.scores.values[2 * i + 1] / 20.0;
  EXPECT_LT(dup_mean, unique_mean);
  EXPECT_GT(r.seconds, 0.0);
}

TEST(NaiveLoo, DeterministicAndBounded) {
  const Dataset train = gaussian_blobs(6, 2, 3, 1.0, 5);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 10;
  const LooResult a = naive_loo_scores(cfg, train, train);
  const LooResult b = naive_loo_scores(cfg, train, train, {200, 3});
  EXPECT_EQ(a.scores.values, b.scores.values);
  for (double v : a.scores.values) {
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
  }
}

TEST(NaiveLoo, SingleRecordComparesAgainstInitialisation) {
  RowMatrix x(1, 2);
  x << 1.0, -1.0;
  const Dataset one(x, {1}, 2);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 30;
  const LooResult r = naive_loo_scores(cfg, one, one);
  const double trained = predict_proba(train_mlp(cfg, one), one.row(0))(1);
  const double prior = predict_proba(init_mlp(cfg, 2), one.row(0))(1);
  EXPECT_DOUBLE_EQ(r.scores.values[0], std::abs(trained - prior));
  EXPECT_TRUE(std::isfinite(r.scores.values[0]));
}

TEST(NaiveLoo, CapIsEnforced) {
  const Dataset train = gaussian_blobs(6, 2, 3, 1.0, 5);
  EXPECT_SHAPR_ERROR((void)naive_loo_scores(MlpConfig::desk(2), train, train, {5, 1}), ErrorCode::kCapExceeded);
}

TEST(BruteForce, SmallCases) {
  RowMatrix one(1, 1);
  one << 0.0;
  const std::vector<Label> y1 = {1};
  EXPECT_DOUBLE_EQ(brute_force_shapley(one, y1, one, y1, 1)[0], 1.0);

  RowMatrix two(2, 1);
  two << 0.0, 1.0;
  const std::vector<Label> y2 = {1, 0};
  const auto phi = brute_force_shapley(two, y2, one, y1, 1);
  EXPECT_DOUBLE_EQ(phi[0], 1.0);
  EXPECT_DOUBLE_EQ(phi[1], 0.0);
}

TEST(BruteForce, EfficiencyAxiom) {
  Rng rng = make_rng(77);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_instance(rng, 10, 1, 4);
    const auto phi = brute_force_shapley(inst.train_emb, inst.train_labels, inst.test_emb, inst.test_labels, inst.k);
    const SortedNeighbors s = sort_neighbors(inst.train_emb, inst.test_emb.row(0).transpose());
    std::vector<Label> sorted;
    for (std::size_t i : s.order) sorted.push_back(inst.train_labels[i]);
    EXPECT_NEAR(std::accumulate(phi.begin(), phi.end(), 0.0), knn_utility(sorted, inst.test_labels[0], inst.k), 1e-12);
  }
}

TEST(BruteForce, CountingOracleAgreesUpToCap) {
  Rng rng = make_rng(78);
  for (int trial = 0; trial < 10; ++trial) {
    const auto inst = testing::random_instance(rng, 12, 2, 5, 2, 2);
    const auto brute = brute_force_shapley(inst.train_emb, inst.train_labels, inst.test_emb, inst.test_labels, inst.k);
    const auto count =
        testing::counting_scores(inst.train_emb, inst.train_labels, inst.test_emb, inst.test_labels, inst.k);
    EXPECT_LT(testing::max_abs_diff(brute, count), 1e-12);
  }
}

TEST(BruteForce, Errors) {
  const RowMatrix big = RowMatrix::Zero(13, 1);
  const std::vector<Label> y(13, 0);
  const RowMatrix t = RowMatrix::Zero(1, 1);
  const std::vector<Label> ty = {0};
  EXPECT_SHAPR_ERROR((void)brute_force_shapley(big, y, t, ty, 1), ErrorCode::kCapExceeded);
  EXPECT_SHAPR_ERROR((void)brute_force_shapley(t, ty, RowMatrix::Zero(1, 2), ty, 1), ErrorCode::kDimensionMismatch);
}

}  // namespace
}  // namespace shapr
