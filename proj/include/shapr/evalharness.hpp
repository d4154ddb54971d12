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

// Metrics and experiment drivers. Drivers only measure; trend assertions
// belong to the acceptance suite.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "shapr/attacks.hpp"
#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/knn_shapley.hpp"
#include "shapr/mlp.hpp"
#include "shapr/parallel.hpp"
#include "shapr/random.hpp"

namespace shapr {

struct EffectivenessReport {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t n_positive_truth = 0;
  std::size_t n_positive_pred = 0;
};

// Truth is the attack's verdict per training record; "member" is positive.
// Zero denominators give 0.
inline EffectivenessReport effectiveness(const std::vector<bool>& metric_flags,
                                         const std::vector<bool>& attack_member_preds) {
  require(metric_flags.size() == attack_member_preds.size(), ErrorCode::kLengthMismatch,
          "metric flags (" + std::to_string(metric_flags.size()) + ") and attack predictions (" +
              std::to_string(attack_member_preds.size()) + ") differ in length");
  std::size_t tp = 0;
  EffectivenessReport r;
  for (std::size_t i = 0; i < metric_flags.size(); ++i) {
    r.n_positive_pred += metric_flags[i] ? 1 : 0;
    r.n_positive_truth += attack_member_preds[i] ? 1 : 0;
    tp += (metric_flags[i] && attack_member_preds[i]) ? 1 : 0;
  }
  r.precision = r.n_positive_pred ? static_cast<double>(tp) / static_cast<double>(r.n_positive_pred) : 0.0;
  r.recall = r.n_positive_truth ? static_cast<double>(tp) / static_cast<double>(r.n_positive_truth) : 0.0;
  r.f1 = (r.precision > 0.0 && r.recall > 0.0)
             ? 2.0 * r.precision * r.recall / (r.precision + r.recall)
             : 0.0;
  return r;
}

// Mean of the member hit rate and the non-member rejection rate. Equals
// (TP + TN) / (n_members + n_nonmembers) on balanced sets.
inline double attack_accuracy(const std::vector<bool>& member_preds,
                              const std::vector<bool>& nonmember_preds) {
  require(!member_preds.empty() && !nonmember_preds.empty(), ErrorCode::kInvalidArgument,
          "attack accuracy needs members and non-members");
  const auto tp = static_cast<double>(std::count(member_preds.begin(), member_preds.end(), true));
  const auto tn = static_cast<double>(std::count(nonmember_preds.begin(), nonmember_preds.end(), false));
  return 0.5 * (tp / static_cast<double>(member_preds.size()) +
                tn / static_cast<double>(nonmember_preds.size()));
}

inline double balanced_attack_accuracy(const AttackOutcome& outcome) {
  const auto& m = outcome.member_predictions;
  const auto& n = outcome.nonmember_predictions;
  require(m.size() == n.size(), ErrorCode::kLengthMismatch,
          "balanced accuracy needs equal member/non-member counts");
  require(!m.empty(), ErrorCode::kInvalidArgument, "empty attack outcome");
  const auto tp = static_cast<double>(std::count(m.begin(), m.end(), true));
  const auto tn = static_cast<double>(std::count(n.begin(), n.end(), false));
  return (tp + tn) / static_cast<double>(m.size() + n.size());
}

// Sample correlation; a constant side has no defined value and is an error.
inline double pearson(std::span<const double> xs, std::span<const double> ys) {
  require(xs.size() == ys.size(), ErrorCode::kLengthMismatch, "pearson inputs differ in length");
  require(xs.size() >= 2, ErrorCode::kInvalidArgument, "pearson needs at least 2 points");
  const auto n = static_cast<double>(xs.size());
  const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
  const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / n;
  double sxy = 0.0;
  double sxx = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  require(sxx > 0.0 && syy > 0.0, ErrorCode::kUndefined, "correlation undefined for constant input");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

struct GroupSummary {
  std::int32_t code = 0;
  std::string name;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
  double mean_score = 0.0;
  double attack_accuracy = 0.0;
};

struct SubgroupReport {
  std::vector<GroupSummary> groups;  // ascending subgroup code
  // Whether the group with the highest mean score also has the highest attack
  // accuracy; empty with fewer than two groups.
  std::optional<bool> direction_agrees;
};

inline SubgroupReport subgroup_report(const ScoreVector& scores, const AttackOutcome& outcome,
                                      const Dataset& train, const Dataset& test) {
  require(train.has_subgroup() && test.has_subgroup(), ErrorCode::kInvalidArgument,
          "subgroup attribute missing");
  require(scores.size() == train.size() && outcome.member_predictions.size() == train.size() &&
              outcome.nonmember_predictions.size() == test.size(),
          ErrorCode::kLengthMismatch, "scores, attack outcome and datasets differ in length");
  std::map<std::int32_t, std::vector<std::size_t>> train_idx;
  std::map<std::int32_t, std::vector<std::size_t>> test_idx;
  for (std::size_t i = 0; i < train.size(); ++i) train_idx[(*train.subgroup())[i]].push_back(i);
  for (std::size_t i = 0; i < test.size(); ++i) test_idx[(*test.subgroup())[i]].push_back(i);

  SubgroupReport report;
  for (const auto& [code, idx] : train_idx) {
    GroupSummary g;
    g.code = code;
    if (code >= 0 && static_cast<std::size_t>(code) < train.subgroup_names().size()) {
      g.name = train.subgroup_names()[static_cast<std::size_t>(code)];
    } else {
      g.name = std::to_string(code);
    }
    g.n_train = idx.size();
    double sum = 0.0;
    std::vector<bool> member_preds;
    for (std::size_t i : idx) {
      sum += scores.values[i];
      member_preds.push_back(outcome.member_predictions[i]);
    }
    g.mean_score = sum / static_cast<double>(idx.size());
    std::vector<bool> nonmember_preds;
    if (auto it = test_idx.find(code); it != test_idx.end()) {
      for (std::size_t i : it->second) nonmember_preds.push_back(outcome.nonmember_predictions[i]);
    }
    g.n_test = nonmember_preds.size();
    if (!nonmember_preds.empty()) {
      g.attack_accuracy = attack_accuracy(member_preds, nonmember_preds);
    } else {
      g.attack_accuracy = std::numeric_limits<double>::quiet_NaN();
    }
    report.groups.push_back(std::move(g));
  }
  if (report.groups.size() >= 2) {
    const auto by_score = std::max_element(report.groups.begin(), report.groups.end(),
                                           [](const auto& a, const auto& b) { return a.mean_score < b.mean_score; });
    const auto by_attack = std::max_element(
        report.groups.begin(), report.groups.end(),
        [](const auto& a, const auto& b) { return a.attack_accuracy < b.attack_accuracy; });
    report.direction_agrees = by_score == by_attack;
  }
  return report;
}

struct DriverConfig {
  MlpConfig mlp;
  ShaprOptions shapr;
  std::uint64_t seed = 0;
  unsigned threads = 1;  // workers across knob points
};

namespace detail {

// Train, score and attack one configuration.
inline SeriesPoint measure(const MlpConfig& mlp, const ShaprOptions& shapr, const Dataset& train,
                           const Dataset& test) {
  const Model model = train_mlp(mlp, train);
  const ScoreVector scores = shapr_scores(model, train, test, shapr);
  const AttackOutcome outcome = run_iment(model, train, test);
  const EffectivenessReport eff = effectiveness(classify_members(scores), outcome.member_predictions);
  SeriesPoint p;
  p.mean_score = scores.mean();
  p.attack_accuracy = attack_accuracy(outcome.member_predictions, outcome.nonmember_predictions);
  p.f1 = eff.f1;
  p.recall = eff.recall;
  return p;
}

}  // namespace detail

// Retrains once per L2 strength and records mean SHAPr and attack accuracy.
inline ExperimentSeries regularization_sweep(const DriverConfig& cfg, const Dataset& train,
                                             const Dataset& test, const std::vector<double>& lambdas) {
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    require(lambdas[i] >= 0.0, ErrorCode::kInvalidArgument, "lambda must be non-negative");
    require(i == 0 || lambdas[i] > lambdas[i - 1], ErrorCode::kInvalidArgument,
            "lambdas must be strictly increasing");
  }
  std::vector<SeriesPoint> points(lambdas.size());
  parallel_for(lambdas.size(), cfg.threads, [&](std::size_t i) {
    MlpConfig mlp = cfg.mlp;
    mlp.l2_lambda = lambdas[i];
    points[i] = detail::measure(mlp, cfg.shapr, train, test);
  });
  return ExperimentSeries("l2_lambda", lambdas, std::move(points));
}

// Drops the top-scoring fraction of members (ties: lower index first),
// removes as many uniformly random test records, retrains and rescores the
// survivors.
inline ExperimentSeries removal_experiment(const DriverConfig& cfg, const Dataset& train,
                                           const Dataset& test, const std::vector<double>& fractions) {
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    require(fractions[i] >= 0.0 && fractions[i] <= 0.5, ErrorCode::kInvalidArgument,
            "removal fractions must lie in [0, 0.5]");
    require(i == 0 || fractions[i] > fractions[i - 1], ErrorCode::kInvalidArgument,
            "fractions must be strictly increasing");
  }
  const Model baseline = train_mlp(cfg.mlp, train);
  const ScoreVector base_scores = shapr_scores(baseline, train, test, cfg.shapr);
  std::vector<std::size_t> by_score(train.size());
  std::iota(by_score.begin(), by_score.end(), std::size_t{0});
  std::stable_sort(by_score.begin(), by_score.end(), [&](std::size_t a, std::size_t b) {
    return base_scores.values[a] > base_scores.values[b];
  });
  Rng rng = make_rng(cfg.seed, 0x7e57);
  const std::vector<std::size_t> test_order = permutation(test.size(), rng);

  std::vector<SeriesPoint> points(fractions.size());
  parallel_for(fractions.size(), cfg.threads, [&](std::size_t f) {
    const auto n_remove = static_cast<std::size_t>(std::floor(fractions[f] * static_cast<double>(train.size())));
    require(n_remove < train.size() && n_remove < test.size(), ErrorCode::kInvalidArgument,
            "removal would empty a partition");
    std::vector<std::size_t> keep_train(by_score.begin() + static_cast<std::ptrdiff_t>(n_remove), by_score.end());
    std::sort(keep_train.begin(), keep_train.end());
    std::vector<std::size_t> keep_test(test_order.begin() + static_cast<std::ptrdiff_t>(n_remove), test_order.end());
    std::sort(keep_test.begin(), keep_test.end());
    points[f] = detail::measure(cfg.mlp, cfg.shapr, train.subset(keep_train), test.subset(keep_test));
  });
  return ExperimentSeries("removed_fraction", fractions, std::move(points));
}

// Splits the training set into a clean and a noisy half, perturbs the noisy
// half with FGSM crafted on a model trained on the original data, then
// retrains per epsilon. mean_score is the noisy half, secondary_mean_score
// the clean half, attack_accuracy is measured on noisy members against all
// non-members.
inline ExperimentSeries noise_experiment(const DriverConfig& cfg, const Dataset& train, const Dataset& test,
                                         const std::vector<double>& epsilons) {
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] >= 0.0, ErrorCode::kInvalidArgument, "epsilon must be non-negative");
    require(i == 0 || epsilons[i] > epsilons[i - 1], ErrorCode::kInvalidArgument,
            "epsilons must be strictly increasing");
  }
  require(train.size() >= 2, ErrorCode::kInvalidArgument, "noise study needs at least 2 records");
  Rng rng = make_rng(cfg.seed, 0x4015e);
  const std::vector<std::size_t> order = permutation(train.size(), rng);
  std::vector<bool> noisy(train.size(), false);
  for (std::size_t r = train.size() - train.size() / 2; r < train.size(); ++r) noisy[order[r]] = true;

  const Model crafter = train_mlp(cfg.mlp, train);
  std::vector<SeriesPoint> points(epsilons.size());
  parallel_for(epsilons.size(), cfg.threads, [&](std::size_t e) {
    RowMatrix x = train.features();
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (!noisy[i]) continue;
      x.row(static_cast<Eigen::Index>(i)) =
          fgsm_perturb(crafter, train.row(i), train.label(i), epsilons[e]).transpose();
    }
    const Dataset perturbed = train.with_features(std::move(x));
    const Model model = train_mlp(cfg.mlp, perturbed);
    const ScoreVector scores = shapr_scores(model, perturbed, test, cfg.shapr);
    const AttackOutcome outcome = run_iment(model, perturbed, test);
    double noisy_sum = 0.0;
    double clean_sum = 0.0;
    std::vector<bool> noisy_preds;
    for (std::size_t i = 0; i < train.size(); ++i) {
      if (noisy[i]) {
        noisy_sum += scores.values[i];
        noisy_preds.push_back(outcome.member_predictions[i]);
      } else {
        clean_sum += scores.values[i];
      }
    }
    const std::size_t n_noisy = noisy_preds.size();
    const std::size_t n_clean = train.size() - n_noisy;
    SeriesPoint p;
    p.mean_score = noisy_sum / static_cast<double>(n_noisy);
    p.secondary_mean_score = clean_sum / static_cast<double>(n_clean);
    p.attack_accuracy = attack_accuracy(noisy_preds, outcome.nonmember_predictions);
    points[e] = p;
  });
  ExperimentSeries series("epsilon", epsilons, std::move(points));
  if (series.size() >= 2) {
    std::vector<double> means;
    std::vector<double> accs;
    for (const auto& p : series.summaries()) {
      means.push_back(p.mean_score);
      accs.push_back(p.attack_accuracy);
    }
    try {
      series.correlation = pearson(means, accs);
    } catch (const Error&) {
      series.correlation.reset();
    }
  }
  return series;
}

}  // namespace shapr
