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

// Reference membership inference attacks used as ground truth: the
// modified-entropy attack with per-class thresholds, and the per-example
// likelihood-ratio attack calibrated with shadow models. Both run in the
// full-knowledge setting where the auditor knows the member and
// non-member pools.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/mlp.hpp"
#include "shapr/parallel.hpp"
#include "shapr/random.hpp"

namespace shapr {

inline constexpr double kProbabilityEps = 1e-12;

inline double clamp_probability(double p) {
  return std::clamp(p, kProbabilityEps, 1.0 - kProbabilityEps);
}

// -(1 - p_y) log p_y - sum_{i != y} p_i log(1 - p_i), natural log, with
// every probability clamped to [eps, 1 - eps].
inline double mentr(std::span<const double> p, Label y) {
  require(y >= 0 && static_cast<std::size_t>(y) < p.size(), ErrorCode::kOutOfRange,
          "label outside probability vector");
  const double py = clamp_probability(p[static_cast<std::size_t>(y)]);
  double value = -(1.0 - py) * std::log(py);
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (i == static_cast<std::size_t>(y)) continue;
    const double pi = clamp_probability(p[i]);
    value -= pi * std::log(1.0 - pi);
  }
  return value;
}

inline double mentr(const Vector& p, Label y) {
  return mentr(std::span<const double>(p.data(), static_cast<std::size_t>(p.size())), y);
}

inline std::vector<double> mentr_all(const Model& m, const Dataset& ds) {
  const RowMatrix probs = predict_proba_batch(m, ds.features());
  std::vector<double> out(ds.size());
  for (std::size_t i = 0; i < ds.size(); ++i) {
    out[i] = mentr(std::span<const double>(probs.row(static_cast<Eigen::Index>(i)).data(),
                                           static_cast<std::size_t>(probs.cols())),
                   ds.label(i));
  }
  return out;
}

struct MentrThresholds {
  std::vector<double> tau;  // indexed by class
  double global_tau = 0.0;
};

namespace detail {

// Best tau over the observed values for the rule "member iff v <= tau",
// scored by balanced accuracy; ties keep the smallest tau.
inline double best_threshold(std::span<const double> members, std::span<const double> nonmembers) {
  std::vector<double> candidates(members.begin(), members.end());
  candidates.insert(candidates.end(), nonmembers.begin(), nonmembers.end());
  std::sort(candidates.begin(), candidates.end());
  candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

  std::vector<double> m_sorted(members.begin(), members.end());
  std::vector<double> n_sorted(nonmembers.begin(), nonmembers.end());
  std::sort(m_sorted.begin(), m_sorted.end());
  std::sort(n_sorted.begin(), n_sorted.end());
  const auto n_m = static_cast<double>(m_sorted.size());
  const auto n_n = static_cast<double>(n_sorted.size());

  double best_tau = candidates.front();
  double best_acc = -1.0;
  for (double tau : candidates) {
    const auto tp = static_cast<double>(std::upper_bound(m_sorted.begin(), m_sorted.end(), tau) -
                                        m_sorted.begin());
    const auto fp = static_cast<double>(std::upper_bound(n_sorted.begin(), n_sorted.end(), tau) -
                                        n_sorted.begin());
    const double acc = 0.5 * (tp / n_m + (n_n - fp) / n_n);
    if (acc > best_acc) {
      best_acc = acc;
      best_tau = tau;
    }
  }
  return best_tau;
}

}  // namespace detail

// Classes lacking members or non-members inherit the threshold fitted on all
// classes pooled.
inline MentrThresholds fit_class_thresholds(std::span<const double> member_mentr,
                                            std::span<const Label> member_labels,
                                            std::span<const double> nonmember_mentr,
                                            std::span<const Label> nonmember_labels, int n_classes) {
  require(!member_mentr.empty() && !nonmember_mentr.empty(), ErrorCode::kInvalidArgument,
          "threshold fitting needs members and non-members");
  require(member_mentr.size() == member_labels.size() &&
              nonmember_mentr.size() == nonmember_labels.size(),
          ErrorCode::kLengthMismatch, "Mentr values and labels differ in length");
  require(n_classes >= 1, ErrorCode::kInvalidArgument, "n_classes must be positive");

  MentrThresholds out;
  out.global_tau = detail::best_threshold(member_mentr, nonmember_mentr);
  out.tau.assign(static_cast<std::size_t>(n_classes), out.global_tau);
  for (int c = 0; c < n_classes; ++c) {
    std::vector<double> mc;
    std::vector<double> nc;
    for (std::size_t i = 0; i < member_mentr.size(); ++i) {
      if (member_labels[i] == c) mc.push_back(member_mentr[i]);
    }
    for (std::size_t i = 0; i < nonmember_mentr.size(); ++i) {
      if (nonmember_labels[i] == c) nc.push_back(nonmember_mentr[i]);
    }
    if (!mc.empty() && !nc.empty()) out.tau[static_cast<std::size_t>(c)] = detail::best_threshold(mc, nc);
  }
  return out;
}

inline bool iment_predict_from_mentr(double mentr_value, Label y, const MentrThresholds& t) {
  const double tau = (y >= 0 && static_cast<std::size_t>(y) < t.tau.size())
                         ? t.tau[static_cast<std::size_t>(y)]
                         : t.global_tau;
  return mentr_value <= tau;
}

inline bool iment_predict(const Vector& p, Label y, const MentrThresholds& t) {
  return iment_predict_from_mentr(mentr(p, y), y, t);
}

// Fits thresholds on the target model's own member/non-member Mentr values
// and predicts every record with them.
inline AttackOutcome run_iment(const Model& m, const Dataset& train, const Dataset& test) {
  const std::vector<double> mm = mentr_all(m, train);
  const std::vector<double> nm = mentr_all(m, test);
  const MentrThresholds t = fit_class_thresholds(mm, train.labels(), nm, test.labels(), train.n_classes());
  AttackOutcome out;
  out.attack_id = AttackId::kIment;
  out.member_predictions.resize(train.size());
  out.nonmember_predictions.resize(test.size());
  for (std::size_t i = 0; i < train.size(); ++i) {
    out.member_predictions[i] = iment_predict_from_mentr(mm[i], train.label(i), t);
  }
  for (std::size_t i = 0; i < test.size(); ++i) {
    out.nonmember_predictions[i] = iment_predict_from_mentr(nm[i], test.label(i), t);
  }
  return out;
}

// log(p / (1 - p)) after clamping p to [eps, 1 - eps].
inline double lira_logit(double p_y) {
  const double p = clamp_probability(p_y);
  return std::log(p) - std::log1p(-p);
}

struct LiraStats {
  double mu_in = 0.0;
  double sigma_in = 1.0;
  double mu_out = 0.0;
  double sigma_out = 1.0;
  std::size_t count_in = 0;
  std::size_t count_out = 0;
};

inline constexpr double kSigmaFloor = 1e-3;

// log N(rho; mu_in, sigma_in) - log N(rho; mu_out, sigma_out).
inline double lira_log_ratio(double rho, const LiraStats& s) {
  const double din = (rho - s.mu_in) / s.sigma_in;
  const double dout = (rho - s.mu_out) / s.sigma_out;
  return std::log(s.sigma_out) - std::log(s.sigma_in) - 0.5 * din * din + 0.5 * dout * dout;
}

inline double lira_ratio(double rho, const LiraStats& s) {
  return std::exp(std::clamp(lira_log_ratio(rho, s), -700.0, 700.0));
}

// Member iff the density ratio exceeds ratio_threshold; compared in log space.
inline bool lira_predict(double rho, const LiraStats& s, double ratio_threshold = 1.0) {
  require(ratio_threshold > 0.0, ErrorCode::kInvalidArgument, "ratio threshold must be positive");
  return lira_log_ratio(rho, s) > std::log(ratio_threshold);
}

// Per pool record: logits observed from shadow models that trained on it
// (in) and from those that did not (out), in shadow-index order.
struct ShadowSamples {
  std::vector<std::vector<double>> in;
  std::vector<std::vector<double>> out;
};

inline Vector true_class_logits(const Model& m, const Dataset& ds) {
  const RowMatrix probs = predict_proba_batch(m, ds.features());
  Vector rho(static_cast<Eigen::Index>(ds.size()));
  for (std::size_t i = 0; i < ds.size(); ++i) {
    rho(static_cast<Eigen::Index>(i)) = lira_logit(probs(static_cast<Eigen::Index>(i), ds.label(i)));
  }
  return rho;
}

// Trains S shadow models, each on an independent seeded half of the pool.
inline ShadowSamples train_shadow_ensemble(const Dataset& pool, const MlpConfig& cfg, std::size_t shadows,
                                           std::uint64_t seed, unsigned threads = 1) {
  require(shadows >= 2, ErrorCode::kInvalidArgument, "need at least 2 shadow models");
  require(pool.size() >= 2, ErrorCode::kInvalidArgument, "shadow pool needs at least 2 records");
  const std::size_t n = pool.size();
  std::vector<std::vector<bool>> membership(shadows, std::vector<bool>(n, false));
  std::vector<Vector> logits(shadows);
  for (std::size_t s = 0; s < shadows; ++s) {
    Rng rng = make_rng(seed, 0x5400 + s);
    const std::vector<std::size_t> order = permutation(n, rng);
    for (std::size_t r = 0; r < n / 2; ++r) membership[s][order[r]] = true;
  }
  parallel_for(shadows, threads, [&](std::size_t s) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < n; ++i) {
      if (membership[s][i]) idx.push_back(i);
    }
    MlpConfig shadow_cfg = cfg;
    shadow_cfg.seed = cfg.seed + 0x9e3779b9ULL * (s + 1);
    const Model shadow = train_mlp(shadow_cfg, pool.subset(idx));
    logits[s] = true_class_logits(shadow, pool);
  });
  ShadowSamples out;
  out.in.resize(n);
  out.out.resize(n);
  for (std::size_t s = 0; s < shadows; ++s) {
    for (std::size_t i = 0; i < n; ++i) {
      (membership[s][i] ? out.in[i] : out.out[i]).push_back(logits[s](static_cast<Eigen::Index>(i)));
    }
  }
  return out;
}

namespace detail {

struct Moments {
  double mean = 0.0;
  double variance = 0.0;
};

inline Moments moments(std::span<const double> xs) {
  Moments m;
  if (xs.empty()) return m;
  for (double x : xs) m.mean += x;
  m.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return m;
  for (double x : xs) m.variance += (x - m.mean) * (x - m.mean);
  m.variance /= static_cast<double>(xs.size() - 1);
  return m;
}

}  // namespace detail

// Per-record Gaussian fits. A side with fewer than two samples borrows the
// pooled variance of that side (and the pooled mean when it has none);
// every sigma is then raised by the floor.
inline std::vector<LiraStats> fit_lira_stats(const ShadowSamples& samples) {
  const std::size_t n = samples.in.size();
  std::vector<double> all_in;
  std::vector<double> all_out;
  for (std::size_t i = 0; i < n; ++i) {
    all_in.insert(all_in.end(), samples.in[i].begin(), samples.in[i].end());
    all_out.insert(all_out.end(), samples.out[i].begin(), samples.out[i].end());
  }
  const detail::Moments global_in = detail::moments(all_in);
  const detail::Moments global_out = detail::moments(all_out);

  std::vector<LiraStats> stats(n);
  for (std::size_t i = 0; i < n; ++i) {
    const detail::Moments in = detail::moments(samples.in[i]);
    const detail::Moments out = detail::moments(samples.out[i]);
    LiraStats& s = stats[i];
    s.count_in = samples.in[i].size();
    s.count_out = samples.out[i].size();
    s.mu_in = s.count_in > 0 ? in.mean : global_in.mean;
    s.mu_out = s.count_out > 0 ? out.mean : global_out.mean;
    s.sigma_in = std::sqrt(s.count_in >= 2 ? in.variance : global_in.variance) + kSigmaFloor;
    s.sigma_out = std::sqrt(s.count_out >= 2 ? out.variance : global_out.variance) + kSigmaFloor;
  }
  return stats;
}

struct LiraOptions {
  std::size_t shadows = 16;
  double ratio_threshold = 1.0;
  unsigned threads = 1;
};

// Shadow pool = members followed by non-members; the target model's logit on
// each record is tested against that record's in/out fits.
inline AttackOutcome run_lira(const Model& target, const Dataset& train, const Dataset& test,
                              const MlpConfig& shadow_cfg, std::uint64_t seed,
                              const LiraOptions& options = {}) {
  const Dataset pool = concat(train, test);
  const ShadowSamples samples = train_shadow_ensemble(pool, shadow_cfg, options.shadows, seed, options.threads);
  const std::vector<LiraStats> stats = fit_lira_stats(samples);
  const Vector rho = true_class_logits(target, pool);
  AttackOutcome out;
  out.attack_id = AttackId::kIlira;
  out.member_predictions.resize(train.size());
  out.nonmember_predictions.resize(test.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const bool member = lira_predict(rho(static_cast<Eigen::Index>(i)), stats[i], options.ratio_threshold);
    if (i < train.size()) {
      out.member_predictions[i] = member;
    } else {
      out.nonmember_predictions[i - train.size()] = member;
    }
  }
  return out;
}

}  // namespace shapr
