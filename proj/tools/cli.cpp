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


#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "shapr/shapr.hpp"

namespace shapr::cli {
namespace {

namespace fs = std::filesystem;

struct GlobalFlags {
  std::uint64_t seed = 0;
  std::size_t k = 5;
  std::optional<std::size_t> layer;
  unsigned threads = 1;
};

struct MlpFlags {
  std::vector<std::size_t> hidden = {64, 32};
  double lr = 0.05;
  std::size_t epochs = 50;
  std::size_t batch = 32;
  double l2 = 0.0;
};

void add_mlp_flags(CLI::App* sub, MlpFlags& f) {
  sub->add_option("--widths", f.hidden, "hidden layer widths, comma separated")->delimiter(',')->capture_default_str();
  sub->add_option("--lr", f.lr, "SGD learning rate")->capture_default_str();
  sub->add_option("--epochs", f.epochs, "training epochs")->capture_default_str();
  sub->add_option("--batch", f.batch, "mini-batch size")->capture_default_str();
  sub->add_option("--l2", f.l2, "L2 penalty on all parameters")->capture_default_str();
}

MlpConfig mlp_config(const MlpFlags& f, const GlobalFlags& g, int n_classes) {
  MlpConfig cfg;
  cfg.layer_widths = f.hidden;
  cfg.layer_widths.push_back(static_cast<std::size_t>(n_classes));
  cfg.learning_rate = f.lr;
  cfg.epochs = f.epochs;
  cfg.batch_size = f.batch;
  cfg.l2_lambda = f.l2;
  cfg.seed = g.seed;
  return cfg;
}

ShaprOptions shapr_options(const GlobalFlags& g) {
  ShaprOptions o;
  o.k = g.k;
  o.layer = g.layer;
  o.threads = g.threads;
  return o;
}

void write_csv(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  io::write_text(path, text);
}

std::string series_csv(const ExperimentSeries& s) {
  std::ostringstream os;
  io::write_series_csv(os, s);
  return os.str();
}

void require_same_classes(const Dataset& train, const Dataset& test) {
  require(train.n_classes() == test.n_classes(), ErrorCode::kDimensionMismatch,
          "train and test disagree on n_classes");
  require(train.n_features() == test.n_features(), ErrorCode::kDimensionMismatch,
          "train and test disagree on n_features");
}

const char* kUsage =
    "usage: shapr <subcommand> [options]\n"
    "subcommands: synth, train, score, attack, evaluate, sweep-l2, remove, subgroup, noise, bench-loo\n"
    "run 'shapr <subcommand> --help' for details\n";

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  if (args.empty()) {
    err << kUsage;
    return 1;
  }

  CLI::App app("Per-record membership privacy risk auditing", "shapr");
  app.require_subcommand(1);
  app.fallthrough();

  GlobalFlags g;
  app.add_option("--seed", g.seed, "seed for splits, initialisation and shuffling")->capture_default_str();
  app.add_option("--k", g.k, "neighbours in the KNN surrogate")->capture_default_str()->check(CLI::PositiveNumber);
  app.add_option("--layer", g.layer, "embedding layer index (default: penultimate)");
  app.add_option("--threads", g.threads, "worker threads, 0 = all cores")->capture_default_str();

  MlpFlags mf;
  std::string train_dir;
  std::string test_dir;
  std::string model_path;
  std::string out_path;

  // synth
  auto* synth = app.add_subcommand("synth", "write a seeded synthetic train/test split");
  std::string kind = "memorization";
  std::size_t n_per_class = 167;
  int n_classes = 2;
  std::size_t n_features = 20;
  double separation = 2.0;
  double dup = 0.2;
  double outliers = 0.05;
  double noise = 0.2;
  synth->add_option("--kind", kind, "blobs, memorization or two-group")
      ->check(CLI::IsMember({"blobs", "memorization", "two-group"}))
      ->capture_default_str();
  synth->add_option("--n-per-class", n_per_class, "records per class (per group for two-group)")->capture_default_str();
  synth->add_option("--classes", n_classes, "number of classes")->capture_default_str();
  synth->add_option("--features", n_features, "feature count")->capture_default_str();
  synth->add_option("--separation", separation, "distance of class centres from the origin")->capture_default_str();
  synth->add_option("--dup", dup, "fraction of records duplicated")->capture_default_str();
  synth->add_option("--outliers", outliers, "fraction of records turned into outliers")->capture_default_str();
  synth->add_option("--noise", noise, "label noise of group B")->capture_default_str();
  synth->add_option("--out", out_path, "output directory (train/ and test/ are created)")->required();

  // train
  auto* train = app.add_subcommand("train", "fit an MLP and save it");
  train->add_option("--train", train_dir, "training dataset directory")->required();
  train->add_option("--out", out_path, "model file")->required();
  add_mlp_flags(train, mf);

  // score
  auto* score = app.add_subcommand("score", "per-record privacy risk scores");
  std::string metric = "shapr";
  std::string hist_path;
  std::size_t bins = 10;
  std::size_t loo_cap = 200;
  score->add_option("--metric", metric, "shapr, sprs or loo")
      ->check(CLI::IsMember({"shapr", "sprs", "loo"}))
      ->capture_default_str();
  score->add_option("--model", model_path, "trained model (shapr, sprs)");
  score->add_option("--train", train_dir, "training dataset directory")->required();
  score->add_option("--test", test_dir, "test dataset directory")->required();
  score->add_option("--out", out_path, "score file")->required();
  score->add_option("--hist", hist_path, "histogram CSV");
  score->add_option("--bins", bins, "SPRS bins per class")->capture_default_str();
  score->add_option("--cap", loo_cap, "largest training set accepted by loo")->capture_default_str();
  add_mlp_flags(score, mf);

  // attack
  auto* attack = app.add_subcommand("attack", "run a membership inference attack");
  std::string which = "iment";
  std::size_t shadows = 16;
  attack->add_option("--which", which, "iment or lira")->check(CLI::IsMember({"iment", "lira"}))->capture_default_str();
  attack->add_option("--model", model_path, "target model")->required();
  attack->add_option("--train", train_dir, "member dataset directory")->required();
  attack->add_option("--test", test_dir, "non-member dataset directory")->required();
  attack->add_option("--out", out_path, "output directory")->required();
  attack->add_option("--shadows", shadows, "shadow models for lira")->capture_default_str();
  add_mlp_flags(attack, mf);

  // evaluate
  auto* evaluate = app.add_subcommand("evaluate", "compare scores against attack ground truth");
  std::string scores_path;
  std::string attack_dir;
  evaluate->add_option("--scores", scores_path, "score file")->required();
  evaluate->add_option("--attack", attack_dir, "attack output directory")->required();
  evaluate->add_option("--out", out_path, "report CSV")->required();

  // experiment drivers
  std::vector<double> knobs;
  auto* sweep = app.add_subcommand("sweep-l2", "retrain across L2 strengths");
  sweep->add_option("--lambdas", knobs, "L2 strengths, comma separated")->delimiter(',')->required();
  auto* remove = app.add_subcommand("remove", "remove the highest-risk fraction and rescore");
  remove->add_option("--fractions", knobs, "fractions in [0, 0.5], comma separated")->delimiter(',')->required();
  auto* noisy = app.add_subcommand("noise", "FGSM noise on half of the training set");
  noisy->add_option("--epsilons", knobs, "perturbation sizes, comma separated")->delimiter(',')->required();
  for (CLI::App* sub : {sweep, remove, noisy}) {
    sub->add_option("--train", train_dir, "training dataset directory")->required();
    sub->add_option("--test", test_dir, "test dataset directory")->required();
    sub->add_option("--out", out_path, "series CSV")->required();
    add_mlp_flags(sub, mf);
  }

  // subgroup
  auto* subgroup = app.add_subcommand("subgroup", "per-subgroup mean score and attack accuracy");
  subgroup->add_option("--metric", metric, "shapr or sprs")->check(CLI::IsMember({"shapr", "sprs"}))->capture_default_str();
  subgroup->add_option("--model", model_path, "target model")->required();
  subgroup->add_option("--train", train_dir, "training dataset directory")->required();
  subgroup->add_option("--test", test_dir, "test dataset directory")->required();
  subgroup->add_option("--out", out_path, "report CSV")->required();

  // bench-loo
  auto* bench = app.add_subcommand("bench-loo", "time SHAPr against naive leave-one-out");
  std::size_t bench_n = 100;
  bench->add_option("--train", train_dir, "training dataset directory")->required();
  bench->add_option("--test", test_dir, "test dataset directory")->required();
  bench->add_option("--n", bench_n, "training records to use")->capture_default_str();
  bench->add_option("--out", out_path, "timing CSV")->required();
  add_mlp_flags(bench, mf);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e, out, err);
    err << e.what() << '\n' << kUsage;
    return 1;
  }

  try {
    if (synth->parsed()) {
      Dataset ds = [&] {
        if (kind == "blobs") return gaussian_blobs(n_per_class, n_classes, n_features, separation, g.seed);
        if (kind == "two-group") return two_group_blobs(n_per_class, n_features, separation, noise, g.seed);
        return with_memorization_structure(gaussian_blobs(n_per_class, n_classes, n_features, separation, g.seed),
                                           dup, outliers, g.seed)
            .data;
      }();
      const Split split = split_balanced(ds, g.seed);
      io::write_dataset(fs::path(out_path) / "train", split.train);
      io::write_dataset(fs::path(out_path) / "test", split.test);
      out << "train " << split.train.size() << " test " << split.test.size() << '\n';
    } else if (train->parsed()) {
      const Dataset ds = io::read_dataset(train_dir);
      const TrainResult r = train_mlp_with_history(mlp_config(mf, g, ds.n_classes()), ds);
      io::write_model(out_path, r.model);
      out << "final_loss " << io::format_number(r.epoch_losses.back()) << " train_accuracy "
          << io::format_number(accuracy(r.model, ds)) << '\n';
    } else if (score->parsed()) {
      const Dataset tr = io::read_dataset(train_dir);
      const Dataset te = io::read_dataset(test_dir);
      require_same_classes(tr, te);
      ScoreVector s;
      if (metric == "loo") {
        LooOptions o;
        o.cap = loo_cap;
        o.threads = g.threads;
        s = naive_loo_scores(mlp_config(mf, g, tr.n_classes()), tr, te, o).scores;
      } else {
        require(!model_path.empty(), ErrorCode::kInvalidArgument, "--model is required for " + metric);
        const Model m = io::read_model(model_path);
        if (metric == "shapr") {
          s = shapr_scores(m, tr, te, shapr_options(g));
        } else {
          SprsOptions o;
          o.n_bins = bins;
          s = sprs_scores(m, tr, te, o);
        }
      }
      io::write_scores(out_path, s);
      if (!hist_path.empty()) {
        std::ostringstream os;
        io::write_histogram_csv(os, io::score_histogram(s));
        write_csv(hist_path, os.str());
      }
      const auto flagged = classify_members(s);
      out << metric << " mean " << io::format_number(s.mean()) << " flagged "
          << std::count(flagged.begin(), flagged.end(), true) << " of " << s.size() << '\n';
    } else if (attack->parsed()) {
      const Dataset tr = io::read_dataset(train_dir);
      const Dataset te = io::read_dataset(test_dir);
      require_same_classes(tr, te);
      const Model m = io::read_model(model_path);
      AttackOutcome o;
      if (which == "iment") {
        o = run_iment(m, tr, te);
      } else {
        LiraOptions lo;
        lo.shadows = shadows;
        lo.threads = g.threads;
        o = run_lira(m, tr, te, mlp_config(mf, g, tr.n_classes()), g.seed, lo);
      }
      std::optional<double> acc;
      if (tr.size() == te.size()) acc = balanced_attack_accuracy(o);
      io::write_attack(out_path, o, acc);
      out << which << " attack_accuracy "
          << io::format_number(attack_accuracy(o.member_predictions, o.nonmember_predictions)) << '\n';
    } else if (evaluate->parsed()) {
      const ScoreVector s = io::read_scores(scores_path);
      const AttackOutcome o = io::read_attack(attack_dir);
      require(s.size() == o.member_predictions.size(), ErrorCode::kLengthMismatch,
              "score file has " + std::to_string(s.size()) + " records, attack has " +
                  std::to_string(o.member_predictions.size()));
      const EffectivenessReport r = effectiveness(classify_members(s), o.member_predictions);
      std::ostringstream os;
      os << "metric,attack,precision,recall,f1,n_positive_truth,n_positive_pred\n"
         << metric_name(s.metric_id) << ',' << attack_name(o.attack_id) << ',' << io::format_number(r.precision)
         << ',' << io::format_number(r.recall) << ',' << io::format_number(r.f1) << ',' << r.n_positive_truth << ','
         << r.n_positive_pred << '\n';
      write_csv(out_path, os.str());
      out << os.str();
    } else if (sweep->parsed() || remove->parsed() || noisy->parsed()) {
      const Dataset tr = io::read_dataset(train_dir);
      const Dataset te = io::read_dataset(test_dir);
      require_same_classes(tr, te);
      DriverConfig cfg;
      cfg.mlp = mlp_config(mf, g, tr.n_classes());
      cfg.shapr = shapr_options(g);
      cfg.seed = g.seed;
      cfg.threads = g.threads;
      const ExperimentSeries s = sweep->parsed()    ? regularization_sweep(cfg, tr, te, knobs)
                                 : remove->parsed() ? removal_experiment(cfg, tr, te, knobs)
                                                    : noise_experiment(cfg, tr, te, knobs);
      const std::string csv = series_csv(s);
      write_csv(out_path, csv);
      out << csv;
      if (noisy->parsed()) {
        out << "correlation " << (s.correlation ? io::format_number(*s.correlation) : std::string("undefined")) << '\n';
      }
    } else if (subgroup->parsed()) {
      const Dataset tr = io::read_dataset(train_dir);
      const Dataset te = io::read_dataset(test_dir);
      require_same_classes(tr, te);
      const Model m = io::read_model(model_path);
      const ScoreVector s = metric == "shapr" ? shapr_scores(m, tr, te, shapr_options(g)) : sprs_scores(m, tr, te);
      const SubgroupReport r = subgroup_report(s, run_iment(m, tr, te), tr, te);
      std::ostringstream os;
      os << "group,name,n_train,n_test,mean_score,attack_accuracy\n";
      for (const GroupSummary& gs : r.groups) {
        os << gs.code << ',' << gs.name << ',' << gs.n_train << ',' << gs.n_test << ','
           << io::format_number(gs.mean_score) << ',' << io::format_number(gs.attack_accuracy) << '\n';
      }
      write_csv(out_path, os.str());
      out << os.str();
      if (r.direction_agrees) out << "direction_agrees " << (*r.direction_agrees ? "true" : "false") << '\n';
    } else if (bench->parsed()) {
      Dataset tr = io::read_dataset(train_dir);
      const Dataset te = io::read_dataset(test_dir);
      require_same_classes(tr, te);
      if (bench_n < tr.size()) {
        std::vector<std::size_t> head(bench_n);
        std::iota(head.begin(), head.end(), std::size_t{0});
        tr = tr.subset(head);
      }
      const MlpConfig cfg = mlp_config(mf, g, tr.n_classes());
      const auto start = std::chrono::steady_clock::now();
      const Model m = train_mlp(cfg, tr);
      (void)shapr_scores(m, tr, te, shapr_options(g));
      const double shapr_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      LooOptions lo;
      lo.threads = g.threads;
      const double loo_seconds = naive_loo_scores(cfg, tr, te, lo).seconds;
      std::ostringstream os;
      os << "method,n_records,seconds\n"
         << "shapr," << tr.size() << ',' << io::format_number(shapr_seconds) << '\n'
         << "loo," << tr.size() << ',' << io::format_number(loo_seconds) << '\n';
      write_csv(out_path, os.str());
      out << os.str() << "speedup " << io::format_number(loo_seconds / shapr_seconds) << '\n';
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace shapr::cli
