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

#include <cmath>

#include "shapr/mlp.hpp"
#include "shapr/synth.hpp"
#include "support/fixtures.hpp"

namespace shapr {
namespace {

using testing::relative_error;

MlpConfig small_config(std::uint64_t seed = 42) {
  MlpConfig cfg;
  cfg.layer_widths = {6, 4, 3};
  cfg.seed = seed;
  return cfg;
}

Vector random_vector(Rng& rng, Eigen::Index n) {
  Vector v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = standard_normal(rng);
  return v;
}

TEST(MlpConfig, Validation) {
  MlpConfig cfg = MlpConfig::desk(3);
  EXPECT_NO_THROW(cfg.validate(3));
  EXPECT_SHAPR_ERROR(cfg.validate(2), ErrorCode::kDimensionMismatch);
  cfg.layer_widths = {4, 0, 3};
  EXPECT_SHAPR_ERROR(cfg.validate(3), ErrorCode::kInvalidArgument);
  cfg = MlpConfig::desk(2);
  cfg.learning_rate = 0.0;
  EXPECT_SHAPR_ERROR(cfg.validate(2), ErrorCode::kInvalidArgument);
  cfg = MlpConfig::desk(2);
  cfg.l2_lambda = -1.0;
  EXPECT_SHAPR_ERROR(cfg.validate(2), ErrorCode::kInvalidArgument);
  EXPECT_EQ(MlpConfig::full_scale(10).layer_widths.back(), 10u);
}

TEST(Model, ShapeChecks) {
  EXPECT_SHAPR_ERROR(Model(3, {Layer{Eigen::MatrixXd::Zero(2, 4), Eigen::VectorXd::Zero(2)}}, {}),
                     ErrorCode::kDimensionMismatch);
  EXPECT_SHAPR_ERROR(Model(3, {Layer{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(3)}}, {}),
                     ErrorCode::kDimensionMismatch);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(2, 3);
  w(0, 0) = std::nan("");
  EXPECT_SHAPR_ERROR(Model(3, {Layer{w, Eigen::VectorXd::Zero(2)}}, {}), ErrorCode::kInvalidArgument);
}

TEST(InitMlp, ChainsAndBounds) {
  const Model m = init_mlp(small_config(), 5);
  ASSERT_EQ(m.n_layers(), 3u);
  EXPECT_EQ(m.layers()[0].weights.cols(), 5);
  EXPECT_EQ(m.layers()[1].weights.cols(), 6);
  EXPECT_EQ(m.n_classes(), 3u);
  EXPECT_LE(m.layers()[0].weights.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(5.0));
  EXPECT_LE(m.layers()[2].bias.cwiseAbs().maxCoeff(), 1.0 / std::sqrt(4.0));
  EXPECT_EQ(m.penultimate_layer(), 1u);
}

TEST(TrainMlp, DeterministicForSameConfig) {
  const Dataset ds = gaussian_blobs(20, 3, 4, 2.0, 1);
  MlpConfig cfg = small_config();
  cfg.epochs = 5;
  EXPECT_TRUE(train_mlp(cfg, ds) == train_mlp(cfg, ds));
  MlpConfig reseeded = cfg;
  reseeded.seed = 43;
  EXPECT_FALSE(train_mlp(cfg, ds) == train_mlp(reseeded, ds));
}

TEST(TrainMlp, SeparableBlobsReachHighTrainingAccuracy) {
  const Dataset ds = gaussian_blobs(100, 2, 2, 4.0, 3);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 50;
  EXPECT_GE(accuracy(train_mlp(cfg, ds), ds), 0.95);
}

TEST(TrainMlp, L2ShrinksParameters) {
  const Dataset ds = gaussian_blobs(50, 2, 4, 2.0, 4);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 50;
  cfg.learning_rate = 0.01;
  const double free_norm = parameter_norm_sq(train_mlp(cfg, ds));
  cfg.l2_lambda = 10.0;
  EXPECT_LT(parameter_norm_sq(train_mlp(cfg, ds)), free_norm);
}

TEST(TrainMlp, MemorizesSingleRecord) {
  RowMatrix x(1, 3);
  x << 0.3, -1.2, 0.7;
  const Dataset ds(x, {1}, 2);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.epochs = 2000;
  cfg.learning_rate = 0.1;
  const TrainResult r = train_mlp_with_history(cfg, ds);
  EXPECT_LE(r.epoch_losses.back(), 1e-3);
  EXPECT_EQ(r.epoch_losses.size(), 2000u);
}

TEST(TrainMlp, DivergenceIsReported) {
  const Dataset ds = gaussian_blobs(20, 2, 4, 2.0, 5);
  MlpConfig cfg = MlpConfig::desk(2);
  cfg.learning_rate = 1e300;
  cfg.epochs = 3;
  EXPECT_SHAPR_ERROR((void)train_mlp(cfg, ds), ErrorCode::kDivergence);
}

TEST(TrainMlp, RejectsEmptyAndMismatchedData) {
  const Dataset empty(RowMatrix(0, 3), {}, 2);
  EXPECT_SHAPR_ERROR((void)train_mlp(MlpConfig::desk(2), empty), ErrorCode::kInvalidArgument);
  const Dataset three = gaussian_blobs(5, 3, 3, 1.0, 0);
  EXPECT_SHAPR_ERROR((void)train_mlp(MlpConfig::desk(2), three), ErrorCode::kDimensionMismatch);
}

TEST(PredictProba, SumsToOne) {
  const Model m = init_mlp(small_config(), 5);
  Rng rng = make_rng(1);
  for (int i = 0; i < 20; ++i) {
    const Vector p = predict_proba(m, 10.0 * random_vector(rng, 5));
    EXPECT_NEAR(p.sum(), 1.0, 1e-6);
    EXPECT_GE(p.minCoeff(), 0.0);
  }
}

TEST(PredictProba, ZeroWeightsGiveUniform) {
  std::vector<Layer> layers = {Layer{Eigen::MatrixXd::Zero(4, 3), Eigen::VectorXd::Zero(4)},
                               Layer{Eigen::MatrixXd::Zero(5, 4), Eigen::VectorXd::Zero(5)}};
  const Model m(3, layers, {});
  const Vector p = predict_proba(m, Vector::Constant(3, 2.5));
  for (Eigen::Index c = 0; c < 5; ++c) EXPECT_DOUBLE_EQ(p(c), 0.2);
}

TEST(PredictProba, RepeatableAndPure) {
  const Model m = init_mlp(small_config(42), 5);
  const Model copy = m;
  const Vector x = Vector::LinSpaced(5, -1.0, 1.0);
  const Vector a = predict_proba(m, x);
  const Vector b = predict_proba(m, x);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(m == copy);
  EXPECT_SHAPR_ERROR((void)predict_proba(m, Vector::Zero(4)), ErrorCode::kDimensionMismatch);
}

TEST(Embed, ShapesAndLastLayer) {
  const Model m = init_mlp(small_config(), 5);
  const Vector x = Vector::LinSpaced(5, 0.0, 1.0);
  EXPECT_EQ(embed(m, x, 0).size(), 6);
  EXPECT_EQ(embed(m, x, 1).size(), 4);
  const Vector last = embed(m, x, 2);
  EXPECT_TRUE(last.isApprox(predict_proba(m, x), 1e-15));
  EXPECT_EQ(embed(m, x, m.penultimate_layer()), embed(m, x, m.penultimate_layer()));
  EXPECT_SHAPR_ERROR((void)embed(m, x, 3), ErrorCode::kOutOfRange);
  RowMatrix batch(2, 5);
  batch.row(0) = x.transpose();
  batch.row(1) = x.transpose();
  const RowMatrix e = embed_batch(m, batch, 1);
  EXPECT_EQ(e.row(0), e.row(1));
}

TEST(Gradients, InputGradientMatchesFiniteDifferences) {
  const Model m = init_mlp(small_config(7), 5);
  Rng rng = make_rng(17);
  const double h = 1e-5;
  double worst = 0.0;
  for (int probe = 0; probe < 10; ++probe) {
    const Vector x = random_vector(rng, 5);
    const auto y = static_cast<Label>(uniform_index(rng, 3));
    const Vector g = input_gradient(m, x, y);
    ASSERT_EQ(g.size(), 5);
    for (Eigen::Index i = 0; i < 5; ++i) {
      Vector xp = x;
      Vector xm = x;
      xp(i) += h;
      xm(i) -= h;
      const double fp = -std::log(predict_proba(m, xp)(y));
      const double fm = -std::log(predict_proba(m, xm)(y));
      worst = std::max(worst, relative_error(g(i), (fp - fm) / (2 * h)));
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradients, ParameterGradientMatchesFiniteDifferences) {
  const Model m = init_mlp(small_config(8), 4);
  Rng rng = make_rng(18);
  RowMatrix x(6, 4);
  for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = standard_normal(rng);
  const std::vector<Label> y = {0, 1, 2, 1, 0, 2};
  const double l2 = 0.3;
  const LossAndGradients lg = loss_and_gradients(m, x, y, l2);
  const double h = 1e-5;
  double worst = 0.0;
  for (int probe = 0; probe < 10; ++probe) {
    const std::size_t l = uniform_index(rng, m.n_layers());
    std::vector<Layer> plus = m.layers();
    std::vector<Layer> minus = m.layers();
    double analytic = 0.0;
    if (probe % 2 == 0) {
      const auto r = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(plus[l].weights.rows())));
      const auto c = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(plus[l].weights.cols())));
      plus[l].weights(r, c) += h;
      minus[l].weights(r, c) -= h;
      analytic = lg.gradients.weights[l](r, c);
    } else {
      const auto r = static_cast<Eigen::Index>(uniform_index(rng, static_cast<std::uint64_t>(plus[l].bias.size())));
      plus[l].bias(r) += h;
      minus[l].bias(r) -= h;
      analytic = lg.gradients.biases[l](r);
    }
    const double fp = loss_and_gradients(Model(4, plus, m.config()), x, y, l2).loss;
    const double fm = loss_and_gradients(Model(4, minus, m.config()), x, y, l2).loss;
    worst = std::max(worst, relative_error(analytic, (fp - fm) / (2 * h)));
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Gradients, DeterministicAcrossCopies) {
  const Model a = init_mlp(small_config(3), 5);
  const Model b = init_mlp(small_config(3), 5);
  const Vector x = Vector::LinSpaced(5, -2.0, 2.0);
  EXPECT_EQ(input_gradient(a, x, 1), input_gradient(b, x, 1));
  EXPECT_SHAPR_ERROR((void)input_gradient(a, x, 3), ErrorCode::kOutOfRange);
}

TEST(Fgsm, ZeroEpsilonIsIdentity) {
  const Model m = init_mlp(small_config(), 5);
  const Vector x = Vector::LinSpaced(5, -1.0, 1.0);
  EXPECT_EQ(fgsm_perturb(m, x, 0, 0.0), x);
  EXPECT_SHAPR_ERROR((void)fgsm_perturb(m, x, 0, -0.1), ErrorCode::kInvalidArgument);
}

TEST(Fgsm, StepIsSignOfGradient) {
  const Model m = init_mlp(small_config(), 5);
  Rng rng = make_rng(2);
  for (double eps : {1.0 / 255.0, 0.1, 1.5}) {
    const Vector x = random_vector(rng, 5);
    const Vector g = input_gradient(m, x, 2);
    const Vector out = fgsm_perturb(m, x, 2, eps);
    EXPECT_LE((out - x).cwiseAbs().maxCoeff(), eps * (1.0 + 1e-12));
    for (Eigen::Index i = 0; i < 5; ++i) {
      const double expected = g(i) > 0 ? eps : (g(i) < 0 ? -eps : 0.0);
      EXPECT_EQ(out(i), x(i) + expected);
    }
  }
}

TEST(Fgsm, ZeroGradientCoordinatesStay) {
  std::vector<Layer> layers = {Layer{Eigen::MatrixXd::Zero(2, 3), Eigen::VectorXd::Zero(2)},
                               Layer{Eigen::MatrixXd::Ones(2, 2), Eigen::VectorXd::Zero(2)}};
  layers[0].weights(0, 0) = 1.0;
  layers[1].weights(0, 0) = 2.0;
  const Model m(3, layers, {});
  const Vector x = Vector::Zero(3);
  const Vector out = fgsm_perturb(m, x, 1, 1.0 / 255.0);
  EXPECT_NE(out(0), 0.0);
  EXPECT_EQ(out(1), 0.0);
  EXPECT_EQ(out(2), 0.0);
}

}  // namespace
}  // namespace shapr
