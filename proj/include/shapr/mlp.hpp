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

// Fully connected tanh network with a softmax head, trained by mini-batch
// SGD on cross-entropy plus an L2 penalty l2_lambda * ||theta||^2 over all
// weights and biases. Everything is seeded and single-threaded, so the same
// (config, data) pair always yields a bit-identical model.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "shapr/core_data.hpp"
#include "shapr/error.hpp"
#include "shapr/random.hpp"

namespace shapr {

struct MlpConfig {
  std::vector<std::size_t> layer_widths;  // hidden widths then n_classes
  double learning_rate = 0.05;
  std::size_t epochs = 50;
  std::size_t batch_size = 32;
  double l2_lambda = 0.0;
  std::uint64_t seed = 0;

  static MlpConfig desk(int n_classes) {
    MlpConfig cfg;
    cfg.layer_widths = {64, 32, static_cast<std::size_t>(n_classes)};
    return cfg;
  }

  static MlpConfig full_scale(int n_classes) {
    MlpConfig cfg;
    cfg.layer_widths = {1024, 512, 256, 128, static_cast<std::size_t>(n_classes)};
    return cfg;
  }

  void validate(int n_classes) const {
    require(!layer_widths.empty(), ErrorCode::kInvalidArgument, "no layers configured");
    for (std::size_t w : layer_widths) {
      require(w >= 1, ErrorCode::kInvalidArgument, "layer widths must be >= 1");
    }
    require(layer_widths.back() == static_cast<std::size_t>(n_classes),
            ErrorCode::kDimensionMismatch, "last layer width must equal n_classes");
    require(learning_rate > 0.0 && std::isfinite(learning_rate), ErrorCode::kInvalidArgument,
            "learning rate must be positive");
    require(epochs >= 1, ErrorCode::kInvalidArgument, "epochs must be positive");
    require(batch_size >= 1, ErrorCode::kInvalidArgument, "batch size must be positive");
    require(l2_lambda >= 0.0 && std::isfinite(l2_lambda), ErrorCode::kInvalidArgument,
            "l2_lambda must be non-negative");
  }
};

struct Layer {
  Eigen::MatrixXd weights;  // out x in
  Eigen::VectorXd bias;     // out
};

class Model {
 public:
  Model() = default;

  Model(std::size_t n_features, std::vector<Layer> layers, MlpConfig config)
      : n_features_(n_features), layers_(std::move(layers)), config_(std::move(config)) {
    require(!layers_.empty(), ErrorCode::kInvalidArgument, "model has no layers");
    std::size_t fan_in = n_features_;
    for (const Layer& layer : layers_) {
      require(static_cast<std::size_t>(layer.weights.cols()) == fan_in,
              ErrorCode::kDimensionMismatch, "layer dimensions do not chain");
      require(layer.bias.size() == layer.weights.rows(), ErrorCode::kDimensionMismatch,
              "bias length differs from layer width");
      require(layer.weights.allFinite() && layer.bias.allFinite(), ErrorCode::kInvalidArgument,
              "non-finite model parameter");
      fan_in = static_cast<std::size_t>(layer.weights.rows());
    }
  }

  std::size_t n_features() const { return n_features_; }
  std::size_t n_layers() const { return layers_.size(); }
  std::size_t n_classes() const { return static_cast<std::size_t>(layers_.back().weights.rows()); }
  std::size_t layer_width(std::size_t l) const {
    return static_cast<std::size_t>(layers_.at(l).weights.rows());
  }
  const std::vector<Layer>& layers() const { return layers_; }
  const MlpConfig& config() const { return config_; }

  // The embedding layer the KNN surrogate uses unless told otherwise.
  std::size_t penultimate_layer() const { return n_layers() >= 2 ? n_layers() - 2 : 0; }

  bool operator==(const Model& other) const {
    if (n_features_ != other.n_features_ || layers_.size() != other.layers_.size()) return false;
    for (std::size_t l = 0; l < layers_.size(); ++l) {
      if (layers_[l].weights.rows() != other.layers_[l].weights.rows() ||
          layers_[l].weights.cols() != other.layers_[l].weights.cols() ||
          layers_[l].weights != other.layers_[l].weights ||
          layers_[l].bias != other.layers_[l].bias) {
        return false;
      }
    }
    return true;
  }

 private:
  std::size_t n_features_ = 0;
  std::vector<Layer> layers_;
  MlpConfig config_;
};

struct Gradients {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
};

struct LossAndGradients {
  double loss = 0.0;
  Gradients gradients;
};

struct TrainResult {
  Model model;
  std::vector<double> epoch_losses;
};

namespace detail {

inline void softmax_rows(RowMatrix& z) {
  for (Eigen::Index r = 0; r < z.rows(); ++r) {
    const double peak = z.row(r).maxCoeff();
    z.row(r) = (z.row(r).array() - peak).exp();
    z.row(r) /= z.row(r).sum();
  }
}

inline void check_width(const Model& m, Eigen::Index width) {
  require(static_cast<std::size_t>(width) == m.n_features(), ErrorCode::kDimensionMismatch,
          "input width " + std::to_string(width) + " does not match model input " +
              std::to_string(m.n_features()));
}

// activations[0] is the input; activations[l + 1] is layer l's output.
// logits receives the output layer's pre-softmax values.
inline std::vector<RowMatrix> forward(std::span<const Layer> layers, const RowMatrix& x,
                                      RowMatrix* logits = nullptr,
                                      std::size_t stop_after = static_cast<std::size_t>(-1)) {
  std::vector<RowMatrix> acts;
  acts.reserve(layers.size() + 1);
  acts.push_back(x);
  const std::size_t last = layers.size() - 1;
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Layer& layer = layers[l];
    RowMatrix z = acts.back() * layer.weights.transpose();
    z.rowwise() += layer.bias.transpose();
    if (l == last) {
      if (logits) *logits = z;
      softmax_rows(z);
    } else {
      z = z.array().tanh();
    }
    acts.push_back(std::move(z));
    if (l == stop_after) break;
  }
  return acts;
}

inline std::vector<RowMatrix> forward(const Model& m, const RowMatrix& x, RowMatrix* logits = nullptr,
                                      std::size_t stop_after = static_cast<std::size_t>(-1)) {
  check_width(m, x.cols());
  return forward(m.layers(), x, logits, stop_after);
}

// Mean cross-entropy over the rows of x via log-sum-exp on the logits.
inline double cross_entropy(const RowMatrix& logits, std::span<const Label> labels) {
  double total = 0.0;
  for (Eigen::Index r = 0; r < logits.rows(); ++r) {
    const double peak = logits.row(r).maxCoeff();
    const double lse = peak + std::log((logits.row(r).array() - peak).exp().sum());
    total += lse - logits(r, labels[static_cast<std::size_t>(r)]);
  }
  return total / static_cast<double>(logits.rows());
}

}  // namespace detail

inline double parameter_norm_sq(std::span<const Layer> layers) {
  double sum = 0.0;
  for (const Layer& layer : layers) {
    sum += layer.weights.squaredNorm() + layer.bias.squaredNorm();
  }
  return sum;
}

inline double parameter_norm_sq(const Model& m) { return parameter_norm_sq(m.layers()); }

// Weights and biases uniform in +-1/sqrt(fan_in).
inline Model init_mlp(const MlpConfig& cfg, std::size_t n_features) {
  require(n_features >= 1, ErrorCode::kInvalidArgument, "model needs at least one input feature");
  require(!cfg.layer_widths.empty(), ErrorCode::kInvalidArgument, "no layers configured");
  Rng rng = make_rng(cfg.seed, 0x1417);
  std::vector<Layer> layers;
  std::size_t fan_in = n_features;
  for (std::size_t width : cfg.layer_widths) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer layer{Eigen::MatrixXd(width, fan_in), Eigen::VectorXd(width)};
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        layer.weights(r, c) = uniform(rng, -bound, bound);
      }
    }
    for (Eigen::Index r = 0; r < layer.bias.size(); ++r) layer.bias(r) = uniform(rng, -bound, bound);
    layers.push_back(std::move(layer));
    fan_in = width;
  }
  return Model(n_features, std::move(layers), cfg);
}

namespace detail {

inline LossAndGradients loss_and_gradients(std::span<const Layer> layers, const RowMatrix& x,
                                           std::span<const Label> labels, double l2_lambda) {
  require(static_cast<std::size_t>(x.rows()) == labels.size(), ErrorCode::kLengthMismatch,
          "batch rows and labels differ");
  require(x.rows() > 0, ErrorCode::kInvalidArgument, "empty batch");
  RowMatrix logits;
  const std::vector<RowMatrix> acts = forward(layers, x, &logits);
  const auto batch = static_cast<double>(x.rows());
  const auto n_classes = layers.back().weights.rows();

  LossAndGradients out;
  out.loss = cross_entropy(logits, labels) + l2_lambda * parameter_norm_sq(layers);
  const std::size_t n_layers = layers.size();
  out.gradients.weights.resize(n_layers);
  out.gradients.biases.resize(n_layers);

  RowMatrix delta = acts.back();
  for (Eigen::Index r = 0; r < delta.rows(); ++r) {
    const Label y = labels[static_cast<std::size_t>(r)];
    require(y >= 0 && y < n_classes, ErrorCode::kOutOfRange, "label outside model classes");
    delta(r, y) -= 1.0;
  }
  delta /= batch;
  for (std::size_t l = n_layers; l-- > 0;) {
    const Layer& layer = layers[l];
    out.gradients.weights[l] = delta.transpose() * acts[l] + 2.0 * l2_lambda * layer.weights;
    out.gradients.biases[l] = delta.colwise().sum().transpose() + 2.0 * l2_lambda * layer.bias;
    if (l > 0) {
      RowMatrix upstream = delta * layer.weights;
      delta = upstream.array() * (1.0 - acts[l].array().square());
    }
  }
  return out;
}

}  // namespace detail

// Objective value (mean cross-entropy + L2 term) and its gradient with
// respect to every parameter.
inline LossAndGradients loss_and_gradients(const Model& m, const RowMatrix& x,
                                           std::span<const Label> labels, double l2_lambda) {
  detail::check_width(m, x.cols());
  return detail::loss_and_gradients(m.layers(), x, labels, l2_lambda);
}

inline TrainResult train_mlp_with_history(const MlpConfig& cfg, const Dataset& train) {
  require(!train.empty(), ErrorCode::kInvalidArgument, "training set is empty");
  cfg.validate(train.n_classes());
  Model model = init_mlp(cfg, train.n_features());
  std::vector<Layer> layers = model.layers();
  Rng order_rng = make_rng(cfg.seed, 0x0bd3);
  const std::size_t n = train.size();
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;

  TrainResult result;
  result.epoch_losses.reserve(cfg.epochs);
  RowMatrix batch_x;
  std::vector<Label> batch_y;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), order_rng);
    double epoch_loss = 0.0;
    std::size_t n_batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size) {
      const std::size_t end = std::min(n, start + cfg.batch_size);
      batch_x.resize(static_cast<Eigen::Index>(end - start), train.features().cols());
      batch_y.clear();
      for (std::size_t k = start; k < end; ++k) {
        batch_x.row(static_cast<Eigen::Index>(k - start)) =
            train.features().row(static_cast<Eigen::Index>(order[k]));
        batch_y.push_back(train.label(order[k]));
      }
      const LossAndGradients step =
          detail::loss_and_gradients(layers, batch_x, batch_y, cfg.l2_lambda);
      if (!std::isfinite(step.loss)) {
        std::ostringstream msg;
        msg << "non-finite loss at epoch " << epoch << " with learning rate " << cfg.learning_rate;
        fail(ErrorCode::kDivergence, msg.str());
      }
      for (std::size_t l = 0; l < layers.size(); ++l) {
        layers[l].weights -= cfg.learning_rate * step.gradients.weights[l];
        layers[l].bias -= cfg.learning_rate * step.gradients.biases[l];
      }
      epoch_loss += step.loss;
      ++n_batches;
    }
    result.epoch_losses.push_back(epoch_loss / static_cast<double>(n_batches));
  }
  for (const Layer& layer : layers) {
    if (!layer.weights.allFinite() || !layer.bias.allFinite()) {
      std::ostringstream msg;
      msg << "parameters diverged with learning rate " << cfg.learning_rate;
      fail(ErrorCode::kDivergence, msg.str());
    }
  }
  result.model = Model(train.n_features(), std::move(layers), cfg);
  return result;
}

inline Model train_mlp(const MlpConfig& cfg, const Dataset& train) {
  return train_mlp_with_history(cfg, train).model;
}

inline RowMatrix predict_proba_batch(const Model& m, const RowMatrix& x) {
  return detail::forward(m, x).back();
}

inline Vector predict_proba(const Model& m, const Vector& x) {
  RowMatrix row = x.transpose();
  return predict_proba_batch(m, row).row(0).transpose();
}

// Post-activation output of layer `layer_index`; the last layer yields the
// softmax probabilities.
inline RowMatrix embed_batch(const Model& m, const RowMatrix& x, std::size_t layer_index) {
  require(layer_index < m.n_layers(), ErrorCode::kOutOfRange,
          "layer index " + std::to_string(layer_index) + " out of range");
  return detail::forward(m, x, nullptr, layer_index).back();
}

inline Vector embed(const Model& m, const Vector& x, std::size_t layer_index) {
  RowMatrix row = x.transpose();
  return embed_batch(m, row, layer_index).row(0).transpose();
}

inline double accuracy(const Model& m, const Dataset& ds) {
  if (ds.empty()) return 0.0;
  const RowMatrix probs = predict_proba_batch(m, ds.features());
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    Eigen::Index arg = 0;
    probs.row(static_cast<Eigen::Index>(i)).maxCoeff(&arg);
    if (arg == ds.label(i)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// d(cross-entropy)/dx for a single record.
inline Vector input_gradient(const Model& m, const Vector& x, Label y) {
  detail::check_width(m, x.size());
  require(y >= 0 && static_cast<std::size_t>(y) < m.n_classes(), ErrorCode::kOutOfRange,
          "label outside model classes");
  RowMatrix row = x.transpose();
  const std::vector<RowMatrix> acts = detail::forward(m, row);
  RowMatrix delta = acts.back();
  delta(0, y) -= 1.0;
  for (std::size_t l = m.n_layers(); l-- > 0;) {
    RowMatrix upstream = delta * m.layers()[l].weights;
    if (l == 0) return upstream.row(0).transpose();
    delta = upstream.array() * (1.0 - acts[l].array().square());
  }
  return {};
}

// x + epsilon * sign(grad), with sign(0) = 0.
inline Vector fgsm_perturb(const Model& m, const Vector& x, Label y, double epsilon) {
  require(epsilon >= 0.0, ErrorCode::kInvalidArgument, "epsilon must be non-negative");
  const Vector grad = input_gradient(m, x, y);
  Vector out = x;
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (grad(i) > 0.0) {
      out(i) += epsilon;
    } else if (grad(i) < 0.0) {
      out(i) -= epsilon;
    }
  }
  return out;
}

}  // namespace shapr
