/**
 * Copyright 2026 The HetSL Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 * http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#ifndef HETSL_LAYERS_HPP_
#define HETSL_LAYERS_HPP_

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tensor.hpp"

namespace hetsl {

enum class Mode { kTrain, kEval };

enum class LayerKind { kConv2D, kBatchNorm, kAvgPool, kConvLSTM, kFullyConnected, kReLU };

std::string_view layer_kind_name(LayerKind kind);

/// Static description of one layer. `in_channels`/`out_channels` double as
/// input dimension / unit count for fully connected layers.
struct LayerSpec {
  LayerKind kind = LayerKind::kReLU;
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t kernel = 3;
  std::size_t pool = 2;

  static LayerSpec conv2d(std::size_t in, std::size_t filters, std::size_t kernel = 3) {
    return {LayerKind::kConv2D, in, filters, kernel, 0};
  }
  static LayerSpec batch_norm(std::size_t channels) {
    return {LayerKind::kBatchNorm, channels, channels, 0, 0};
  }
  static LayerSpec avg_pool(std::size_t channels, std::size_t window = 2) {
    return {LayerKind::kAvgPool, channels, channels, 0, window};
  }
  static LayerSpec conv_lstm(std::size_t in, std::size_t hidden, std::size_t kernel = 3) {
    return {LayerKind::kConvLSTM, in, hidden, kernel, 0};
  }
  static LayerSpec fully_connected(std::size_t in, std::size_t units) {
    return {LayerKind::kFullyConnected, in, units, 0, 0};
  }
  static LayerSpec relu(std::size_t width) {
    return {LayerKind::kReLU, width, width, 0, 0};
  }
};

// Per-sample shape transfer: [T, C, H, W] for spatial layers, [D] for
// fully connected / ReLU. Throws kShape on mismatch.
Shape output_shape(const LayerSpec &spec, const Shape &input);

struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;

  Parameter() = default;
  Parameter(std::string n, Tensor v)
      : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
  void zero_grad() { grad.fill(0.0); }
};

struct NamedTensorRef {
  std::string name;
  Tensor *tensor;
};

class Layer {
 public:
  virtual ~Layer() = default;

  virtual const LayerSpec &spec() const = 0;
  virtual Tensor forward(const Tensor &input, Mode mode) = 0;
  // Accumulates parameter gradients and returns d(loss)/d(input).
  virtual Tensor backward(const Tensor &grad_output) = 0;
  virtual std::vector<Parameter *> parameters() { return {}; }
  // Non-trainable state that must survive checkpointing.
  virtual std::vector<NamedTensorRef> buffers() { return {}; }
};

class Conv2D final : public Layer {
 public:
  Conv2D() = default;
  Conv2D(std::size_t in_channels, std::size_t filters, std::size_t kernel = 3);

  void init_glorot(std::mt19937_64 &rng);
  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;
  std::vector<Parameter *> parameters() override { return {&weight_, &bias_}; }

  Parameter &weight() { return weight_; }
  Parameter &bias() { return bias_; }

 private:
  LayerSpec spec_;
  Parameter weight_;  // [filters, in, k, k]
  Parameter bias_;    // [filters]
  Tensor input_;
};

/// Per-channel normalization over batch, time and spatial axes.
class BatchNorm final : public Layer {
 public:
  static constexpr double kEpsilon = 1e-5;
  static constexpr double kMomentum = 0.1;

  BatchNorm() = default;
  explicit BatchNorm(std::size_t channels);

  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;
  std::vector<Parameter *> parameters() override { return {&gamma_, &beta_}; }
  std::vector<NamedTensorRef> buffers() override {
    return {{"running_mean", &running_mean_}, {"running_var", &running_var_}};
  }

  Parameter &gamma() { return gamma_; }
  Parameter &beta() { return beta_; }
  Tensor &running_mean() { return running_mean_; }
  Tensor &running_var() { return running_var_; }

 private:
  LayerSpec spec_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
  Mode last_mode_ = Mode::kEval;
  Tensor normalized_;           // cached x_hat
  std::vector<double> inv_std_;  // per channel
};

class AvgPool final : public Layer {
 public:
  AvgPool() = default;
  AvgPool(std::size_t channels, std::size_t window);

  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;

 private:
  LayerSpec spec_;
  Shape input_shape_;
};

/// Convolutional LSTM returning the full hidden-state sequence.
/// Gate order in the fused weight is input, forget, output, candidate.
class ConvLSTM final : public Layer {
 public:
  ConvLSTM() = default;
  ConvLSTM(std::size_t in_channels, std::size_t hidden_channels, std::size_t kernel = 3);

  void init_glorot(std::mt19937_64 &rng);
  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;
  std::vector<Parameter *> parameters() override { return {&weight_, &bias_}; }

  Parameter &weight() { return weight_; }
  Parameter &bias() { return bias_; }

 private:
  LayerSpec spec_;
  Parameter weight_;  // [4*hidden, in+hidden, k, k]
  Parameter bias_;    // [4*hidden]
  Shape input_shape_;
  // Per time step caches, each laid out [batch, channels, H, W].
  std::vector<std::vector<double>> stacked_;  // [x_t, h_{t-1}]
  std::vector<std::vector<double>> gates_;    // post-activation i, f, o, g
  std::vector<std::vector<double>> cells_;    // c_t
};

class Dense final : public Layer {
 public:
  Dense() = default;
  Dense(std::size_t inputs, std::size_t units);

  void init_glorot(std::mt19937_64 &rng);
  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;
  std::vector<Parameter *> parameters() override { return {&weight_, &bias_}; }

  Parameter &weight() { return weight_; }
  Parameter &bias() { return bias_; }

 private:
  LayerSpec spec_;
  Parameter weight_;  // [units, inputs]
  Parameter bias_;    // [units]
  Tensor input_;
};

class ReLU final : public Layer {
 public:
  ReLU() = default;
  explicit ReLU(std::size_t width) : spec_(LayerSpec::relu(width)) {}

  const LayerSpec &spec() const override { return spec_; }
  Tensor forward(const Tensor &input, Mode mode) override;
  Tensor backward(const Tensor &grad_output) override;

 private:
  LayerSpec spec_;
  Tensor input_;
};

}  // namespace hetsl

#endif  // HETSL_LAYERS_HPP_
