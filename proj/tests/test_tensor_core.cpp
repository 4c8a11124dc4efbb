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

#include <cmath>
#include <random>

#include "adam.hpp"
#include "doctest.h"
#include "error.hpp"
#include "layers.hpp"
#include "model_shape.hpp"
#include "op_count.hpp"
#include "oracles.hpp"

using namespace hetsl;
using oracle::random_tensor;

namespace {

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

template <typename Fn>
ErrorCode code_of(Fn &&fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_SUITE("tensor") {
  TEST_CASE("tensor shape bookkeeping") {
    Tensor t({2, 3, 4});
    CHECK(t.size() == 24);
    CHECK(shape_size({2, 3, 4}) == 24);
    CHECK(code_of([] { Tensor bad({2, 2}, std::vector<double>(3)); }) == ErrorCode::kShape);
    CHECK(code_of([&] { t.reshape({5, 5}); }) == ErrorCode::kShape);
  }

  TEST_CASE("non-finite values are rejected") {
    Tensor t({2}, std::vector<double>{1.0, std::nan("")});
    CHECK(code_of([&] { require_finite(t, "test"); }) == ErrorCode::kNumeric);
  }
}

TEST_SUITE("conv2d") {
  TEST_CASE("full-width conv1 keeps the image size") {
    Conv2D conv(1, 64, 3);
    std::mt19937_64 rng(1);
    conv.init_glorot(rng);
    const Tensor out = conv.forward(random_tensor({1, 2, 1, 40, 40}, rng), Mode::kTrain);
    CHECK(out.shape() == Shape{1, 2, 64, 40, 40});
  }

  TEST_CASE("zero input and zero bias give zero output") {
    Conv2D conv(2, 3, 3);
    std::mt19937_64 rng(2);
    conv.init_glorot(rng);
    const Tensor out = conv.forward(Tensor({1, 1, 2, 5, 5}), Mode::kTrain);
    for (double v : out.values()) CHECK(v == 0.0);
  }

  TEST_CASE("hand convolution with zero padding") {
    Conv2D conv(1, 1, 3);
    conv.weight().value.fill(1.0);
    conv.bias().value.fill(0.0);
    const Tensor out = conv.forward(Tensor({1, 1, 1, 3, 3}, 1.0), Mode::kTrain);
    CHECK(out[4] == 9.0);
    CHECK(out[0] == 4.0);
    CHECK(out[2] == 4.0);
    CHECK(out[6] == 4.0);
    CHECK(out[8] == 4.0);
    CHECK(out[1] == 6.0);
  }

  TEST_CASE("convolution is linear in the input") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
      Conv2D conv(2, 3, 3);
      conv.init_glorot(rng);
      conv.bias().value.fill(0.0);
      const Tensor x = random_tensor({2, 2, 2, 6, 5}, rng);
      const Tensor y = random_tensor({2, 2, 2, 6, 5}, rng);
      const double alpha = 0.7, beta = -1.3;
      Tensor mix = x;
      for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = alpha * x[i] + beta * y[i];
      const Tensor fx = conv.forward(x, Mode::kTrain);
      const Tensor fy = conv.forward(y, Mode::kTrain);
      const Tensor fm = conv.forward(mix, Mode::kTrain);
      double worst = 0.0;
      for (std::size_t i = 0; i < fm.size(); ++i) {
        worst = std::max(worst, std::abs(fm[i] - (alpha * fx[i] + beta * fy[i])));
      }
      CHECK(worst < 1e-10);
    }
  }

  TEST_CASE("channel mismatch is a shape error") {
    Conv2D conv(2, 3, 3);
    CHECK(code_of([&] { conv.forward(Tensor({1, 1, 3, 4, 4}), Mode::kTrain); }) == ErrorCode::kShape);
  }
}

TEST_SUITE("batchnorm") {
  TEST_CASE("constant input normalizes to zero in train mode") {
    BatchNorm bn(2);
    const Tensor out = bn.forward(Tensor({3, 2, 2, 4, 4}, 5.0), Mode::kTrain);
    for (double v : out.values()) CHECK(std::abs(v) < 1e-12);
  }

  TEST_CASE("standardized input maps through the affine parameters") {
    std::mt19937_64 rng(4);
    Tensor x = random_tensor({4, 1, 1, 6, 6}, rng);
    double mean = 0.0, var = 0.0;
    for (double v : x.values()) mean += v;
    mean /= static_cast<double>(x.size());
    for (double v : x.values()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(x.size());
    for (double &v : x.values()) v = (v - mean) / std::sqrt(var);

    BatchNorm bn(1);
    bn.gamma().value.fill(2.0);
    bn.beta().value.fill(3.0);
    const Tensor out = bn.forward(x, Mode::kTrain);
    const double shrink = 1.0 / std::sqrt(1.0 + BatchNorm::kEpsilon);
    for (std::size_t i = 0; i < x.size(); ++i) {
      CHECK(out[i] == doctest::Approx(2.0 * x[i] * shrink + 3.0).epsilon(1e-12));
    }
  }

  TEST_CASE("eval mode with default statistics is the identity") {
    std::mt19937_64 rng(5);
    const Tensor x = random_tensor({2, 2, 3, 4, 4}, rng);
    BatchNorm bn(3);
    const Tensor out = bn.forward(x, Mode::kEval);
    const double shrink = 1.0 / std::sqrt(1.0 + BatchNorm::kEpsilon);
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(out[i] - x[i] * shrink) < 1e-12);
    CHECK(max_abs_diff(out, x) < 1e-5);
  }

  TEST_CASE("running statistics move only in train mode") {
    std::mt19937_64 rng(6);
    const Tensor x = random_tensor({2, 1, 2, 4, 4}, rng, 2.0, 3.0);
    BatchNorm bn(2);
    bn.forward(x, Mode::kEval);
    CHECK(bn.running_mean()[0] == 0.0);
    CHECK(bn.running_var()[0] == 1.0);
    bn.forward(x, Mode::kTrain);
    CHECK(bn.running_mean()[0] > 0.2);
    CHECK(bn.running_mean()[0] < 0.3);
  }
}

TEST_SUITE("avgpool") {
  TEST_CASE("halves the spatial size") {
    AvgPool pool(64, 2);
    const Tensor out = pool.forward(Tensor({1, 2, 64, 40, 40}), Mode::kTrain);
    CHECK(out.shape() == Shape{1, 2, 64, 20, 20});
  }

  TEST_CASE("constant input stays constant") {
    AvgPool pool(1, 2);
    const Tensor out = pool.forward(Tensor({1, 1, 1, 4, 4}, 7.5), Mode::kTrain);
    for (double v : out.values()) CHECK(v == 7.5);
  }

  TEST_CASE("window mean") {
    AvgPool pool(1, 2);
    const Tensor out = pool.forward(Tensor({1, 1, 1, 2, 2}, std::vector<double>{1, 2, 3, 4}), Mode::kTrain);
    CHECK(out[0] == 2.5);
  }

  TEST_CASE("odd spatial size is rejected") {
    AvgPool pool(1, 2);
    CHECK(code_of([&] { pool.forward(Tensor({1, 1, 1, 3, 4}), Mode::kTrain); }) == ErrorCode::kShape);
  }
}

TEST_SUITE("convlstm") {
  TEST_CASE("camera recurrent layer output shape") {
    ConvLSTM lstm(64, 1, 3);
    std::mt19937_64 rng(7);
    lstm.init_glorot(rng);
    const Tensor out = lstm.forward(random_tensor({1, 4, 64, 20, 20}, rng), Mode::kTrain);
    CHECK(out.shape() == Shape{1, 4, 1, 20, 20});
  }

  TEST_CASE("zero weights and zero input keep the hidden state at zero") {
    ConvLSTM lstm(2, 1, 3);
    lstm.weight().value.fill(0.0);
    lstm.bias().value.fill(0.0);
    const Tensor out = lstm.forward(Tensor({1, 3, 2, 4, 4}), Mode::kTrain);
    for (double v : out.values()) CHECK(v == 0.0);
  }

  TEST_CASE("single step matches a hand-evaluated cell") {
    ConvLSTM lstm(1, 1, 3);
    lstm.weight().value.fill(0.0);
    // Only the centre tap sees a 1x1 image; weight layout is [gate, in + hidden, k, k].
    const double wx[4] = {0.5, -0.3, 0.8, 1.2};
    const double bias[4] = {0.1, 1.0, -0.2, 0.05};
    for (int g = 0; g < 4; ++g) {
      lstm.weight().value[static_cast<std::size_t>(g) * 18 + 4] = wx[g];
      lstm.bias().value[static_cast<std::size_t>(g)] = bias[g];
    }
    const double x = 0.7;
    const Tensor out = lstm.forward(Tensor({1, 1, 1, 1, 1}, x), Mode::kTrain);
    const double i = sigmoid(wx[0] * x + bias[0]);
    const double o = sigmoid(wx[2] * x + bias[2]);
    const double g = std::tanh(wx[3] * x + bias[3]);
    const double c = i * g;
    CHECK(std::abs(out[0] - o * std::tanh(c)) < 1e-15);
  }
}

TEST_SUITE("dense") {
  TEST_CASE("fc1 width") {
    Dense fc(2400, 96);
    std::mt19937_64 rng(8);
    fc.init_glorot(rng);
    CHECK(fc.forward(random_tensor({3, 2400}, rng), Mode::kTrain).shape() == Shape{3, 96});
  }

  TEST_CASE("zero weights output the bias") {
    Dense fc(4, 2);
    fc.weight().value.fill(0.0);
    fc.bias().value = Tensor({2}, std::vector<double>{1.5, -2.0});
    const Tensor out = fc.forward(Tensor({1, 4}, 3.0), Mode::kTrain);
    CHECK(out[0] == 1.5);
    CHECK(out[1] == -2.0);
  }

  TEST_CASE("identity weights") {
    Dense fc(2, 2);
    fc.weight().value = Tensor({2, 2}, std::vector<double>{1, 0, 0, 1});
    fc.bias().value.fill(0.0);
    const Tensor out = fc.forward(Tensor({1, 2}, std::vector<double>{1, 2}), Mode::kTrain);
    CHECK(out[0] == 1.0);
    CHECK(out[1] == 2.0);
  }

  TEST_CASE("dimension mismatch is a shape error") {
    Dense fc(3, 2);
    CHECK(code_of([&] { fc.forward(Tensor({1, 4}), Mode::kTrain); }) == ErrorCode::kShape);
  }
}

TEST_SUITE("gradients") {
  TEST_CASE("backward before forward is a state error") {
    Conv2D conv(1, 1, 3);
    Dense fc(2, 2);
    ConvLSTM lstm(1, 1, 3);
    CHECK(code_of([&] { conv.backward(Tensor({1, 1, 1, 2, 2})); }) == ErrorCode::kState);
    CHECK(code_of([&] { fc.backward(Tensor({1, 2})); }) == ErrorCode::kState);
    CHECK(code_of([&] { lstm.backward(Tensor({1, 1, 1, 2, 2})); }) == ErrorCode::kState);
  }

  TEST_CASE("sum loss has an all-ones gradient through the identity") {
    ReLU relu(4);
    const Tensor x({1, 4}, std::vector<double>{1, 2, 3, 4});
    relu.forward(x, Mode::kTrain);
    const Tensor g = relu.backward(Tensor({1, 4}, 1.0));
    for (double v : g.values()) CHECK(v == 1.0);
  }

  TEST_CASE("squared error gradient") {
    Tensor grad;
    const double loss = mse_loss(Tensor({1, 1}, 3.0), Tensor({1}, 1.0), &grad);
    CHECK(loss == 4.0);
    CHECK(grad[0] == 4.0);
  }

  TEST_CASE("finite differences, every layer kind") {
    std::mt19937_64 rng(9);
    std::uniform_int_distribution<std::size_t> small(1, 3), side(2, 5);
    constexpr int kShapes = 20;
    double worst_conv = 0, worst_bn = 0, worst_pool = 0, worst_lstm = 0, worst_fc = 0, worst_relu = 0;
    for (int trial = 0; trial < kShapes; ++trial) {
      const std::size_t b = small(rng), t = small(rng), c = small(rng), o = small(rng);
      const std::size_t h = side(rng), w = side(rng);
      const std::size_t k = trial % 3 == 0 ? 1 : 3;

      Conv2D conv(c, o, k);
      conv.init_glorot(rng);
      worst_conv = std::max(worst_conv, oracle::gradient_check(conv, random_tensor({b, t, c, h, w}, rng), Mode::kTrain, rng));

      BatchNorm bn(c);
      bn.gamma().value = random_tensor({c}, rng, 0.5, 1.5);
      bn.beta().value = random_tensor({c}, rng);
      worst_bn = std::max(worst_bn, oracle::gradient_check(bn, random_tensor({b + 1, t, c, h, w}, rng), Mode::kTrain, rng));

      AvgPool pool(c, 2);
      worst_pool = std::max(worst_pool, oracle::gradient_check(pool, random_tensor({b, t, c, 2 * h, 2 * w}, rng), Mode::kTrain, rng));

      ConvLSTM lstm(c, o, k);
      lstm.init_glorot(rng);
      worst_lstm = std::max(worst_lstm, oracle::gradient_check(lstm, random_tensor({b, t + 1, c, h, w}, rng), Mode::kTrain, rng));

      Dense fc(c * h, o + 1);
      fc.init_glorot(rng);
      worst_fc = std::max(worst_fc, oracle::gradient_check(fc, random_tensor({b, c * h}, rng), Mode::kTrain, rng));

      // Keep inputs away from the kink.
      Tensor rx = random_tensor({b, c * h}, rng, 0.05, 1.0);
      for (std::size_t i = 0; i < rx.size(); i += 2) rx[i] = -rx[i];
      ReLU relu(c * h);
      worst_relu = std::max(worst_relu, oracle::gradient_check(relu, rx, Mode::kTrain, rng));
    }
    CHECK(worst_conv < 1e-4);
    CHECK(worst_bn < 1e-4);
    CHECK(worst_pool < 1e-4);
    CHECK(worst_lstm < 1e-4);
    CHECK(worst_fc < 1e-4);
    CHECK(worst_relu < 1e-4);
  }

  TEST_CASE("batch norm eval mode gradient") {
    std::mt19937_64 rng(10);
    BatchNorm bn(2);
    bn.running_mean() = random_tensor({2}, rng);
    bn.running_var() = random_tensor({2}, rng, 0.5, 2.0);
    CHECK(oracle::gradient_check(bn, random_tensor({2, 2, 2, 3, 3}, rng), Mode::kEval, rng) < 1e-4);
  }
}

TEST_SUITE("adam") {
  TEST_CASE("zero gradient leaves parameters unchanged") {
    Parameter p("w", Tensor({3}, std::vector<double>{1, -2, 3}));
    AdamState state;
    Parameter *ps[] = {&p};
    adam_step(ps, state);
    CHECK(p.value == Tensor({3}, std::vector<double>{1, -2, 3}));
    CHECK(state.step == 1);
  }

  TEST_CASE("first bias-corrected step moves by the learning rate") {
    Parameter p("w", Tensor({3}, std::vector<double>{0, 0, 0}));
    p.grad = Tensor({3}, std::vector<double>{0.3, -2.0, 1e-3});
    AdamState state;
    Parameter *ps[] = {&p};
    adam_step(ps, state);
    CHECK(p.value[0] == doctest::Approx(-1e-3).epsilon(1e-6));
    CHECK(p.value[1] == doctest::Approx(1e-3).epsilon(1e-6));
    CHECK(p.value[2] == doctest::Approx(-1e-3).epsilon(1e-4));
  }

  TEST_CASE("step counter increments and shapes are enforced") {
    Parameter p("w", Tensor({2}));
    AdamState state;
    Parameter *ps[] = {&p};
    for (int i = 0; i < 5; ++i) adam_step(ps, state);
    CHECK(state.step == 5);
    CHECK(state.first_moment.at(0).shape() == p.value.shape());
    p.value = Tensor({3});
    p.grad = Tensor({3});
    CHECK(code_of([&] { adam_step(ps, state); }) == ErrorCode::kShape);
  }

  TEST_CASE("identical seeds train to bitwise identical weights") {
    auto train = [](std::uint64_t seed) {
      std::mt19937_64 rng(seed);
      Dense fc(5, 3);
      fc.init_glorot(rng);
      AdamState state;
      for (int step = 0; step < 30; ++step) {
        const Tensor x = random_tensor({4, 5}, rng);
        auto params = fc.parameters();
        zero_grads(params);
        const Tensor y = fc.forward(x, Mode::kTrain);
        fc.backward(y);
        adam_step(params, state);
      }
      return fc.weight().value;
    };
    CHECK(train(11) == train(11));
    CHECK_FALSE(train(11) == train(12));
  }
}

TEST_SUITE("op counts") {
  TEST_CASE("fc1 under Disc and MmixAgg") {
    const LayerSpec fc = LayerSpec::fully_connected(2400, 96);
    const auto r = count_ops(std::span(&fc, 1), {2400});
    CHECK(r.total.params == 230496);
    CHECK(r.total.weights == 230400);
    CHECK(r.total.weights * 32 / 8 == 921600);
  }

  TEST_CASE("tiny dense layer") {
    const LayerSpec fc = LayerSpec::fully_connected(2, 1);
    const auto r = count_ops(std::span(&fc, 1), {2});
    CHECK(r.total.mults == 2);
    CHECK(r.total.adds == 2);
    CHECK(r.total.params == 3);
  }

  TEST_CASE("conv1 parameters") {
    const LayerSpec conv = LayerSpec::conv2d(1, 64, 3);
    const auto r = count_ops(std::span(&conv, 1), {2, 1, 40, 40});
    CHECK(r.total.params == 640);
    CHECK(r.total.mults == 2ull * 64 * 1600 * 9);
    CHECK(r.total.adds == 2ull * 64 * 1600 * 9);
  }

  TEST_CASE("camera stack shape law") {
    const ModelShape shape;
    const auto stack = camera_layer_specs(shape);
    for (std::size_t n : {2u, 4u}) {
      const auto r = count_ops(stack, {n, 1, 40, 40});
      CHECK(r.output_shape == Shape{n, 1, 20, 20});
    }
  }

  TEST_CASE("counts are additive over a split stack") {
    const ModelShape shape;
    const auto stack = camera_layer_specs(shape);
    const Shape input{4, 1, 40, 40};
    const auto whole = count_ops(stack, input);
    for (std::size_t cut = 0; cut <= stack.size(); ++cut) {
      const auto head = count_ops(std::span(stack).first(cut), input);
      const auto tail = count_ops(std::span(stack).subspan(cut), head.output_shape);
      CHECK(head.total + tail.total == whole.total);
    }
    OpCounts sum;
    for (const auto &l : whole.per_layer) sum += l;
    CHECK(sum == whole.total);
  }

  TEST_CASE("unresolvable shapes are rejected") {
    const LayerSpec conv = LayerSpec::conv2d(2, 4, 3);
    CHECK(code_of([&] { count_ops(std::span(&conv, 1), {1, 3, 8, 8}); }) == ErrorCode::kShape);
  }
}
