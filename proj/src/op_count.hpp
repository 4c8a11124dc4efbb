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

#ifndef HETSL_OP_COUNT_HPP_
#define HETSL_OP_COUNT_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "layers.hpp"

namespace hetsl {

/// Arithmetic and storage counts for one forward inference of one sample.
///
/// Conventions:
///  - Conv2D: each output element costs C_in*k^2 multiplies and C_in*k^2 - 1
///    adds plus one bias add. Zero-padded taps are counted like real taps.
///  - FullyConnected: per unit, D multiplies and D - 1 adds plus the bias add.
///  - ConvLSTM: the fused four-gate convolution per step (Conv2D rule over
///    C_in + C_hidden input channels) plus 3 multiplies and 1 add per hidden
///    element for the cell/hidden updates. Sigmoid/tanh evaluations are not
///    counted as adds or multiplies.
///  - BatchNorm: inference folds to one multiply and one add per element.
///  - AvgPool: window^2 - 1 adds and one multiply per output element.
///  - ReLU: free.
/// `params` includes biases; `weights` excludes them (BatchNorm beta is a bias).
struct OpCounts {
  std::uint64_t adds = 0;
  std::uint64_t mults = 0;
  std::uint64_t params = 0;
  std::uint64_t weights = 0;

  OpCounts &operator+=(const OpCounts &o) {
    adds += o.adds;
    mults += o.mults;
    params += o.params;
    weights += o.weights;
    return *this;
  }
  friend OpCounts operator+(OpCounts a, const OpCounts &b) { return a += b; }
  friend bool operator==(const OpCounts &, const OpCounts &) = default;
};

struct OpCountReport {
  std::vector<OpCounts> per_layer;
  OpCounts total;
  Shape output_shape;
};

// `input` is the per-sample shape ([T, C, H, W] or [D]).
OpCountReport count_ops(std::span<const LayerSpec> stack, const Shape &input);

// Linear blend of two tensors (interpolation or weighted aggregation):
// 2 multiplies and 1 add per produced element.
OpCounts blend_ops(std::uint64_t produced_elements);

}  // namespace hetsl

#endif  // HETSL_OP_COUNT_HPP_
