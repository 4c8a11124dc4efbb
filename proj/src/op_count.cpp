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

#include "op_count.hpp"

namespace hetsl {
namespace {

OpCounts count_layer(const LayerSpec &spec, const Shape &in, const Shape &out) {
  OpCounts c;
  const std::uint64_t k2 = spec.kernel * spec.kernel;
  switch (spec.kind) {
    case LayerKind::kConv2D: {
      const std::uint64_t outputs = shape_size(out);
      c.mults = outputs * spec.in_channels * k2;
      c.adds = outputs * spec.in_channels * k2;
      c.weights = spec.out_channels * spec.in_channels * k2;
      c.params = c.weights + spec.out_channels;
      break;
    }
    case LayerKind::kFullyConnected: {
      c.mults = spec.out_channels * spec.in_channels;
      c.adds = spec.out_channels * spec.in_channels;
      c.weights = spec.out_channels * spec.in_channels;
      c.params = c.weights + spec.out_channels;
      break;
    }
    case LayerKind::kConvLSTM: {
      const std::uint64_t steps = in[0];
      const std::uint64_t plane = in[2] * in[3];
      const std::uint64_t hc = spec.out_channels;
      const std::uint64_t zc = spec.in_channels + hc;
      const std::uint64_t gate_outputs = steps * 4 * hc * plane;
      const std::uint64_t hidden = steps * hc * plane;
      c.mults = gate_outputs * zc * k2 + 3 * hidden;
      c.adds = gate_outputs * zc * k2 + hidden;
      c.weights = 4 * hc * zc * k2;
      c.params = c.weights + 4 * hc;
      break;
    }
    case LayerKind::kBatchNorm: {
      const std::uint64_t elements = shape_size(in);
      c.mults = elements;
      c.adds = elements;
      c.weights = spec.in_channels;
      c.params = 2 * spec.in_channels;
      break;
    }
    case LayerKind::kAvgPool: {
      const std::uint64_t outputs = shape_size(out);
      c.adds = outputs * (spec.pool * spec.pool - 1);
      c.mults = outputs;
      break;
    }
    case LayerKind::kReLU:
      break;
  }
  return c;
}

}  // namespace

OpCountReport count_ops(std::span<const LayerSpec> stack, const Shape &input) {
  OpCountReport report;
  Shape shape = input;
  for (const LayerSpec &spec : stack) {
    Shape next = output_shape(spec, shape);
    OpCounts c = count_layer(spec, shape, next);
    report.per_layer.push_back(c);
    report.total += c;
    shape = std::move(next);
  }
  report.output_shape = shape;
  return report;
}

OpCounts blend_ops(std::uint64_t produced_elements) {
  return {produced_elements, 2 * produced_elements, 0, 0};
}

}  // namespace hetsl
