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

#include "tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "error.hpp"

namespace hetsl {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kTruncated: return "truncated";
    case ErrorCode::kVersion: return "version";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kState: return "state";
    case ErrorCode::kRange: return "range";
  }
  return "unknown";
}

std::size_t shape_size(const Shape &shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

std::string shape_str(const Shape &shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  for (auto d : shape_) {
    if (d == 0) fail(ErrorCode::kShape, "zero-sized dimension in " + shape_str(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> values)
    : shape_(std::move(shape)), data_(std::move(values)) {
  if (shape_size(shape_) != data_.size()) {
    fail(ErrorCode::kShape, "shape " + shape_str(shape_) + " does not match " +
                                std::to_string(data_.size()) + " values");
  }
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    fail(ErrorCode::kShape, "axis " + std::to_string(axis) + " out of range for " +
                                shape_str(shape_));
  }
  return shape_[axis];
}

void Tensor::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    fail(ErrorCode::kShape,
         "cannot reshape " + shape_str(shape_) + " to " + shape_str(shape));
  }
  shape_ = std::move(shape);
}

Tensor Tensor::reshaped(Shape shape) const {
  Tensor out = *this;
  out.reshape(std::move(shape));
  return out;
}

void Tensor::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void Tensor::add_scaled(const Tensor &other, double alpha) {
  if (other.size() != size()) {
    fail(ErrorCode::kShape, "add_scaled: " + shape_str(shape_) + " vs " +
                                shape_str(other.shape_));
  }
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += alpha * other.data_[i];
}

void require_finite(const Tensor &t, std::string_view where) {
  for (double v : t.values()) {
    if (!std::isfinite(v)) {
      fail(ErrorCode::kNumeric, "non-finite value in " + std::string(where));
    }
  }
}

void require_shape(const Tensor &t, const Shape &expected, std::string_view where) {
  if (t.shape() != expected) {
    fail(ErrorCode::kShape, std::string(where) + ": expected " + shape_str(expected) +
                                ", got " + shape_str(t.shape()));
  }
}

double max_abs_diff(const Tensor &a, const Tensor &b) {
  if (a.size() != b.size()) return INFINITY;
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace hetsl
