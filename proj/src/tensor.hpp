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

#ifndef HETSL_TENSOR_HPP_
#define HETSL_TENSOR_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace hetsl {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape &shape);
std::string shape_str(const Shape &shape);

/// Dense row-major array of doubles.
///
/// Sequence activations use the layout [batch, time, channel, height, width];
/// flat features use [batch, features].
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> values);

  const Shape &shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  double *data() noexcept { return data_.data(); }
  const double *data() const noexcept { return data_.data(); }
  std::span<double> values() noexcept { return data_; }
  std::span<const double> values() const noexcept { return data_; }

  double &operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  void reshape(Shape shape);
  Tensor reshaped(Shape shape) const;
  void fill(double value);
  // this += alpha * other
  void add_scaled(const Tensor &other, double alpha);

  bool same_shape(const Tensor &other) const noexcept {
    return shape_ == other.shape_;
  }

  friend bool operator==(const Tensor &a, const Tensor &b) {
    return a.shape_ == b.shape_ && a.data_ == b.data_;
  }

 private:
  Shape shape_;
  std::vector<double> data_;
};

// Throws kNumeric if any element is NaN or infinite.
void require_finite(const Tensor &t, std::string_view where);
void require_shape(const Tensor &t, const Shape &expected,
                   std::string_view where);

double max_abs_diff(const Tensor &a, const Tensor &b);

}  // namespace hetsl

#endif  // HETSL_TENSOR_HPP_
