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

#ifndef HETSL_ADAM_HPP_
#define HETSL_ADAM_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "layers.hpp"

namespace hetsl {

struct AdamState {
  double learning_rate = 1.0e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1.0e-8;
  std::uint64_t step = 0;
  std::vector<Tensor> first_moment;
  std::vector<Tensor> second_moment;
};

// One bias-corrected Adam update over `params` using their accumulated
// gradients. Moments are allocated lazily on the first call and must keep
// matching the parameter shapes afterwards.
void adam_step(std::span<Parameter *const> params, AdamState &state);

void zero_grads(std::span<Parameter *const> params);

}  // namespace hetsl

#endif  // HETSL_ADAM_HPP_
