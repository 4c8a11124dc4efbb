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

#include "adam.hpp"

#include <cmath>

#include "error.hpp"

namespace hetsl {

void adam_step(std::span<Parameter *const> params, AdamState &state) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const Parameter *p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size()) {
    fail(ErrorCode::kShape, "adam_step: optimizer tracks " +
                                std::to_string(state.first_moment.size()) + " tensors, got " +
                                std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter &p = *params[i];
    if (!state.first_moment[i].same_shape(p.value) || !p.grad.same_shape(p.value)) {
      fail(ErrorCode::kShape, "adam_step: shape mismatch for " + p.name);
    }
  }

  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(state.beta1, t);
  const double correction2 = 1.0 - std::pow(state.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter &p = *params[i];
    Tensor &m = state.first_moment[i];
    Tensor &v = state.second_moment[i];
    for (std::size_t j = 0; j < p.value.size(); ++j) {
      const double g = p.grad[j];
      m[j] = state.beta1 * m[j] + (1.0 - state.beta1) * g;
      v[j] = state.beta2 * v[j] + (1.0 - state.beta2) * g * g;
      const double m_hat = m[j] / correction1;
      const double v_hat = v[j] / correction2;
      p.value[j] -= state.learning_rate * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
    require_finite(p.value, "adam_step " + p.name);
  }
}

void zero_grads(std::span<Parameter *const> params) {
  for (Parameter *p : params) p->zero_grad();
}

}  // namespace hetsl
