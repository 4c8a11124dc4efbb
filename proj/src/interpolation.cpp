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

#include "interpolation.hpp"

#include <algorithm>
#include <tuple>

#include "error.hpp"

namespace hetsl {
namespace {

// Splits a [batch, time, ...] shape into (batch, time, frame size).
std::tuple<std::size_t, std::size_t, std::size_t> sequence_dims(const Tensor &t) {
  if (t.rank() < 2) fail(ErrorCode::kShape, "sequence tensor needs [batch, time, ...]");
  const auto &s = t.shape();
  return {s[0], s[1], t.size() / (s[0] * s[1])};
}

FrameSequence interpolate_sequence(const FrameSequence &seq,
                                   std::span<const std::int64_t> targets) {
  if (seq.values.rank() < 2 || seq.values.dim(1) != seq.ticks.size()) {
    fail(ErrorCode::kShape, "interpolation: tick count does not match sequence length");
  }
  const InterpolationPlan plan = plan_interpolation(seq.ticks, targets, seq.ticks_per_unit);
  FrameSequence out;
  out.camera = seq.camera;
  out.ticks_per_unit = seq.ticks_per_unit;
  out.ticks.assign(targets.begin(), targets.end());
  out.values = apply_plan(seq.values, plan);
  return out;
}

}  // namespace

InterpolationPlan plan_interpolation(std::span<const std::int64_t> source_ticks,
                                     std::span<const std::int64_t> target_ticks,
                                     int ticks_per_unit) {
  if (ticks_per_unit < 1) fail(ErrorCode::kInvalidArgument, "ticks_per_unit must be >= 1");
  if (source_ticks.empty()) fail(ErrorCode::kRange, "interpolation: empty source sequence");
  for (std::size_t i = 0; i < source_ticks.size(); ++i) {
    if (source_ticks[i] % ticks_per_unit != 0) {
      fail(ErrorCode::kInvalidArgument, "interpolation: source frames must sit on whole units");
    }
    if (i && source_ticks[i] <= source_ticks[i - 1]) {
      fail(ErrorCode::kInvalidArgument, "interpolation: source ticks not increasing");
    }
  }
  InterpolationPlan plan;
  plan.source_length = source_ticks.size();
  const double unit = static_cast<double>(ticks_per_unit);
  for (std::size_t j = 0; j < target_ticks.size(); ++j) {
    const std::int64_t tick = target_ticks[j];
    if (j && tick <= target_ticks[j - 1]) {
      fail(ErrorCode::kInvalidArgument, "interpolation: target ticks not increasing");
    }
    // k' = latest source not after k.
    auto it = std::upper_bound(source_ticks.begin(), source_ticks.end(), tick);
    if (it == source_ticks.begin()) {
      fail(ErrorCode::kRange, "interpolation: target precedes every source frame");
    }
    const std::size_t earlier = static_cast<std::size_t>(std::distance(source_ticks.begin(), it)) - 1;
    const std::int64_t base = source_ticks[earlier];
    if (base == tick) {
      plan.terms.push_back({earlier, earlier, 1.0});
      continue;
    }
    if (earlier + 1 >= source_ticks.size() ||
        source_ticks[earlier + 1] != base + ticks_per_unit) {
      fail(ErrorCode::kRange, "interpolation: target not bracketed by k' and k'+1");
    }
    const double lambda = static_cast<double>(base + ticks_per_unit - tick) / unit;
    plan.terms.push_back({earlier, earlier + 1, lambda});
  }
  return plan;
}

Tensor apply_plan(const Tensor &sequence, const InterpolationPlan &plan) {
  const auto [batch, steps, frame] = sequence_dims(sequence);
  if (steps != plan.source_length) {
    fail(ErrorCode::kShape, "apply_plan: sequence has " + std::to_string(steps) +
                                " frames, plan expects " + std::to_string(plan.source_length));
  }
  Shape out_shape = sequence.shape();
  out_shape[1] = plan.terms.size();
  Tensor out(out_shape);
  const std::size_t out_steps = plan.terms.size();
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < out_steps; ++j) {
      const MixTerm &term = plan.terms[j];
      const double *lo = sequence.data() + (b * steps + term.earlier) * frame;
      const double *hi = sequence.data() + (b * steps + term.later) * frame;
      double *dst = out.data() + (b * out_steps + j) * frame;
      if (term.lambda == 1.0) {
        std::copy(lo, lo + frame, dst);
      } else {
        const double l = term.lambda;
        for (std::size_t i = 0; i < frame; ++i) dst[i] = hi[i] + l * (lo[i] - hi[i]);
      }
    }
  }
  return out;
}

Tensor apply_plan_backward(const Tensor &grad_output, const InterpolationPlan &plan) {
  const auto [batch, steps, frame] = sequence_dims(grad_output);
  if (steps != plan.terms.size()) fail(ErrorCode::kShape, "apply_plan_backward: length mismatch");
  Shape in_shape = grad_output.shape();
  in_shape[1] = plan.source_length;
  Tensor gin(in_shape);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t j = 0; j < steps; ++j) {
      const MixTerm &term = plan.terms[j];
      const double *g = grad_output.data() + (b * steps + j) * frame;
      double *lo = gin.data() + (b * plan.source_length + term.earlier) * frame;
      double *hi = gin.data() + (b * plan.source_length + term.later) * frame;
      const double l = term.lambda;
      for (std::size_t i = 0; i < frame; ++i) lo[i] += l * g[i];
      if (term.lambda != 1.0) {
        for (std::size_t i = 0; i < frame; ++i) hi[i] += (1.0 - l) * g[i];
      }
    }
  }
  return gin;
}

FeatureActivation manifold_mixup_interpolate(const FeatureActivation &sequence,
                                             std::span<const std::int64_t> target_ticks) {
  return interpolate_sequence(sequence, target_ticks);
}

FrameSequence mixup_interpolate_images(const FrameSequence &images,
                                       std::span<const std::int64_t> target_ticks) {
  return interpolate_sequence(images, target_ticks);
}

FrameSequence discard_frames(const FrameSequence &fast_sequence) {
  std::vector<std::int64_t> kept;
  for (auto t : fast_sequence.ticks) {
    if (t % fast_sequence.ticks_per_unit == 0) kept.push_back(t);
  }
  // Selecting existing frames is a plan made only of lambda == 1 copies.
  InterpolationPlan plan;
  plan.source_length = fast_sequence.ticks.size();
  for (std::size_t i = 0; i < fast_sequence.ticks.size(); ++i) {
    if (fast_sequence.ticks[i] % fast_sequence.ticks_per_unit == 0) {
      plan.terms.push_back({i, i, 1.0});
    }
  }
  FrameSequence out;
  out.camera = fast_sequence.camera;
  out.ticks_per_unit = fast_sequence.ticks_per_unit;
  out.ticks = std::move(kept);
  out.values = apply_plan(fast_sequence.values, plan);
  return out;
}

Tensor aggregate(const Tensor &a, const Tensor &b, Aggregate mode, double lambda_agg) {
  const auto [batch_a, steps_a, frame_a] = sequence_dims(a);
  const auto [batch_b, steps_b, frame_b] = sequence_dims(b);
  if (batch_a != batch_b || frame_a != frame_b) {
    fail(ErrorCode::kShape, "aggregate: incompatible activations " + shape_str(a.shape()) +
                                " and " + shape_str(b.shape()));
  }
  if (mode == Aggregate::kMmixAgg) {
    if (steps_a != steps_b) {
      fail(ErrorCode::kShape, "aggregate: MmixAgg needs equal sequence lengths, got " +
                                  std::to_string(steps_a) + " and " + std::to_string(steps_b));
    }
    Tensor out(a.shape());
    for (std::size_t i = 0; i < out.size(); ++i) {
      out[i] = b[i] + lambda_agg * (a[i] - b[i]);
    }
    return out;
  }
  Shape out_shape = a.shape();
  out_shape[1] = steps_a + steps_b;
  Tensor out(out_shape);
  const std::size_t steps = steps_a + steps_b;
  for (std::size_t n = 0; n < batch_a; ++n) {
    std::copy(a.data() + n * steps_a * frame_a, a.data() + (n + 1) * steps_a * frame_a,
              out.data() + n * steps * frame_a);
    std::copy(b.data() + n * steps_b * frame_a, b.data() + (n + 1) * steps_b * frame_a,
              out.data() + (n * steps + steps_a) * frame_a);
  }
  return out;
}

std::pair<Tensor, Tensor> aggregate_backward(const Tensor &grad_output, Aggregate mode,
                                             double lambda_agg, std::size_t steps_a) {
  const auto [batch, steps, frame] = sequence_dims(grad_output);
  if (mode == Aggregate::kMmixAgg) {
    Tensor ga(grad_output.shape()), gb(grad_output.shape());
    for (std::size_t i = 0; i < grad_output.size(); ++i) {
      ga[i] = lambda_agg * grad_output[i];
      gb[i] = (1.0 - lambda_agg) * grad_output[i];
    }
    return {std::move(ga), std::move(gb)};
  }
  if (steps_a >= steps) fail(ErrorCode::kShape, "aggregate_backward: bad split point");
  const std::size_t steps_b = steps - steps_a;
  Shape sa = grad_output.shape(), sb = grad_output.shape();
  sa[1] = steps_a;
  sb[1] = steps_b;
  Tensor ga(sa), gb(sb);
  for (std::size_t n = 0; n < batch; ++n) {
    const double *g = grad_output.data() + n * steps * frame;
    std::copy(g, g + steps_a * frame, ga.data() + n * steps_a * frame);
    std::copy(g + steps_a * frame, g + steps * frame, gb.data() + n * steps_b * frame);
  }
  return {std::move(ga), std::move(gb)};
}

std::vector<std::int64_t> window_ticks(std::int64_t end_unit, int ticks_per_unit,
                                       bool fast_grid) {
  std::vector<std::int64_t> ticks;
  const std::int64_t start = (end_unit - 1) * ticks_per_unit;
  const std::int64_t stop = end_unit * ticks_per_unit;
  const std::int64_t stride = fast_grid ? 1 : ticks_per_unit;
  for (std::int64_t t = start; t <= stop; t += stride) ticks.push_back(t);
  return ticks;
}

}  // namespace hetsl
