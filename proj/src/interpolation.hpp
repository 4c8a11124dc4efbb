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

#ifndef HETSL_INTERPOLATION_HPP_
#define HETSL_INTERPOLATION_HPP_

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "strategy.hpp"
#include "tensor.hpp"

namespace hetsl {

// Frame positions are integer ticks on the fast camera's grid: frame index
// k = tick / ticks_per_unit, with one unit = one slow-camera period.

/// A time-ordered sequence of frames or feature maps, batched as
/// [batch, time, ...].
struct FrameSequence {
  Camera camera = Camera::kB;
  int ticks_per_unit = 1;
  std::vector<std::int64_t> ticks;
  Tensor values;
};

// Uploaded camera-side activations share the same representation.
using FeatureActivation = FrameSequence;

/// One output frame of a linear blend: lambda * src[earlier] +
/// (1 - lambda) * src[later]. When lambda == 1 the frame is copied.
struct MixTerm {
  std::size_t earlier = 0;
  std::size_t later = 0;
  double lambda = 1.0;
};

struct InterpolationPlan {
  std::size_t source_length = 0;
  std::vector<MixTerm> terms;
};

/// Piecewise-linear plan with lambda_k = k' + 1 - k, where k' is the latest
/// source index not after k. Sources must sit on whole units; targets must be
/// strictly increasing and bracketed by the sources.
InterpolationPlan plan_interpolation(std::span<const std::int64_t> source_ticks,
                                     std::span<const std::int64_t> target_ticks,
                                     int ticks_per_unit);

Tensor apply_plan(const Tensor &sequence, const InterpolationPlan &plan);
Tensor apply_plan_backward(const Tensor &grad_output, const InterpolationPlan &plan);

// BS-side interpolation of uploaded feature activations.
FeatureActivation manifold_mixup_interpolate(const FeatureActivation &sequence,
                                             std::span<const std::int64_t> target_ticks);

// Camera-side interpolation of raw images; same blend as above.
FrameSequence mixup_interpolate_images(const FrameSequence &images,
                                       std::span<const std::int64_t> target_ticks);

// Keeps only frames on whole-unit ticks.
FrameSequence discard_frames(const FrameSequence &fast_sequence);

/// MmixAgg: lambda * a + (1 - lambda) * b (sequences must match in shape).
/// ConcAgg: concatenation along the time axis, camera A first.
Tensor aggregate(const Tensor &a, const Tensor &b, Aggregate mode, double lambda_agg);
std::pair<Tensor, Tensor> aggregate_backward(const Tensor &grad_output, Aggregate mode,
                                             double lambda_agg, std::size_t steps_a);

// Convenience: whole-unit and all-tick targets for one look-back window
// ending at `end_unit`.
std::vector<std::int64_t> window_ticks(std::int64_t end_unit, int ticks_per_unit,
                                       bool fast_grid);

}  // namespace hetsl

#endif  // HETSL_INTERPOLATION_HPP_
