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

#ifndef HETSL_MODEL_SHAPE_HPP_
#define HETSL_MODEL_SHAPE_HPP_

#include <cstddef>
#include <vector>

#include "layers.hpp"
#include "strategy.hpp"

namespace hetsl {

/// Layer widths of the split network. Defaults are the full-size
/// architecture; `conv_filters` may be reduced for fast desk-scale runs
/// without changing any uploaded activation or fc1 dimension.
struct ModelShape {
  std::size_t image_size = 40;
  std::size_t conv_filters = 64;
  std::size_t camera_hidden = 1;
  std::size_t rss_hidden = 1;
  std::size_t fc_units = 96;
  std::size_t n_rss = 2;
  std::size_t kernel = 3;

  std::size_t feature_size() const { return image_size / 2; }
  std::size_t feature_plane() const { return feature_size() * feature_size(); }
  void validate() const;
  friend bool operator==(const ModelShape &, const ModelShape &) = default;
};

// Frames fed into camera `cam`'s segment (and uploaded, one activation per frame).
std::size_t camera_frames(const StrategyConfig &cfg, Camera cam);
// Frames per camera after BS-side interpolation.
std::size_t bs_camera_frames(const StrategyConfig &cfg, Camera cam);
// Length of the image-feature sequence entering fc1 (0 for RF_only).
std::size_t aggregated_frames(const StrategyConfig &cfg);
std::size_t fc1_inputs(const StrategyConfig &cfg, const ModelShape &shape);

std::vector<LayerSpec> camera_layer_specs(const ModelShape &shape);
Shape camera_input_shape(const StrategyConfig &cfg, const ModelShape &shape, Camera cam);

}  // namespace hetsl

#endif  // HETSL_MODEL_SHAPE_HPP_
