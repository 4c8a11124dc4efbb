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

#include "model_shape.hpp"

#include "error.hpp"

namespace hetsl {

void ModelShape::validate() const {
  if (image_size == 0 || image_size % 2) fail(ErrorCode::kConfig, "image_size: must be even");
  if (conv_filters == 0) fail(ErrorCode::kConfig, "conv_filters: must be positive");
  if (camera_hidden == 0 || rss_hidden == 0) fail(ErrorCode::kConfig, "hidden channels: must be positive");
  if (fc_units == 0) fail(ErrorCode::kConfig, "fc_units: must be positive");
  if (n_rss == 0) fail(ErrorCode::kConfig, "n_rss: must be positive");
  if (kernel % 2 == 0) fail(ErrorCode::kConfig, "kernel: must be odd");
}

std::size_t camera_frames(const StrategyConfig &cfg, Camera cam) {
  const std::size_t fast = static_cast<std::size_t>(cfg.frame_ratio) + 1;
  switch (cfg.balance) {
    case Balance::kDisc: return 2;
    case Balance::kMixInt: return fast;
    case Balance::kMmixInt: return cam == Camera::kA ? fast : 2;
  }
  return 2;
}

std::size_t bs_camera_frames(const StrategyConfig &cfg, Camera cam) {
  if (cfg.balance == Balance::kMmixInt) return camera_frames(cfg, Camera::kA);
  return camera_frames(cfg, cam);
}

std::size_t aggregated_frames(const StrategyConfig &cfg) {
  const std::size_t n_a = bs_camera_frames(cfg, Camera::kA);
  switch (cfg.protocol) {
    case Protocol::kHetSLAgg:
      return cfg.aggregate == Aggregate::kConcAgg ? 2 * n_a : n_a;
    case Protocol::kHetSLFedAvg:
    case Protocol::kCamARF: return n_a;
    case Protocol::kCamBRF: return bs_camera_frames(cfg, Camera::kB);
    case Protocol::kRFOnly: return 0;
  }
  return 0;
}

std::size_t fc1_inputs(const StrategyConfig &cfg, const ModelShape &shape) {
  return shape.feature_plane() *
         (aggregated_frames(cfg) * shape.camera_hidden + shape.n_rss * shape.rss_hidden);
}

std::vector<LayerSpec> camera_layer_specs(const ModelShape &shape) {
  const std::size_t f = shape.conv_filters;
  return {LayerSpec::conv2d(1, f, shape.kernel), LayerSpec::batch_norm(f),
          LayerSpec::conv2d(f, f, shape.kernel), LayerSpec::batch_norm(f),
          LayerSpec::avg_pool(f, 2),            LayerSpec::conv_lstm(f, shape.camera_hidden, shape.kernel)};
}

Shape camera_input_shape(const StrategyConfig &cfg, const ModelShape &shape, Camera cam) {
  return {camera_frames(cfg, cam), 1, shape.image_size, shape.image_size};
}

}  // namespace hetsl
