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

#ifndef HETSL_SCENARIO_HPP_
#define HETSL_SCENARIO_HPP_

#include <cstdint>
#include <random>
#include <vector>

#include "channel.hpp"

namespace hetsl {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// Orthographic depth camera. `axis` is the (unit) viewing direction; the
/// image's horizontal axis spans `half_width` metres either side of it and
/// depth saturates at `max_depth`.
struct CameraPose {
  Point2 position;
  Point2 axis{0.0, 1.0};
  double half_width_m = 1.0;
  double max_depth_m = 4.0;
};

struct Waypoint {
  double t_s = 0.0;
  Point2 p;
};

/// Piecewise-linear blocker trajectory plus the static scene geometry.
struct ScenePath {
  std::vector<Waypoint> waypoints;  // strictly increasing times
  Point2 tx{0.0, 0.0};
  Point2 rx{0.0, 4.0};
  double beam_width_m = 0.3;
  double blocker_width_m = 0.5;
  // Rows covered by the blocker silhouette, counted from the top.
  double blocker_top_fraction = 0.15;

  // Position at t; clamps to the first/last waypoint outside the path.
  Point2 position(double t_s) const;
};

struct SceneConfig {
  std::size_t K = 600;
  double tau_s = 0.1;
  int frame_ratio = 3;
  std::size_t image_size = 40;
  std::size_t look_ahead = 5;
  std::uint64_t seed = 1;

  double pixel_noise = 0.01;
  double power_noise_db = 0.5;
  double blockage_depth_db = 15.0;
  double los_power_dbm = -29.0;

  double speed_min_mps = 0.8;
  double speed_max_mps = 1.2;
  double pause_max_s = 1.0;
  double walk_half_span_m = 2.0;
  double walk_y_m = 2.0;
  double beam_width_m = 0.3;
  double blocker_width_m = 0.5;

  CameraPose camera_a{{-1.4, -1.0}, {0.0, 1.0}, 1.3, 4.0};
  CameraPose camera_b{{2.8, 2.0}, {-1.0, 0.0}, 1.0, 2.9};

  void validate() const;
  // Time span the scene must cover: powers up to (K + look_ahead) * tau.
  double duration_s() const { return static_cast<double>(K + look_ahead) * tau_s; }
};

// Back-and-forth walk across the link, with seeded speeds and pauses.
ScenePath generate_path(const SceneConfig &cfg);

// Fraction of the beam's width covered by the blocker, in [0, 1].
double occlusion_fraction(const ScenePath &scene, double t_s);

// Time intervals in [0, duration) during which the occlusion is nonzero.
std::vector<BlockageInterval> blockage_schedule(const ScenePath &scene, double duration_s);

/// size x size depth map in [0, 1]: 1 is background, the blocker appears at
/// depth / max_depth. Gaussian noise of `noise_sigma` is added when `rng` is
/// given, then values are clipped to [0, 1].
std::vector<double> render_depth(const ScenePath &scene, const CameraPose &pose, double t_s,
                                 std::size_t size, double noise_sigma = 0.0,
                                 std::mt19937_64 *rng = nullptr);

/// P(k tau) = P_L - depth * occlusion(k tau) + noise for k = 0..count-1.
std::vector<double> synth_power_trace(const ScenePath &scene, const SceneConfig &cfg,
                                      std::size_t count);

// A_k = min(1, 10^((P_k - P_L) / 10)), floored at a tiny positive value.
ChannelTrace attenuation_from_power(const std::vector<double> &power_dbm, double los_power_dbm,
                                    double tau_s);

}  // namespace hetsl

#endif  // HETSL_SCENARIO_HPP_
