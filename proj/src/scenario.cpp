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

#include "scenario.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "error.hpp"

namespace hetsl {
namespace {

double dot(Point2 a, Point2 b) { return a.x * b.x + a.y * b.y; }
Point2 sub(Point2 a, Point2 b) { return {a.x - b.x, a.y - b.y}; }

struct LinkFrame {
  Point2 u;  // along the link, unit
  Point2 n;  // normal, unit
  double length;
};

LinkFrame link_frame(const ScenePath &scene) {
  const Point2 d = sub(scene.rx, scene.tx);
  const double len = std::hypot(d.x, d.y);
  if (!(len > 0.0)) fail(ErrorCode::kInvalidArgument, "scene: link endpoints coincide");
  const Point2 u{d.x / len, d.y / len};
  return {u, {-u.y, u.x}, len};
}

// Solves lo < c0 + c1 * t < hi on [t0, t1); returns an empty range as t0 > t1.
std::pair<double, double> linear_window(double c0, double c1, double lo, double hi, double t0,
                                        double t1) {
  if (c1 == 0.0) {
    return (c0 > lo && c0 < hi) ? std::pair{t0, t1} : std::pair{1.0, 0.0};
  }
  double a = (lo - c0) / c1, b = (hi - c0) / c1;
  if (a > b) std::swap(a, b);
  return {std::max(t0, a), std::min(t1, b)};
}

std::mt19937_64 stream(std::uint64_t seed, std::uint64_t id) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(id)};
  return std::mt19937_64(seq);
}

}  // namespace

Point2 ScenePath::position(double t_s) const {
  if (waypoints.empty()) fail(ErrorCode::kInvalidArgument, "scene: empty trajectory");
  if (t_s <= waypoints.front().t_s) return waypoints.front().p;
  if (t_s >= waypoints.back().t_s) return waypoints.back().p;
  auto it = std::upper_bound(waypoints.begin(), waypoints.end(), t_s,
                             [](double t, const Waypoint &w) { return t < w.t_s; });
  const Waypoint &b = *it;
  const Waypoint &a = *(it - 1);
  const double f = (t_s - a.t_s) / (b.t_s - a.t_s);
  return {a.p.x + f * (b.p.x - a.p.x), a.p.y + f * (b.p.y - a.p.y)};
}

void SceneConfig::validate() const {
  if (K == 0) fail(ErrorCode::kConfig, "K: must be positive");
  if (!(tau_s > 0.0)) fail(ErrorCode::kConfig, "tau_s: must be positive");
  if (frame_ratio < 2) fail(ErrorCode::kConfig, "frame_ratio: must be an integer > 1");
  if (image_size < 2 || image_size % 2) fail(ErrorCode::kConfig, "image_size: must be even");
  if (pixel_noise < 0.0) fail(ErrorCode::kConfig, "pixel_noise: must be non-negative");
  if (power_noise_db < 0.0) fail(ErrorCode::kConfig, "power_noise_db: must be non-negative");
  if (blockage_depth_db < 0.0) fail(ErrorCode::kConfig, "blockage_depth_db: must be non-negative");
  if (!(speed_min_mps > 0.0) || speed_max_mps < speed_min_mps) {
    fail(ErrorCode::kConfig, "speed_min_mps/speed_max_mps: need 0 < min <= max");
  }
  if (pause_max_s < 0.0) fail(ErrorCode::kConfig, "pause_max_s: must be non-negative");
  if (!(walk_half_span_m > 0.0)) fail(ErrorCode::kConfig, "walk_half_span_m: must be positive");
  if (!(beam_width_m > 0.0)) fail(ErrorCode::kConfig, "beam_width_m: must be positive");
  if (!(blocker_width_m > 0.0)) fail(ErrorCode::kConfig, "blocker_width_m: must be positive");
  for (const CameraPose *pose : {&camera_a, &camera_b}) {
    if (std::abs(std::hypot(pose->axis.x, pose->axis.y) - 1.0) > 1e-9) {
      fail(ErrorCode::kConfig, "camera axis: must be a unit vector");
    }
    if (!(pose->half_width_m > 0.0) || !(pose->max_depth_m > 0.0)) {
      fail(ErrorCode::kConfig, "camera pose: half width and max depth must be positive");
    }
  }
}

ScenePath generate_path(const SceneConfig &cfg) {
  cfg.validate();
  std::mt19937_64 rng = stream(cfg.seed, 1);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double h = cfg.walk_half_span_m;

  ScenePath scene;
  scene.beam_width_m = cfg.beam_width_m;
  scene.blocker_width_m = cfg.blocker_width_m;
  double x = -h + 2.0 * h * unit(rng);
  double target = unit(rng) < 0.5 ? -h : h;
  double t = 0.0;
  scene.waypoints.push_back({t, {x, cfg.walk_y_m}});
  const double horizon = cfg.duration_s() + cfg.tau_s;
  while (t <= horizon) {
    const double speed = cfg.speed_min_mps + (cfg.speed_max_mps - cfg.speed_min_mps) * unit(rng);
    t += std::abs(target - x) / speed;
    x = target;
    scene.waypoints.push_back({t, {x, cfg.walk_y_m}});
    const double pause = cfg.pause_max_s * unit(rng);
    if (pause > 0.0) {
      t += pause;
      scene.waypoints.push_back({t, {x, cfg.walk_y_m}});
    }
    target = -target;
  }
  return scene;
}

double occlusion_fraction(const ScenePath &scene, double t_s) {
  const LinkFrame f = link_frame(scene);
  const Point2 rel = sub(scene.position(t_s), scene.tx);
  const double along = dot(rel, f.u);
  if (along < 0.0 || along > f.length) return 0.0;
  const double s = dot(rel, f.n);
  const double half_blocker = 0.5 * scene.blocker_width_m;
  const double half_beam = 0.5 * scene.beam_width_m;
  const double overlap =
      std::min(s + half_blocker, half_beam) - std::max(s - half_blocker, -half_beam);
  return std::clamp(overlap / scene.beam_width_m, 0.0, 1.0);
}

std::vector<BlockageInterval> blockage_schedule(const ScenePath &scene, double duration_s) {
  const LinkFrame f = link_frame(scene);
  const double reach = 0.5 * (scene.blocker_width_m + scene.beam_width_m);
  std::vector<BlockageInterval> raw;
  auto add_segment = [&](Point2 p0, Point2 p1, double t0, double t1) {
    if (!(t1 > t0)) return;
    const Point2 r0 = sub(p0, scene.tx);
    const Point2 v{(p1.x - p0.x) / (t1 - t0), (p1.y - p0.y) / (t1 - t0)};
    // Both coordinates are affine in t: c0 + c1 * (t - t0).
    auto [a0, a1] = linear_window(dot(r0, f.n), dot(v, f.n), -reach, reach, 0.0, t1 - t0);
    auto [b0, b1] = linear_window(dot(r0, f.u), dot(v, f.u), 0.0, f.length, 0.0, t1 - t0);
    const double lo = std::max(a0, b0), hi = std::min(a1, b1);
    if (hi > lo) raw.push_back({t0 + lo, t0 + hi});
  };
  const auto &w = scene.waypoints;
  if (w.empty()) fail(ErrorCode::kInvalidArgument, "scene: empty trajectory");
  add_segment(w.front().p, w.front().p, 0.0, std::max(0.0, w.front().t_s));
  for (std::size_t i = 1; i < w.size(); ++i) add_segment(w[i - 1].p, w[i].p, w[i - 1].t_s, w[i].t_s);
  add_segment(w.back().p, w.back().p, w.back().t_s, std::max(w.back().t_s, duration_s));

  std::vector<BlockageInterval> merged;
  for (BlockageInterval iv : raw) {
    iv.start_s = std::max(iv.start_s, 0.0);
    iv.end_s = std::min(iv.end_s, duration_s);
    if (!(iv.end_s > iv.start_s)) continue;
    if (!merged.empty() && iv.start_s <= merged.back().end_s + 1e-12) {
      merged.back().end_s = std::max(merged.back().end_s, iv.end_s);
    } else {
      merged.push_back(iv);
    }
  }
  return merged;
}

std::vector<double> render_depth(const ScenePath &scene, const CameraPose &pose, double t_s,
                                 std::size_t size, double noise_sigma, std::mt19937_64 *rng) {
  if (size == 0) fail(ErrorCode::kInvalidArgument, "render_depth: zero image size");
  std::vector<double> img(size * size, 1.0);
  const Point2 rel = sub(scene.position(t_s), pose.position);
  const Point2 perp{pose.axis.y, -pose.axis.x};
  const double depth = dot(rel, pose.axis);
  const double lateral = dot(rel, perp);
  if (depth > 0.0 && depth < pose.max_depth_m) {
    const double value = depth / pose.max_depth_m;
    const double pitch = 2.0 * pose.half_width_m / static_cast<double>(size);
    const double half = 0.5 * scene.blocker_width_m;
    const auto top = static_cast<std::size_t>(
        std::floor(scene.blocker_top_fraction * static_cast<double>(size)));
    for (std::size_t j = 0; j < size; ++j) {
      const double u = -pose.half_width_m + (static_cast<double>(j) + 0.5) * pitch;
      if (std::abs(u - lateral) > half) continue;
      for (std::size_t i = top; i < size; ++i) img[i * size + j] = value;
    }
  }
  if (noise_sigma > 0.0 && rng) {
    std::normal_distribution<double> noise(0.0, noise_sigma);
    for (double &v : img) v = std::clamp(v + noise(*rng), 0.0, 1.0);
  }
  return img;
}

std::vector<double> synth_power_trace(const ScenePath &scene, const SceneConfig &cfg,
                                      std::size_t count) {
  std::mt19937_64 rng = stream(cfg.seed, 2);
  std::normal_distribution<double> noise(0.0, cfg.power_noise_db > 0.0 ? cfg.power_noise_db : 1.0);
  std::vector<double> p(count);
  for (std::size_t k = 0; k < count; ++k) {
    const double t = static_cast<double>(k) * cfg.tau_s;
    p[k] = cfg.los_power_dbm - cfg.blockage_depth_db * occlusion_fraction(scene, t);
    if (cfg.power_noise_db > 0.0) p[k] += noise(rng);
  }
  return p;
}

ChannelTrace attenuation_from_power(const std::vector<double> &power_dbm, double los_power_dbm,
                                    double tau_s) {
  ChannelTrace trace;
  trace.tau_s = tau_s;
  trace.attenuation.reserve(power_dbm.size());
  for (double p : power_dbm) {
    const double a = std::min(1.0, db_to_linear(p - los_power_dbm));
    trace.attenuation.push_back(std::max(a, std::numeric_limits<double>::min()));
  }
  trace.validate();
  return trace;
}

}  // namespace hetsl
