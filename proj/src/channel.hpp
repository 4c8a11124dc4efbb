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

#ifndef HETSL_CHANNEL_HPP_
#define HETSL_CHANNEL_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace hetsl {

double db_to_linear(double db);
double linear_to_db(double ratio);
double dbm_to_mw(double dbm);

/// Static parameters of the camera<->BS links. `los_power_dbm` is the
/// measured LoS received power on the blocked camera-A link; the remaining
/// fields feed the path-loss law for the camera-B link.
struct LinkParams {
  double bandwidth_hz = 1.76e9;
  double noise_dbm = -60.0;
  double los_power_dbm = -29.0;
  double tx_power_dbm = 10.0;
  double camera_gain_dbi = 24.0;
  double bs_gain_dbi = 8.0;
  double path_loss_exponent = 1.6;
  double ref_path_loss_db = 68.0;
  double ref_distance_m = 1.0;
  // Camera-B distance, chosen so the static link runs at about 19 Gbit/s.
  double distance_m = 1.2;

  void validate() const;
};

/// Right-open staircase A(t) = attenuation[k] for t in [k*tau, (k+1)*tau).
struct ChannelTrace {
  double tau_s = 0.1;
  std::vector<double> attenuation;

  double at(double t) const;
  double duration() const { return tau_s * static_cast<double>(attenuation.size()); }
  void validate() const;
};

// Shannon rate of the camera-A link at time t (bit/s).
double rate_cam_a(double t, const LinkParams &params, const ChannelTrace &trace);
double rate_for_attenuation(double attenuation, const LinkParams &params);

double camera_b_los_power_dbm(const LinkParams &params);
// Time-invariant camera-B link rate (bit/s).
double rate_cam_b(const LinkParams &params);

struct BlockageInterval {
  double start_s = 0.0;
  double end_s = 0.0;
};

/// K + 1 samples: 1 in LoS, 10^(-depth/10) on samples whose time k*tau falls
/// inside a blockage interval, and `ramp_samples` linear-in-dB steps on each
/// side of every interval.
ChannelTrace synth_attenuation_trace(std::span<const BlockageInterval> schedule,
                                     double depth_db, std::size_t K, double tau_s,
                                     std::size_t ramp_samples = 1);

// CSV with header `k,attenuation_linear`.
void write_trace_csv(const ChannelTrace &trace, const std::filesystem::path &path);
ChannelTrace read_trace_csv(const std::filesystem::path &path, double tau_s);

}  // namespace hetsl

#endif  // HETSL_CHANNEL_HPP_
