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

#include "channel.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "error.hpp"

namespace hetsl {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double ratio) { return 10.0 * std::log10(ratio); }
double dbm_to_mw(double dbm) { return db_to_linear(dbm); }

void LinkParams::validate() const {
  if (!(bandwidth_hz > 0.0)) fail(ErrorCode::kConfig, "bandwidth_hz: must be positive");
  if (!(distance_m > 0.0)) fail(ErrorCode::kConfig, "distance_m: must be positive");
  if (!(ref_distance_m > 0.0)) fail(ErrorCode::kConfig, "ref_distance_m: must be positive");
  if (!(path_loss_exponent > 0.0)) fail(ErrorCode::kConfig, "path_loss_exponent: must be positive");
}

double ChannelTrace::at(double t) const {
  if (!(t >= 0.0) || t >= duration()) {
    fail(ErrorCode::kRange, "channel trace queried at t=" + std::to_string(t) +
                                " outside [0, " + std::to_string(duration()) + ")");
  }
  auto k = static_cast<std::size_t>(std::floor(t / tau_s));
  // floor(t / tau) can land one past the end for t just below the boundary.
  k = std::min(k, attenuation.size() - 1);
  return attenuation[k];
}

void ChannelTrace::validate() const {
  if (!(tau_s > 0.0)) fail(ErrorCode::kInvalidArgument, "trace: tau must be positive");
  for (double a : attenuation) {
    if (!(a > 0.0 && a <= 1.0)) {
      fail(ErrorCode::kInvalidArgument, "trace: attenuation samples must lie in (0,1]");
    }
  }
}

double rate_for_attenuation(double attenuation, const LinkParams &params) {
  const double snr = attenuation * dbm_to_mw(params.los_power_dbm) / dbm_to_mw(params.noise_dbm);
  return params.bandwidth_hz * std::log2(1.0 + snr);
}

double rate_cam_a(double t, const LinkParams &params, const ChannelTrace &trace) {
  return rate_for_attenuation(trace.at(t), params);
}

double camera_b_los_power_dbm(const LinkParams &params) {
  if (!(params.distance_m > 0.0)) fail(ErrorCode::kInvalidArgument, "distance_m must be positive");
  return params.tx_power_dbm + params.camera_gain_dbi + params.bs_gain_dbi -
         params.ref_path_loss_db -
         10.0 * params.path_loss_exponent * std::log10(params.distance_m / params.ref_distance_m);
}

double rate_cam_b(const LinkParams &params) {
  const double snr = dbm_to_mw(camera_b_los_power_dbm(params)) / dbm_to_mw(params.noise_dbm);
  return params.bandwidth_hz * std::log2(1.0 + snr);
}

ChannelTrace synth_attenuation_trace(std::span<const BlockageInterval> schedule,
                                     double depth_db, std::size_t K, double tau_s,
                                     std::size_t ramp_samples) {
  if (!(tau_s > 0.0)) fail(ErrorCode::kInvalidArgument, "tau must be positive");
  if (depth_db < 0.0) fail(ErrorCode::kInvalidArgument, "depth_db must be non-negative");
  std::vector<BlockageInterval> sorted(schedule.begin(), schedule.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const auto &a, const auto &b) { return a.start_s < b.start_s; });
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (!(sorted[i].end_s > sorted[i].start_s)) {
      fail(ErrorCode::kInvalidArgument, "blockage interval with end <= start");
    }
    if (i && sorted[i].start_s < sorted[i - 1].end_s) {
      fail(ErrorCode::kInvalidArgument, "overlapping blockage intervals");
    }
  }

  const std::size_t n = K + 1;
  std::vector<double> loss_db(n, 0.0);
  // Sample j is blocked iff j*tau lies in [start, end).
  constexpr double kSlack = 1e-9;
  for (const auto &iv : sorted) {
    const long first = static_cast<long>(std::ceil(iv.start_s / tau_s - kSlack));
    const long stop = static_cast<long>(std::ceil(iv.end_s / tau_s - kSlack));
    for (long j = std::max(0L, first); j < std::min<long>(stop, static_cast<long>(n)); ++j) {
      loss_db[j] = depth_db;
    }
    for (std::size_t r = 1; r <= ramp_samples; ++r) {
      const double ramp = depth_db * static_cast<double>(ramp_samples + 1 - r) /
                          static_cast<double>(ramp_samples + 1);
      const long before = first - static_cast<long>(r);
      const long after = stop - 1 + static_cast<long>(r);
      if (before >= 0 && before < static_cast<long>(n)) {
        loss_db[before] = std::max(loss_db[before], ramp);
      }
      if (after >= 0 && after < static_cast<long>(n)) {
        loss_db[after] = std::max(loss_db[after], ramp);
      }
    }
  }
  ChannelTrace trace;
  trace.tau_s = tau_s;
  trace.attenuation.resize(n);
  for (std::size_t j = 0; j < n; ++j) {
    trace.attenuation[j] = loss_db[j] == 0.0 ? 1.0 : db_to_linear(-loss_db[j]);
  }
  return trace;
}

void write_trace_csv(const ChannelTrace &trace, const std::filesystem::path &path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << "k,attenuation_linear\n";
  char buf[64];
  for (std::size_t k = 0; k < trace.attenuation.size(); ++k) {
    std::snprintf(buf, sizeof buf, "%.17g", trace.attenuation[k]);
    out << k << ',' << buf << '\n';
  }
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

ChannelTrace read_trace_csv(const std::filesystem::path &path, double tau_s) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::string line;
  if (!std::getline(in, line) || line != "k,attenuation_linear") {
    fail(ErrorCode::kFormat, path.string() + ": expected header k,attenuation_linear");
  }
  ChannelTrace trace;
  trace.tau_s = tau_s;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) fail(ErrorCode::kFormat, path.string() + ": bad row " + line);
    if (std::stoul(line.substr(0, comma)) != expected) {
      fail(ErrorCode::kFormat, path.string() + ": rows out of order at " + line);
    }
    trace.attenuation.push_back(std::stod(line.substr(comma + 1)));
    ++expected;
  }
  trace.validate();
  return trace;
}

}  // namespace hetsl
