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

#include "cost.hpp"

#include <cmath>
#include <string>

#include "error.hpp"

namespace hetsl {
namespace {

std::uint64_t bytes_for(std::uint64_t elements, int bits) {
  return elements * static_cast<std::uint64_t>(bits) / 8;
}

double transfer_s(std::uint64_t bytes, double rate_bps) {
  if (!(rate_bps > 0.0)) fail(ErrorCode::kInvalidArgument, "link rate must be positive");
  return static_cast<double>(bytes) * 8.0 / rate_bps;
}

}  // namespace

PayloadSpec payloads(const StrategyConfig &cfg, const ModelShape &shape, PayloadMode mode,
                     int bits_per_element) {
  if (bits_per_element <= 0 || bits_per_element % 8) {
    fail(ErrorCode::kInvalidArgument, "bits_per_element must be a positive multiple of 8");
  }
  PayloadSpec p;
  p.bits_per_element = bits_per_element;
  p.uses_a = uses_camera(cfg.protocol, Camera::kA);
  p.uses_b = uses_camera(cfg.protocol, Camera::kB);
  const std::uint64_t per_frame = shape.feature_plane() * shape.camera_hidden;
  if (p.uses_a) p.fp_bytes_a = bytes_for(per_frame * camera_frames(cfg, Camera::kA), bits_per_element);
  if (p.uses_b) p.fp_bytes_b = bytes_for(per_frame * camera_frames(cfg, Camera::kB), bits_per_element);
  if (p.uses_a || p.uses_b) {
    p.bp_bytes = bytes_for(fc1_inputs(cfg, shape) * shape.fc_units, bits_per_element);
  }

  if (mode == PayloadMode::kFixedConstants &&
      (cfg.protocol == Protocol::kHetSLAgg || cfg.protocol == Protocol::kHetSLFedAvg)) {
    switch (cfg.balance) {
      case Balance::kDisc: p.fp_bytes_a = p.fp_bytes_b = 3200; break;
      case Balance::kMixInt: p.fp_bytes_a = p.fp_bytes_b = 6400; break;
      case Balance::kMmixInt:
        p.fp_bytes_a = 3200;
        p.fp_bytes_b = 6400;
        break;
    }
    if (cfg.protocol == Protocol::kHetSLAgg) {
      const bool conc = cfg.aggregate == Aggregate::kConcAgg;
      if (cfg.balance == Balance::kDisc) {
        p.bp_bytes = conc ? 921600 : 614400;
      } else {
        p.bp_bytes = conc ? 1843200 : 1228800;
      }
    }
  }
  return p;
}

double latency_fp(const PayloadSpec &p, const LinkRates &rates, bool u_a, bool u_b) {
  double t = 0.0;
  if (u_a) t += transfer_s(p.fp_bytes_a, rates.a_bps);
  if (u_b) t += transfer_s(p.fp_bytes_b, rates.b_bps);
  return t;
}

double latency_bp(const PayloadSpec &p, const LinkRates &rates, bool u_a, bool u_b) {
  double t = 0.0;
  if (u_a) t += transfer_s(p.bp_bytes, rates.a_bps);
  if (u_b) t += transfer_s(p.bp_bytes, rates.b_bps);
  return t;
}

std::uint64_t exchanges_per_interval(double tau_s, double t_tot_s) {
  if (!(t_tot_s > 0.0)) fail(ErrorCode::kInvalidArgument, "T_tot must be positive");
  if (!(tau_s > 0.0)) fail(ErrorCode::kInvalidArgument, "tau must be positive");
  return static_cast<std::uint64_t>(std::floor(tau_s / t_tot_s));
}

std::size_t elapsed_interval(std::uint64_t n, std::span<const double> t_tot, double tau_s) {
  if (n == 0) fail(ErrorCode::kInvalidArgument, "elapsed_time: n must be >= 1");
  // k_n is the last k' whose prefix sum still fits in n; it is only known
  // once a later interval pushes the prefix sum past n.
  std::uint64_t prefix = 0;
  for (std::size_t k = 0; k < t_tot.size(); ++k) {
    prefix += exchanges_per_interval(tau_s, t_tot[k]);
    if (prefix > n) return k == 0 ? 1 : k;
  }
  fail(ErrorCode::kRange, "elapsed_time: T_tot series exhausted before exchange " +
                              std::to_string(n));
}

double elapsed_time(std::uint64_t n, std::span<const double> t_tot, double tau_s) {
  const std::size_t k_n = elapsed_interval(n, t_tot, tau_s);
  double before = 0.0;
  std::uint64_t done = 0;
  for (std::size_t k = 0; k + 1 < k_n; ++k) {
    before += t_tot[k];
    done += exchanges_per_interval(tau_s, t_tot[k]);
  }
  const double remaining = static_cast<double>(n) - static_cast<double>(done) + 1.0;
  return before + remaining * t_tot[k_n - 1];
}

double power_watts(const OpCounts &counts, double tau_s, const EnergyConstants &e) {
  if (!(tau_s > 0.0)) fail(ErrorCode::kInvalidArgument, "tau must be positive");
  return (static_cast<double>(counts.adds) * e.add_j +
          static_cast<double>(counts.mults) * e.mult_j +
          static_cast<double>(counts.params) * e.access_j) /
         tau_s;
}

NodeOps node_op_counts(const StrategyConfig &cfg, const ModelShape &shape) {
  NodeOps ops;
  const auto camera_stack = camera_layer_specs(shape);
  const std::uint64_t pixels = shape.image_size * shape.image_size;
  const std::uint64_t feature = shape.feature_plane() * shape.camera_hidden;

  for (Camera cam : {Camera::kA, Camera::kB}) {
    if (!uses_camera(cfg.protocol, cam)) continue;
    OpCounts c = count_ops(camera_stack, camera_input_shape(cfg, shape, cam)).total;
    // Camera B synthesizes its missing frames from two captured images.
    if (cam == Camera::kB && cfg.balance == Balance::kMixInt) {
      c += blend_ops((camera_frames(cfg, cam) - 2) * pixels);
    }
    (cam == Camera::kA ? ops.camera_a : ops.camera_b) = c;
  }

  const LayerSpec recurrent2 = LayerSpec::conv_lstm(1, shape.rss_hidden, shape.kernel);
  ops.bs += count_ops(std::span(&recurrent2, 1),
                      {shape.n_rss, 1, shape.feature_size(), shape.feature_size()})
                .total;
  if (cfg.balance == Balance::kMmixInt && uses_camera(cfg.protocol, Camera::kB)) {
    ops.bs += blend_ops((bs_camera_frames(cfg, Camera::kB) - camera_frames(cfg, Camera::kB)) *
                        feature);
  }
  if (cfg.protocol == Protocol::kHetSLAgg && cfg.aggregate == Aggregate::kMmixAgg) {
    ops.bs += blend_ops(aggregated_frames(cfg) * feature);
  }
  const std::size_t d = fc1_inputs(cfg, shape);
  const std::vector<LayerSpec> head{LayerSpec::fully_connected(d, shape.fc_units),
                                    LayerSpec::relu(shape.fc_units),
                                    LayerSpec::fully_connected(shape.fc_units, 1)};
  ops.bs += count_ops(head, {d}).total;
  return ops;
}

void CostLedger::record_exchange(bool u_a, bool u_b) {
  if ((u_a && !payload_.uses_a) || (u_b && !payload_.uses_b)) {
    fail(ErrorCode::kState, "ledger: exchange with a camera the protocol does not use");
  }
  if (u_a) {
    ul_a_ += payload_.fp_bytes_a;
    dl_ += payload_.bp_bytes;
  }
  if (u_b) {
    ul_b_ += payload_.fp_bytes_b;
    dl_ += payload_.bp_bytes;
  }
  history_.push_back({history_.size() + 1, u_a, u_b});
}

std::vector<IntervalTiming> interval_timings(const StrategyConfig &cfg, const PayloadSpec &p,
                                             const LinkParams &link, const ChannelTrace &trace,
                                             double t_comp_s, std::size_t count) {
  if (trace.attenuation.empty()) fail(ErrorCode::kInvalidArgument, "empty channel trace");
  if (t_comp_s < 0.0) fail(ErrorCode::kInvalidArgument, "T_comp must be non-negative");
  link.validate();
  const double rate_b = rate_cam_b(link);
  std::vector<IntervalTiming> out(count);
  for (std::size_t k = 1; k <= count; ++k) {
    const double a = trace.attenuation[k % trace.attenuation.size()];
    const LinkRates rates{rate_for_attenuation(a, link), rate_b};
    IntervalTiming &t = out[k - 1];
    if (cfg.protocol == Protocol::kHetSLFedAvg) {
      t.t_fp_s = 0.5 * (latency_fp(p, rates, true, false) + latency_fp(p, rates, false, true));
      t.t_bp_s = 0.5 * (latency_bp(p, rates, true, false) + latency_bp(p, rates, false, true));
    } else {
      t.t_fp_s = latency_fp(p, rates, p.uses_a, p.uses_b);
      t.t_bp_s = latency_bp(p, rates, p.uses_a, p.uses_b);
    }
    t.t_tot_s = t.t_fp_s + t.t_bp_s + t_comp_s;
  }
  return out;
}

}  // namespace hetsl
