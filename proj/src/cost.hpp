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

#ifndef HETSL_COST_HPP_
#define HETSL_COST_HPP_

#include <cstdint>
#include <span>
#include <vector>

#include "channel.hpp"
#include "model_shape.hpp"
#include "op_count.hpp"
#include "strategy.hpp"

namespace hetsl {

// 1 kB = 1000 bytes throughout.
enum class PayloadMode { kDerived, kFixedConstants };

struct PayloadSpec {
  int bits_per_element = 32;
  std::uint64_t fp_bytes_a = 0;
  std::uint64_t fp_bytes_b = 0;
  std::uint64_t bp_bytes = 0;
  bool uses_a = false;
  bool uses_b = false;
};

/// Forward payload = r * dim(uploaded activation) / 8; backward payload =
/// r * (fc1 weight count, biases excluded) / 8. Fixed-constant mode swaps in
/// fixed reference byte counts for HetSLAgg/HetSLFedAvg, including ones that
/// disagree with the layer dimensions.
PayloadSpec payloads(const StrategyConfig &cfg, const ModelShape &shape,
                     PayloadMode mode = PayloadMode::kDerived, int bits_per_element = 32);

struct LinkRates {
  double a_bps = 0.0;  // camera A <-> BS at the interval start
  double b_bps = 0.0;  // camera B <-> BS
};

// T_FP = U(A) D_FP^A / R_A + U(B) D_FP^B / R_B (time division, seconds).
double latency_fp(const PayloadSpec &p, const LinkRates &rates, bool u_a, bool u_b);
double latency_bp(const PayloadSpec &p, const LinkRates &rates, bool u_a, bool u_b);

// N[k] = floor(tau / T_tot[k]).
std::uint64_t exchanges_per_interval(double tau_s, double t_tot_s);

/// Elapsed time until the n-th forward/backward exchange, evaluated exactly
/// as the closed-form expression reads, including its "+1" term:
///   k_n = max{k' : sum_{k<=k'} N[k] <= n} (at least 1),
///   T_n = sum_{k<k_n} T_tot[k] + (n - sum_{k<k_n} N[k] + 1) T_tot[k_n].
/// `t_tot[0]` is interval 1. Throws kRange if the series does not extend
/// past k_n.
double elapsed_time(std::uint64_t n, std::span<const double> t_tot, double tau_s);
std::size_t elapsed_interval(std::uint64_t n, std::span<const double> t_tot, double tau_s);

struct EnergyConstants {
  double add_j = 0.9e-12;
  double mult_j = 3.7e-12;
  double access_j = 640e-12;
};

// P = (N_add E_add + N_mult E_mult + N_param E_access) / tau.
double power_watts(const OpCounts &counts, double tau_s, const EnergyConstants &e = {});

struct NodeOps {
  OpCounts camera_a;
  OpCounts camera_b;
  OpCounts bs;
};

// Per-inference counts of each node for the given strategy; absent cameras
// report zero. Camera-side raw-image mixup and BS-side feature mixup /
// averaging are counted at the node that performs them.
NodeOps node_op_counts(const StrategyConfig &cfg, const ModelShape &shape);

struct IntervalTiming {
  double t_fp_s = 0.0;
  double t_bp_s = 0.0;
  double t_tot_s = 0.0;
};

struct ExchangeRecord {
  std::uint64_t step = 0;
  bool u_a = false;
  bool u_b = false;
};

/// Accumulated traffic of one training run plus the per-interval timing model.
class CostLedger {
 public:
  CostLedger() = default;
  explicit CostLedger(PayloadSpec payload) : payload_(payload) {}

  const PayloadSpec &payload() const { return payload_; }
  void record_exchange(bool u_a, bool u_b);

  std::uint64_t exchanges() const { return history_.size(); }
  std::uint64_t ul_bytes_a() const { return ul_a_; }
  std::uint64_t ul_bytes_b() const { return ul_b_; }
  std::uint64_t dl_bytes() const { return dl_; }
  const std::vector<ExchangeRecord> &history() const { return history_; }

  NodeOps ops;
  double t_comp_s = 1e-3;
  std::vector<IntervalTiming> intervals;

 private:
  PayloadSpec payload_;
  std::uint64_t ul_a_ = 0;
  std::uint64_t ul_b_ = 0;
  std::uint64_t dl_ = 0;
  std::vector<ExchangeRecord> history_;
};

/// T_FP/T_BP/T_tot for intervals k = 1..count using A(k*tau) from `trace`
/// (indexed cyclically when the run outlasts the trace). A protocol that
/// alternates cameras per exchange uses the mean of the two single-camera
/// interval times.
std::vector<IntervalTiming> interval_timings(const StrategyConfig &cfg, const PayloadSpec &p,
                                             const LinkParams &link, const ChannelTrace &trace,
                                             double t_comp_s, std::size_t count);

}  // namespace hetsl

#endif  // HETSL_COST_HPP_
