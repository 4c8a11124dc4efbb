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

#include <cmath>
#include <functional>
#include <filesystem>
#include <random>
#include <vector>

#include "channel.hpp"
#include "cost.hpp"
#include "doctest.h"
#include "error.hpp"
#include "model_shape.hpp"
#include "op_count.hpp"
#include "oracles.hpp"

using namespace hetsl;

namespace {

// Shannon rate written out directly from dB quantities.
double shannon(double bandwidth_hz, double rx_dbm, double noise_dbm) {
  const double snr = std::pow(10.0, (rx_dbm - noise_dbm) / 10.0);
  return bandwidth_hz * std::log2(1.0 + snr);
}

double path_loss_rx_dbm(double d) {
  return 10.0 + 8.0 + 24.0 - (68.0 + 10.0 * 1.6 * std::log10(d / 1.0));
}

StrategyConfig strategy(Protocol p, Balance b = Balance::kDisc, Aggregate a = Aggregate::kConcAgg) {
  StrategyConfig s;
  s.protocol = p;
  s.balance = b;
  s.aggregate = a;
  return s;
}

ErrorCode code_of(const std::function<void()> &fn) {
  try {
    fn();
  } catch (const Error &e) {
    return e.code();
  }
  return ErrorCode{};
}

}  // namespace

TEST_SUITE("channel") {
  TEST_CASE("line-of-sight rate of the camera-A link") {
    const LinkParams link;
    const double r = rate_for_attenuation(1.0, link);
    CHECK(r == doctest::Approx(shannon(1.76e9, -29.0, -60.0)).epsilon(1e-12));
    CHECK(r / 1e9 == doctest::Approx(18.13).epsilon(0.001));
  }

  TEST_CASE("fifteen decibels of attenuation") {
    const LinkParams link;
    const double r = rate_for_attenuation(std::pow(10.0, -1.5), link);
    CHECK(r == doctest::Approx(shannon(1.76e9, -29.0 - 15.0, -60.0)).epsilon(1e-12));
    CHECK(r / 1e9 == doctest::Approx(9.4).epsilon(0.005));
  }

  TEST_CASE("camera-B link from the path-loss law") {
    LinkParams link;
    link.distance_m = 1.0;
    CHECK(camera_b_los_power_dbm(link) == doctest::Approx(-26.0).epsilon(1e-12));
    CHECK(rate_cam_b(link) / 1e9 == doctest::Approx(19.9).epsilon(0.002));

    const LinkParams standard;
    CHECK(camera_b_los_power_dbm(standard) == doctest::Approx(path_loss_rx_dbm(1.2)).epsilon(1e-12));
    CHECK(rate_cam_b(standard) > 19e9);
    CHECK(rate_cam_b(standard) < 20e9);
  }

  TEST_CASE("doubling the distance costs 4.8 dB") {
    LinkParams near, far;
    near.distance_m = 1.5;
    far.distance_m = 3.0;
    const double drop = camera_b_los_power_dbm(near) - camera_b_los_power_dbm(far);
    CHECK(drop == doctest::Approx(16.0 * std::log10(2.0)).epsilon(1e-12));
    CHECK(drop == doctest::Approx(4.8).epsilon(0.005));
  }

  TEST_CASE("rates increase with attenuation ratio, power and bandwidth") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> att(1e-4, 1.0);
    LinkParams link;
    for (int i = 0; i < 500; ++i) {
      double lo = att(rng), hi = att(rng);
      if (lo > hi) std::swap(lo, hi);
      if (lo == hi) continue;
      CHECK(rate_for_attenuation(lo, link) > 0.0);
      CHECK(rate_for_attenuation(lo, link) < rate_for_attenuation(hi, link));
    }
    LinkParams wider = link, stronger = link;
    wider.bandwidth_hz *= 2.0;
    stronger.los_power_dbm += 1.0;
    CHECK(rate_for_attenuation(0.5, wider) > rate_for_attenuation(0.5, link));
    CHECK(rate_for_attenuation(0.5, stronger) > rate_for_attenuation(0.5, link));
  }

  TEST_CASE("both link formulas agree at equal received power") {
    LinkParams link;
    link.distance_m = 1.0;
    LinkParams as_a = link;
    as_a.los_power_dbm = camera_b_los_power_dbm(link);
    CHECK(rate_for_attenuation(1.0, as_a) == doctest::Approx(rate_cam_b(link)).epsilon(1e-14));
  }

  TEST_CASE("staircase lookup is exact") {
    ChannelTrace trace;
    trace.tau_s = 0.1;
    trace.attenuation = {1.0, 0.5, 0.25, 0.125};
    for (std::size_t k = 0; k < 4; ++k) {
      const double start = 0.1 * static_cast<double>(k);
      CHECK(trace.at(start) == trace.attenuation[k]);
      CHECK(trace.at(start + 0.05) == trace.attenuation[k]);
      CHECK(trace.at(std::nextafter(start + 0.1, 0.0)) == trace.attenuation[k]);
    }
    CHECK(rate_cam_a(0.15, LinkParams{}, trace) == rate_for_attenuation(0.5, LinkParams{}));
    CHECK(code_of([&] { trace.at(0.4); }) == ErrorCode::kRange);
    CHECK(code_of([&] { trace.at(-0.01); }) == ErrorCode::kRange);
  }

  TEST_CASE("synthesized blockage covers whole intervals") {
    const BlockageInterval blocked[] = {{0.5, 0.8}};
    const ChannelTrace sharp = synth_attenuation_trace(blocked, 15.0, 10, 0.1, 0);
    REQUIRE(sharp.attenuation.size() == 11);
    int deep = 0;
    for (std::size_t k = 0; k < 11; ++k) {
      const bool inside = k >= 5 && k < 8;
      CHECK(sharp.attenuation[k] == (inside ? std::pow(10.0, -1.5) : 1.0));
      deep += inside ? 1 : 0;
    }
    CHECK(deep == 3);

    const ChannelTrace ramped = synth_attenuation_trace(blocked, 15.0, 10, 0.1, 1);
    CHECK(ramped.attenuation[4] == doctest::Approx(std::pow(10.0, -0.75)).epsilon(1e-12));
    CHECK(ramped.attenuation[8] == doctest::Approx(std::pow(10.0, -0.75)).epsilon(1e-12));
    CHECK(ramped.attenuation[6] == sharp.attenuation[6]);
    CHECK(ramped.attenuation[2] == 1.0);
  }

  TEST_CASE("invalid blockage schedules") {
    const BlockageInterval backwards[] = {{0.5, 0.4}};
    const BlockageInterval overlap[] = {{0.1, 0.5}, {0.4, 0.6}};
    CHECK(code_of([&] { synth_attenuation_trace(backwards, 15.0, 10, 0.1); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { synth_attenuation_trace(overlap, 15.0, 10, 0.1); }) ==
          ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { synth_attenuation_trace({}, -1.0, 10, 0.1); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("trace CSV round trip") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> att(1e-3, 1.0);
    ChannelTrace trace;
    for (int i = 0; i < 50; ++i) trace.attenuation.push_back(att(rng));
    const auto path = std::filesystem::temp_directory_path() / "hetsl_test_trace.csv";
    write_trace_csv(trace, path);
    const ChannelTrace back = read_trace_csv(path, trace.tau_s);
    CHECK(back.attenuation == trace.attenuation);
    std::filesystem::remove(path);
  }
}

TEST_SUITE("cost model") {
  TEST_CASE("payload sizes") {
    const ModelShape shape;
    const auto disc = payloads(strategy(Protocol::kHetSLAgg), shape);
    CHECK(disc.fp_bytes_a == 3200);
    CHECK(disc.fp_bytes_b == 3200);
    CHECK(disc.bp_bytes == 921600);
    const auto mmix = payloads(strategy(Protocol::kHetSLAgg, Balance::kDisc, Aggregate::kMmixAgg), shape);
    CHECK(mmix.bp_bytes == 614400);
    const auto mixint = payloads(strategy(Protocol::kHetSLAgg, Balance::kMixInt), shape);
    CHECK(mixint.fp_bytes_a == 6400);
    CHECK(mixint.fp_bytes_b == 6400);
    const auto mm = payloads(strategy(Protocol::kHetSLAgg, Balance::kMmixInt), shape);
    CHECK(mm.fp_bytes_a == 6400);
    CHECK(mm.fp_bytes_b == 3200);
    const auto rf = payloads(strategy(Protocol::kRFOnly), shape);
    CHECK(rf.fp_bytes_a + rf.fp_bytes_b + rf.bp_bytes == 0);

    const auto quoted = payloads(strategy(Protocol::kHetSLAgg, Balance::kMixInt, Aggregate::kMmixAgg),
                                 shape, PayloadMode::kFixedConstants);
    CHECK(quoted.bp_bytes == 1228800);
    CHECK(code_of([&] { payloads(strategy(Protocol::kHetSLAgg), shape, PayloadMode::kDerived, 12); }) ==
          ErrorCode::kInvalidArgument);
  }

  TEST_CASE("MmixAgg gradient payload ratio") {
    const ModelShape shape;
    for (Balance b : {Balance::kDisc, Balance::kMixInt, Balance::kMmixInt}) {
      const auto conc = payloads(strategy(Protocol::kHetSLAgg, b, Aggregate::kConcAgg), shape);
      const auto mmix = payloads(strategy(Protocol::kHetSLAgg, b, Aggregate::kMmixAgg), shape);
      const double na = static_cast<double>(camera_frames(strategy(Protocol::kHetSLAgg, b), Camera::kA));
      CHECK(mmix.bp_bytes < conc.bp_bytes);
      CHECK(static_cast<double>(mmix.bp_bytes) / static_cast<double>(conc.bp_bytes) ==
            doctest::Approx((na + 2.0) / (2.0 * na + 2.0)).epsilon(1e-15));
    }
  }

  TEST_CASE("forward latency") {
    PayloadSpec p;
    p.fp_bytes_a = p.fp_bytes_b = 3200;
    const LinkRates rates{18.13e9, 19.9e9};
    const double t = latency_fp(p, rates, true, true);
    CHECK(t == doctest::Approx(25600.0 / 18.13e9 + 25600.0 / 19.9e9).epsilon(1e-14));
    CHECK(t * 1e6 == doctest::Approx(2.70).epsilon(0.005));
    CHECK(latency_fp(p, rates, true, false) == doctest::Approx(25600.0 / 18.13e9).epsilon(1e-14));
    CHECK(latency_fp(p, rates, false, false) == 0.0);
    CHECK(code_of([&] { latency_fp(p, {0.0, 1e9}, true, false); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("backward latency") {
    PayloadSpec p;
    p.bp_bytes = 614400;
    const LinkRates rates{19e9, 19e9};
    const double t = latency_bp(p, rates, true, true);
    CHECK(t * 1e6 == doctest::Approx(2.0 * 4915200.0 / 19e9 * 1e6).epsilon(1e-12));
    CHECK(t * 1e6 == doctest::Approx(517.0).epsilon(0.002));
    CHECK(latency_bp(p, rates, true, false) == latency_bp(p, rates, false, true));
    CHECK(code_of([&] { latency_bp(p, {1e9, -1.0}, false, true); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("exchanges per interval") {
    CHECK(exchanges_per_interval(0.1, 0.03) == 3);
    CHECK(exchanges_per_interval(0.1, 0.1) == 1);
    CHECK(exchanges_per_interval(0.1, 0.2) == 0);
    CHECK(code_of([] { exchanges_per_interval(0.1, 0.0); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("elapsed time evaluates the definition literally") {
    const std::vector<double> constant(10, 0.03);
    CHECK(elapsed_time(5, constant, 0.1) == doctest::Approx(0.18).epsilon(1e-12));
    CHECK(elapsed_time(1, constant, 0.1) == doctest::Approx(2.0 * 0.03).epsilon(1e-12));
    // The definition is not monotone across an interval boundary.
    CHECK(elapsed_time(6, constant, 0.1) == doctest::Approx(0.15).epsilon(1e-12));

    const std::vector<double> mixed{0.03, 0.05, 0.02};
    // Prefix sums of N are 3, 5, 10, so n = 7 falls in interval 2.
    CHECK(elapsed_interval(7, mixed, 0.1) == 2);
    CHECK(elapsed_time(7, mixed, 0.1) == doctest::Approx(0.03 + (7.0 - 3.0 + 1.0) * 0.05).epsilon(1e-12));

    CHECK(code_of([&] { elapsed_time(0, constant, 0.1); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([&] { elapsed_time(30, constant, 0.1); }) == ErrorCode::kRange);
  }

  TEST_CASE("event placement oracle") {
    const std::vector<double> constant(10, 0.03);
    CHECK(oracle::event_elapsed_time(1, constant, 0.1) == doctest::Approx(0.03).epsilon(1e-12));
    CHECK(oracle::event_elapsed_time(5, constant, 0.1) == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(oracle::event_elapsed_time(31, constant, 0.1) < 0.0);
  }

  TEST_CASE("operating power") {
    OpCounts one_add;
    one_add.adds = 1;
    CHECK(power_watts(one_add, 0.1) == doctest::Approx(9e-12).epsilon(1e-12));
    OpCounts memory;
    memory.params = 153600;
    CHECK(power_watts(memory, 0.1) * 1e3 == doctest::Approx(0.98304).epsilon(1e-12));
    CHECK(code_of([&] { power_watts(memory, 0.0); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("ledger accounting") {
    PayloadSpec p = payloads(strategy(Protocol::kHetSLAgg), ModelShape{});
    CostLedger ledger(p);
    std::uint64_t last_total = 0;
    for (int i = 0; i < 5; ++i) {
      ledger.record_exchange(i % 2 == 0, true);
      const std::uint64_t total = ledger.ul_bytes_a() + ledger.ul_bytes_b() + ledger.dl_bytes();
      CHECK(total >= last_total);
      last_total = total;
    }
    CHECK(ledger.ul_bytes_a() == 3 * 3200);
    CHECK(ledger.ul_bytes_b() == 5 * 3200);
    CHECK(ledger.dl_bytes() == 8 * 921600);

    CostLedger rf(payloads(strategy(Protocol::kCamARF), ModelShape{}));
    CHECK(code_of([&] { rf.record_exchange(false, true); }) == ErrorCode::kState);
  }

  TEST_CASE("interval timings follow the trace") {
    const ModelShape shape;
    const auto cfg = strategy(Protocol::kHetSLAgg);
    const PayloadSpec p = payloads(cfg, shape);
    const LinkParams link;
    ChannelTrace trace;
    trace.attenuation = {1.0, 1.0, std::pow(10.0, -1.5), 1.0};
    const auto timings = interval_timings(cfg, p, link, trace, 1e-3, 3);
    REQUIRE(timings.size() == 3);
    const double rb = rate_cam_b(link);
    for (std::size_t k = 1; k <= 3; ++k) {
      const double ra = rate_for_attenuation(trace.attenuation[k], link);
      const auto &t = timings[k - 1];
      CHECK(t.t_fp_s == doctest::Approx(25600.0 / ra + 25600.0 / rb).epsilon(1e-13));
      CHECK(t.t_bp_s == doctest::Approx(7372800.0 / ra + 7372800.0 / rb).epsilon(1e-13));
      CHECK(t.t_tot_s == doctest::Approx(t.t_fp_s + t.t_bp_s + 1e-3).epsilon(1e-15));
    }
    CHECK(timings[1].t_tot_s > timings[0].t_tot_s);
  }

  TEST_CASE("node operation counts shrink with MmixAgg") {
    const ModelShape shape;
    for (Balance b : {Balance::kDisc, Balance::kMixInt, Balance::kMmixInt}) {
      const auto conc = node_op_counts(strategy(Protocol::kHetSLAgg, b, Aggregate::kConcAgg), shape);
      const auto mmix = node_op_counts(strategy(Protocol::kHetSLAgg, b, Aggregate::kMmixAgg), shape);
      CHECK(power_watts(mmix.bs, 0.1) < power_watts(conc.bs, 0.1));
      CHECK(mmix.camera_a == conc.camera_a);
    }
    const auto rf = node_op_counts(strategy(Protocol::kRFOnly), shape);
    CHECK(rf.camera_a == OpCounts{});
    CHECK(rf.camera_b == OpCounts{});
  }
}
