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

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <numeric>
#include <string>
#include <tuple>

#include "dataset.hpp"
#include "doctest.h"
#include "error.hpp"
#include "scenario.hpp"

using namespace hetsl;

namespace {

ScenePath standing_at(Point2 p) {
  ScenePath s;
  s.waypoints = {{0.0, p}, {100.0, p}};
  return s;
}

ScenePath walking(Point2 from, Point2 to, double duration_s) {
  ScenePath s;
  s.waypoints = {{0.0, from}, {duration_s, to}};
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

std::string slurp(const std::filesystem::path &p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

void spit(const std::filesystem::path &p, const std::string &bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out << bytes;
}

SceneConfig small_scene(std::uint64_t seed = 3) {
  SceneConfig cfg;
  cfg.K = 24;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("rendering") {
  const CameraPose front{{0.0, 0.0}, {0.0, 1.0}, 1.0, 4.0};

  TEST_CASE("blocker outside the field of view leaves the background") {
    for (Point2 p : {Point2{5.0, 2.0}, Point2{0.0, -1.0}, Point2{0.0, 6.0}}) {
      const auto img = render_depth(standing_at(p), front, 1.0, 40);
      CHECK(std::all_of(img.begin(), img.end(), [](double v) { return v == 1.0; }));
    }
  }

  TEST_CASE("centred blocker at half range") {
    const ScenePath scene = standing_at({0.0, 2.0});
    const auto img = render_depth(scene, front, 1.0, 40);
    // Columns whose centre lies within half the blocker width of the axis.
    const double pitch = 2.0 / 40.0;
    const auto top = static_cast<std::size_t>(std::floor(scene.blocker_top_fraction * 40.0));
    std::size_t patch = 0;
    for (std::size_t j = 0; j < 40; ++j) {
      const double u = -1.0 + (static_cast<double>(j) + 0.5) * pitch;
      const bool covered = std::abs(u) <= 0.25;
      for (std::size_t i = 0; i < 40; ++i) {
        const double expect = covered && i >= top ? 0.5 : 1.0;
        CHECK(img[i * 40 + j] == doctest::Approx(expect).epsilon(1e-15));
        patch += expect == 0.5 ? 1 : 0;
      }
    }
    CHECK(patch == 10 * (40 - top));
  }

  TEST_CASE("noise is seeded and bounded") {
    const ScenePath scene = standing_at({0.0, 2.0});
    std::mt19937_64 r1(9), r2(9);
    const auto a = render_depth(scene, front, 1.0, 40, 0.01, &r1);
    const auto b = render_depth(scene, front, 1.0, 40, 0.01, &r2);
    CHECK(a == b);
    CHECK(std::all_of(a.begin(), a.end(), [](double v) { return v >= 0.0 && v <= 1.0; }));
    CHECK(a != render_depth(scene, front, 1.0, 40));
    CHECK(code_of([&] { render_depth(scene, front, 1.0, 0); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("orthogonal cameras see sideways motion differently") {
    const CameraPose side{{3.0, 2.0}, {-1.0, 0.0}, 1.0, 4.0};
    const ScenePath scene = walking({-0.4, 2.0}, {0.4, 2.0}, 1.0);
    auto patch = [](const std::vector<double> &img) {
      double value = 1.0;
      std::size_t first = 40, last = 0;
      for (std::size_t j = 0; j < 40; ++j) {
        if (img[39 * 40 + j] < 1.0) {
          value = img[39 * 40 + j];
          first = std::min(first, j);
          last = std::max(last, j);
        }
      }
      return std::tuple{value, first, last};
    };
    const auto [fa0, fa_first0, fa_last0] = patch(render_depth(scene, front, 0.0, 40));
    const auto [fa1, fa_first1, fa_last1] = patch(render_depth(scene, front, 1.0, 40));
    CHECK(fa0 == fa1);
    CHECK(fa_first1 > fa_first0);
    const auto [sb0, sb_first0, sb_last0] = patch(render_depth(scene, side, 0.0, 40));
    const auto [sb1, sb_first1, sb_last1] = patch(render_depth(scene, side, 1.0, 40));
    CHECK(sb1 < sb0);
    CHECK(sb_first0 == sb_first1);
    CHECK(sb_last0 == sb_last1);
  }
}

TEST_SUITE("power trace") {
  double mean(const std::vector<double> &v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  }

  TEST_CASE("clear link stays near the line-of-sight power") {
    SceneConfig cfg;
    const auto p = synth_power_trace(standing_at({3.0, 2.0}), cfg, 400);
    CHECK(mean(p) == doctest::Approx(-29.0).epsilon(0.005));
    CHECK(std::all_of(p.begin(), p.end(), [](double v) { return std::abs(v + 29.0) < 2.5; }));
  }

  TEST_CASE("fully blocked link sits fifteen decibels lower") {
    SceneConfig cfg;
    const ScenePath scene = standing_at({0.0, 2.0});
    CHECK(occlusion_fraction(scene, 1.0) == 1.0);
    const auto p = synth_power_trace(scene, cfg, 400);
    CHECK(mean(p) == doctest::Approx(-44.0).epsilon(0.005));
    cfg.power_noise_db = 0.0;
    const auto clean = synth_power_trace(scene, cfg, 10);
    CHECK(std::all_of(clean.begin(), clean.end(), [](double v) { return v == -44.0; }));
  }

  TEST_CASE("straight crossing dips once and recovers") {
    SceneConfig cfg;
    cfg.power_noise_db = 0.0;
    const ScenePath scene = walking({-2.0, 2.0}, {2.0, 2.0}, 4.0);
    const auto p = synth_power_trace(scene, cfg, 41);
    const auto low = std::min_element(p.begin(), p.end()) - p.begin();
    for (long k = 1; k <= low; ++k) CHECK(p[k] <= p[k - 1]);
    for (long k = low + 1; k < 41; ++k) CHECK(p[k] >= p[k - 1]);
    CHECK(p.front() == -29.0);
    CHECK(p.back() == -29.0);
    CHECK(p[low] == -44.0);
  }

  TEST_CASE("blockage schedule brackets the crossing") {
    const ScenePath scene = walking({-2.0, 2.0}, {2.0, 2.0}, 4.0);
    const auto schedule = blockage_schedule(scene, 4.0);
    REQUIRE(schedule.size() == 1);
    // The blocker reaches the beam when |x| = (0.5 + 0.3) / 2.
    CHECK(schedule[0].start_s == doctest::Approx(1.6).epsilon(1e-12));
    CHECK(schedule[0].end_s == doctest::Approx(2.4).epsilon(1e-12));
  }

  TEST_CASE("attenuation from power") {
    const auto trace = attenuation_from_power({-29.0, -44.0, -20.0}, -29.0, 0.1);
    CHECK(trace.attenuation[0] == 1.0);
    CHECK(trace.attenuation[1] == doctest::Approx(std::pow(10.0, -1.5)).epsilon(1e-14));
    CHECK(trace.attenuation[2] == 1.0);
  }
}

TEST_SUITE("dataset") {
  TEST_CASE("frame and sample counts") {
    SceneConfig cfg = small_scene();
    const Dataset d = build_dataset(cfg);
    CHECK(d.cam_a_frames() == 3 * cfg.K + 1);
    CHECK(d.cam_b_frames() == cfg.K + 1);
    CHECK(d.power_dbm.size() == cfg.K + 6);
    const std::int64_t ks[] = {1, 7, 24};
    const Batch b = make_batch(d, ks, PowerScaler{});
    CHECK(b.cam_a.shape() == Shape{3, 4, 1, 40, 40});
    CHECK(b.cam_b.shape() == Shape{3, 2, 1, 40, 40});
    CHECK(b.rss.shape() == Shape{3, 2});
  }

  TEST_CASE("samples are aligned with their window") {
    SceneConfig cfg = small_scene();
    cfg.pixel_noise = 0.0;
    const ScenePath scene = generate_path(cfg);
    const Dataset d = build_dataset(cfg, scene);
    const std::size_t fs = 1600;
    for (std::int64_t k : {1, 2, 13, 24}) {
      const std::int64_t ks[] = {k};
      const Batch b = make_batch(d, ks, PowerScaler{});
      const double start = static_cast<double>(k - 1) * cfg.tau_s;
      for (std::size_t j = 0; j < 4; ++j) {
        const double t = start + static_cast<double>(j) * cfg.tau_s / 3.0;
        CHECK(t >= start - 1e-12);
        CHECK(t <= start + cfg.tau_s + 1e-12);
        const auto img = render_depth(scene, cfg.camera_a, t, 40);
        for (std::size_t i = 0; i < fs; i += 37) {
          CHECK(b.cam_a[j * fs + i] == static_cast<double>(static_cast<float>(img[i])));
        }
      }
      for (std::size_t j = 0; j < 2; ++j) {
        const auto img = render_depth(scene, cfg.camera_b, start + static_cast<double>(j) * cfg.tau_s, 40);
        for (std::size_t i = 0; i < fs; i += 37) {
          CHECK(b.cam_b[j * fs + i] == static_cast<double>(static_cast<float>(img[i])));
        }
      }
      const auto uk = static_cast<std::size_t>(k);
      CHECK(b.rss[0] == d.power_dbm[uk - 1]);
      CHECK(b.rss[1] == d.power_dbm[uk]);
      CHECK(b.target[0] == d.power_dbm[uk + 5]);
      CHECK(d.label(k) == d.power_dbm[uk + 5]);
    }
    CHECK(code_of([&] { d.label(0); }) == ErrorCode::kRange);
    CHECK(code_of([&] { d.label(25); }) == ErrorCode::kRange);
    const std::int64_t outside[] = {25};
    CHECK(code_of([&] { make_batch(d, outside, PowerScaler{}); }) == ErrorCode::kRange);
  }

  TEST_CASE("upcoming blockage is visible to a camera") {
    SceneConfig cfg;
    cfg.K = 600;
    const ScenePath scene = generate_path(cfg);
    int blocked = 0;
    for (std::size_t k = 1; k <= cfg.K; ++k) {
      const double t = static_cast<double>(k) * cfg.tau_s;
      if (occlusion_fraction(scene, t + 5.0 * cfg.tau_s) == 0.0) continue;
      ++blocked;
      const auto a = render_depth(scene, cfg.camera_a, t, 40);
      const auto b = render_depth(scene, cfg.camera_b, t, 40);
      auto sees = [](const std::vector<double> &img) {
        return std::any_of(img.begin(), img.end(), [](double v) { return v < 1.0; });
      };
      CHECK((sees(a) || sees(b)));
    }
    CHECK(blocked > 0);
  }

  TEST_CASE("generation is a function of the seed") {
    const Dataset a = build_dataset(small_scene(5));
    const Dataset b = build_dataset(small_scene(5));
    CHECK(a == b);
    const Dataset c = build_dataset(small_scene(6));
    CHECK(c.power_dbm != a.power_dbm);
  }

  TEST_CASE("contiguous split") {
    const auto big = split_dataset(3840);
    CHECK(big.train.size() == 2880);
    CHECK(big.test.size() == 960);
    CHECK(big.train.back() + 1 == big.test.front());
    const auto tiny = split_dataset(4);
    CHECK(tiny.train == std::vector<std::int64_t>{1, 2, 3});
    CHECK(tiny.test == std::vector<std::int64_t>{4});
    for (std::size_t K = 2; K < 200; ++K) {
      const auto s = split_dataset(K);
      CHECK(s.train.size() + s.test.size() == K);
      CHECK(s.train.front() == 1);
      CHECK(s.test.back() == static_cast<std::int64_t>(K));
      CHECK(s.train.back() < s.test.front());
    }
    CHECK(code_of([] { split_dataset(1); }) == ErrorCode::kInvalidArgument);
    CHECK(code_of([] { split_dataset(10, 1.0); }) == ErrorCode::kInvalidArgument);
  }

  TEST_CASE("save and load round trip") {
    const Dataset d = build_dataset(small_scene());
    const auto dir = std::filesystem::temp_directory_path() / "hetsl_test_dataset";
    std::filesystem::remove_all(dir);
    save_dataset(d, dir);
    CHECK(load_dataset(dir) == d);

    const std::string cam_a = slurp(dir / "cam_a.bin");
    spit(dir / "cam_a.bin", cam_a.substr(0, cam_a.size() - 4));
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kTruncated);
    spit(dir / "cam_a.bin", cam_a.substr(0, 10));
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kTruncated);
    std::string versioned = cam_a;
    versioned[4] = 7;
    spit(dir / "cam_a.bin", versioned);
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kVersion);
    std::string magic = cam_a;
    magic[0] = 'Z';
    spit(dir / "cam_a.bin", magic);
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kFormat);
    spit(dir / "cam_a.bin", cam_a);
    CHECK(load_dataset(dir) == d);

    const std::string meta = slurp(dir / "meta.txt");
    std::string meta_v2 = meta;
    meta_v2.replace(meta_v2.find("format_version=1"), 16, "format_version=2");
    spit(dir / "meta.txt", meta_v2);
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kVersion);
    spit(dir / "meta.txt", meta + "garbage line\n");
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kFormat);
    spit(dir / "meta.txt", meta);

    const std::string power = slurp(dir / "power.csv");
    spit(dir / "power.csv", power.substr(0, power.rfind('\n', power.size() - 2) + 1));
    CHECK(code_of([&] { load_dataset(dir); }) == ErrorCode::kTruncated);
    std::filesystem::remove_all(dir);
  }
}
