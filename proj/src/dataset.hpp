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

#ifndef HETSL_DATASET_HPP_
#define HETSL_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "scenario.hpp"
#include "split_model.hpp"

namespace hetsl {

inline constexpr std::uint8_t kDatasetFormatVersion = 1;

/// Frame and power recordings from which samples are windowed.
///
/// Camera A has c*K + 1 frames at t = j*tau/c, camera B has K + 1 frames at
/// t = j*tau, and the power series has K + look_ahead + 1 entries at
/// t = j*tau. Sample k (1..K) reads camera-A frames c(k-1)..ck, camera-B
/// frames k-1 and k, the trailing powers up to k, and labels with power
/// k + look_ahead.
struct Dataset {
  std::size_t K = 0;
  double tau_s = 0.1;
  int frame_ratio = 3;
  std::size_t height = 40;
  std::size_t width = 40;
  std::size_t look_ahead = 5;
  std::uint64_t seed = 0;
  std::vector<float> cam_a;
  std::vector<float> cam_b;
  std::vector<double> power_dbm;

  std::size_t frame_size() const { return height * width; }
  std::size_t cam_a_frames() const { return cam_a.size() / frame_size(); }
  std::size_t cam_b_frames() const { return cam_b.size() / frame_size(); }
  double label(std::int64_t k) const;
  // Throws kShape/kRange when the recordings do not cover every sample.
  void validate() const;
  friend bool operator==(const Dataset &, const Dataset &) = default;
};

// Renders both cameras and the power trace from a freshly generated scene.
Dataset build_dataset(const SceneConfig &cfg);
Dataset build_dataset(const SceneConfig &cfg, const ScenePath &scene);

struct DatasetSplit {
  std::vector<std::int64_t> train;
  std::vector<std::int64_t> test;
};

// Contiguous prefix {1..floor(ratio K)} / suffix split; no shuffling.
DatasetSplit split_dataset(std::size_t K, double ratio = 0.75);

/// Stacks the samples `ks` into network inputs. RSS and labels pass through
/// `scaler`; `n_rss` trailing powers are used per sample.
Batch make_batch(const Dataset &data, std::span<const std::int64_t> ks,
                 const PowerScaler &scaler, std::size_t n_rss = 2);

/// Directory layout: meta.txt, cam_a.bin, cam_b.bin, power.csv. Loading
/// distinguishes malformed headers (kFormat), short payloads (kTruncated)
/// and unsupported versions (kVersion).
void save_dataset(const Dataset &data, const std::filesystem::path &dir);
Dataset load_dataset(const std::filesystem::path &dir);

}  // namespace hetsl

#endif  // HETSL_DATASET_HPP_
