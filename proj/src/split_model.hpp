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

#ifndef HETSL_SPLIT_MODEL_HPP_
#define HETSL_SPLIT_MODEL_HPP_

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "adam.hpp"
#include "cost.hpp"
#include "interpolation.hpp"
#include "layers.hpp"
#include "model_shape.hpp"
#include "strategy.hpp"

namespace hetsl {

/// One mini-batch in network units. Camera-A frames cover the look-back
/// window on the fast grid (c + 1 frames), camera-B frames sit on the two
/// window ends. `rss` and `target` are already normalized by the model's
/// PowerScaler.
struct Batch {
  Tensor cam_a;   // [B, c + 1, 1, S, S]
  Tensor cam_b;   // [B, 2, 1, S, S]
  Tensor rss;     // [B, n_rss]
  Tensor target;  // [B]
  std::vector<std::int64_t> k;

  std::size_t size() const { return target.empty() ? 0 : target.dim(0); }
};

/// Affine map between dBm and the network's regression units.
struct PowerScaler {
  double offset_dbm = 0.0;
  double scale_db = 1.0;

  double normalize(double p_dbm) const { return (p_dbm - offset_dbm) / scale_db; }
  double denormalize(double v) const { return v * scale_db + offset_dbm; }
  // Mean and standard deviation of `powers`; scale falls back to 1 for a
  // constant series.
  static PowerScaler fit(std::span<const double> powers);
  friend bool operator==(const PowerScaler &, const PowerScaler &) = default;
};

struct NamedParameter {
  std::string name;
  Parameter *param;
};

/// Camera-side stack: conv1, norm1, conv2, norm2, pool, recurrent1.
class CameraSegment {
 public:
  CameraSegment(std::string prefix, const ModelShape &shape);

  void init(std::mt19937_64 &rng);
  // [B, T, 1, S, S] -> [B, T, hidden, S/2, S/2]
  Tensor forward(const Tensor &frames, Mode mode);
  Tensor backward(const Tensor &grad_features);

  std::vector<Parameter *> parameters();
  // Parameters and running statistics, fully qualified.
  std::vector<NamedTensorRef> state();
  const std::string &prefix() const { return prefix_; }

  Conv2D conv1;
  BatchNorm norm1;
  Conv2D conv2;
  BatchNorm norm2;
  AvgPool pool;
  ConvLSTM recurrent1;

 private:
  std::vector<Layer *> layers();
  std::string prefix_;
};

/// BS-side head: recurrent2 over broadcast RSS maps, then fc1 -> ReLU -> fc2
/// on [flattened image features, flattened RSS features].
class BsSegment {
 public:
  BsSegment(const ModelShape &shape, std::size_t image_frames);

  void init(std::mt19937_64 &rng);
  // `features` is [B, N_agg, hidden, F, F] or empty when no camera is used.
  Tensor forward(const Tensor &features, const Tensor &rss, Mode mode);
  // Returns d(loss)/d(features); empty when no camera is used.
  Tensor backward(const Tensor &grad_prediction);

  std::vector<Parameter *> parameters();
  std::vector<NamedTensorRef> state();
  std::size_t image_frames() const { return image_frames_; }

  ConvLSTM recurrent2;
  Dense fc1;
  ReLU relu;
  Dense fc2;

 private:
  ModelShape shape_;
  std::size_t image_frames_;
  Shape feature_shape_;
};

// Lifts each scalar in [B, n] to a constant map: [B, n, 1, F, F].
Tensor broadcast_rss(const Tensor &rss, std::size_t size);

struct NodeOptimizers {
  AdamState camera_a;
  AdamState camera_b;
  AdamState bs;
};

/// Round-robin camera selection for HetSLFedAvg; one round is one step per
/// camera, and replicas are averaged after every `rounds_per_average` rounds.
struct FedAvgSchedule {
  std::uint64_t rounds_per_average = 1;
  std::uint64_t step = 0;

  Camera camera() const { return step % 2 == 0 ? Camera::kA : Camera::kB; }
  bool average_after_step() const {
    return (step + 1) % (2 * rounds_per_average) == 0;
  }
};

/// Intermediate values of one forward pass, kept for the split backward.
struct ForwardTrace {
  Tensor prediction;      // [B, 1], network units
  Tensor activation_a;    // uploaded by camera A (empty if unused)
  Tensor activation_b;    // uploaded by camera B (empty if unused)
  Tensor aggregated;      // BS-side fc input images (empty for RF_only)
  std::optional<Camera> fedavg_camera;
};

class SplitModel {
 public:
  SplitModel(const StrategyConfig &cfg, const ModelShape &shape, std::uint64_t seed);

  const StrategyConfig &config() const { return cfg_; }
  const ModelShape &shape() const { return shape_; }

  // Camera-side inputs after frame-rate balancing at the camera.
  Tensor camera_input(const Batch &batch, Camera cam) const;

  ForwardTrace forward(const Batch &batch, Mode mode);
  // HetSLFedAvg pass through one camera replica.
  ForwardTrace forward_via(const Batch &batch, Camera cam, Mode mode);

  /// Zeroes gradients, runs a Train-mode forward pass and back-propagates
  /// the batch-mean squared error. Returns the loss in network units.
  double compute_gradients(const Batch &batch);
  double compute_gradients_via(const Batch &batch, Camera cam);

  // Gradients w.r.t. the uploaded activations from the last backward pass.
  const Tensor &boundary_grad(Camera cam) const;

  /// Predictions in dBm (Eval mode). HetSLFedAvg averages the predictions
  /// made through the two camera replicas.
  std::vector<double> predict(const Batch &batch);

  // Named parameters and buffers in checkpoint order.
  std::vector<NamedTensorRef> state();
  std::vector<Parameter *> parameters();

  CameraSegment *camera(Camera cam);
  BsSegment &bs() { return *bs_; }

  PowerScaler scaler;

 private:
  Tensor run_camera(const Batch &batch, Camera cam, Mode mode);
  Tensor bs_side_frames(const Tensor &activation, Camera cam) const;
  void backward_from(const ForwardTrace &trace, const Tensor &grad_prediction);

  StrategyConfig cfg_;
  ModelShape shape_;
  std::unique_ptr<CameraSegment> camera_a_;
  std::unique_ptr<CameraSegment> camera_b_;
  std::unique_ptr<BsSegment> bs_;
  InterpolationPlan discard_plan_;  // fast grid -> whole units
  InterpolationPlan mixup_plan_;    // whole units -> fast grid
  Tensor boundary_grad_a_;
  Tensor boundary_grad_b_;
  std::optional<ForwardTrace> last_;
};

// Batch-mean of (prediction - target)^2 and its gradient w.r.t. prediction.
double mse_loss(const Tensor &prediction, const Tensor &target, Tensor *grad = nullptr);

/// One HetSLAgg optimization step (camera upload, BS update, gradient
/// download, camera update). Also used for the single-camera and RF-only
/// baselines. Returns the loss in network units.
double train_step_hetslagg(SplitModel &model, const Batch &batch, NodeOptimizers &opt,
                           CostLedger &ledger);

/// One HetSLFedAvg step through the scheduled camera, followed by replica
/// averaging at the end of each averaging period.
double train_step_hetslfedavg(SplitModel &model, const Batch &batch, NodeOptimizers &opt,
                              CostLedger &ledger, FedAvgSchedule &schedule);

// Replaces both camera replicas' parameters and running statistics by
// their elementwise mean.
void average_camera_replicas(SplitModel &model);

}  // namespace hetsl

#endif  // HETSL_SPLIT_MODEL_HPP_
