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

#include "split_model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "error.hpp"

namespace hetsl {
namespace {

void qualify(Layer &layer, const std::string &prefix) {
  for (Parameter *p : layer.parameters()) p->name = prefix + "." + p->name;
}

void append_state(std::vector<NamedTensorRef> &out, Layer &layer, const std::string &prefix) {
  for (Parameter *p : layer.parameters()) out.push_back({p->name, &p->value});
  for (const NamedTensorRef &b : layer.buffers()) out.push_back({prefix + "." + b.name, b.tensor});
}

std::vector<std::int64_t> grid(int c, bool fast) { return window_ticks(1, c, fast); }

}  // namespace

PowerScaler PowerScaler::fit(std::span<const double> powers) {
  if (powers.empty()) fail(ErrorCode::kInvalidArgument, "PowerScaler::fit: no samples");
  const double n = static_cast<double>(powers.size());
  const double mean = std::accumulate(powers.begin(), powers.end(), 0.0) / n;
  double var = 0.0;
  for (double p : powers) var += (p - mean) * (p - mean);
  const double sd = std::sqrt(var / n);
  return {mean, sd > 1e-12 ? sd : 1.0};
}

// ---------------------------------------------------------------------------
// CameraSegment

CameraSegment::CameraSegment(std::string prefix, const ModelShape &shape)
    : conv1(1, shape.conv_filters, shape.kernel),
      norm1(shape.conv_filters),
      conv2(shape.conv_filters, shape.conv_filters, shape.kernel),
      norm2(shape.conv_filters),
      pool(shape.conv_filters, 2),
      recurrent1(shape.conv_filters, shape.camera_hidden, shape.kernel),
      prefix_(std::move(prefix)) {
  qualify(conv1, prefix_ + ".conv1");
  qualify(norm1, prefix_ + ".norm1");
  qualify(conv2, prefix_ + ".conv2");
  qualify(norm2, prefix_ + ".norm2");
  qualify(recurrent1, prefix_ + ".recurrent1");
}

std::vector<Layer *> CameraSegment::layers() {
  return {&conv1, &norm1, &conv2, &norm2, &pool, &recurrent1};
}

void CameraSegment::init(std::mt19937_64 &rng) {
  conv1.init_glorot(rng);
  conv2.init_glorot(rng);
  recurrent1.init_glorot(rng);
}

Tensor CameraSegment::forward(const Tensor &frames, Mode mode) {
  Tensor x = frames;
  for (Layer *layer : layers()) x = layer->forward(x, mode);
  return x;
}

Tensor CameraSegment::backward(const Tensor &grad_features) {
  Tensor g = grad_features;
  auto stack = layers();
  for (auto it = stack.rbegin(); it != stack.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter *> CameraSegment::parameters() {
  std::vector<Parameter *> out;
  for (Layer *layer : layers()) {
    for (Parameter *p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<NamedTensorRef> CameraSegment::state() {
  std::vector<NamedTensorRef> out;
  append_state(out, conv1, prefix_ + ".conv1");
  append_state(out, norm1, prefix_ + ".norm1");
  append_state(out, conv2, prefix_ + ".conv2");
  append_state(out, norm2, prefix_ + ".norm2");
  append_state(out, recurrent1, prefix_ + ".recurrent1");
  return out;
}

// ---------------------------------------------------------------------------
// BsSegment

Tensor broadcast_rss(const Tensor &rss, std::size_t size) {
  if (rss.rank() != 2) fail(ErrorCode::kShape, "broadcast_rss: expected [B, n], got " + shape_str(rss.shape()));
  const std::size_t batch = rss.dim(0), n = rss.dim(1), plane = size * size;
  Tensor maps({batch, n, 1, size, size});
  for (std::size_t i = 0; i < batch * n; ++i) {
    std::fill(maps.data() + i * plane, maps.data() + (i + 1) * plane, rss[i]);
  }
  return maps;
}

BsSegment::BsSegment(const ModelShape &shape, std::size_t image_frames)
    : recurrent2(1, shape.rss_hidden, shape.kernel),
      fc1(shape.feature_plane() * (image_frames * shape.camera_hidden + shape.n_rss * shape.rss_hidden),
          shape.fc_units),
      relu(shape.fc_units),
      fc2(shape.fc_units, 1),
      shape_(shape),
      image_frames_(image_frames) {
  qualify(recurrent2, "bs.recurrent2");
  qualify(fc1, "bs.fc1");
  qualify(fc2, "bs.fc2");
}

void BsSegment::init(std::mt19937_64 &rng) {
  recurrent2.init_glorot(rng);
  fc1.init_glorot(rng);
  fc2.init_glorot(rng);
}

Tensor BsSegment::forward(const Tensor &features, const Tensor &rss, Mode mode) {
  const std::size_t f = shape_.feature_size();
  if (rss.rank() != 2 || rss.dim(1) != shape_.n_rss) {
    fail(ErrorCode::kShape, "BS: RSS input " + shape_str(rss.shape()) + " needs " +
                                std::to_string(shape_.n_rss) + " values per sample");
  }
  const std::size_t batch = rss.dim(0);
  std::size_t image_elems = 0;
  if (image_frames_ == 0) {
    if (!features.empty()) fail(ErrorCode::kShape, "BS: image features given to an RF-only head");
  } else {
    require_shape(features, {batch, image_frames_, shape_.camera_hidden, f, f}, "BS features");
    image_elems = features.size() / batch;
  }
  feature_shape_ = features.shape();

  const Tensor rss_features = recurrent2.forward(broadcast_rss(rss, f), mode);
  const std::size_t rss_elems = rss_features.size() / batch;
  const std::size_t width = image_elems + rss_elems;
  Tensor flat({batch, width});
  for (std::size_t b = 0; b < batch; ++b) {
    double *row = flat.data() + b * width;
    if (image_elems) {
      std::copy_n(features.data() + b * image_elems, image_elems, row);
    }
    std::copy_n(rss_features.data() + b * rss_elems, rss_elems, row + image_elems);
  }
  return fc2.forward(relu.forward(fc1.forward(flat, mode), mode), mode);
}

Tensor BsSegment::backward(const Tensor &grad_prediction) {
  const Tensor grad_flat = fc1.backward(relu.backward(fc2.backward(grad_prediction)));
  const std::size_t batch = grad_flat.dim(0), width = grad_flat.dim(1);
  const std::size_t f = shape_.feature_size();
  const std::size_t rss_elems = shape_.n_rss * shape_.rss_hidden * f * f;
  const std::size_t image_elems = width - rss_elems;

  Tensor grad_rss({batch, shape_.n_rss, shape_.rss_hidden, f, f});
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(grad_flat.data() + b * width + image_elems, rss_elems,
                grad_rss.data() + b * rss_elems);
  }
  recurrent2.backward(grad_rss);  // RSS inputs are data; only weights need gradients.

  if (image_elems == 0) return {};
  Tensor grad_features(feature_shape_);
  for (std::size_t b = 0; b < batch; ++b) {
    std::copy_n(grad_flat.data() + b * width, image_elems, grad_features.data() + b * image_elems);
  }
  return grad_features;
}

std::vector<Parameter *> BsSegment::parameters() {
  std::vector<Parameter *> out;
  for (Layer *layer : std::initializer_list<Layer *>{&recurrent2, &fc1, &fc2}) {
    for (Parameter *p : layer->parameters()) out.push_back(p);
  }
  return out;
}

std::vector<NamedTensorRef> BsSegment::state() {
  std::vector<NamedTensorRef> out;
  append_state(out, recurrent2, "bs.recurrent2");
  append_state(out, fc1, "bs.fc1");
  append_state(out, fc2, "bs.fc2");
  return out;
}

// ---------------------------------------------------------------------------
// SplitModel

SplitModel::SplitModel(const StrategyConfig &cfg, const ModelShape &shape, std::uint64_t seed)
    : cfg_(cfg), shape_(shape) {
  cfg_.validate();
  shape_.validate();
  const int c = cfg_.frame_ratio;
  const auto fast = grid(c, true);
  const auto slow = grid(c, false);
  // Discarding is a plan of pure copies.
  discard_plan_.source_length = fast.size();
  for (std::size_t i = 0; i < fast.size(); ++i) {
    if (fast[i] % c == 0) discard_plan_.terms.push_back({i, i, 1.0});
  }
  mixup_plan_ = plan_interpolation(slow, fast, c);

  std::mt19937_64 rng(seed);
  if (uses_camera(cfg_.protocol, Camera::kA)) {
    camera_a_ = std::make_unique<CameraSegment>("camera_a", shape_);
    camera_a_->init(rng);
  }
  if (uses_camera(cfg_.protocol, Camera::kB)) {
    camera_b_ = std::make_unique<CameraSegment>("camera_b", shape_);
    camera_b_->init(rng);
  }
  bs_ = std::make_unique<BsSegment>(shape_, aggregated_frames(cfg_));
  bs_->init(rng);

  if (cfg_.protocol == Protocol::kHetSLFedAvg) {
    // Replicas of one global camera model start out identical.
    auto src = camera_a_->state();
    auto dst = camera_b_->state();
    for (std::size_t i = 0; i < src.size(); ++i) *dst[i].tensor = *src[i].tensor;
  }
}

CameraSegment *SplitModel::camera(Camera cam) {
  return cam == Camera::kA ? camera_a_.get() : camera_b_.get();
}

Tensor SplitModel::camera_input(const Batch &batch, Camera cam) const {
  const std::size_t fast = static_cast<std::size_t>(cfg_.frame_ratio) + 1;
  const std::size_t s = shape_.image_size;
  const std::size_t n = batch.size();
  if (cam == Camera::kA) {
    require_shape(batch.cam_a, {n, fast, 1, s, s}, "camera A frames");
    return cfg_.balance == Balance::kDisc ? apply_plan(batch.cam_a, discard_plan_) : batch.cam_a;
  }
  require_shape(batch.cam_b, {n, 2, 1, s, s}, "camera B frames");
  return cfg_.balance == Balance::kMixInt ? apply_plan(batch.cam_b, mixup_plan_) : batch.cam_b;
}

Tensor SplitModel::run_camera(const Batch &batch, Camera cam, Mode mode) {
  CameraSegment *segment = camera(cam);
  if (!segment) fail(ErrorCode::kState, "camera " + std::string(to_string(cam)) + " is not part of this protocol");
  return segment->forward(camera_input(batch, cam), mode);
}

Tensor SplitModel::bs_side_frames(const Tensor &activation, Camera cam) const {
  if (cam == Camera::kB && cfg_.balance == Balance::kMmixInt) {
    return apply_plan(activation, mixup_plan_);
  }
  return activation;
}

ForwardTrace SplitModel::forward(const Batch &batch, Mode mode) {
  if (cfg_.protocol == Protocol::kHetSLFedAvg) {
    fail(ErrorCode::kState, "HetSLFedAvg runs through one camera replica at a time");
  }
  if (batch.size() == 0) fail(ErrorCode::kInvalidArgument, "empty batch");
  ForwardTrace trace;
  if (camera_a_) trace.activation_a = run_camera(batch, Camera::kA, mode);
  if (camera_b_) trace.activation_b = run_camera(batch, Camera::kB, mode);
  switch (cfg_.protocol) {
    case Protocol::kHetSLAgg:
      trace.aggregated = aggregate(trace.activation_a, bs_side_frames(trace.activation_b, Camera::kB),
                                   cfg_.aggregate, cfg_.lambda_agg);
      break;
    case Protocol::kCamARF: trace.aggregated = trace.activation_a; break;
    case Protocol::kCamBRF: trace.aggregated = bs_side_frames(trace.activation_b, Camera::kB); break;
    default: break;
  }
  trace.prediction = bs_->forward(trace.aggregated, batch.rss, mode);
  return trace;
}

ForwardTrace SplitModel::forward_via(const Batch &batch, Camera cam, Mode mode) {
  if (cfg_.protocol != Protocol::kHetSLFedAvg) {
    fail(ErrorCode::kState, "forward_via is only defined for HetSLFedAvg");
  }
  if (batch.size() == 0) fail(ErrorCode::kInvalidArgument, "empty batch");
  ForwardTrace trace;
  trace.fedavg_camera = cam;
  Tensor &act = cam == Camera::kA ? trace.activation_a : trace.activation_b;
  act = run_camera(batch, cam, mode);
  trace.aggregated = bs_side_frames(act, cam);
  trace.prediction = bs_->forward(trace.aggregated, batch.rss, mode);
  return trace;
}

void SplitModel::backward_from(const ForwardTrace &trace, const Tensor &grad_prediction) {
  const Tensor grad_agg = bs_->backward(grad_prediction);
  boundary_grad_a_ = Tensor();
  boundary_grad_b_ = Tensor();
  auto camera_b_grad = [&](const Tensor &g) {
    return cfg_.balance == Balance::kMmixInt ? apply_plan_backward(g, mixup_plan_) : g;
  };
  if (trace.fedavg_camera) {
    if (*trace.fedavg_camera == Camera::kA) {
      boundary_grad_a_ = grad_agg;
    } else {
      boundary_grad_b_ = camera_b_grad(grad_agg);
    }
  } else {
    switch (cfg_.protocol) {
      case Protocol::kHetSLAgg: {
        auto [ga, gb] = aggregate_backward(grad_agg, cfg_.aggregate, cfg_.lambda_agg,
                                           trace.activation_a.dim(1));
        boundary_grad_a_ = std::move(ga);
        boundary_grad_b_ = camera_b_grad(gb);
        break;
      }
      case Protocol::kCamARF: boundary_grad_a_ = grad_agg; break;
      case Protocol::kCamBRF: boundary_grad_b_ = camera_b_grad(grad_agg); break;
      default: break;
    }
  }
  if (!boundary_grad_a_.empty()) camera_a_->backward(boundary_grad_a_);
  if (!boundary_grad_b_.empty()) camera_b_->backward(boundary_grad_b_);
}

double mse_loss(const Tensor &prediction, const Tensor &target, Tensor *grad) {
  const std::size_t n = target.size();
  if (n == 0 || prediction.size() != n) {
    fail(ErrorCode::kShape, "mse_loss: prediction " + shape_str(prediction.shape()) +
                                " vs target " + shape_str(target.shape()));
  }
  double loss = 0.0;
  if (grad) *grad = Tensor(prediction.shape());
  for (std::size_t i = 0; i < n; ++i) {
    const double e = prediction[i] - target[i];
    loss += e * e;
    if (grad) (*grad)[i] = 2.0 * e / static_cast<double>(n);
  }
  return loss / static_cast<double>(n);
}

double SplitModel::compute_gradients(const Batch &batch) {
  auto params = parameters();
  zero_grads(params);
  const ForwardTrace trace = forward(batch, Mode::kTrain);
  Tensor grad;
  const double loss = mse_loss(trace.prediction, batch.target, &grad);
  backward_from(trace, grad);
  return loss;
}

double SplitModel::compute_gradients_via(const Batch &batch, Camera cam) {
  auto params = parameters();
  zero_grads(params);
  const ForwardTrace trace = forward_via(batch, cam, Mode::kTrain);
  Tensor grad;
  const double loss = mse_loss(trace.prediction, batch.target, &grad);
  backward_from(trace, grad);
  return loss;
}

const Tensor &SplitModel::boundary_grad(Camera cam) const {
  return cam == Camera::kA ? boundary_grad_a_ : boundary_grad_b_;
}

std::vector<double> SplitModel::predict(const Batch &batch) {
  std::vector<double> out(batch.size());
  if (cfg_.protocol == Protocol::kHetSLFedAvg) {
    const Tensor pa = forward_via(batch, Camera::kA, Mode::kEval).prediction;
    const Tensor pb = forward_via(batch, Camera::kB, Mode::kEval).prediction;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scaler.denormalize(0.5 * (pa[i] + pb[i]));
  } else {
    const Tensor p = forward(batch, Mode::kEval).prediction;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = scaler.denormalize(p[i]);
  }
  return out;
}

std::vector<NamedTensorRef> SplitModel::state() {
  std::vector<NamedTensorRef> out;
  for (CameraSegment *segment : {camera_a_.get(), camera_b_.get()}) {
    if (!segment) continue;
    auto s = segment->state();
    out.insert(out.end(), s.begin(), s.end());
  }
  auto s = bs_->state();
  out.insert(out.end(), s.begin(), s.end());
  return out;
}

std::vector<Parameter *> SplitModel::parameters() {
  std::vector<Parameter *> out;
  for (CameraSegment *segment : {camera_a_.get(), camera_b_.get()}) {
    if (!segment) continue;
    auto p = segment->parameters();
    out.insert(out.end(), p.begin(), p.end());
  }
  auto p = bs_->parameters();
  out.insert(out.end(), p.begin(), p.end());
  return out;
}

// ---------------------------------------------------------------------------
// Training steps

double train_step_hetslagg(SplitModel &model, const Batch &batch, NodeOptimizers &opt,
                           CostLedger &ledger) {
  if (model.config().protocol == Protocol::kHetSLFedAvg) {
    fail(ErrorCode::kState, "train_step_hetslagg called on a HetSLFedAvg model");
  }
  const double loss = model.compute_gradients(batch);
  adam_step(model.bs().parameters(), opt.bs);
  if (CameraSegment *a = model.camera(Camera::kA)) adam_step(a->parameters(), opt.camera_a);
  if (CameraSegment *b = model.camera(Camera::kB)) adam_step(b->parameters(), opt.camera_b);
  ledger.record_exchange(model.camera(Camera::kA) != nullptr, model.camera(Camera::kB) != nullptr);
  return loss;
}

double train_step_hetslfedavg(SplitModel &model, const Batch &batch, NodeOptimizers &opt,
                              CostLedger &ledger, FedAvgSchedule &schedule) {
  if (model.config().protocol != Protocol::kHetSLFedAvg) {
    fail(ErrorCode::kState, "train_step_hetslfedavg needs a HetSLFedAvg model");
  }
  if (schedule.rounds_per_average == 0) {
    fail(ErrorCode::kInvalidArgument, "averaging period must be at least one round");
  }
  const Camera cam = schedule.camera();
  const double loss = model.compute_gradients_via(batch, cam);
  adam_step(model.bs().parameters(), opt.bs);
  adam_step(model.camera(cam)->parameters(), cam == Camera::kA ? opt.camera_a : opt.camera_b);
  ledger.record_exchange(cam == Camera::kA, cam == Camera::kB);
  if (schedule.average_after_step()) average_camera_replicas(model);
  ++schedule.step;
  return loss;
}

void average_camera_replicas(SplitModel &model) {
  CameraSegment *a = model.camera(Camera::kA);
  CameraSegment *b = model.camera(Camera::kB);
  if (!a || !b) fail(ErrorCode::kState, "averaging needs both camera replicas");
  auto sa = a->state();
  auto sb = b->state();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    Tensor &ta = *sa[i].tensor;
    Tensor &tb = *sb[i].tensor;
    for (std::size_t j = 0; j < ta.size(); ++j) {
      const double mean = 0.5 * (ta[j] + tb[j]);
      ta[j] = mean;
      tb[j] = mean;
    }
  }
}

}  // namespace hetsl
