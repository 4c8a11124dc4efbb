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

#include "experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include "checkpoint.hpp"
#include "error.hpp"
#include "split_model.hpp"

namespace hetsl {
namespace {

std::string trim(const std::string &s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::uint64_t parse_uint(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    if (!v.empty() && v[0] == '-') throw std::invalid_argument(v);
    const auto x = std::stoull(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error &) {
    fail(ErrorCode::kConfig, key + ": expected a non-negative integer, got '" + v + "'");
  }
}

double parse_real(const std::string &key, const std::string &v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size() || !std::isfinite(x)) throw std::invalid_argument(v);
    return x;
  } catch (const std::logic_error &) {
    fail(ErrorCode::kConfig, key + ": expected a number, got '" + v + "'");
  }
}

bool parse_flag(const std::string &key, const std::string &v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  fail(ErrorCode::kConfig, key + ": expected true or false, got '" + v + "'");
}

template <typename Fn>
auto rethrow_as_config(const std::string &key, Fn &&fn) {
  try {
    return fn();
  } catch (const Error &e) {
    const std::string what = e.what();
    if (what.rfind(key + ":", 0) == 0) fail(ErrorCode::kConfig, what);
    fail(ErrorCode::kConfig, key + ": " + what);
  }
}

void write_text(const std::filesystem::path &path, const std::string &text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::kIo, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::kIo, "write failed for " + path.string());
}

// Interval timings long enough that the exchange count passes `n`.
std::vector<IntervalTiming> timings_covering(std::uint64_t n, const ExperimentConfig &cfg,
                                             const PayloadSpec &p, const ChannelTrace &trace,
                                             double t_comp_s, double tau_s) {
  const std::size_t cap = 4 * trace.attenuation.size() + static_cast<std::size_t>(n) + 16;
  std::vector<IntervalTiming> out;
  std::uint64_t covered = 0;
  std::size_t count = 64;
  while (true) {
    out = interval_timings(cfg.strategy, p, cfg.link, trace, t_comp_s, count);
    covered = 0;
    for (const auto &t : out) covered += exchanges_per_interval(tau_s, t.t_tot_s);
    if (covered > n || count >= cap) return out;
    count = std::min(cap, 2 * count);
  }
}

std::vector<double> tot_series(const std::vector<IntervalTiming> &timings) {
  std::vector<double> t;
  t.reserve(timings.size());
  for (const auto &x : timings) t.push_back(x.t_tot_s);
  return t;
}

std::vector<CostRow> cost_rows(const std::vector<ExchangeRecord> &history, const PayloadSpec &p,
                               const std::vector<IntervalTiming> &timings, double tau_s) {
  const auto t_tot = tot_series(timings);
  std::vector<CostRow> rows;
  rows.reserve(history.size());
  std::uint64_t ul_a = 0, ul_b = 0, dl = 0;
  for (const ExchangeRecord &e : history) {
    if (e.u_a) {
      ul_a += p.fp_bytes_a;
      dl += p.bp_bytes;
    }
    if (e.u_b) {
      ul_b += p.fp_bytes_b;
      dl += p.bp_bytes;
    }
    CostRow row;
    row.step = e.step;
    row.k = elapsed_interval(e.step, t_tot, tau_s);
    row.timing = timings[row.k - 1];
    row.t_n_s = elapsed_time(e.step, t_tot, tau_s);
    row.ul_bytes_a = ul_a;
    row.ul_bytes_b = ul_b;
    row.dl_bytes = dl;
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> predict_all(SplitModel &model, const Dataset &data,
                                std::span<const std::int64_t> ks, std::size_t batch_size) {
  std::vector<double> out;
  out.reserve(ks.size());
  for (std::size_t i = 0; i < ks.size(); i += batch_size) {
    const auto chunk = ks.subspan(i, std::min(batch_size, ks.size() - i));
    const Batch b = make_batch(data, chunk, model.scaler, model.shape().n_rss);
    const auto p = model.predict(b);
    out.insert(out.end(), p.begin(), p.end());
  }
  return out;
}

double rmse_where(std::span<const double> pred, std::span<const double> truth,
                  std::span<const Condition> labels, Condition c) {
  std::vector<double> p, t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == c) {
      p.push_back(pred[i]);
      t.push_back(truth[i]);
    }
  }
  return p.empty() ? std::numeric_limits<double>::quiet_NaN() : rmse(p, t);
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void ExperimentConfig::set(const std::string &key, const std::string &raw) {
  const std::string v = trim(raw);
  auto real = [&](double &dst) { dst = parse_real(key, v); };
  auto uint = [&](std::size_t &dst) { dst = static_cast<std::size_t>(parse_uint(key, v)); };
  auto pose = [&](CameraPose &p, const std::string &field) {
    if (field == "x") return real(p.position.x);
    if (field == "y") return real(p.position.y);
    if (field == "axis_x") return real(p.axis.x);
    if (field == "axis_y") return real(p.axis.y);
    if (field == "half_width_m") return real(p.half_width_m);
    if (field == "max_depth_m") return real(p.max_depth_m);
    fail(ErrorCode::kConfig, key + ": unknown key");
  };

  if (key == "protocol") {
    strategy.protocol = rethrow_as_config(key, [&] { return parse_protocol(v); });
  } else if (key == "balance") {
    strategy.balance = rethrow_as_config(key, [&] { return parse_balance(v); });
  } else if (key == "aggregate") {
    strategy.aggregate = rethrow_as_config(key, [&] { return parse_aggregate(v); });
  } else if (key == "lambda_agg") {
    real(strategy.lambda_agg);
  } else if (key == "frame_ratio") {
    const double r = parse_real(key, v);
    if (r != std::floor(r) || r < 2 || r > 1000) {
      fail(ErrorCode::kConfig, "frame_ratio: must be an integer > 1 (frame windows need an integer grid)");
    }
    strategy.frame_ratio = scene.frame_ratio = static_cast<int>(r);
  } else if (key == "cameras") {
    if (parse_uint(key, v) != 2) fail(ErrorCode::kConfig, "cameras: only the two-camera setting is supported");
  } else if (key == "image_size") {
    uint(shape.image_size);
    scene.image_size = shape.image_size;
  } else if (key == "conv_filters") {
    uint(shape.conv_filters);
  } else if (key == "camera_hidden") {
    uint(shape.camera_hidden);
  } else if (key == "rss_hidden") {
    uint(shape.rss_hidden);
  } else if (key == "fc_units") {
    uint(shape.fc_units);
  } else if (key == "n_rss") {
    uint(shape.n_rss);
  } else if (key == "kernel") {
    uint(shape.kernel);
  } else if (key == "K") {
    uint(scene.K);
  } else if (key == "tau_s") {
    real(scene.tau_s);
  } else if (key == "look_ahead") {
    uint(scene.look_ahead);
  } else if (key == "scene_seed") {
    scene.seed = parse_uint(key, v);
  } else if (key == "pixel_noise") {
    real(scene.pixel_noise);
  } else if (key == "power_noise_db") {
    real(scene.power_noise_db);
  } else if (key == "blockage_depth_db") {
    real(scene.blockage_depth_db);
  } else if (key == "los_power_dbm") {
    real(scene.los_power_dbm);
    link.los_power_dbm = scene.los_power_dbm;
  } else if (key == "speed_min_mps") {
    real(scene.speed_min_mps);
  } else if (key == "speed_max_mps") {
    real(scene.speed_max_mps);
  } else if (key == "pause_max_s") {
    real(scene.pause_max_s);
  } else if (key == "walk_half_span_m") {
    real(scene.walk_half_span_m);
  } else if (key == "walk_y_m") {
    real(scene.walk_y_m);
  } else if (key == "beam_width_m") {
    real(scene.beam_width_m);
  } else if (key == "blocker_width_m") {
    real(scene.blocker_width_m);
  } else if (key.rfind("cam_a_", 0) == 0) {
    pose(scene.camera_a, key.substr(6));
  } else if (key.rfind("cam_b_", 0) == 0) {
    pose(scene.camera_b, key.substr(6));
  } else if (key == "bandwidth_hz") {
    real(link.bandwidth_hz);
  } else if (key == "noise_dbm") {
    real(link.noise_dbm);
  } else if (key == "tx_power_dbm") {
    real(link.tx_power_dbm);
  } else if (key == "camera_gain_dbi") {
    real(link.camera_gain_dbi);
  } else if (key == "bs_gain_dbi") {
    real(link.bs_gain_dbi);
  } else if (key == "path_loss_exponent") {
    real(link.path_loss_exponent);
  } else if (key == "ref_path_loss_db") {
    real(link.ref_path_loss_db);
  } else if (key == "ref_distance_m") {
    real(link.ref_distance_m);
  } else if (key == "distance_m") {
    real(link.distance_m);
  } else if (key == "dataset_path") {
    dataset_path = v;
  } else if (key == "epochs") {
    uint(epochs);
  } else if (key == "batch_size") {
    uint(batch_size);
  } else if (key == "learning_rate") {
    real(learning_rate);
  } else if (key == "seed") {
    seed = parse_uint(key, v);
  } else if (key == "split_ratio") {
    real(split_ratio);
  } else if (key == "fedavg_period") {
    fedavg_period = parse_uint(key, v);
  } else if (key == "payload_mode") {
    if (v == "derived") {
      payload_mode = PayloadMode::kDerived;
    } else if (v == "fixed") {
      payload_mode = PayloadMode::kFixedConstants;
    } else {
      fail(ErrorCode::kConfig, "payload_mode: expected derived or fixed, got '" + v + "'");
    }
  } else if (key == "t_comp_mode") {
    if (v == "fixed") {
      t_comp_mode = CompTimeMode::kFixed;
    } else if (v == "measured") {
      t_comp_mode = CompTimeMode::kMeasured;
    } else {
      fail(ErrorCode::kConfig, "t_comp_mode: expected fixed or measured, got '" + v + "'");
    }
  } else if (key == "t_comp_s") {
    real(t_comp_s);
  } else if (key == "eval_interval") {
    uint(eval_interval);
  } else if (key == "condition_delta_db") {
    real(condition_delta_db);
  } else if (key == "normalize_power") {
    normalize_power = parse_flag(key, v);
  } else if (key == "output_dir") {
    output_dir = v;
  } else if (key == "workers") {
    uint(workers);
  } else {
    fail(ErrorCode::kConfig, key + ": unknown key");
  }
}

void ExperimentConfig::validate() const {
  strategy.validate();
  shape.validate();
  scene.validate();
  link.validate();
  if (epochs < 1) fail(ErrorCode::kConfig, "epochs: must be >= 1");
  if (batch_size < 1) fail(ErrorCode::kConfig, "batch_size: must be >= 1");
  if (!(learning_rate > 0.0)) fail(ErrorCode::kConfig, "learning_rate: must be positive");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) fail(ErrorCode::kConfig, "split_ratio: must lie in (0,1)");
  if (fedavg_period < 1) fail(ErrorCode::kConfig, "fedavg_period: must be >= 1");
  if (!(t_comp_s >= 0.0)) fail(ErrorCode::kConfig, "t_comp_s: must be non-negative");
  if (eval_interval < 1) fail(ErrorCode::kConfig, "eval_interval: must be >= 1");
  if (!(condition_delta_db > 0.0)) fail(ErrorCode::kConfig, "condition_delta_db: must be positive");
  if (workers < 1) fail(ErrorCode::kConfig, "workers: must be >= 1");
  if (shape.image_size != scene.image_size) fail(ErrorCode::kConfig, "image_size: model and scene disagree");
  if (strategy.frame_ratio != scene.frame_ratio) fail(ErrorCode::kConfig, "frame_ratio: strategy and scene disagree");
  if (shape.n_rss < 1 || shape.n_rss > 2 * static_cast<std::size_t>(scene.frame_ratio)) {
    fail(ErrorCode::kConfig, "n_rss: must lie in [1, 2c]");
  }
}

std::string ExperimentConfig::to_text() const {
  std::ostringstream os;
  os << strategy.to_text() << model_shape_text(shape);
  auto kv = [&](const char *k, const std::string &v) { os << k << "=" << v << "\n"; };
  kv("K", std::to_string(scene.K));
  kv("tau_s", fmt(scene.tau_s));
  kv("look_ahead", std::to_string(scene.look_ahead));
  kv("scene_seed", std::to_string(scene.seed));
  kv("pixel_noise", fmt(scene.pixel_noise));
  kv("power_noise_db", fmt(scene.power_noise_db));
  kv("blockage_depth_db", fmt(scene.blockage_depth_db));
  kv("los_power_dbm", fmt(scene.los_power_dbm));
  kv("speed_min_mps", fmt(scene.speed_min_mps));
  kv("speed_max_mps", fmt(scene.speed_max_mps));
  kv("pause_max_s", fmt(scene.pause_max_s));
  kv("walk_half_span_m", fmt(scene.walk_half_span_m));
  kv("walk_y_m", fmt(scene.walk_y_m));
  kv("beam_width_m", fmt(scene.beam_width_m));
  kv("blocker_width_m", fmt(scene.blocker_width_m));
  for (const auto &[prefix, p] : {std::pair{"cam_a_", &scene.camera_a}, std::pair{"cam_b_", &scene.camera_b}}) {
    const std::string pre = prefix;
    kv((pre + "x").c_str(), fmt(p->position.x));
    kv((pre + "y").c_str(), fmt(p->position.y));
    kv((pre + "axis_x").c_str(), fmt(p->axis.x));
    kv((pre + "axis_y").c_str(), fmt(p->axis.y));
    kv((pre + "half_width_m").c_str(), fmt(p->half_width_m));
    kv((pre + "max_depth_m").c_str(), fmt(p->max_depth_m));
  }
  kv("bandwidth_hz", fmt(link.bandwidth_hz));
  kv("noise_dbm", fmt(link.noise_dbm));
  kv("tx_power_dbm", fmt(link.tx_power_dbm));
  kv("camera_gain_dbi", fmt(link.camera_gain_dbi));
  kv("bs_gain_dbi", fmt(link.bs_gain_dbi));
  kv("path_loss_exponent", fmt(link.path_loss_exponent));
  kv("ref_path_loss_db", fmt(link.ref_path_loss_db));
  kv("ref_distance_m", fmt(link.ref_distance_m));
  kv("distance_m", fmt(link.distance_m));
  if (!dataset_path.empty()) kv("dataset_path", dataset_path);
  kv("epochs", std::to_string(epochs));
  kv("batch_size", std::to_string(batch_size));
  kv("learning_rate", fmt(learning_rate));
  kv("seed", std::to_string(seed));
  kv("split_ratio", fmt(split_ratio));
  kv("fedavg_period", std::to_string(fedavg_period));
  kv("payload_mode", payload_mode == PayloadMode::kDerived ? "derived" : "fixed");
  kv("t_comp_mode", t_comp_mode == CompTimeMode::kFixed ? "fixed" : "measured");
  kv("t_comp_s", fmt(t_comp_s));
  kv("eval_interval", std::to_string(eval_interval));
  kv("condition_delta_db", fmt(condition_delta_db));
  kv("normalize_power", normalize_power ? "true" : "false");
  if (!output_dir.empty()) kv("output_dir", output_dir);
  kv("workers", std::to_string(workers));
  return os.str();
}

ExperimentConfig parse_experiment_text(const std::string &text, ExperimentConfig base) {
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail(ErrorCode::kConfig, "line " + std::to_string(lineno) + ": expected key=value");
    }
    base.set(trim(t.substr(0, eq)), t.substr(eq + 1));
  }
  return base;
}

ExperimentConfig load_experiment_file(const std::filesystem::path &path, ExperimentConfig base) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open config " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return parse_experiment_text(os.str(), std::move(base));
}

// ---------------------------------------------------------------------------
// Metrics

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::kLoS: return "LoS";
    case Condition::kNLoS: return "NLoS";
    case Condition::kTransition: return "Transition";
  }
  return "?";
}

std::vector<Condition> condition_labels(std::span<const double> power_dbm, double los_dbm,
                                        double depth_db, double delta_db) {
  std::vector<Condition> out;
  out.reserve(power_dbm.size());
  for (double p : power_dbm) {
    if (std::abs(p - los_dbm) <= delta_db) {
      out.push_back(Condition::kLoS);
    } else if (std::abs(p - (los_dbm - depth_db)) <= delta_db) {
      out.push_back(Condition::kNLoS);
    } else {
      out.push_back(Condition::kTransition);
    }
  }
  return out;
}

double rmse(std::span<const double> predictions, std::span<const double> truths) {
  if (predictions.empty()) fail(ErrorCode::kInvalidArgument, "rmse: empty input");
  if (predictions.size() != truths.size()) fail(ErrorCode::kInvalidArgument, "rmse: length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double e = predictions[i] - truths[i];
    acc += e * e;
  }
  return std::sqrt(acc / static_cast<double>(predictions.size()));
}

// ---------------------------------------------------------------------------
// Runs

Dataset prepare_dataset(const ExperimentConfig &cfg) {
  if (!cfg.dataset_path.empty()) return load_dataset(cfg.dataset_path);
  return build_dataset(cfg.scene);
}

std::vector<CostRow> cost_report(const ExperimentConfig &cfg, const Dataset &data,
                                 std::uint64_t steps) {
  cfg.validate();
  if (steps == 0) fail(ErrorCode::kInvalidArgument, "cost report needs at least one step");
  const PayloadSpec p = payloads(cfg.strategy, cfg.shape, cfg.payload_mode);
  CostLedger ledger(p);
  for (std::uint64_t n = 0; n < steps; ++n) {
    if (cfg.strategy.protocol == Protocol::kHetSLFedAvg) {
      ledger.record_exchange(n % 2 == 0, n % 2 == 1);
    } else {
      ledger.record_exchange(p.uses_a, p.uses_b);
    }
  }
  const ChannelTrace trace = attenuation_from_power(data.power_dbm, cfg.link.los_power_dbm, data.tau_s);
  const auto timings = timings_covering(steps, cfg, p, trace, cfg.t_comp_s, data.tau_s);
  return cost_rows(ledger.history(), p, timings, data.tau_s);
}

MetricsReport run_experiment(const ExperimentConfig &cfg, const Dataset *data) {
  cfg.validate();
  Dataset owned;
  if (!data) {
    owned = prepare_dataset(cfg);
    data = &owned;
  }
  const Dataset &d = *data;
  d.validate();
  if (d.frame_ratio != cfg.strategy.frame_ratio) {
    fail(ErrorCode::kConfig, "frame_ratio: dataset uses " + std::to_string(d.frame_ratio));
  }
  if (d.height != cfg.shape.image_size || d.width != cfg.shape.image_size) {
    fail(ErrorCode::kConfig, "image_size: dataset frames are " + std::to_string(d.height) + "x" +
                                 std::to_string(d.width));
  }
  const DatasetSplit split = split_dataset(d.K, cfg.split_ratio);
  const double tau = d.tau_s;

  SplitModel model(cfg.strategy, cfg.shape, cfg.seed);
  if (cfg.normalize_power) {
    // Every power a training sample reads, inputs and labels alike.
    const auto last = static_cast<std::size_t>(split.train.back()) + d.look_ahead;
    model.scaler = PowerScaler::fit(std::span(d.power_dbm).first(last + 1));
  }
  NodeOptimizers opt;
  opt.camera_a.learning_rate = opt.camera_b.learning_rate = opt.bs.learning_rate = cfg.learning_rate;
  const PayloadSpec payload = payloads(cfg.strategy, cfg.shape, cfg.payload_mode);
  CostLedger ledger(payload);
  FedAvgSchedule schedule{cfg.fedavg_period, 0};

  const std::size_t n_train = split.train.size();
  const std::size_t steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const std::uint64_t total = cfg.epochs * steps_per_epoch;
  std::seed_seq shuffle_seed{static_cast<std::uint32_t>(cfg.seed), static_cast<std::uint32_t>(cfg.seed >> 32), 7u};
  std::mt19937_64 rng(shuffle_seed);

  MetricsReport report;
  report.strategy = cfg.strategy;
  report.seed = cfg.seed;
  std::vector<std::pair<std::uint64_t, double>> curve_rmse;
  double measured_s = 0.0;
  std::vector<std::int64_t> order = split.train;
  std::vector<double> test_truth;
  for (auto k : split.test) test_truth.push_back(d.label(k));

  std::uint64_t n = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    for (std::size_t s = 0; s < steps_per_epoch; ++s) {
      const std::size_t begin = s * cfg.batch_size;
      const auto ks = std::span(order).subspan(begin, std::min(cfg.batch_size, n_train - begin));
      const Batch batch = make_batch(d, ks, model.scaler, cfg.shape.n_rss);
      const auto t0 = std::chrono::steady_clock::now();
      if (cfg.strategy.protocol == Protocol::kHetSLFedAvg) {
        report.final_loss = train_step_hetslfedavg(model, batch, opt, ledger, schedule);
      } else {
        report.final_loss = train_step_hetslagg(model, batch, opt, ledger);
      }
      measured_s += std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      ++n;
      if (n % cfg.eval_interval == 0 || n == total) {
        const auto pred = predict_all(model, d, split.test, cfg.batch_size);
        curve_rmse.emplace_back(n, rmse(pred, test_truth));
      }
    }
  }
  report.steps = n;

  const double t_comp = cfg.t_comp_mode == CompTimeMode::kFixed ? cfg.t_comp_s
                                                                 : measured_s / static_cast<double>(n);
  const ChannelTrace trace = attenuation_from_power(d.power_dbm, cfg.link.los_power_dbm, tau);
  const auto timings = timings_covering(n, cfg, payload, trace, t_comp, tau);
  const auto t_tot = tot_series(timings);
  for (const auto &[step, err] : curve_rmse) {
    report.curve.push_back({step, elapsed_time(step, t_tot, tau), err});
  }
  report.cost = cost_rows(ledger.history(), payload, timings, tau);
  report.t_final_s = report.cost.back().t_n_s;
  report.ul_bytes_a = ledger.ul_bytes_a();
  report.ul_bytes_b = ledger.ul_bytes_b();
  report.dl_bytes = ledger.dl_bytes();

  report.test_k = split.test;
  report.truth_dbm = test_truth;
  report.prediction_dbm = predict_all(model, d, split.test, cfg.batch_size);
  report.rmse_db = rmse(report.prediction_dbm, report.truth_dbm);
  const auto labels = condition_labels(report.truth_dbm, cfg.scene.los_power_dbm,
                                       cfg.scene.blockage_depth_db, cfg.condition_delta_db);
  report.rmse_los_db = rmse_where(report.prediction_dbm, report.truth_dbm, labels, Condition::kLoS);
  report.rmse_nlos_db = rmse_where(report.prediction_dbm, report.truth_dbm, labels, Condition::kNLoS);
  report.rmse_trans_db = rmse_where(report.prediction_dbm, report.truth_dbm, labels, Condition::kTransition);

  report.ops = node_op_counts(cfg.strategy, cfg.shape);
  report.power_cam_a_w = power_watts(report.ops.camera_a, tau);
  report.power_cam_b_w = power_watts(report.ops.camera_b, tau);
  report.power_bs_w = power_watts(report.ops.bs, tau);

  if (!cfg.output_dir.empty()) {
    const std::filesystem::path dir = cfg.output_dir;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
    write_results_csv(dir / "results.csv", std::span(&report, 1));
    write_curve_csv(dir / "curve.csv", report.curve);
    write_cost_csv(dir / "cost.csv", report.cost, report.power_cam_a_w, report.power_cam_b_w,
                   report.power_bs_w);
    std::string pred = "k,truth_dbm,prediction_dbm,condition\n";
    for (std::size_t i = 0; i < report.test_k.size(); ++i) {
      pred += std::to_string(report.test_k[i]) + "," + fmt(report.truth_dbm[i]) + "," +
              fmt(report.prediction_dbm[i]) + "," + std::string(to_string(labels[i])) + "\n";
    }
    write_text(dir / "predictions.csv", pred);
    write_text(dir / "config.txt", cfg.to_text());
    save_checkpoint(model, dir / "model.ckpt");
  }
  return report;
}

// ---------------------------------------------------------------------------
// Matrix

std::string strategy_label(const StrategyConfig &s) {
  std::string label(to_string(s.protocol));
  label += "_";
  label += to_string(s.balance);
  label += "_";
  label += to_string(s.aggregate);
  return label;
}

std::vector<StrategyConfig> balance_aggregate_grid(const StrategyConfig &base) {
  std::vector<StrategyConfig> out;
  for (Balance b : {Balance::kDisc, Balance::kMixInt, Balance::kMmixInt}) {
    for (Aggregate a : {Aggregate::kConcAgg, Aggregate::kMmixAgg}) {
      StrategyConfig s = base;
      s.protocol = Protocol::kHetSLAgg;
      s.balance = b;
      s.aggregate = a;
      out.push_back(s);
    }
  }
  return out;
}

std::vector<StrategyConfig> parse_strategy_list(const std::string &spec, const StrategyConfig &base) {
  if (spec == "grid") return balance_aggregate_grid(base);
  std::vector<StrategyConfig> out;
  if (spec == "baselines") {
    for (Protocol p : {Protocol::kHetSLAgg, Protocol::kHetSLFedAvg, Protocol::kCamARF, Protocol::kCamBRF,
                       Protocol::kRFOnly}) {
      StrategyConfig s = base;
      s.protocol = p;
      out.push_back(s);
    }
    return out;
  }
  std::istringstream in(spec);
  std::string item;
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    std::vector<std::string> parts;
    std::istringstream fields(item);
    std::string f;
    while (std::getline(fields, f, '/')) parts.push_back(trim(f));
    if (parts.size() != 3) {
      fail(ErrorCode::kConfig, "strategies: expected protocol/balance/aggregate, got '" + item + "'");
    }
    StrategyConfig s = base;
    rethrow_as_config("strategies", [&] {
      s.protocol = parse_protocol(parts[0]);
      s.balance = parse_balance(parts[1]);
      s.aggregate = parse_aggregate(parts[2]);
      return 0;
    });
    out.push_back(s);
  }
  if (out.empty()) fail(ErrorCode::kConfig, "strategies: empty list");
  return out;
}

std::vector<MatrixRow> run_matrix(const ExperimentConfig &cfg,
                                  std::span<const StrategyConfig> strategies) {
  cfg.validate();
  const Dataset data = prepare_dataset(cfg);
  std::vector<MatrixRow> rows(strategies.size());
  std::size_t next = 0;
  std::mutex mu;
  auto worker = [&] {
    while (true) {
      std::size_t i;
      {
        std::lock_guard lock(mu);
        if (next >= strategies.size()) return;
        i = next++;
      }
      MatrixRow &row = rows[i];
      row.strategy = strategies[i];
      ExperimentConfig run = cfg;
      run.strategy = strategies[i];
      if (!cfg.output_dir.empty()) {
        run.output_dir = (std::filesystem::path(cfg.output_dir) / strategy_label(strategies[i])).string();
      }
      try {
        row.report = run_experiment(run, &data);
      } catch (const std::exception &e) {
        row.error = e.what();
      }
    }
  };
  const std::size_t n_workers = std::min(cfg.workers, std::max<std::size_t>(1, strategies.size()));
  std::vector<std::thread> pool;
  for (std::size_t w = 1; w < n_workers; ++w) pool.emplace_back(worker);
  worker();
  for (auto &t : pool) t.join();

  if (!cfg.output_dir.empty()) {
    std::error_code ec;
    std::filesystem::create_directories(cfg.output_dir, ec);
    if (ec) fail(ErrorCode::kIo, "cannot create " + cfg.output_dir + ": " + ec.message());
    std::string csv = std::string(kResultsHeader) + ",status\n";
    for (const MatrixRow &row : rows) {
      if (row.report) {
        csv += results_row(*row.report) + ",ok\n";
      } else {
        std::string msg = row.error;
        std::replace(msg.begin(), msg.end(), ',', ';');
        std::replace(msg.begin(), msg.end(), '\n', ' ');
        csv += std::string(to_string(row.strategy.protocol)) + "," +
               std::string(to_string(row.strategy.balance)) + "," +
               std::string(to_string(row.strategy.aggregate)) + "," + std::to_string(cfg.seed) +
               ",,,,,,,,,,error: " + msg + "\n";
      }
    }
    write_text(std::filesystem::path(cfg.output_dir) / "matrix.csv", csv);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// CSV

std::string results_row(const MetricsReport &r) {
  std::ostringstream os;
  os << to_string(r.strategy.protocol) << ',' << to_string(r.strategy.balance) << ','
     << to_string(r.strategy.aggregate) << ',' << r.seed << ',' << fmt(r.rmse_db) << ','
     << fmt(r.rmse_los_db) << ',' << fmt(r.rmse_nlos_db) << ',' << fmt(r.rmse_trans_db) << ','
     << r.ul_bytes_total() << ',' << fmt(r.power_cam_a_w) << ',' << fmt(r.power_cam_b_w) << ','
     << fmt(r.power_bs_w) << ',' << fmt(r.t_final_s);
  return os.str();
}

void write_results_csv(const std::filesystem::path &path, std::span<const MetricsReport> rows) {
  std::string csv = std::string(kResultsHeader) + "\n";
  for (const auto &r : rows) csv += results_row(r) + "\n";
  write_text(path, csv);
}

void write_curve_csv(const std::filesystem::path &path, std::span<const CurvePoint> curve) {
  std::string csv = std::string(kCurveHeader) + "\n";
  for (const auto &p : curve) csv += std::to_string(p.n) + "," + fmt(p.t_n_s) + "," + fmt(p.rmse_db) + "\n";
  write_text(path, csv);
}

void write_cost_csv(const std::filesystem::path &path, std::span<const CostRow> rows,
                    double power_a_w, double power_b_w, double power_bs_w) {
  std::string csv = std::string(kCostHeader) + "\n";
  const std::string powers = fmt(power_a_w) + "," + fmt(power_b_w) + "," + fmt(power_bs_w);
  for (const auto &r : rows) {
    csv += std::to_string(r.step) + "," + std::to_string(r.k) + "," + fmt(r.timing.t_fp_s) + "," +
           fmt(r.timing.t_bp_s) + "," + fmt(r.timing.t_tot_s) + "," + fmt(r.t_n_s) + "," +
           std::to_string(r.ul_bytes_a) + "," + std::to_string(r.ul_bytes_b) + "," +
           std::to_string(r.dl_bytes) + "," + powers + "\n";
  }
  write_text(path, csv);
}

}  // namespace hetsl
