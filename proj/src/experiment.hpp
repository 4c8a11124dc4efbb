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

#ifndef HETSL_EXPERIMENT_HPP_
#define HETSL_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "channel.hpp"
#include "cost.hpp"
#include "dataset.hpp"
#include "model_shape.hpp"
#include "scenario.hpp"
#include "strategy.hpp"

namespace hetsl {

enum class CompTimeMode { kFixed, kMeasured };

/// Everything one training run needs. Text form is UTF-8 key=value lines
/// with '#' comments; see `set` for the accepted keys.
struct ExperimentConfig {
  StrategyConfig strategy;
  ModelShape shape;
  SceneConfig scene;
  LinkParams link;
  std::string dataset_path;  // empty: generate from `scene`
  std::size_t epochs = 40;
  std::size_t batch_size = 64;
  double learning_rate = 1e-3;
  std::uint64_t seed = 1;
  double split_ratio = 0.75;
  std::uint64_t fedavg_period = 1;  // rounds between replica averages
  PayloadMode payload_mode = PayloadMode::kDerived;
  CompTimeMode t_comp_mode = CompTimeMode::kFixed;
  double t_comp_s = 1e-3;
  std::size_t eval_interval = 50;  // steps between curve points
  double condition_delta_db = 3.0;
  bool normalize_power = true;
  std::string output_dir;  // empty: no files written
  std::size_t workers = 1;

  // Throws kConfig naming the offending key.
  void set(const std::string &key, const std::string &value);
  void validate() const;
  std::string to_text() const;
};

ExperimentConfig parse_experiment_text(const std::string &text, ExperimentConfig base = {});
ExperimentConfig load_experiment_file(const std::filesystem::path &path, ExperimentConfig base = {});

enum class Condition { kLoS, kNLoS, kTransition };
std::string_view to_string(Condition c);

/// LoS within delta of the LoS baseline, NLoS within delta of the blocked
/// level, Transition otherwise.
std::vector<Condition> condition_labels(std::span<const double> power_dbm, double los_dbm,
                                        double depth_db, double delta_db = 3.0);

// Root mean squared error; throws on empty or unequal inputs.
double rmse(std::span<const double> predictions, std::span<const double> truths);

struct CurvePoint {
  std::uint64_t n = 0;
  double t_n_s = 0.0;
  double rmse_db = 0.0;
};

struct CostRow {
  std::uint64_t step = 0;
  std::size_t k = 0;
  IntervalTiming timing;
  double t_n_s = 0.0;
  std::uint64_t ul_bytes_a = 0;
  std::uint64_t ul_bytes_b = 0;
  std::uint64_t dl_bytes = 0;
};

struct MetricsReport {
  StrategyConfig strategy;
  std::uint64_t seed = 0;
  double rmse_db = 0.0;
  // NaN when the test split holds no sample of that condition.
  double rmse_los_db = 0.0;
  double rmse_nlos_db = 0.0;
  double rmse_trans_db = 0.0;
  std::vector<CurvePoint> curve;
  std::vector<CostRow> cost;
  std::vector<std::int64_t> test_k;
  std::vector<double> truth_dbm;
  std::vector<double> prediction_dbm;
  std::uint64_t steps = 0;
  std::uint64_t ul_bytes_a = 0;
  std::uint64_t ul_bytes_b = 0;
  std::uint64_t dl_bytes = 0;
  NodeOps ops;
  double power_cam_a_w = 0.0;
  double power_cam_b_w = 0.0;
  double power_bs_w = 0.0;
  double t_final_s = 0.0;
  double final_loss = 0.0;

  std::uint64_t ul_bytes_total() const { return ul_bytes_a + ul_bytes_b; }
};

/// Trains, evaluates and (when output_dir is set) writes results.csv,
/// curve.csv, cost.csv, predictions.csv and model.ckpt. Uses `data` when
/// given, otherwise the configured dataset path or generated scene.
MetricsReport run_experiment(const ExperimentConfig &cfg, const Dataset *data = nullptr);

// Loads or generates the dataset described by `cfg`.
Dataset prepare_dataset(const ExperimentConfig &cfg);

/// Analytic cost series for `steps` exchanges without training.
std::vector<CostRow> cost_report(const ExperimentConfig &cfg, const Dataset &data,
                                 std::uint64_t steps);

struct MatrixRow {
  StrategyConfig strategy;
  std::optional<MetricsReport> report;
  std::string error;
};

/// Runs every strategy on one shared dataset and seed, `cfg.workers` runs at
/// a time. Failed runs produce an error row. Writes matrix.csv to
/// output_dir when set; per-run artifacts go to output_dir/<label>.
std::vector<MatrixRow> run_matrix(const ExperimentConfig &cfg,
                                  std::span<const StrategyConfig> strategies);

// Disc/MixInt/MmixInt x ConcAgg/MmixAgg under HetSLAgg.
std::vector<StrategyConfig> balance_aggregate_grid(const StrategyConfig &base);
std::string strategy_label(const StrategyConfig &s);

/// "grid" (balance x aggregate under HetSLAgg), "baselines" (HetSLAgg,
/// HetSLFedAvg, CamA_RF, CamB_RF, RF_only with base's balance/aggregate),
/// or a comma list of protocol/balance/aggregate triples.
std::vector<StrategyConfig> parse_strategy_list(const std::string &spec, const StrategyConfig &base);

inline constexpr const char *kResultsHeader =
    "protocol,balance,aggregate,seed,rmse_db,rmse_los_db,rmse_nlos_db,rmse_trans_db,"
    "ul_bytes_total,camA_power_w,camB_power_w,bs_power_w,t_final_s";
inline constexpr const char *kCurveHeader = "n,T_n_s,test_rmse_db";
inline constexpr const char *kCostHeader =
    "step,k,t_fp_s,t_bp_s,t_tot_s,T_n_s,ul_bytes_A,ul_bytes_B,dl_bytes,power_camA_W,"
    "power_camB_W,power_bs_W";

std::string results_row(const MetricsReport &r);
void write_results_csv(const std::filesystem::path &path, std::span<const MetricsReport> rows);
void write_curve_csv(const std::filesystem::path &path, std::span<const CurvePoint> curve);
void write_cost_csv(const std::filesystem::path &path, std::span<const CostRow> rows,
                    double power_a_w, double power_b_w, double power_bs_w);

}  // namespace hetsl

#endif  // HETSL_EXPERIMENT_HPP_
