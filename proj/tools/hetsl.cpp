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

#include <cstdint>
#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hetsl/hetsl.h"

namespace {

constexpr int kExitUsage = 64;
constexpr int kExitInternal = 70;
constexpr int kExitLibraryBase = 10;

int exit_code_for(hetsl_status status) {
  if (status == HETSL_OK) return 0;
  if (status == HETSL_ERR_INTERNAL) return kExitInternal;
  return kExitLibraryBase + static_cast<int>(status);
}

struct Failure {
  hetsl_status status;
};

void check(hetsl_status status, const std::string &what) {
  if (status == HETSL_OK) return;
  std::fprintf(stderr, "hetsl: %s failed [%s]: %s\n", what.c_str(), hetsl_status_name(status),
               hetsl_last_error());
  throw Failure{status};
}

class ConfigHandle {
 public:
  ConfigHandle() { check(hetsl_config_create(&cfg_), "config"); }
  ~ConfigHandle() { hetsl_config_destroy(cfg_); }
  ConfigHandle(const ConfigHandle &) = delete;
  ConfigHandle &operator=(const ConfigHandle &) = delete;

  hetsl_config *get() const { return cfg_; }
  void set(const std::string &key, const std::string &value) {
    check(hetsl_config_set(cfg_, key.c_str(), value.c_str()), "setting " + key);
  }

 private:
  hetsl_config *cfg_ = nullptr;
};

class ReportHandle {
 public:
  ~ReportHandle() { hetsl_report_destroy(report_); }
  hetsl_report **out() { return &report_; }
  const hetsl_report *get() const { return report_; }

 private:
  hetsl_report *report_ = nullptr;
};

/// Options shared by every subcommand. Named flags map one-to-one onto
/// configuration keys; `--set key=value` reaches the rest.
struct CommonOptions {
  std::string config_file;
  std::map<std::string, std::string> flags;
  std::vector<std::string> overrides;
};

void add_common(CLI::App *cmd, CommonOptions &opts) {
  cmd->add_option("-c,--config", opts.config_file, "key=value configuration file")
      ->check(CLI::ExistingFile);
  const std::vector<std::pair<std::string, std::string>> keyed = {
      {"--protocol", "protocol"},       {"--balance", "balance"},
      {"--aggregate", "aggregate"},     {"--lambda-agg", "lambda_agg"},
      {"--epochs", "epochs"},           {"--batch-size", "batch_size"},
      {"--learning-rate", "learning_rate"}, {"--seed", "seed"},
      {"--scene-seed", "scene_seed"},   {"--K", "K"},
      {"--conv-filters", "conv_filters"}, {"--dataset", "dataset_path"},
      {"--payload-mode", "payload_mode"}, {"--t-comp-mode", "t_comp_mode"},
      {"--t-comp", "t_comp_s"},         {"--eval-interval", "eval_interval"},
      {"--fedavg-period", "fedavg_period"}, {"--workers", "workers"},
  };
  for (const auto &[flag, key] : keyed) {
    cmd->add_option_function<std::string>(
        flag, [&opts, key = key](const std::string &v) { opts.flags[key] = v; },
        "sets config key " + key);
  }
  cmd->add_option("--set", opts.overrides, "additional key=value overrides (repeatable)");
}

// Defaults, then the config file, then named flags, then --set entries.
void apply(ConfigHandle &cfg, const CommonOptions &opts) {
  if (!opts.config_file.empty()) {
    check(hetsl_config_load_file(cfg.get(), opts.config_file.c_str()),
          "loading " + opts.config_file);
  }
  for (const auto &[key, value] : opts.flags) cfg.set(key, value);
  for (const auto &kv : opts.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw CLI::ValidationError("--set", "expected key=value, got '" + kv + "'");
    }
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  check(hetsl_config_validate(cfg.get()), "validation");
}

void print_summary(const hetsl_report *report) {
  hetsl_summary s{};
  check(hetsl_report_summary(report, &s), "summary");
  std::fprintf(stderr,
               "hetsl: rmse %.4f dB (LoS %.4f, NLoS %.4f, transition %.4f) after %llu steps, "
               "T_final %.6g s\n",
               s.rmse_db, s.rmse_los_db, s.rmse_nlos_db, s.rmse_trans_db,
               static_cast<unsigned long long>(s.steps), s.t_final_s);
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"Split-learning simulator for camera-assisted mmWave power prediction"};
  app.require_subcommand(1);
  app.set_version_flag("--version", hetsl_version());

  CommonOptions gen_opts, train_opts, matrix_opts, cost_opts;
  std::string gen_out, train_out, matrix_out, cost_out;
  std::string strategies = "grid";
  std::uint64_t cost_steps = 1000;

  auto *gen = app.add_subcommand("generate", "render the synthetic scene into a dataset directory");
  add_common(gen, gen_opts);
  gen->add_option("-o,--out", gen_out, "dataset directory")->required();

  auto *train = app.add_subcommand("train", "train and evaluate one configuration");
  add_common(train, train_opts);
  train->add_option("-o,--out", train_out, "output directory for CSVs and the checkpoint");

  auto *matrix = app.add_subcommand("matrix", "sweep strategies on a shared dataset and seed");
  add_common(matrix, matrix_opts);
  matrix->add_option("-o,--out", matrix_out, "output directory");
  matrix->add_option("--strategies", strategies,
                     "grid, baselines, or comma list of protocol/balance/aggregate");

  auto *cost = app.add_subcommand("cost", "analytic cost report without training");
  add_common(cost, cost_opts);
  cost->add_option("-o,--out", cost_out, "CSV path")->required();
  cost->add_option("--steps", cost_steps, "number of exchanges")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    ConfigHandle cfg;
    if (*gen) {
      apply(cfg, gen_opts);
      check(hetsl_generate(cfg.get(), gen_out.c_str()), "generate");
      std::fprintf(stderr, "hetsl: dataset written to %s\n", gen_out.c_str());
    } else if (*train) {
      if (!train_out.empty()) train_opts.flags["output_dir"] = train_out;
      apply(cfg, train_opts);
      ReportHandle report;
      check(hetsl_train(cfg.get(), report.out()), "train");
      print_summary(report.get());
    } else if (*matrix) {
      if (!matrix_out.empty()) matrix_opts.flags["output_dir"] = matrix_out;
      apply(cfg, matrix_opts);
      std::size_t rows = 0, failed = 0;
      check(hetsl_matrix(cfg.get(), strategies.c_str(), &rows, &failed), "matrix");
      std::fprintf(stderr, "hetsl: %zu runs, %zu failed\n", rows, failed);
      if (failed > 0) return kExitLibraryBase + static_cast<int>(HETSL_ERR_STATE);
    } else if (*cost) {
      apply(cfg, cost_opts);
      check(hetsl_cost_report(cfg.get(), cost_steps, cost_out.c_str()), "cost");
      std::fprintf(stderr, "hetsl: cost report written to %s\n", cost_out.c_str());
    }
  } catch (const Failure &f) {
    return exit_code_for(f.status);
  } catch (const CLI::ValidationError &e) {
    std::fprintf(stderr, "hetsl: %s\n", e.what());
    return kExitUsage;
  }
  return 0;
}
