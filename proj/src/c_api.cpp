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

#include "hetsl/hetsl.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "dataset.hpp"
#include "error.hpp"
#include "experiment.hpp"

struct hetsl_config {
  hetsl::ExperimentConfig cfg;
};

struct hetsl_report {
  hetsl::MetricsReport report;
};

namespace {

thread_local std::string g_last_error;

hetsl_status to_status(hetsl::ErrorCode code) {
  return static_cast<hetsl_status>(static_cast<int>(code));
}

template <typename Fn>
hetsl_status guarded(Fn &&fn) {
  try {
    fn();
    g_last_error.clear();
    return HETSL_OK;
  } catch (const hetsl::Error &e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc &) {
    g_last_error = "out of memory";
    return HETSL_ERR_INTERNAL;
  } catch (const std::exception &e) {
    g_last_error = e.what();
    return HETSL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return HETSL_ERR_INTERNAL;
  }
}

void require(const void *p, const char *what) {
  if (!p) hetsl::fail(hetsl::ErrorCode::kInvalidArgument, std::string(what) + " is NULL");
}

void copy_out(const std::string &text, char *buf, std::size_t capacity, std::size_t *needed) {
  if (needed) *needed = text.size() + 1;
  if (!buf) return;
  if (capacity < text.size() + 1) {
    hetsl::fail(hetsl::ErrorCode::kRange, "buffer of " + std::to_string(capacity) +
                                              " bytes is too small, need " + std::to_string(text.size() + 1));
  }
  std::memcpy(buf, text.c_str(), text.size() + 1);
}

}  // namespace

extern "C" {

const char *hetsl_version(void) { return "0.1.0"; }

const char *hetsl_last_error(void) { return g_last_error.c_str(); }

const char *hetsl_status_name(hetsl_status status) {
  if (status == HETSL_OK) return "ok";
  if (status == HETSL_ERR_INTERNAL) return "internal";
  if (status >= HETSL_ERR_INVALID_ARGUMENT && status <= HETSL_ERR_RANGE) {
    return hetsl::error_code_name(static_cast<hetsl::ErrorCode>(status)).data();
  }
  return "unknown";
}

hetsl_status hetsl_config_create(hetsl_config **out) {
  return guarded([&] {
    require(out, "out");
    *out = new hetsl_config();
  });
}

void hetsl_config_destroy(hetsl_config *cfg) { delete cfg; }

hetsl_status hetsl_config_set(hetsl_config *cfg, const char *key, const char *value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    hetsl::ExperimentConfig next = cfg->cfg;
    next.set(key, value);
    cfg->cfg = std::move(next);
  });
}

hetsl_status hetsl_config_load_file(hetsl_config *cfg, const char *path) {
  return guarded([&] {
    require(cfg, "config");
    require(path, "path");
    cfg->cfg = hetsl::load_experiment_file(path, cfg->cfg);
  });
}

hetsl_status hetsl_config_validate(const hetsl_config *cfg) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

hetsl_status hetsl_config_to_text(const hetsl_config *cfg, char *buf, size_t capacity,
                                  size_t *needed) {
  return guarded([&] {
    require(cfg, "config");
    copy_out(cfg->cfg.to_text(), buf, capacity, needed);
  });
}

hetsl_status hetsl_payload_sizes(const hetsl_config *cfg, hetsl_payloads *out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    cfg->cfg.validate();
    const auto p = hetsl::payloads(cfg->cfg.strategy, cfg->cfg.shape, cfg->cfg.payload_mode);
    *out = {p.fp_bytes_a, p.fp_bytes_b, p.bp_bytes};
  });
}

hetsl_status hetsl_generate(const hetsl_config *cfg, const char *dir) {
  return guarded([&] {
    require(cfg, "config");
    require(dir, "dir");
    cfg->cfg.validate();
    hetsl::save_dataset(hetsl::build_dataset(cfg->cfg.scene), dir);
  });
}

hetsl_status hetsl_train(const hetsl_config *cfg, hetsl_report **out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = nullptr;
    auto report = std::make_unique<hetsl_report>();
    report->report = hetsl::run_experiment(cfg->cfg);
    *out = report.release();
  });
}

void hetsl_report_destroy(hetsl_report *report) { delete report; }

hetsl_status hetsl_report_summary(const hetsl_report *report, hetsl_summary *out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    const auto &r = report->report;
    *out = {r.rmse_db,       r.rmse_los_db,   r.rmse_nlos_db, r.rmse_trans_db, r.steps,
            r.ul_bytes_a,    r.ul_bytes_b,    r.dl_bytes,     r.power_cam_a_w, r.power_cam_b_w,
            r.power_bs_w,    r.t_final_s,     r.final_loss};
  });
}

size_t hetsl_report_curve_size(const hetsl_report *report) {
  return report ? report->report.curve.size() : 0;
}

hetsl_status hetsl_report_curve_point(const hetsl_report *report, size_t index, uint64_t *n,
                                      double *t_n_s, double *rmse_db) {
  return guarded([&] {
    require(report, "report");
    const auto &curve = report->report.curve;
    if (index >= curve.size()) {
      hetsl::fail(hetsl::ErrorCode::kRange, "curve index " + std::to_string(index) + " out of range");
    }
    if (n) *n = curve[index].n;
    if (t_n_s) *t_n_s = curve[index].t_n_s;
    if (rmse_db) *rmse_db = curve[index].rmse_db;
  });
}

hetsl_status hetsl_report_results_row(const hetsl_report *report, char *buf, size_t capacity,
                                      size_t *needed) {
  return guarded([&] {
    require(report, "report");
    copy_out(hetsl::results_row(report->report), buf, capacity, needed);
  });
}

hetsl_status hetsl_matrix(const hetsl_config *cfg, const char *strategies, size_t *rows,
                          size_t *failed) {
  return guarded([&] {
    require(cfg, "config");
    require(strategies, "strategies");
    const auto list = hetsl::parse_strategy_list(strategies, cfg->cfg.strategy);
    const auto result = hetsl::run_matrix(cfg->cfg, list);
    std::size_t bad = 0;
    for (const auto &row : result) bad += row.report ? 0 : 1;
    if (rows) *rows = result.size();
    if (failed) *failed = bad;
  });
}

hetsl_status hetsl_cost_report(const hetsl_config *cfg, uint64_t steps, const char *csv_path) {
  return guarded([&] {
    require(cfg, "config");
    require(csv_path, "csv_path");
    const hetsl::Dataset data = hetsl::prepare_dataset(cfg->cfg);
    const auto rows = hetsl::cost_report(cfg->cfg, data, steps);
    const auto ops = hetsl::node_op_counts(cfg->cfg.strategy, cfg->cfg.shape);
    const double tau = data.tau_s;
    hetsl::write_cost_csv(csv_path, rows, hetsl::power_watts(ops.camera_a, tau),
                          hetsl::power_watts(ops.camera_b, tau), hetsl::power_watts(ops.bs, tau));
  });
}

}  // extern "C"
