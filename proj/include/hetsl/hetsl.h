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

#ifndef HETSL_HETSL_H_
#define HETSL_HETSL_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(HETSL_BUILDING_LIBRARY)
#define HETSL_API __declspec(dllexport)
#else
#define HETSL_API __declspec(dllimport)
#endif
#else
#define HETSL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every entry point returns one of these. On failure a description is
 * available from hetsl_last_error() on the same thread. */
typedef enum hetsl_status {
  HETSL_OK = 0,
  HETSL_ERR_INVALID_ARGUMENT = 1,
  HETSL_ERR_CONFIG = 2,
  HETSL_ERR_IO = 3,
  HETSL_ERR_FORMAT = 4,
  HETSL_ERR_TRUNCATED = 5,
  HETSL_ERR_VERSION = 6,
  HETSL_ERR_SHAPE = 7,
  HETSL_ERR_NUMERIC = 8,
  HETSL_ERR_STATE = 9,
  HETSL_ERR_RANGE = 10,
  HETSL_ERR_INTERNAL = 99
} hetsl_status;

typedef struct hetsl_config hetsl_config;
typedef struct hetsl_report hetsl_report;

typedef struct hetsl_summary {
  double rmse_db;
  double rmse_los_db; /* NaN when the test split has no such sample */
  double rmse_nlos_db;
  double rmse_trans_db;
  uint64_t steps;
  uint64_t ul_bytes_a;
  uint64_t ul_bytes_b;
  uint64_t dl_bytes;
  double power_cam_a_w;
  double power_cam_b_w;
  double power_bs_w;
  double t_final_s;
  double final_loss;
} hetsl_summary;

typedef struct hetsl_payloads {
  uint64_t fp_bytes_a;
  uint64_t fp_bytes_b;
  uint64_t bp_bytes;
} hetsl_payloads;

HETSL_API const char *hetsl_version(void);
HETSL_API const char *hetsl_last_error(void);
HETSL_API const char *hetsl_status_name(hetsl_status status);

HETSL_API hetsl_status hetsl_config_create(hetsl_config **out);
HETSL_API void hetsl_config_destroy(hetsl_config *cfg);
HETSL_API hetsl_status hetsl_config_set(hetsl_config *cfg, const char *key, const char *value);
/* Applies a key=value file on top of the current values. */
HETSL_API hetsl_status hetsl_config_load_file(hetsl_config *cfg, const char *path);
HETSL_API hetsl_status hetsl_config_validate(const hetsl_config *cfg);
/* Writes the full configuration as key=value text. `*needed` receives the
 * size including the terminating NUL; `buf` may be NULL to query it. */
HETSL_API hetsl_status hetsl_config_to_text(const hetsl_config *cfg, char *buf, size_t capacity,
                                            size_t *needed);

HETSL_API hetsl_status hetsl_payload_sizes(const hetsl_config *cfg, hetsl_payloads *out);

/* Renders the configured synthetic scene and saves it as a dataset directory. */
HETSL_API hetsl_status hetsl_generate(const hetsl_config *cfg, const char *dir);

/* Trains and evaluates one configuration; artifacts go to output_dir when set. */
HETSL_API hetsl_status hetsl_train(const hetsl_config *cfg, hetsl_report **out);
HETSL_API void hetsl_report_destroy(hetsl_report *report);
HETSL_API hetsl_status hetsl_report_summary(const hetsl_report *report, hetsl_summary *out);
HETSL_API size_t hetsl_report_curve_size(const hetsl_report *report);
HETSL_API hetsl_status hetsl_report_curve_point(const hetsl_report *report, size_t index,
                                                uint64_t *n, double *t_n_s, double *rmse_db);
HETSL_API hetsl_status hetsl_report_results_row(const hetsl_report *report, char *buf,
                                                size_t capacity, size_t *needed);

/* Runs a strategy sweep ("grid", "baselines" or a comma list of
 * protocol/balance/aggregate). Failed runs are counted, not fatal. */
HETSL_API hetsl_status hetsl_matrix(const hetsl_config *cfg, const char *strategies,
                                    size_t *rows, size_t *failed);

/* Writes the analytic cost CSV for `steps` exchanges without training. */
HETSL_API hetsl_status hetsl_cost_report(const hetsl_config *cfg, uint64_t steps,
                                         const char *csv_path);

#ifdef __cplusplus
}
#endif

#endif /* HETSL_HETSL_H_ */
