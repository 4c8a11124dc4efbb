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
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "hetsl/hetsl.h"

namespace {

struct Config {
  hetsl_config *cfg = nullptr;
  Config() {
    REQUIRE(hetsl_config_create(&cfg) == HETSL_OK);
    for (auto [k, v] : {std::pair{"image_size", "8"}, std::pair{"conv_filters", "2"},
                        std::pair{"fc_units", "8"}, std::pair{"K", "40"}, std::pair{"epochs", "1"},
                        std::pair{"batch_size", "8"}, std::pair{"eval_interval", "2"}}) {
      REQUIRE(hetsl_config_set(cfg, k, v) == HETSL_OK);
    }
  }
  ~Config() { hetsl_config_destroy(cfg); }
};

std::filesystem::path scratch(const std::string &name) {
  const auto dir = std::filesystem::temp_directory_path() / ("hetsl_capi_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_SUITE("c api") {
  TEST_CASE("version and status names") {
    CHECK(std::strlen(hetsl_version()) > 0);
    CHECK(std::string(hetsl_status_name(HETSL_OK)) == "ok");
    CHECK(std::string(hetsl_status_name(HETSL_ERR_TRUNCATED)).size() > 0);
  }

  TEST_CASE("configuration errors keep the previous values") {
    Config c;
    CHECK(hetsl_config_set(c.cfg, "epochs", "lots") == HETSL_ERR_CONFIG);
    CHECK(std::string(hetsl_last_error()).find("epochs") != std::string::npos);
    CHECK(hetsl_config_set(c.cfg, "no_such_key", "1") == HETSL_ERR_CONFIG);
    CHECK(std::string(hetsl_last_error()).find("no_such_key") != std::string::npos);
    CHECK(hetsl_config_validate(c.cfg) == HETSL_OK);

    size_t needed = 0;
    CHECK(hetsl_config_to_text(c.cfg, nullptr, 0, &needed) == HETSL_OK);
    std::vector<char> buf(needed);
    CHECK(hetsl_config_to_text(c.cfg, buf.data(), buf.size(), &needed) == HETSL_OK);
    const std::string text(buf.data());
    CHECK(text.size() + 1 == needed);
    CHECK(text.find("epochs=1\n") != std::string::npos);
  }

  TEST_CASE("null arguments are rejected") {
    hetsl_payloads p;
    CHECK(hetsl_config_create(nullptr) == HETSL_ERR_INVALID_ARGUMENT);
    CHECK(hetsl_payload_sizes(nullptr, &p) == HETSL_ERR_INVALID_ARGUMENT);
    CHECK(hetsl_config_set(nullptr, "epochs", "1") == HETSL_ERR_INVALID_ARGUMENT);
    CHECK(hetsl_train(nullptr, nullptr) == HETSL_ERR_INVALID_ARGUMENT);
    hetsl_config_destroy(nullptr);
    hetsl_report_destroy(nullptr);
  }

  TEST_CASE("payload sizes at full scale") {
    hetsl_config *cfg = nullptr;
    REQUIRE(hetsl_config_create(&cfg) == HETSL_OK);
    hetsl_payloads p;
    REQUIRE(hetsl_payload_sizes(cfg, &p) == HETSL_OK);
    CHECK(p.fp_bytes_a == 3200);
    CHECK(p.fp_bytes_b == 3200);
    CHECK(p.bp_bytes == 921600);
    REQUIRE(hetsl_config_set(cfg, "aggregate", "MmixAgg") == HETSL_OK);
    REQUIRE(hetsl_payload_sizes(cfg, &p) == HETSL_OK);
    CHECK(p.bp_bytes == 614400);
    hetsl_config_destroy(cfg);
  }

  TEST_CASE("train and inspect a report") {
    Config c;
    hetsl_report *report = nullptr;
    REQUIRE(hetsl_train(c.cfg, &report) == HETSL_OK);
    hetsl_summary s;
    REQUIRE(hetsl_report_summary(report, &s) == HETSL_OK);
    CHECK(s.steps == 4);
    CHECK(s.rmse_db > 0.0);
    // Two 4x4 feature frames of 32-bit values per upload.
    CHECK(s.ul_bytes_a == 4 * 128);
    CHECK(s.t_final_s > 0.0);
    CHECK(hetsl_report_curve_size(report) == 2);
    uint64_t n = 0;
    double t = 0, r = 0;
    CHECK(hetsl_report_curve_point(report, 1, &n, &t, &r) == HETSL_OK);
    CHECK(n == 4);
    CHECK(r == s.rmse_db);
    CHECK(hetsl_report_curve_point(report, 2, &n, &t, &r) == HETSL_ERR_RANGE);
    size_t needed = 0;
    CHECK(hetsl_report_results_row(report, nullptr, 0, &needed) == HETSL_OK);
    std::vector<char> row(needed);
    CHECK(hetsl_report_results_row(report, row.data(), row.size(), &needed) == HETSL_OK);
    CHECK(std::string(row.data()).rfind("HetSLAgg,Disc,ConcAgg,1,", 0) == 0);
    hetsl_report_destroy(report);
  }

  TEST_CASE("generate, then train from the saved dataset") {
    Config c;
    const auto dir = scratch("data");
    REQUIRE(hetsl_generate(c.cfg, dir.string().c_str()) == HETSL_OK);
    CHECK(std::filesystem::exists(dir / "meta.txt"));
    REQUIRE(hetsl_config_set(c.cfg, "dataset_path", dir.string().c_str()) == HETSL_OK);
    hetsl_report *report = nullptr;
    REQUIRE(hetsl_train(c.cfg, &report) == HETSL_OK);
    hetsl_report_destroy(report);

    std::ofstream(dir / "cam_b.bin", std::ios::binary | std::ios::trunc) << std::string("HSLD\x01\0\0\0\0\0", 10);
    CHECK(hetsl_train(c.cfg, &report) == HETSL_ERR_TRUNCATED);
    std::filesystem::remove_all(dir);
  }

  TEST_CASE("matrix and cost report") {
    Config c;
    const auto dir = scratch("matrix");
    REQUIRE(hetsl_config_set(c.cfg, "output_dir", dir.string().c_str()) == HETSL_OK);
    size_t rows = 0, failed = 0;
    REQUIRE(hetsl_matrix(c.cfg, "HetSLAgg/Disc/ConcAgg,RF_only/Disc/ConcAgg", &rows, &failed) == HETSL_OK);
    CHECK(rows == 2);
    CHECK(failed == 0);
    CHECK(std::filesystem::exists(dir / "matrix.csv"));
    CHECK(hetsl_matrix(c.cfg, "HetSLAgg/Sideways/ConcAgg", &rows, &failed) == HETSL_ERR_CONFIG);

    const auto csv = dir / "cost.csv";
    REQUIRE(hetsl_cost_report(c.cfg, 12, csv.string().c_str()) == HETSL_OK);
    std::ifstream in(csv);
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) ++lines;
    CHECK(lines == 13);
    CHECK(hetsl_cost_report(c.cfg, 0, csv.string().c_str()) == HETSL_ERR_INVALID_ARGUMENT);
    std::filesystem::remove_all(dir);
  }
}
