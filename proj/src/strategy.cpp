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

#include "strategy.hpp"

#include <charconv>
#include <cstdio>
#include <sstream>

#include "error.hpp"

namespace hetsl {

std::string_view to_string(Camera c) { return c == Camera::kA ? "A" : "B"; }

std::string_view to_string(Balance b) {
  switch (b) {
    case Balance::kDisc: return "Disc";
    case Balance::kMixInt: return "MixInt";
    case Balance::kMmixInt: return "MmixInt";
  }
  return "?";
}

std::string_view to_string(Aggregate a) {
  return a == Aggregate::kConcAgg ? "ConcAgg" : "MmixAgg";
}

std::string_view to_string(Protocol p) {
  switch (p) {
    case Protocol::kHetSLAgg: return "HetSLAgg";
    case Protocol::kHetSLFedAvg: return "HetSLFedAvg";
    case Protocol::kCamARF: return "CamA_RF";
    case Protocol::kCamBRF: return "CamB_RF";
    case Protocol::kRFOnly: return "RF_only";
  }
  return "?";
}

Balance parse_balance(std::string_view s) {
  for (auto b : {Balance::kDisc, Balance::kMixInt, Balance::kMmixInt}) {
    if (s == to_string(b)) return b;
  }
  fail(ErrorCode::kConfig, "balance: unknown value '" + std::string(s) + "'");
}

Aggregate parse_aggregate(std::string_view s) {
  for (auto a : {Aggregate::kConcAgg, Aggregate::kMmixAgg}) {
    if (s == to_string(a)) return a;
  }
  fail(ErrorCode::kConfig, "aggregate: unknown value '" + std::string(s) + "'");
}

Protocol parse_protocol(std::string_view s) {
  for (auto p : {Protocol::kHetSLAgg, Protocol::kHetSLFedAvg, Protocol::kCamARF,
                 Protocol::kCamBRF, Protocol::kRFOnly}) {
    if (s == to_string(p)) return p;
  }
  fail(ErrorCode::kConfig, "protocol: unknown value '" + std::string(s) + "'");
}

void StrategyConfig::validate() const {
  if (!(lambda_agg > 0.0 && lambda_agg < 1.0)) {
    fail(ErrorCode::kConfig, "lambda_agg: must lie in (0,1)");
  }
  if (frame_ratio < 2) fail(ErrorCode::kConfig, "frame_ratio: must be an integer > 1");
}

std::string StrategyConfig::to_text() const {
  char lambda[64];
  std::snprintf(lambda, sizeof lambda, "%.17g", lambda_agg);
  std::ostringstream os;
  os << "protocol=" << to_string(protocol) << "\n"
     << "balance=" << to_string(balance) << "\n"
     << "aggregate=" << to_string(aggregate) << "\n"
     << "lambda_agg=" << lambda << "\n"
     << "frame_ratio=" << frame_ratio << "\n";
  return os.str();
}

StrategyConfig parse_strategy_text(std::string_view text) {
  StrategyConfig cfg;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail(ErrorCode::kFormat, "strategy text: missing '=' in " + line);
    const std::string key = line.substr(0, eq);
    const std::string value = line.substr(eq + 1);
    if (key == "protocol") {
      cfg.protocol = parse_protocol(value);
    } else if (key == "balance") {
      cfg.balance = parse_balance(value);
    } else if (key == "aggregate") {
      cfg.aggregate = parse_aggregate(value);
    } else if (key == "lambda_agg") {
      cfg.lambda_agg = std::stod(value);
    } else if (key == "frame_ratio") {
      cfg.frame_ratio = std::stoi(value);
    } else {
      fail(ErrorCode::kFormat, "strategy text: unknown key " + key);
    }
  }
  cfg.validate();
  return cfg;
}

bool uses_camera(Protocol p, Camera c) {
  switch (p) {
    case Protocol::kHetSLAgg:
    case Protocol::kHetSLFedAvg: return true;
    case Protocol::kCamARF: return c == Camera::kA;
    case Protocol::kCamBRF: return c == Camera::kB;
    case Protocol::kRFOnly: return false;
  }
  return false;
}

}  // namespace hetsl
