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

#ifndef HETSL_STRATEGY_HPP_
#define HETSL_STRATEGY_HPP_

#include <string>
#include <string_view>

namespace hetsl {

enum class Camera { kA, kB };

// How the 30/10 fps frame-rate mismatch is balanced.
enum class Balance { kDisc, kMixInt, kMmixInt };
// How the BS fuses the two cameras' feature sequences.
enum class Aggregate { kConcAgg, kMmixAgg };
enum class Protocol { kHetSLAgg, kHetSLFedAvg, kCamARF, kCamBRF, kRFOnly };

std::string_view to_string(Camera c);
std::string_view to_string(Balance b);
std::string_view to_string(Aggregate a);
std::string_view to_string(Protocol p);

// Case-sensitive parse of the names above; throws kConfig on unknown names.
Balance parse_balance(std::string_view s);
Aggregate parse_aggregate(std::string_view s);
Protocol parse_protocol(std::string_view s);

struct StrategyConfig {
  Protocol protocol = Protocol::kHetSLAgg;
  Balance balance = Balance::kDisc;
  Aggregate aggregate = Aggregate::kConcAgg;
  double lambda_agg = 0.5;
  // Camera-A frames per camera-B frame. Frame windows need an integer grid.
  int frame_ratio = 3;

  void validate() const;
  // key=value lines; inverse of parse_strategy_text.
  std::string to_text() const;
  friend bool operator==(const StrategyConfig &, const StrategyConfig &) = default;
};

StrategyConfig parse_strategy_text(std::string_view text);

bool uses_camera(Protocol p, Camera c);

}  // namespace hetsl

#endif  // HETSL_STRATEGY_HPP_
