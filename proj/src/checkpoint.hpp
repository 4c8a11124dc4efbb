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

#ifndef HETSL_CHECKPOINT_HPP_
#define HETSL_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>

#include "model_shape.hpp"
#include "split_model.hpp"

namespace hetsl {

inline constexpr std::uint8_t kCheckpointFormatVersion = 1;

/// Binary layout, all integers and doubles little-endian:
///   "HSLC", u8 version, 3 reserved bytes,
///   u32 length + strategy key=value text,
///   u32 length + model-shape key=value text,
///   u32 tensor count, then per tensor:
///     u32 name length, name, u32 rank, u64 dims[rank], f64 values.
/// Tensors are every parameter and batch-norm running statistic in model
/// order, followed by "power_scaler" = [offset_dbm, scale_db].
void save_checkpoint(SplitModel &model, const std::filesystem::path &path);
std::unique_ptr<SplitModel> load_checkpoint(const std::filesystem::path &path);

std::string model_shape_text(const ModelShape &shape);
ModelShape parse_model_shape_text(const std::string &text);

}  // namespace hetsl

#endif  // HETSL_CHECKPOINT_HPP_
