// Copyright 2026 The lmp Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef LMP_NEURAL_CHECKPOINT_HPP_
#define LMP_NEURAL_CHECKPOINT_HPP_

#include <filesystem>

#include "lmp/neural/optimizer.hpp"

namespace lmp::nn {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  /// Free-form training settings, stored verbatim in the header.
  nlohmann::json hyper = nlohmann::json::object();
  ParamMap<float> params;
  OptimizerState optimizer;
  std::uint64_t seed = 0;
};

/// Layout: magic "LMPCKPT\0", u32 version, u64 header length, JSON header,
/// then (u32 name length, name, u32 rows, u32 cols, rows*cols LE float32)
/// per tensor: parameters, then first and second moments.
void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);

/// Throws DataError on a malformed or truncated file.
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace lmp::nn

#endif  // LMP_NEURAL_CHECKPOINT_HPP_
