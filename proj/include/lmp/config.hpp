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

#ifndef LMP_CONFIG_HPP_
#define LMP_CONFIG_HPP_

#include <filesystem>
#include <string>
#include <string_view>

#include "lmp/io.hpp"

namespace lmp {

/// Every option of every command, with its default. A run configuration is
/// this document with some values replaced; keys it does not contain are
/// rejected.
Json default_config();

/// Overwrites values of `base` with those of `overlay`. Throws
/// ParameterError naming the first key of `overlay` that `base` lacks.
void merge_config(Json& base, const Json& overlay);

/// Applies one "section.key=value" assignment. The value is parsed as JSON
/// when possible and taken as a string otherwise.
void apply_override(Json& config, std::string_view assignment);

/// default_config() merged with a config file (when given) and overrides.
Json load_run_config(const std::filesystem::path& file,
                     const std::vector<std::string>& overrides);

/// Fingerprint of a configuration (hex FNV-1a of its canonical dump).
std::string config_hash(const Json& config);

}  // namespace lmp

#endif  // LMP_CONFIG_HPP_
