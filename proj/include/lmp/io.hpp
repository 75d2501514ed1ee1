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

#ifndef LMP_IO_HPP_
#define LMP_IO_HPP_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lmp/instance.hpp"

namespace lmp {

using Json = nlohmann::json;

/// Serializes JSON with every floating point number written with 17
/// significant digits. Non-finite numbers are written as the strings
/// "inf", "-inf" and "nan".
std::string dump_json(const Json& j, int indent = 1);
Json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

double json_to_double(const Json& j);
Json vector_to_json(const Vector& v);
Vector json_to_vector(const Json& j);

Json instance_to_json(const McInstance& inst);
Json instance_to_json(const GaInstance& inst);
/// Parses {type: "mc"|"ga", ...} into a validated problem.
Problem problem_from_json(const Json& j);

void save_problem(const Problem& p, const std::filesystem::path& path);
Problem load_problem(const std::filesystem::path& path);

/// Fingerprint of the instance content; stored in multiplier files.
std::string problem_hash(const Problem& p);

/// Multiplier file {problem_hash, values[]}.
void save_multipliers(const std::filesystem::path& path, const std::string& hash,
                      const Vector& values);
Vector load_multipliers(const std::filesystem::path& path,
                        const std::optional<std::string>& expected_hash);

GenParams gen_params_from_json(const Json& j);
Json gen_params_to_json(const GenParams& p);
/// Looks up `<name>.json` in the preset directory (LMP_PRESET_DIR or the
/// directory compiled into the library).
GenParams load_preset(const std::string& name);
std::filesystem::path preset_directory();

enum class Split { train, validation, test };
std::string_view to_string(Split s);
Split parse_split(std::string_view s);

struct ManifestEntry {
  std::string path;  // relative to the manifest directory
  Split split = Split::train;
  std::optional<std::string> cr_path;
  std::optional<double> ref_dual_value;
  std::optional<std::string> ref_dual_provenance;
  std::optional<std::string> ref_multipliers_path;
};

struct DatasetManifest {
  std::filesystem::path directory;
  double train_fraction = 0.8;
  double validation_fraction = 0.1;
  double test_fraction = 0.1;
  std::vector<ManifestEntry> entries;

  std::filesystem::path resolve(const std::string& relative) const {
    return directory / relative;
  }
  std::vector<std::size_t> indices(Split s) const;
};

void save_manifest(const DatasetManifest& m, const std::filesystem::path& path);
/// Loads a manifest and checks that every referenced file exists.
DatasetManifest load_manifest(const std::filesystem::path& path);

/// Minimal CSV writer; numbers use 17 significant digits unless given as text.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);
  CsvWriter& row(const std::vector<std::string>& cells);
  std::string str() const { return text_; }
  void save(const std::filesystem::path& path) const;

 private:
  std::size_t columns_;
  std::string text_;
};

}  // namespace lmp

#endif  // LMP_IO_HPP_
