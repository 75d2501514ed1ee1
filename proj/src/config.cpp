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

#include "lmp/config.hpp"

#include <algorithm>
#include <cstdio>

#include "lmp/learn.hpp"

namespace lmp {

namespace {

void merge_at(Json& base, const Json& overlay, const std::string& path) {
  if (!overlay.is_object()) throw ParameterError("config section '" + path + "' must be an object");
  for (const auto& [key, value] : overlay.items()) {
    const std::string where = path.empty() ? key : path + "." + key;
    if (!base.contains(key)) throw ParameterError("unknown config key '" + where + "'");
    Json& target = base[key];
    if (target.is_object()) {
      merge_at(target, value, where);
    } else if (target.is_array() && value.is_string()) {
      // comma-separated list from the command line
      Json list = Json::array();
      const std::string s = value.get<std::string>();
      for (size_t start = 0; start <= s.size();) {
        const size_t end = std::min(s.find(',', start), s.size());
        const std::string item = s.substr(start, end - start);
        Json parsed = Json::parse(item, nullptr, false);
        list.push_back(parsed.is_discarded() ? Json(item) : parsed);
        start = end + 1;
      }
      target = list;
    } else {
      const bool numeric = target.is_number() && value.is_number();
      if (!target.is_null() && !numeric && target.type() != value.type())
        throw ParameterError("config key '" + where + "' has the wrong type");
      target = value;
    }
  }
}

}  // namespace

Json default_config() {
  TrainConfig mlp;
  mlp.model.arch = nn::Architecture::mlp;
  mlp.model.in_features = kFlatFeatures;
  return {
      {"run", {{"dir", ""}, {"seed", 0}, {"threads", 1}}},
      {"data", {{"manifest", "data/manifest.json"}, {"extra_manifests", Json::array()}}},
      {"gen",
       {{"preset", "tiny-mc"},
        {"count", 50},
        {"out", "data"},
        {"train", 0.8},
        {"validation", 0.1},
        {"test", 0.1}}},
      {"lr", {{"instance", ""}, {"multipliers", "zero"}}},
      {"ld",
       {{"instance", ""},
        {"method", "bundle"},
        {"init", "zero"},
        {"max_calls", 1000},
        {"epsilon", 0.0},
        {"time_limit", 0.0}}},
      {"reference",
       {{"max_calls", 3000},
        {"tolerance", 1e-9},
        {"splits", Json::array({"train", "validation", "test"})}}},
      {"train", TrainConfig{}.to_json()},
      {"mlp", mlp.to_json()},
      {"eval",
       {{"checkpoint", ""},
        {"mlp_checkpoint", ""},
        {"samples", 5},
        {"knn", true},
        {"knn_k", 20},
        {"split", "test"}}},
      {"ablate", {{"variants", Json::array({"ours", "-max", "-sum", "-cr", "-sample"})}}},
      {"warmstart",
       {{"checkpoint", ""},
        {"inits", Json::array({"zero", "cr", "predicted"})},
        {"eps", Json::array({1e-1, 1e-2, 1e-3, 1e-4})},
        {"method", "bundle"},
        {"max_calls", 1000},
        {"split", "test"}}},
      {"verify", {{"suite", "quick"}}},
  };
}

void merge_config(Json& base, const Json& overlay) { merge_at(base, overlay, ""); }

void apply_override(Json& config, std::string_view assignment) {
  const size_t eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0)
    throw ParameterError("override '" + std::string(assignment) + "' is not section.key=value");
  const std::string key(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  // locate the target to decide how to read the value
  const Json* target = &config;
  Json overlay_path = Json::array();
  for (size_t start = 0; start <= key.size();) {
    const size_t dot = std::min(key.find('.', start), key.size());
    const std::string part = key.substr(start, dot - start);
    if (!target->is_object() || !target->contains(part))
      throw ParameterError("unknown config key '" + key + "'");
    target = &(*target)[part];
    overlay_path.push_back(part);
    start = dot + 1;
  }
  Json value = target->is_string() ? Json(text) : Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  for (auto it = overlay_path.rbegin(); it != overlay_path.rend(); ++it)
    value = Json{{it->get<std::string>(), value}};
  merge_config(config, value);
}

Json load_run_config(const std::filesystem::path& file, const std::vector<std::string>& overrides) {
  Json config = default_config();
  if (!file.empty()) merge_config(config, read_json_file(file));
  for (const std::string& o : overrides) apply_override(config, o);
  // the typed sections validate themselves
  TrainConfig::from_json(config["train"]);
  TrainConfig::from_json(config["mlp"]);
  return config;
}

std::string config_hash(const Json& config) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(fnv1a64(dump_json(config, -1))));
  return buf;
}

}  // namespace lmp
