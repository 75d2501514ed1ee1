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

// Run configuration, dataset pipeline and the command line tool.

#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "lmp/config.hpp"
#include "lmp/pipeline.hpp"

namespace fs = std::filesystem;
using namespace lmp;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::string line;
  int n = 0;
  while (std::getline(in, line)) ++n;
  return n;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag)
      : path(fs::temp_directory_path() / ("lmp_" + tag + "_" + std::to_string(getpid()))) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

// Exit status of the command line tool run inside `dir`.
int run_cli(const fs::path& dir, const std::string& args) {
  const std::string cmd =
      "cd '" + dir.string() + "' && '" LMP_CLI_PATH "' " + args + " >cli.out 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("default config carries every section", "[config]") {
  const Json c = default_config();
  for (const char* s : {"run", "data", "gen", "lr", "ld", "reference", "train", "mlp", "eval",
                        "ablate", "warmstart", "verify"})
    CHECK(c.contains(s));
  CHECK(TrainConfig::from_json(c["mlp"]).model.arch == nn::Architecture::mlp);
}

TEST_CASE("unknown keys and wrong types are rejected", "[config]") {
  Json c = default_config();
  CHECK_THROWS_AS(apply_override(c, "gen.cuont=3"), ParameterError);
  CHECK_THROWS_AS(apply_override(c, "nosuch.key=3"), ParameterError);
  CHECK_THROWS_AS(apply_override(c, "gen.count=many"), ParameterError);
  CHECK_THROWS_AS(apply_override(c, "gen.count"), ParameterError);
  CHECK_THROWS_AS(merge_config(c, Json{{"eval", {{"sample", 3}}}}), ParameterError);
  CHECK_THROWS_AS(load_run_config("", {"train.optimizer.momentum=0.9"}), ParameterError);
}

TEST_CASE("overrides keep the target type", "[config]") {
  Json c = default_config();
  apply_override(c, "gen.count=7");
  apply_override(c, "gen.preset=007");
  apply_override(c, "warmstart.eps=0.1,0.001");
  apply_override(c, "warmstart.inits=zero,cr");
  apply_override(c, "train.optimizer.lr=0.002");
  CHECK(c["gen"]["count"] == 7);
  CHECK(c["gen"]["preset"] == "007");
  CHECK(c["warmstart"]["eps"] == Json::array({0.1, 0.001}));
  CHECK(c["warmstart"]["inits"] == Json::array({"zero", "cr"}));
  CHECK(TrainConfig::from_json(c["train"]).optimizer.lr == 0.002);
}

TEST_CASE("config file and overrides compose, later wins", "[config]") {
  TempDir tmp("cfg");
  write_text_file(tmp.path / "run.json", R"({"gen": {"count": 9, "preset": "tiny-ga"}})");
  const Json c = load_run_config(tmp.path / "run.json", {"gen.count=11"});
  CHECK(c["gen"]["count"] == 11);
  CHECK(c["gen"]["preset"] == "tiny-ga");
  write_text_file(tmp.path / "bad.json", R"({"gen": {"size": 9}})");
  CHECK_THROWS_AS(load_run_config(tmp.path / "bad.json", {}), ParameterError);
}

TEST_CASE("config hash is a stable fingerprint", "[config]") {
  Json a = default_config();
  Json b = default_config();
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  apply_override(b, "run.seed=1");
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("generated datasets are reproducible and split in blocks", "[pipeline]") {
  TempDir tmp("gen");
  const GenParams preset = load_preset("tiny-mc");
  const DatasetManifest m = generate_dataset(preset, 50, 3, {}, tmp.path / "a");
  generate_dataset(preset, 50, 3, {}, tmp.path / "b");
  generate_dataset(preset, 50, 4, {}, tmp.path / "c");
  REQUIRE(m.entries.size() == 50);
  int files = 0;
  for (const auto& e : fs::directory_iterator(tmp.path / "a" / "instances")) files += e.is_regular_file();
  CHECK(files == 50);
  CHECK(m.indices(Split::train).size() == 40);
  CHECK(m.indices(Split::validation).size() == 5);
  CHECK(m.indices(Split::test).size() == 5);
  CHECK(m.entries.front().split == Split::train);
  CHECK(m.entries.back().split == Split::test);
  CHECK(slurp(tmp.path / "a/manifest.json") == slurp(tmp.path / "b/manifest.json"));
  for (const char* f : {"instances/000000.json", "instances/000049.json"}) {
    CHECK(slurp(tmp.path / "a" / f) == slurp(tmp.path / "b" / f));
    CHECK(slurp(tmp.path / "a" / f) != slurp(tmp.path / "c" / f));
  }
}

TEST_CASE("cached relaxations and references load back", "[pipeline]") {
  TempDir tmp("cache");
  generate_dataset(load_preset("tiny-ga"), 20, 5, {}, tmp.path);
  const fs::path manifest = tmp.path / "manifest.json";
  CHECK_THROWS_AS(load_dataset(manifest, Split::test, nn::Architecture::gnn, true, true), DataError);
  cache_cr(manifest);
  cache_references(manifest, {Split::validation, Split::test});
  const DatasetManifest m = load_manifest(manifest);
  for (const ManifestEntry& e : m.entries) {
    CHECK(e.cr_path.has_value());
    CHECK(e.ref_dual_value.has_value() == (e.split != Split::train));
  }
  const Dataset test = load_dataset(manifest, Split::test, nn::Architecture::gnn, true, true, true);
  REQUIRE(test.items.size() == 2);
  for (size_t i = 0; i < test.items.size(); ++i) {
    // maximisation: the Lagrangian dual bound is no looser than the relaxation
    CHECK(test.reference[i] <= test.items[i].cr_objective + 1e-6);
    CHECK(std::isfinite(test.reference[i]));
    CHECK(test.reference_pi[i].size() == test.items[i].lambda.size());
  }
  const Dataset train = load_dataset(manifest, Split::train, nn::Architecture::gnn, true, false);
  CHECK(std::isnan(train.reference.front()));
}

TEST_CASE("command line: exit codes and artifacts", "[cli]") {
  TempDir tmp("cli");
  CHECK(run_cli(tmp.path, "gen --preset tiny-mc --count 20 --seed 2 --out data") == 0);
  CHECK(fs::exists(tmp.path / "data/manifest.json"));
  CHECK(fs::exists(tmp.path / "runs/gen/gen.config.json"));
  const Json run = read_json_file(tmp.path / "runs/gen/gen.run.json");
  CHECK(run["seed"] == 2);
  CHECK(run["config_hash"].get<std::string>().size() == 16);

  CHECK(run_cli(tmp.path, "gen --gen.bogus=1") == 1);
  CHECK(run_cli(tmp.path, "frobnicate") == 1);
  CHECK(run_cli(tmp.path, "gen --gen.count=lots") == 1);
  CHECK(run_cli(tmp.path, "lr --instance nowhere.json") == 2);
  CHECK(run_cli(tmp.path, "lr") == 1);

  CHECK(run_cli(tmp.path, "lr --instance data/instances/000000.json --multipliers cr --run-dir r") == 0);
  CHECK(count_lines(tmp.path / "r/lr.csv") == 2);
  CHECK(run_cli(tmp.path, "verify --suite quick --run-dir v") == 0);
  CHECK(count_lines(tmp.path / "v/verify.csv") == 6);

  REQUIRE(run_cli(tmp.path, "cr") == 0);
  REQUIRE(run_cli(tmp.path, "reference --reference.splits=validation,test") == 0);
  REQUIRE(run_cli(tmp.path, "train --run-dir m --train.epochs=2 --train.model.hidden=16") == 0);
  CHECK(fs::exists(tmp.path / "m/model.ckpt"));
  CHECK(count_lines(tmp.path / "m/model_validation.csv") == 3);

  REQUIRE(run_cli(tmp.path, "warmstart --run-dir m") == 0);
  CHECK(count_lines(tmp.path / "m/warmstart.csv") == 13);

  REQUIRE(run_cli(tmp.path, "eval --run-dir m --eval.knn=false") == 0);
  const std::string first = slurp(tmp.path / "m/eval.csv");
  const std::string summary = slurp(tmp.path / "m/summary.csv");
  REQUIRE(run_cli(tmp.path, "eval --run-dir m --eval.knn=false") == 0);
  CHECK(slurp(tmp.path / "m/eval.csv") == first);
  CHECK(slurp(tmp.path / "m/summary.csv") == summary);
  CHECK(summary.find("LR(CR)") != std::string::npos);
}

TEST_CASE("LMP_RUN_DIR sets the default run directory", "[cli]") {
  TempDir tmp("env");
  CHECK(run_cli(tmp.path, "gen --count 10 --out d") == 0);
  CHECK(fs::exists(tmp.path / "runs/gen/gen.run.json"));
  const std::string cmd = "cd '" + tmp.path.string() + "' && LMP_RUN_DIR=elsewhere '" LMP_CLI_PATH
                          "' gen --count 10 --out d >/dev/null 2>&1";
  CHECK(std::system(cmd.c_str()) == 0);
  CHECK(fs::exists(tmp.path / "elsewhere/gen.run.json"));
}
