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

// Dataset-level steps shared by the command line tool and the acceptance
// runner: generation, caching of relaxations and reference duals, loading,
// and the evaluation tables.

#ifndef LMP_PIPELINE_HPP_
#define LMP_PIPELINE_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "lmp/dual.hpp"
#include "lmp/learn.hpp"

namespace lmp {

struct SplitFractions {
  double train = 0.8;
  double validation = 0.1;
  double test = 0.1;
};

/// Writes <dir>/instances/NNNNNN.json and <dir>/manifest.json. Instance i
/// is drawn from derive_seed(seed, "gen/i"); splits are contiguous blocks in
/// the order train, validation, test.
DatasetManifest generate_dataset(const GenParams& preset, int count, std::uint64_t seed,
                                 const SplitFractions& fractions, const std::filesystem::path& dir);

/// Solves and stores (<dir>/cr/) the continuous relaxation of every entry
/// that has none yet, then rewrites the manifest.
void cache_cr(const std::filesystem::path& manifest_path, int threads = 1);

/// Computes and stores (<dir>/ref/) reference duals for entries of the
/// given splits that have none yet, then rewrites the manifest.
void cache_references(const std::filesystem::path& manifest_path, const std::vector<Split>& splits,
                      int max_calls = 3000, double tolerance = 1e-9, int threads = 1);

struct Dataset {
  std::string name;
  std::vector<Prepared> items;
  std::vector<double> reference;     // NaN where not cached
  std::vector<Vector> reference_pi;  // filled on request
};

/// One split of a manifest in network-ready form. Cached relaxations are
/// used when present. With `require_reference` every entry must carry a
/// reference value.
Dataset load_dataset(const std::filesystem::path& manifest_path, Split split,
                     nn::Architecture arch, bool use_cr, bool require_reference,
                     bool with_reference_pi = false, int threads = 1);

/// Trains on the train split, selecting on the validation split.
TrainResult train_on_manifest(const TrainConfig& config, const std::filesystem::path& manifest_path,
                              int threads = 1);

/// Methods compared on one test set. Null members are skipped.
struct MethodSet {
  const nn::Checkpoint* model = nullptr;
  Ablation ablation;
  const nn::Checkpoint* mlp = nullptr;
  const Dataset* flat_test = nullptr;   // flat features of the test set
  const Dataset* knn_train = nullptr;   // flat features and reference pi
  int knn_k = 20;
  EvalOptions options;
};

/// Per-instance rows for CR, LR(0), LR(CR) and the configured learned
/// methods ("ours", "LR(MLP)", "LR(k-NN)").
std::vector<EvalRow> evaluate_methods(const Dataset& test, const MethodSet& methods);

/// One summary row per method, in first-appearance order.
std::vector<SummaryRow> summarize_methods(const std::string& dataset,
                                          const std::vector<EvalRow>& rows);

/// Summary rows of ours and LR(CR) per commodity-count bucket ("K=12").
std::vector<SummaryRow> generalization_eval(const nn::Checkpoint& model, const Dataset& test,
                                            const EvalOptions& options);

/// ablation,<dataset>,... with one row per variant (GAP %).
void save_ablation_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

/// Starting points "zero", "cr" or "predicted" (needs a model).
std::vector<InitSet> build_inits(const std::vector<std::string>& names, const Dataset& test,
                                 const nn::Checkpoint* model, const Ablation& ablation,
                                 const EvalOptions& options);

/// Writes <command>.config.json (effective configuration), <command>.run.json
/// (command, config hash, seed) and <command>.meta.json (timestamp and host:
/// the only nondeterministic file). Commands sharing a run directory keep
/// their own records.
void write_run_metadata(const std::filesystem::path& run_dir, const Json& config,
                        const std::string& command);

}  // namespace lmp

#endif  // LMP_PIPELINE_HPP_
