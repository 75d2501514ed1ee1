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

#ifndef LMP_LEARN_HPP_
#define LMP_LEARN_HPP_

#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lmp/featurize.hpp"
#include "lmp/io.hpp"
#include "lmp/lagrangian.hpp"
#include "lmp/neural/checkpoint.hpp"

namespace lmp {

/// Model variants: -max evaluates one sample, -sum drops the CR multipliers
/// from the decoder output, -cr removes every CR input, -sample makes the
/// encoder deterministic (zero latent noise).
struct Ablation {
  bool no_max = false;
  bool no_sum = false;
  bool no_cr = false;
  bool no_sample = false;

  /// "ours" or the flags joined by '+', e.g. "-cr".
  std::string label() const;
  /// Accepts "ours", "-max", "-sum", "-cr", "-sample" and '+'-joined lists.
  static Ablation parse(std::string_view s);
  bool uses_cr() const { return !no_cr; }
  bool adds_lambda() const { return !no_cr && !no_sum; }
};

struct TrainConfig {
  nn::ModelConfig model;
  nn::RAdamOptions optimizer;
  int batch_size = 8;
  int epochs = 20;
  std::uint64_t seed = 0;
  Ablation ablation;
  int eval_samples = 5;
  /// Seconds, 0 for none. A time limit makes the run machine dependent.
  double time_limit = 0.0;

  void validate() const;
  Json to_json() const;
  static TrainConfig from_json(const Json& j);
};

/// One instance in network-ready form.
struct Prepared {
  std::string id;
  std::shared_ptr<const Problem> problem;
  std::shared_ptr<const BipartiteGraph> graph;  // null for the flat model
  nn::GraphInput<float> input;
  Vector lambda;  // projected CR multipliers (zero without CR)
  double cr_objective = 0.0;
  double cr_ms = 0.0;
};

/// Builds graph, features and CR multipliers. Solves the CR unless a cached
/// solution is given; with `use_cr` false the CR is neither solved nor read.
Prepared prepare_instance(std::string id, std::shared_ptr<const Problem> problem,
                          const std::optional<LpSolution>& cached_cr,
                          nn::Architecture arch, bool use_cr);

/// Per-instance column standardization of flat features (constant columns
/// become zero).
Matrix standardize_columns(const Matrix& m);

/// 100 |ref - B| / |ref|; NaN when ref = 0.
double gap(double bound, double reference);

struct TrainLogRow {
  long step = 0;
  double loss = 0.0;
  double lr = 0.0;
  double gnorm = 0.0;
};

struct TrainResult {
  nn::Checkpoint best;
  std::vector<TrainLogRow> log;
  std::vector<double> validation_gap;  // per epoch
  int best_epoch = -1;
  int skipped_instances = 0;
};

/// Unsupervised training: loss -s * LR(pi) with s = +1 for minimization
/// and -1 for maximization, gradient through pi with the supergradient held
/// fixed. Selects the epoch with the lowest validation GAP; only the
/// reference dual values of validation instances are needed, never their
/// multipliers.
TrainResult train(const TrainConfig& config, const std::vector<Prepared>& train_set,
                  const std::vector<Prepared>& validation_set,
                  const std::vector<double>& validation_reference);

void save_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path);

struct EvalRow {
  std::string instance;
  std::string method;
  double bound = 0.0;
  double reference = 0.0;
  double gap = 0.0;
  double time_ms = 0.0;
  double cr_ms = 0.0;
  double forward_ms = 0.0;
  double oracle_ms = 0.0;
};

struct EvalOptions {
  int samples = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string method = "ours";
};

/// Best bound over `samples` latent draws per instance (one draw for -max,
/// zero noise for -sample). The draws for instance i come from a stream
/// derived from (seed, i), so results do not depend on the thread count.
std::vector<EvalRow> evaluate_model(const nn::Checkpoint& model, const Ablation& ablation,
                                    const std::vector<Prepared>& instances,
                                    const std::vector<double>& reference,
                                    const EvalOptions& options);

/// Multipliers of the best draw, with the same draws as evaluate_model.
std::vector<Vector> predict_multipliers(const nn::Checkpoint& model, const Ablation& ablation,
                                        const std::vector<Prepared>& instances,
                                        const EvalOptions& options);

/// Bound of fixed multipliers per instance.
std::vector<EvalRow> evaluate_multipliers(const std::string& method,
                                          const std::vector<Prepared>& instances,
                                          const std::vector<Vector>& pis,
                                          const std::vector<double>& reference,
                                          int threads = 1);

std::vector<EvalRow> baseline_lr0(const std::vector<Prepared>& instances,
                                  const std::vector<double>& reference, int threads = 1);
/// Uses the projected CR multipliers stored in the prepared instances.
std::vector<EvalRow> baseline_lrcr(const std::vector<Prepared>& instances,
                                   const std::vector<double>& reference, int threads = 1);

/// Flat features and reference multipliers of training constraints.
struct KnnBank {
  Matrix features;
  Vector targets;
};

KnnBank build_knn_bank(const std::vector<Prepared>& flat_instances,
                       const std::vector<Vector>& reference_pis);
/// Mean of the k nearest bank rows (Euclidean) per query row; all rows
/// when the bank is smaller than k.
Vector knn_predict(const KnnBank& bank, const Matrix& queries, int k = 20);

/// Mean GAP over rows with a nonzero reference.
double mean_gap(const std::vector<EvalRow>& rows);

/// Per-instance rows: instance,method,bound,reference,gap (+ timing sidecar).
void save_eval_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path);

struct SummaryRow {
  std::string dataset;
  std::string method;
  double gap = 0.0;
  int instances = 0;
  double time_ms = 0.0;
};

SummaryRow summarize(const std::string& dataset, const std::string& method,
                     const std::vector<EvalRow>& rows);
/// dataset,method,gap_percent,instances (+ timing sidecar with time_ms).
void save_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path);

/// Runs fn(i) for i in [0, n) on up to `threads` workers.
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace lmp

#endif  // LMP_LEARN_HPP_
