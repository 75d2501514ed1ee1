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

#ifndef LMP_DUAL_HPP_
#define LMP_DUAL_HPP_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "lmp/lagrangian.hpp"

namespace lmp {

/// A Lagrangian dual to be optimized: maximize LR for minimization problems,
/// minimize it for maximization problems.
struct DualOracle {
  Sense sense = Sense::minimize;
  std::vector<SignPolicy> sign;
  std::function<LrResult(const Vector&)> evaluate;

  Eigen::Index dimension() const { return static_cast<Eigen::Index>(sign.size()); }
  /// +1 when LR is maximized. ascent * LR is always maximized.
  double ascent() const { return sense_sign(sense); }
};

DualOracle make_oracle(const Problem& problem);

struct StopRule {
  /// Oracle evaluations, including the one at the starting point.
  int max_calls = 1000;
  /// Seconds; 0 disables the limit.
  double time_limit = 0.0;
  /// Stop once the gap to `reference` drops to `epsilon` or below.
  std::optional<double> reference;
  double epsilon = 0.0;
  /// Gap measured as (ref - best) / (1 + |ref|) (in ascent orientation)
  /// unless false, then absolute.
  bool relative = true;
  /// Bundle only: stop when the predicted ascent is below
  /// tolerance * (1 + |center value|).
  double tolerance = 1e-9;
};

/// Gap between a reference dual value and a bound, oriented so that it is
/// nonnegative for a bound no better than the reference.
double dual_gap(const DualOracle& oracle, double reference, double value,
                bool relative);

struct TraceRecord {
  int iteration = 0;
  double value = 0.0;
  double step = 0.0;
  double gnorm = 0.0;
  double elapsed_ms = 0.0;
  /// Bundle only: predicted ascent of the master and whether the trial
  /// point became the new stability center.
  double predicted = 0.0;
  bool serious = false;
};

struct SolveTrace {
  std::vector<TraceRecord> records;
  double best_value = 0.0;
  Vector best_pi;
  int calls = 0;
  int master_solves = 0;
  /// "epsilon", "converged", "stationary", "max_calls" or "time_limit".
  std::string reason;
  /// Master problems that hit their iteration cap.
  int master_warnings = 0;

  /// Writes iteration,value,step,gnorm to `path` and the wall-clock
  /// column to a sibling `<stem>.timing.csv`, keeping the main file
  /// reproducible across runs.
  void save_csv(const std::filesystem::path& path) const;
};

struct SubgradientOptions {
  /// Divide the supergradient by its norm before stepping. Off by default:
  /// unit-length steps of size 1/(1+m) travel only O(log k) in k
  /// iterations, too little to reach multipliers of realistic magnitude.
  bool normalize = false;
};

/// Projected supergradient steps pi <- proj(pi + g/(1+m)), m counting
/// iterations whose value was worse than the previous one.
SolveTrace subgradient_solve(const DualOracle& oracle, const Vector& pi0,
                             const StopRule& stop,
                             const SubgradientOptions& options = {});

struct BundleOptions {
  double kappa = 0.1;
  double t_initial = 1.0;
  double t_min = 1e-6;
  double t_max = 1e6;
  int serious_to_grow = 3;
  int null_to_shrink = 5;
  int max_cuts = 50;
  double master_gap = 1e-8;
  int master_iterations = 20000;
};

/// A linearization phi_j + g_j'(pi - pi_j) of the ascent-oriented dual
/// function phi = ascent * LR.
struct Cut {
  Vector point;
  double value = 0.0;
  Vector slope;
};

struct MasterSolution {
  Vector alpha;
  Vector trial;
  /// Cutting-plane model at the trial point.
  double model_value = 0.0;
  /// Objective of the master dual at alpha.
  double dual_value = 0.0;
  double fw_gap = 0.0;
  int iterations = 0;
  bool capped = false;
};

/// Proximal master problem
///   max_{pi in P} min_j [phi_j + g_j'(pi - pi_j)] - |pi - center|^2 / (2t)
/// with P the sign-policy orthant, solved through its dual over the cut
/// weight simplex by away-step Frank-Wolfe. For fixed weights the inner
/// maximization has the closed form pi(alpha) = proj_P(center + t G alpha).
MasterSolution solve_master(const std::vector<Cut>& cuts, const Vector& center,
                            double t, const std::vector<SignPolicy>& sign,
                            double gap_tol = 1e-8, int max_iterations = 20000);

/// Dual objective of the master at alpha (convex in alpha).
double master_dual_value(const std::vector<Cut>& cuts, const Vector& center,
                         double t, const std::vector<SignPolicy>& sign,
                         const Vector& alpha);

/// Proximal bundle method with serious/null steps.
SolveTrace bundle_solve(const DualOracle& oracle, const Vector& pi0,
                        const StopRule& stop, const BundleOptions& options = {});

enum class DualMethod { subgradient, bundle };
std::string_view to_string(DualMethod m);
DualMethod parse_dual_method(std::string_view s);

SolveTrace dual_solve(DualMethod method, const DualOracle& oracle,
                      const Vector& pi0, const StopRule& stop,
                      const BundleOptions& options = {});

struct ReferenceSolution {
  Vector pi;
  double value = 0.0;
  int calls = 0;
  /// "in-repo bundle" or "budget-capped".
  std::string provenance;
};

/// Near-optimal multipliers by a long bundle run. Starts from the better
/// of zero and the continuous-relaxation duals of the dualized rows, so the
/// result is never worse than the continuous relaxation bound.
ReferenceSolution compute_reference(const Problem& problem, int max_calls = 3000,
                                    double tolerance = 1e-9);

/// Starting points for one initialization strategy, one per instance.
struct InitSet {
  std::string name;
  std::vector<Vector> starts;
};

struct BenchInstance {
  const Problem* problem = nullptr;
  double reference = 0.0;
};

struct BenchRow {
  double epsilon = 0.0;
  std::string init;
  double iter_mean = 0.0;
  double iter_std = 0.0;
  double time_mean = 0.0;
  double time_std = 0.0;
  /// Instances that reached the threshold within the budget; the others
  /// count with the full budget.
  int reached = 0;
  int instances = 0;
};

/// Runs the solver once per (instance, init) down to the finest threshold
/// and records the first iteration at which each threshold is met.
/// Iterations exclude the evaluation of the starting point.
std::vector<BenchRow> warmstart_bench(const std::vector<BenchInstance>& instances,
                                      const std::vector<InitSet>& inits,
                                      DualMethod method,
                                      const std::vector<double>& epsilons,
                                      const StopRule& budget, int threads = 1);

/// Writes eps,init,iter_mean,iter_std,reached and the timing sidecar.
void save_bench_csv(const std::vector<BenchRow>& rows,
                    const std::filesystem::path& path);

}  // namespace lmp

#endif  // LMP_DUAL_HPP_
