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

#ifndef LMP_LAGRANGIAN_HPP_
#define LMP_LAGRANGIAN_HPP_

#include <vector>

#include "lmp/brute_force.hpp"
#include "lmp/instance.hpp"

namespace lmp {

enum class SignPolicy : unsigned char { free, nonnegative };

/// One multiplier per dualized row. Equality rows are sign free, inequality
/// rows carry nonnegative multipliers.
struct Multipliers {
  Vector values;
  std::vector<SignPolicy> sign;

  void validate() const;
};

std::vector<SignPolicy> sign_policy(const MilpInstance& milp);
/// Clamps sign-constrained entries at zero.
Vector project_sign(Vector values, const std::vector<SignPolicy>& sign);
Multipliers zero_multipliers(const MilpInstance& milp);

/// Value of the relaxed Lagrangian problem at `pi` together with an optimal
/// assignment and g = b - A x.
///
/// For minimization LR is concave and g is a supergradient; for
/// maximization LR is convex and g a subgradient.
struct LrResult {
  double value = 0.0;
  Vector assignment;
  Vector supergradient;
  /// Subproblem optima (arcs or bins) in canonical order; `value` is their
  /// sum in that order plus pi' b.
  Vector parts;
};

/// Recomputes w'x + pi'(b - A x) from an assignment.
double lagrangian_objective(const MilpInstance& milp, const Vector& pi,
                            const Vector& x);

struct ArcSolution {
  double value = 0.0;
  Vector flow;
  bool open = false;
};

/// Single-arc subproblem of the network design relaxation:
///   min f y + sum_k cost_k x_k  s.t.  sum_k x_k <= cap y,
///   0 <= x_k <= volume_k, y binary.
/// Opens the arc only when the greedy fill of negative-cost commodities
/// (most negative first, last one fractional) beats zero.
ArcSolution continuous_knapsack_arc(const Vector& cost, const Vector& volume,
                                    double capacity, double fixed_cost);

struct KnapsackSolution {
  double value = 0.0;
  std::vector<bool> take;
};

/// Exact 0-1 knapsack max sum p x s.t. sum w x <= cap. Dynamic programming
/// over capacity when weights and capacity are integral; branch and bound
/// otherwise. Items with nonpositive profit are never taken.
KnapsackSolution binary_knapsack(const Vector& profit, const Vector& weight,
                                 double capacity);

/// Multipliers are indexed like the dualized rows of mc_to_milp.
LrResult lr_mc(const McInstance& inst, const Vector& pi);
/// One nonnegative multiplier per item. LR is an upper bound.
LrResult lr_ga(const GaInstance& inst, const Vector& pi);

/// Exact relaxed-problem optimum by enumeration over the independent blocks
/// of the kept rows (test oracle).
LrResult lr_generic(const MilpInstance& milp, const Vector& pi,
                    const EnumerationLimits& limits = {});

/// Dispatches to the problem-specific oracle.
LrResult evaluate_lr(const Problem& problem, const Vector& pi);

}  // namespace lmp

#endif  // LMP_LAGRANGIAN_HPP_
