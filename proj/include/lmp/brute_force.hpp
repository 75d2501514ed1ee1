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

#ifndef LMP_BRUTE_FORCE_HPP_
#define LMP_BRUTE_FORCE_HPP_

#include <optional>
#include <vector>

#include "lmp/instance.hpp"
#include "lmp/lp.hpp"

namespace lmp {

/// Size limits of the enumeration oracles. Instances above the limits are
/// refused with a LimitError describing their size.
struct EnumerationLimits {
  /// Integer variables when continuous variables are present (one LP per node).
  int max_mixed_integer_vars = 24;
  /// Integer variables of a pure integer program.
  int max_pure_integer_vars = 40;
  /// Largest integer domain enumerated per variable.
  int max_domain = 64;
  long max_nodes = 20'000'000;
};

struct ExactSolution {
  bool feasible = false;
  double value = 0.0;
  Vector x;
  long nodes = 0;
};

/// Exact optimum of an LP with integrality restrictions by depth-first
/// enumeration of the integer variables. Subtrees are cut only when they are
/// provably infeasible (row activity bounds, LP relaxation) or provably no
/// better than the incumbent, so the result is the true optimum.
ExactSolution enumerate_optimum(const LpProblem& lp,
                                const std::vector<bool>& integral,
                                const EnumerationLimits& limits = {});

/// Exact optimum of the full MILP (all rows kept).
ExactSolution brute_force_opt(const MilpInstance& milp,
                              const EnumerationLimits& limits = {});

/// Random bounded LP with `n` variables and `m` rows of mixed relations
/// (a test generator for the LP oracles).
LpProblem random_lp(Rng& rng, int n, int m);

/// Optimum of a bounded LP by enumerating every vertex: each choice of n
/// linearly independent active constraints (rows or bounds) is solved
/// directly. Exponential; meant for n <= 8. nullopt when infeasible.
std::optional<double> vertex_enumeration(const LpProblem& lp);

}  // namespace lmp

#endif  // LMP_BRUTE_FORCE_HPP_
