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

#ifndef LMP_LP_HPP_
#define LMP_LP_HPP_

#include <filesystem>
#include <string>
#include <vector>

#include "lmp/instance.hpp"

namespace lmp {

enum class LpStatus { optimal, infeasible, unbounded, unverified };

std::string_view to_string(LpStatus s);
LpStatus parse_lp_status(std::string_view s);

/// Solution of a linear program. Row duals cover every row in library row
/// order (dualized, then kept) and follow the sign convention of the
/// objective sense: for minimization a >= row has a nonnegative dual and a
/// <= row a nonpositive one; maximization mirrors this.
struct LpSolution {
  LpStatus status = LpStatus::infeasible;
  Vector x;
  Vector row_duals;
  Vector reduced_costs;  // w_j - row_duals' A_j
  double objective = 0.0;
  long pivots = 0;
  std::vector<std::string> warnings;
};

struct LpOptions {
  double tol_feas = 1e-7;
  double tol_gap = 1e-6;
  double tol_pivot = 1e-9;
  double tol_dual = 1e-9;
  int refactor_every = 100;
  /// Consecutive degenerate pivots before switching to Bland's rule.
  int bland_after = 50;
  /// 0 selects the default cap of 50 * (rows + cols).
  long iteration_cap = 0;
};

/// A linear program in the row form used by the solver.
struct LpProblem {
  Sense sense = Sense::minimize;
  Vector objective;
  SparseRows rows;
  Vector rhs;
  std::vector<Relation> relation;
  Vector lower;
  Vector upper;
};

/// Continuous relaxation of a MILP: integrality dropped, all rows kept.
LpProblem continuous_relaxation(const MilpInstance& milp);

/// Bounded-variable revised simplex with a dense LU basis factorization and
/// product-form updates. Returns infeasible/unbounded as statuses; throws
/// NumericalError when the iteration cap is exceeded.
LpSolution solve_lp(const LpProblem& lp, const LpOptions& options = {});

LpSolution solve_cr(const MilpInstance& milp, const LpOptions& options = {});

struct KktBlock {
  bool pass = true;
  double max_violation = 0.0;
};

struct KktReport {
  KktBlock primal_feasibility;
  KktBlock dual_feasibility;
  KktBlock complementary_slackness;
  KktBlock strong_duality;

  bool ok() const {
    return primal_feasibility.pass && dual_feasibility.pass &&
           complementary_slackness.pass && strong_duality.pass;
  }
};

/// Checks the KKT conditions of an optimal solution of the continuous
/// relaxation. Dual feasibility includes consistency of the stored reduced
/// costs with the stored duals. Feasibility blocks use absolute violations,
/// the duality gap is relative to 1 + |objective|.
KktReport verify_kkt(const LpProblem& lp, const LpSolution& sol,
                     double tol = 1e-6);
KktReport verify_kkt(const MilpInstance& milp, const LpSolution& sol,
                     double tol = 1e-6);

void export_solution(const LpSolution& sol, const std::filesystem::path& path);

/// Loads a solution file and checks it against the instance. A solution
/// that fails the KKT check keeps its values but is downgraded to
/// `unverified` with a warning.
LpSolution import_solution(const MilpInstance& milp,
                           const std::filesystem::path& path);

}  // namespace lmp

#endif  // LMP_LP_HPP_
