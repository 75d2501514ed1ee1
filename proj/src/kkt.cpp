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

#include <algorithm>
#include <cmath>

#include "lmp/io.hpp"
#include "lmp/lp.hpp"

namespace lmp {

namespace {

void note(KktBlock& b, double violation, double tol) {
  b.max_violation = std::max(b.max_violation, violation);
  if (!(violation <= tol)) b.pass = false;  // NaN fails
}

}  // namespace

std::string_view to_string(LpStatus s) {
  switch (s) {
    case LpStatus::optimal:
      return "optimal";
    case LpStatus::infeasible:
      return "infeasible";
    case LpStatus::unbounded:
      return "unbounded";
    case LpStatus::unverified:
      return "unverified";
  }
  return "infeasible";
}

LpStatus parse_lp_status(std::string_view s) {
  if (s == "optimal") return LpStatus::optimal;
  if (s == "infeasible") return LpStatus::infeasible;
  if (s == "unbounded") return LpStatus::unbounded;
  if (s == "unverified") return LpStatus::unverified;
  throw DataError("unknown LP status '" + std::string(s) + "'");
}

KktReport verify_kkt(const LpProblem& lp, const LpSolution& sol, double tol) {
  KktReport r;
  const Eigen::Index n = lp.objective.size();
  const Eigen::Index m = lp.rows.rows();
  if (sol.x.size() != n || sol.row_duals.size() != m ||
      sol.reduced_costs.size() != n)
    throw DataError("solution dimensions do not match the LP");
  const double s = sense_sign(lp.sense);

  // primal feasibility
  const Vector activity = lp.rows * sol.x;
  for (Eigen::Index j = 0; j < n; ++j)
    note(r.primal_feasibility,
         std::max({lp.lower[j] - sol.x[j], sol.x[j] - lp.upper[j], 0.0}), tol);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double resid = activity[i] - lp.rhs[i];
    double v = 0.0;
    switch (lp.relation[i]) {
      case Relation::eq:
        v = std::abs(resid);
        break;
      case Relation::leq:
        v = std::max(resid, 0.0);
        break;
      case Relation::geq:
        v = std::max(-resid, 0.0);
        break;
    }
    note(r.primal_feasibility, v, tol);
  }

  // dual feasibility: stationarity plus sign conditions
  const Vector stationarity =
      sol.reduced_costs - (lp.objective - lp.rows.transpose() * sol.row_duals);
  note(r.dual_feasibility, stationarity.lpNorm<Eigen::Infinity>(), tol);
  for (Eigen::Index i = 0; i < m; ++i) {
    const double y = s * sol.row_duals[i];
    if (lp.relation[i] == Relation::geq) note(r.dual_feasibility, -y, tol);
    if (lp.relation[i] == Relation::leq) note(r.dual_feasibility, y, tol);
  }
  for (Eigen::Index j = 0; j < n; ++j) {
    const double z = s * sol.reduced_costs[j];
    if (!std::isfinite(lp.upper[j])) note(r.dual_feasibility, -z, tol);
    if (!std::isfinite(lp.lower[j])) note(r.dual_feasibility, z, tol);
  }

  // complementary slackness
  for (Eigen::Index i = 0; i < m; ++i) {
    if (lp.relation[i] == Relation::eq) continue;
    note(r.complementary_slackness,
         std::abs(sol.row_duals[i] * (activity[i] - lp.rhs[i])), tol);
  }
  double bound_part = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double z = s * sol.reduced_costs[j];
    if (z > 0.0 && std::isfinite(lp.lower[j])) {
      note(r.complementary_slackness, z * (sol.x[j] - lp.lower[j]), tol);
      bound_part += z * lp.lower[j];
    } else if (z < 0.0 && std::isfinite(lp.upper[j])) {
      note(r.complementary_slackness, -z * (lp.upper[j] - sol.x[j]), tol);
      bound_part += z * lp.upper[j];
    }
  }

  // strong duality
  const double primal = lp.objective.dot(sol.x);
  const double dual = sol.row_duals.dot(lp.rhs) + s * bound_part;
  note(r.strong_duality, std::abs(primal - dual) / (1.0 + std::abs(primal)),
       tol);
  return r;
}

KktReport verify_kkt(const MilpInstance& milp, const LpSolution& sol,
                     double tol) {
  return verify_kkt(continuous_relaxation(milp), sol, tol);
}

void export_solution(const LpSolution& sol, const std::filesystem::path& path) {
  Json j{{"status", std::string(to_string(sol.status))},
         {"objective", sol.objective},
         {"x", vector_to_json(sol.x)},
         {"row_duals", vector_to_json(sol.row_duals)},
         {"reduced_costs", vector_to_json(sol.reduced_costs)}};
  write_text_file(path, dump_json(j));
}

LpSolution import_solution(const MilpInstance& milp,
                           const std::filesystem::path& path) {
  const Json j = read_json_file(path);
  LpSolution sol;
  try {
    sol.status = parse_lp_status(j.at("status").get<std::string>());
    sol.objective = json_to_double(j.at("objective"));
    sol.x = json_to_vector(j.at("x"));
    sol.row_duals = json_to_vector(j.at("row_duals"));
    sol.reduced_costs = json_to_vector(j.at("reduced_costs"));
  } catch (const Json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (sol.status != LpStatus::optimal) return sol;
  if (sol.x.size() != milp.num_vars() ||
      sol.reduced_costs.size() != milp.num_vars())
    throw DataError(path.string() + ": solution has " +
                    std::to_string(sol.x.size()) + " variables, instance has " +
                    std::to_string(milp.num_vars()));
  if (sol.row_duals.size() != milp.num_rows())
    throw DataError(path.string() + ": solution has " +
                    std::to_string(sol.row_duals.size()) +
                    " row duals, instance has " +
                    std::to_string(milp.num_rows()) + " rows");
  const KktReport report = verify_kkt(milp, sol);
  if (!report.ok()) {
    sol.status = LpStatus::unverified;
    sol.warnings.push_back(
        "KKT check failed (primal " +
        format_double(report.primal_feasibility.max_violation) + ", dual " +
        format_double(report.dual_feasibility.max_violation) + ", slackness " +
        format_double(report.complementary_slackness.max_violation) + ", gap " +
        format_double(report.strong_duality.max_violation) + ")");
  }
  return sol;
}

}  // namespace lmp
