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

#include "lmp/brute_force.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>

namespace lmp {

namespace {

bool lp_point_feasible(const LpProblem& lp, const Vector& x, double tol) {
  for (Eigen::Index j = 0; j < x.size(); ++j)
    if (x[j] < lp.lower[j] - tol || x[j] > lp.upper[j] + tol) return false;
  const Vector act = lp.rows * x;
  for (Eigen::Index i = 0; i < act.size(); ++i) {
    const double r = act[i] - lp.rhs[i];
    if (lp.relation[i] == Relation::eq && std::abs(r) > tol) return false;
    if (lp.relation[i] == Relation::leq && r > tol) return false;
    if (lp.relation[i] == Relation::geq && r < -tol) return false;
  }
  return true;
}

using SparseCols = Eigen::SparseMatrix<double, Eigen::ColMajor>;

class Enumerator {
 public:
  Enumerator(const LpProblem& lp, const std::vector<bool>& integral,
             const EnumerationLimits& limits)
      : lp_(lp), integral_(integral), limits_(limits), cols_(lp.rows) {
    const Eigen::Index n = lp.objective.size();
    const Eigen::Index m = lp.rows.rows();
    cost_ = sense_sign(lp.sense) * lp.objective;
    lo_ = lp.lower;
    up_ = lp.upper;
    int num_int = 0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (integral_[j]) {
        ++num_int;
        if (!std::isfinite(lo_[j]) || !std::isfinite(up_[j]))
          throw LimitError("integer variable " + std::to_string(j) +
                           " has an infinite bound");
        lo_[j] = std::ceil(lo_[j] - 1e-9);
        up_[j] = std::floor(up_[j] + 1e-9);
        if (up_[j] - lo_[j] + 1 > limits.max_domain)
          throw LimitError("integer variable " + std::to_string(j) +
                           " has a domain larger than " +
                           std::to_string(limits.max_domain));
      } else {
        mixed_ = true;
      }
    }
    const int cap = mixed_ ? limits.max_mixed_integer_vars
                           : limits.max_pure_integer_vars;
    if (num_int > cap)
      throw LimitError("instance has " + std::to_string(num_int) +
                       " integer variables and " +
                       std::to_string(n - num_int) +
                       " continuous ones; the enumeration limit is " +
                       std::to_string(cap) + " integer variables");

    // Continuous contributions never change; integer ones are tracked.
    cont_min_ = Vector::Zero(m);
    cont_max_ = Vector::Zero(m);
    int_min_ = Vector::Zero(m);
    int_max_ = Vector::Zero(m);
    cont_obj_ = 0.0;
    int_obj_ = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const auto [cmin, cmax] = range(cost_[j], lo_[j], up_[j]);
      (integral_[j] ? int_obj_ : cont_obj_) += cmin;
      (void)cmax;
      for (SparseCols::InnerIterator it(cols_, j); it; ++it) {
        const auto [amin, amax] = range(it.value(), lo_[j], up_[j]);
        if (integral_[j]) {
          int_min_[it.row()] += amin;
          int_max_[it.row()] += amax;
        } else {
          cont_min_[it.row()] += amin;
          cont_max_[it.row()] += amax;
        }
      }
    }
    scale_ = 1.0 + lp.rhs.cwiseAbs().maxCoeff();
  }

  ExactSolution run() {
    ExactSolution out;
    if (rows_feasible_all()) search();
    out.nodes = nodes_;
    out.feasible = have_best_;
    if (have_best_) {
      out.value = sense_sign(lp_.sense) * best_;
      out.x = best_x_;
    }
    return out;
  }

 private:
  static std::pair<double, double> range(double a, double l, double u) {
    if (a == 0.0) return {0.0, 0.0};
    const double p = a * l, q = a * u;
    return {std::min(p, q), std::max(p, q)};
  }

  bool row_ok(Eigen::Index i) const {
    const double tol = 1e-9 * scale_;
    const double mn = cont_min_[i] + int_min_[i];
    const double mx = cont_max_[i] + int_max_[i];
    switch (lp_.relation[i]) {
      case Relation::leq:
        return mn <= lp_.rhs[i] + tol;
      case Relation::geq:
        return mx >= lp_.rhs[i] - tol;
      case Relation::eq:
        return mn <= lp_.rhs[i] + tol && mx >= lp_.rhs[i] - tol;
    }
    return true;
  }

  bool rows_feasible_all() const {
    for (Eigen::Index i = 0; i < lp_.rows.rows(); ++i)
      if (!row_ok(i)) return false;
    return true;
  }

  // Changes the bounds of integer variable j, keeping activity sums current.
  // Returns false when a touched row becomes infeasible.
  bool set_bounds(Eigen::Index j, double l, double u) {
    const auto [old_c, unused0] = range(cost_[j], lo_[j], up_[j]);
    const auto [new_c, unused1] = range(cost_[j], l, u);
    (void)unused0;
    (void)unused1;
    int_obj_ += new_c - old_c;
    bool ok = true;
    for (SparseCols::InnerIterator it(cols_, j); it; ++it) {
      const auto [omin, omax] = range(it.value(), lo_[j], up_[j]);
      const auto [nmin, nmax] = range(it.value(), l, u);
      int_min_[it.row()] += nmin - omin;
      int_max_[it.row()] += nmax - omax;
    }
    lo_[j] = l;
    up_[j] = u;
    for (SparseCols::InnerIterator it(cols_, j); it; ++it)
      if (!row_ok(it.row())) ok = false;
    return ok;
  }

  bool prune_by_bound(double bound) const {
    return have_best_ && bound >= best_ - 1e-12 * (1.0 + std::abs(best_));
  }

  void record(double value, const Vector& x) {
    if (!have_best_ || value < best_) {
      have_best_ = true;
      best_ = value;
      best_x_ = x;
    }
  }

  void count_node() {
    if (++nodes_ > limits_.max_nodes)
      throw LimitError("enumeration node budget of " +
                       std::to_string(limits_.max_nodes) + " exceeded");
  }

  void search() {
    count_node();
    if (prune_by_bound(int_obj_ + cont_obj_)) return;
    Eigen::Index branch = -1;
    double split = 0.0;
    if (mixed_) {
      LpProblem node = lp_;
      node.lower = lo_;
      node.upper = up_;
      const LpSolution sol = solve_lp(node);
      if (sol.status == LpStatus::infeasible) return;
      if (sol.status == LpStatus::unbounded)
        throw NumericalError("relaxation of an enumeration node is unbounded");
      const double value = sense_sign(lp_.sense) * sol.objective;
      if (prune_by_bound(value)) return;
      for (Eigen::Index j = 0; j < lo_.size() && branch < 0; ++j) {
        if (!integral_[j] || lo_[j] == up_[j]) continue;
        const double f = sol.x[j] - std::floor(sol.x[j]);
        if (f > 1e-9 && f < 1 - 1e-9) {
          branch = j;
          split = sol.x[j];
        }
      }
      if (branch < 0) {
        Vector x = sol.x;
        for (Eigen::Index j = 0; j < x.size(); ++j)
          if (integral_[j]) x[j] = std::round(x[j]);
        record(value, x);
        return;
      }
      const double l = lo_[branch], u = up_[branch];
      const double down = std::floor(split), upv = std::ceil(split);
      const bool up_first = cost_[branch] < 0.0;
      for (int side = 0; side < 2; ++side) {
        const bool go_up = (side == 0) == up_first;
        if (go_up ? set_bounds(branch, upv, u) : set_bounds(branch, l, down))
          search();
        set_bounds(branch, l, u);
      }
      return;
    }

    for (Eigen::Index j = 0; j < lo_.size(); ++j)
      if (integral_[j] && lo_[j] < up_[j]) {
        branch = j;
        break;
      }
    if (branch < 0) {
      record(int_obj_, lo_);
      return;
    }
    const double l = lo_[branch], u = up_[branch];
    const bool ascending = cost_[branch] >= 0.0;
    for (double k = 0; k <= u - l; ++k) {
      const double v = ascending ? l + k : u - k;
      if (set_bounds(branch, v, v)) search();
    }
    set_bounds(branch, l, u);
  }

  const LpProblem& lp_;
  const std::vector<bool>& integral_;
  EnumerationLimits limits_;
  SparseCols cols_;
  Vector cost_, lo_, up_;
  Vector cont_min_, cont_max_, int_min_, int_max_;
  double cont_obj_ = 0.0, int_obj_ = 0.0, scale_ = 1.0;
  bool mixed_ = false;
  bool have_best_ = false;
  double best_ = 0.0;
  Vector best_x_;
  long nodes_ = 0;
};

}  // namespace

ExactSolution enumerate_optimum(const LpProblem& lp,
                                const std::vector<bool>& integral,
                                const EnumerationLimits& limits) {
  if (static_cast<Eigen::Index>(integral.size()) != lp.objective.size())
    throw DataError("integrality mask length mismatch");
  Enumerator e(lp, integral, limits);
  return e.run();
}

ExactSolution brute_force_opt(const MilpInstance& milp,
                              const EnumerationLimits& limits) {
  return enumerate_optimum(continuous_relaxation(milp), milp.integral, limits);
}

LpProblem random_lp(Rng& rng, int n, int m) {
  std::uniform_real_distribution<double> coef(-3.0, 3.0);
  std::uniform_int_distribution<int> rel(0, 2);
  LpProblem lp;
  lp.sense = rng() % 2 ? Sense::minimize : Sense::maximize;
  lp.objective.resize(n);
  for (int j = 0; j < n; ++j) lp.objective[j] = coef(rng);
  Matrix a(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng() % 4 == 0 ? 0.0 : coef(rng);
  lp.rows = a.sparseView();
  lp.rhs.resize(m);
  for (int i = 0; i < m; ++i) {
    lp.rhs[i] = coef(rng);
    lp.relation.push_back(static_cast<Relation>(rel(rng)));
  }
  lp.lower.resize(n);
  lp.upper.resize(n);
  for (int j = 0; j < n; ++j) {
    lp.lower[j] = std::floor(coef(rng) / 2.0);
    lp.upper[j] = lp.lower[j] + 1.0 + std::floor(std::abs(coef(rng)));
  }
  return lp;
}

std::optional<double> vertex_enumeration(const LpProblem& lp) {
  const Eigen::Index n = lp.objective.size();
  const Eigen::Index m = lp.rows.rows();
  const Matrix a = Matrix(lp.rows);
  // candidate hyperplanes: rows, lower bounds, upper bounds
  std::vector<std::pair<Vector, double>> planes;
  for (Eigen::Index i = 0; i < m; ++i) planes.emplace_back(a.row(i).transpose(), lp.rhs[i]);
  for (Eigen::Index j = 0; j < n; ++j) {
    planes.emplace_back(Vector::Unit(n, j), lp.lower[j]);
    planes.emplace_back(Vector::Unit(n, j), lp.upper[j]);
  }
  const int total = static_cast<int>(planes.size());
  std::optional<double> best;
  std::vector<int> pick(n);
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Matrix s(n, n);
      Vector r(n);
      for (Eigen::Index t = 0; t < n; ++t) {
        s.row(t) = planes[pick[t]].first.transpose();
        r[t] = planes[pick[t]].second;
      }
      Eigen::FullPivLU<Matrix> lu(s);
      if (lu.rank() < n) return;
      const Vector x = lu.solve(r);
      if (!lp_point_feasible(lp, x, 1e-8)) return;
      const double v = lp.objective.dot(x);
      if (!best || (lp.sense == Sense::minimize ? v < *best : v > *best)) best = v;
      return;
    }
    for (int p = start; p < total; ++p) {
      pick[depth] = p;
      rec(p + 1, depth + 1);
    }
  };
  rec(0, 0);
  return best;
}

}  // namespace lmp
