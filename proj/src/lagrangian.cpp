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

#include "lmp/lagrangian.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmp {

namespace {

bool is_integral(double v) { return std::abs(v - std::round(v)) <= 1e-9; }

// Depth-first branch and bound over items sorted by profit/weight ratio,
// bounded by the fractional relaxation.
class KnapsackBnb {
 public:
  KnapsackBnb(std::vector<double> p, std::vector<double> w, double cap)
      : p_(std::move(p)), w_(std::move(w)), cap_(cap), cur_(p_.size()) {}

  std::vector<bool> run() {
    best_take_.assign(p_.size(), false);
    dfs(0, cap_, 0.0);
    return best_take_;
  }
  double best() const { return best_; }

 private:
  double bound(size_t i, double room, double value) const {
    for (; i < p_.size(); ++i) {
      if (w_[i] <= room) {
        room -= w_[i];
        value += p_[i];
      } else {
        return value + p_[i] * room / w_[i];
      }
    }
    return value;
  }

  void dfs(size_t i, double room, double value) {
    if (++nodes_ > 50'000'000)
      throw NumericalError("knapsack branch and bound exceeded its node budget");
    if (value > best_) {
      best_ = value;
      best_take_.assign(cur_.begin(), cur_.end());
    }
    if (i == p_.size() || bound(i, room, value) <= best_ + 1e-12) return;
    if (w_[i] <= room) {
      cur_[i] = true;
      dfs(i + 1, room - w_[i], value + p_[i]);
      cur_[i] = false;
    }
    dfs(i + 1, room, value);
  }

  std::vector<double> p_, w_;
  double cap_;
  std::vector<char> cur_;
  std::vector<bool> best_take_;
  double best_ = 0.0;
  long nodes_ = 0;
};

void check_pi(const Vector& pi, Eigen::Index expected) {
  if (pi.size() != expected)
    throw ParameterError("expected " + std::to_string(expected) +
                         " multipliers, got " + std::to_string(pi.size()));
  if (!pi.allFinite()) throw ParameterError("multipliers must be finite");
}

struct UnionFind {
  explicit UnionFind(Eigen::Index n) : parent(n) {
    std::iota(parent.begin(), parent.end(), Eigen::Index{0});
  }
  Eigen::Index find(Eigen::Index x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  void unite(Eigen::Index a, Eigen::Index b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<Eigen::Index> parent;
};

}  // namespace

void Multipliers::validate() const {
  if (static_cast<Eigen::Index>(sign.size()) != values.size())
    throw DataError("multiplier vector and sign policy differ in length");
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i]))
      throw DataError("multiplier " + std::to_string(i) + " is not finite");
    if (sign[i] == SignPolicy::nonnegative && values[i] < 0.0)
      throw DataError("multiplier " + std::to_string(i) +
                      " of an inequality row is negative");
  }
}

std::vector<SignPolicy> sign_policy(const MilpInstance& milp) {
  std::vector<SignPolicy> out(milp.num_dualized());
  for (size_t i = 0; i < out.size(); ++i)
    out[i] = milp.dualized.relation[i] == Relation::eq ? SignPolicy::free
                                                        : SignPolicy::nonnegative;
  return out;
}

Vector project_sign(Vector values, const std::vector<SignPolicy>& sign) {
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (sign[i] == SignPolicy::nonnegative) values[i] = std::max(values[i], 0.0);
  return values;
}

Multipliers zero_multipliers(const MilpInstance& milp) {
  return {Vector::Zero(milp.num_dualized()), sign_policy(milp)};
}

double lagrangian_objective(const MilpInstance& milp, const Vector& pi,
                            const Vector& x) {
  return milp.objective.dot(x) +
         pi.dot(milp.dualized.rhs - milp.dualized.matrix * x);
}

ArcSolution continuous_knapsack_arc(const Vector& cost, const Vector& volume,
                                    double capacity, double fixed_cost) {
  const Eigen::Index n = cost.size();
  ArcSolution out;
  out.flow = Vector::Zero(n);
  std::vector<Eigen::Index> order;
  for (Eigen::Index k = 0; k < n; ++k)
    if (cost[k] < 0.0 && volume[k] > 0.0) order.push_back(k);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return cost[a] < cost[b]; });
  Vector flow = Vector::Zero(n);
  double room = capacity;
  double total = fixed_cost;
  for (Eigen::Index k : order) {
    if (room <= 0.0) break;
    const double amount = std::min(volume[k], room);
    flow[k] = amount;
    room -= amount;
    total += cost[k] * amount;
  }
  if (total < 0.0) {
    out.value = total;
    out.flow = flow;
    out.open = true;
  }
  return out;
}

KnapsackSolution binary_knapsack(const Vector& profit, const Vector& weight,
                                 double capacity) {
  const Eigen::Index n = profit.size();
  if (weight.size() != n) throw DataError("knapsack profit/weight mismatch");
  if (capacity < 0.0) throw DataError("knapsack capacity is negative");
  KnapsackSolution out;
  out.take.assign(n, false);

  std::vector<Eigen::Index> items;
  bool integral = is_integral(capacity);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (weight[i] < 0.0) throw DataError("knapsack weight is negative");
    if (profit[i] <= 0.0) continue;
    if (weight[i] == 0.0) {
      out.take[i] = true;
      out.value += profit[i];
      continue;
    }
    if (weight[i] > capacity) continue;
    items.push_back(i);
    integral = integral && is_integral(weight[i]);
  }
  if (items.empty()) return out;

  const double cells = static_cast<double>(items.size()) * (capacity + 1.0);
  if (integral && cells <= 5e7) {
    const auto cap = static_cast<size_t>(std::llround(capacity));
    const size_t m = items.size();
    std::vector<double> best(cap + 1, 0.0);
    std::vector<char> took(m * (cap + 1), 0);
    for (size_t t = 0; t < m; ++t) {
      const auto w = static_cast<size_t>(std::llround(weight[items[t]]));
      const double p = profit[items[t]];
      for (size_t c = cap; c >= w; --c) {
        if (best[c - w] + p > best[c]) {
          best[c] = best[c - w] + p;
          took[t * (cap + 1) + c] = 1;
        }
        if (c == 0) break;
      }
    }
    size_t c = cap;
    double value = 0.0;
    for (size_t t = m; t-- > 0;) {
      if (took[t * (cap + 1) + c]) {
        const Eigen::Index i = items[t];
        out.take[i] = true;
        value += profit[i];
        c -= static_cast<size_t>(std::llround(weight[i]));
      }
    }
    out.value += value;
    return out;
  }

  std::stable_sort(items.begin(), items.end(), [&](Eigen::Index a, Eigen::Index b) {
    return profit[a] * weight[b] > profit[b] * weight[a];
  });
  std::vector<double> p, w;
  for (Eigen::Index i : items) {
    p.push_back(profit[i]);
    w.push_back(weight[i]);
  }
  KnapsackBnb bnb(p, w, capacity);
  const std::vector<bool> take = bnb.run();
  for (size_t t = 0; t < items.size(); ++t) {
    if (take[t]) {
      out.take[items[t]] = true;
      out.value += profit[items[t]];
    }
  }
  return out;
}

LrResult lr_mc(const McInstance& inst, const Vector& pi) {
  const int na = inst.num_arcs();
  const int nk = inst.num_commodities();
  const int nn = inst.num_nodes;
  check_pi(pi, static_cast<Eigen::Index>(nn) * nk);

  LrResult r;
  r.assignment = Vector::Zero(static_cast<Eigen::Index>(na) * nk + na);
  r.parts.resize(na);
  Vector cost(nk), volume(nk);
  for (int a = 0; a < na; ++a) {
    const Arc& arc = inst.arcs[a];
    for (int k = 0; k < nk; ++k) {
      const Commodity& c = inst.commodities[k];
      cost[k] = inst.routing_cost(a, k) - pi[mc_flow_row(inst, arc.tail, k)] +
                pi[mc_flow_row(inst, arc.head, k)];
      const bool forced = arc.tail == c.destination || arc.head == c.origin;
      volume[k] = forced ? 0.0 : c.volume;
    }
    const ArcSolution s =
        continuous_knapsack_arc(cost, volume, arc.capacity, arc.fixed_cost);
    r.parts[a] = s.value;
    for (int k = 0; k < nk; ++k) r.assignment[mc_flow_var(inst, a, k)] = s.flow[k];
    r.assignment[mc_design_var(inst, a)] = s.open ? 1.0 : 0.0;
  }

  // g = b - A x with A the node-arc incidence per commodity
  r.supergradient.resize(static_cast<Eigen::Index>(nn) * nk);
  for (int k = 0; k < nk; ++k)
    for (int i = 0; i < nn; ++i)
      r.supergradient[mc_flow_row(inst, i, k)] = mc_supply(inst, i, k);
  double pib = 0.0;
  for (int k = 0; k < nk; ++k) {
    const Commodity& c = inst.commodities[k];
    pib += c.volume * (pi[mc_flow_row(inst, c.origin, k)] -
                       pi[mc_flow_row(inst, c.destination, k)]);
  }
  for (int a = 0; a < na; ++a) {
    for (int k = 0; k < nk; ++k) {
      const double x = r.assignment[mc_flow_var(inst, a, k)];
      if (x == 0.0) continue;
      r.supergradient[mc_flow_row(inst, inst.arcs[a].tail, k)] -= x;
      r.supergradient[mc_flow_row(inst, inst.arcs[a].head, k)] += x;
    }
  }
  r.value = r.parts.sum() + pib;
  return r;
}

LrResult lr_ga(const GaInstance& inst, const Vector& pi) {
  const int nb = inst.num_bins();
  const int ni = inst.num_items();
  check_pi(pi, ni);
  if ((pi.array() < 0.0).any())
    throw ParameterError("multipliers of assignment rows must be nonnegative");

  LrResult r;
  r.assignment = Vector::Zero(static_cast<Eigen::Index>(ni) * nb);
  r.parts.resize(nb);
  r.supergradient = Vector::Ones(ni);
  for (int j = 0; j < nb; ++j) {
    const Vector profit = inst.profit.row(j).transpose() - pi;
    const KnapsackSolution s =
        binary_knapsack(profit, inst.weight.row(j).transpose(), inst.capacity[j]);
    r.parts[j] = s.value;
    for (int i = 0; i < ni; ++i) {
      if (!s.take[i]) continue;
      r.assignment[ga_var(inst, i, j)] = 1.0;
      r.supergradient[i] -= 1.0;
    }
  }
  r.value = r.parts.sum() + pi.sum();
  return r;
}

LrResult lr_generic(const MilpInstance& milp, const Vector& pi,
                    const EnumerationLimits& limits) {
  check_pi(pi, milp.num_dualized());
  const Eigen::Index n = milp.num_vars();
  const Vector w = milp.objective - milp.dualized.matrix.transpose() * pi;
  const SparseRows& kept = milp.kept.matrix;

  UnionFind uf(n);
  std::vector<std::vector<Eigen::Index>> row_vars(kept.rows());
  for (Eigen::Index i = 0; i < kept.rows(); ++i) {
    for (SparseRows::InnerIterator it(kept, i); it; ++it)
      row_vars[i].push_back(it.col());
    for (size_t t = 1; t < row_vars[i].size(); ++t)
      uf.unite(row_vars[i][0], row_vars[i][t]);
  }
  std::vector<Eigen::Index> block_of(n, -1);
  std::vector<std::vector<Eigen::Index>> blocks;
  for (Eigen::Index j = 0; j < n; ++j) {
    const Eigen::Index root = uf.find(j);
    if (block_of[root] < 0) {
      block_of[root] = static_cast<Eigen::Index>(blocks.size());
      blocks.emplace_back();
    }
    block_of[j] = block_of[root];
    blocks[block_of[j]].push_back(j);
  }
  std::vector<std::vector<Eigen::Index>> block_rows(blocks.size());
  for (Eigen::Index i = 0; i < kept.rows(); ++i) {
    if (row_vars[i].empty()) {
      const double rhs = milp.kept.rhs[i];
      const Relation rel = milp.kept.relation[i];
      const bool ok = (rel == Relation::eq && std::abs(rhs) <= 1e-9) ||
                      (rel == Relation::leq && rhs >= -1e-9) ||
                      (rel == Relation::geq && rhs <= 1e-9);
      if (!ok) throw DataError("kept row " + std::to_string(i) + " is infeasible");
      continue;
    }
    block_rows[block_of[row_vars[i][0]]].push_back(i);
  }

  LrResult r;
  r.assignment = Vector::Zero(n);
  r.parts.resize(static_cast<Eigen::Index>(blocks.size()));
  for (size_t b = 0; b < blocks.size(); ++b) {
    const auto& vars = blocks[b];
    const auto& rows = block_rows[b];
    std::vector<Eigen::Index> local(n, -1);
    for (size_t t = 0; t < vars.size(); ++t) local[vars[t]] = t;

    LpProblem lp;
    lp.sense = milp.sense;
    const auto nv = static_cast<Eigen::Index>(vars.size());
    lp.objective.resize(nv);
    lp.lower.resize(nv);
    lp.upper.resize(nv);
    std::vector<bool> integral(nv);
    for (Eigen::Index t = 0; t < nv; ++t) {
      lp.objective[t] = w[vars[t]];
      lp.lower[t] = milp.lower[vars[t]];
      lp.upper[t] = milp.upper[vars[t]];
      integral[t] = milp.integral[vars[t]];
    }
    std::vector<Eigen::Triplet<double>> trips;
    lp.rhs.resize(static_cast<Eigen::Index>(rows.size()));
    for (size_t t = 0; t < rows.size(); ++t) {
      for (SparseRows::InnerIterator it(kept, rows[t]); it; ++it)
        trips.emplace_back(static_cast<int>(t), static_cast<int>(local[it.col()]),
                           it.value());
      lp.rhs[t] = milp.kept.rhs[rows[t]];
      lp.relation.push_back(milp.kept.relation[rows[t]]);
    }
    lp.rows.resize(static_cast<Eigen::Index>(rows.size()), nv);
    lp.rows.setFromTriplets(trips.begin(), trips.end());

    const ExactSolution s = enumerate_optimum(lp, integral, limits);
    if (!s.feasible)
      throw DataError("relaxed problem is infeasible (block " +
                      std::to_string(b) + ")");
    r.parts[b] = s.value;
    for (Eigen::Index t = 0; t < nv; ++t) r.assignment[vars[t]] = s.x[t];
  }
  r.supergradient = milp.dualized.rhs - milp.dualized.matrix * r.assignment;
  r.value = r.parts.sum() + pi.dot(milp.dualized.rhs);
  return r;
}

LrResult evaluate_lr(const Problem& problem, const Vector& pi) {
  return problem.is_mc() ? lr_mc(problem.mc(), pi) : lr_ga(problem.ga(), pi);
}

}  // namespace lmp
