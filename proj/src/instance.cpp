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

#include "lmp/instance.hpp"
#include "lmp/lp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <set>
#include <utility>

namespace lmp {

namespace {

using Triplet = Eigen::Triplet<double>;

SparseRows build_rows(Eigen::Index rows, Eigen::Index cols,
                      const std::vector<Triplet>& entries) {
  SparseRows m(rows, cols);
  m.setFromTriplets(entries.begin(), entries.end());
  m.makeCompressed();
  return m;
}

bool reachable(const McInstance& m, int from, int to) {
  std::vector<std::vector<int>> out(m.num_nodes);
  for (const Arc& a : m.arcs) out[a.tail].push_back(a.head);
  std::vector<bool> seen(m.num_nodes, false);
  std::queue<int> q;
  q.push(from);
  seen[from] = true;
  while (!q.empty()) {
    int u = q.front();
    q.pop();
    if (u == to) return true;
    for (int v : out[u]) {
      if (!seen[v]) {
        seen[v] = true;
        q.push(v);
      }
    }
  }
  return false;
}

void build_network(const McGenParams& p, Rng& rng, McInstance& inst) {
  inst.num_nodes = p.nodes;
  std::set<std::pair<int, int>> used;
  // A random directed Hamiltonian cycle keeps the network strongly connected.
  if (p.arcs >= p.nodes && p.nodes > 1) {
    std::vector<int> order(p.nodes);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    for (int i = 0; i < p.nodes; ++i)
      used.emplace(order[i], order[(i + 1) % p.nodes]);
  }
  std::vector<std::pair<int, int>> candidates;
  for (int i = 0; i < p.nodes; ++i)
    for (int j = 0; j < p.nodes; ++j)
      if (i != j && !used.count({i, j})) candidates.emplace_back(i, j);
  std::shuffle(candidates.begin(), candidates.end(), rng);
  for (std::size_t c = 0; used.size() < static_cast<std::size_t>(p.arcs); ++c)
    used.insert(candidates[c]);

  inst.arcs.clear();
  for (const auto& [i, j] : used) {  // std::set keeps (tail, head) order
    Arc a;
    a.tail = i;
    a.head = j;
    inst.arcs.push_back(a);
  }
  for (Arc& a : inst.arcs) {
    a.capacity = p.capacity.sample(rng);
    a.fixed_cost = p.fixed_cost.sample(rng);
  }
}

}  // namespace

void MilpInstance::validate() const {
  const Eigen::Index n = num_vars();
  auto check_block = [n](const RowBlock& b, const char* name) {
    if (b.matrix.cols() != n)
      throw DataError(std::string(name) + " rows have " +
                      std::to_string(b.matrix.cols()) + " columns, expected " +
                      std::to_string(n));
    if (b.rhs.size() != b.rows() ||
        static_cast<Eigen::Index>(b.relation.size()) != b.rows())
      throw DataError(std::string(name) + " rhs/relation length mismatch");
  };
  check_block(dualized, "dualized");
  check_block(kept, "kept");
  if (lower.size() != n || upper.size() != n ||
      static_cast<Eigen::Index>(integral.size()) != n)
    throw DataError("bound or integrality vector length mismatch");
  for (Eigen::Index j = 0; j < n; ++j)
    if (!(lower[j] <= upper[j]))
      throw DataError("variable " + std::to_string(j) + " has lower > upper");
}

void McInstance::validate() const {
  if (num_nodes < 2) throw DataError("MC instance needs at least two nodes");
  std::set<std::pair<int, int>> seen;
  for (std::size_t a = 0; a < arcs.size(); ++a) {
    const Arc& arc = arcs[a];
    if (arc.tail < 0 || arc.tail >= num_nodes || arc.head < 0 ||
        arc.head >= num_nodes || arc.tail == arc.head)
      throw DataError("arc " + std::to_string(a) + " has invalid endpoints");
    if (!seen.emplace(arc.tail, arc.head).second)
      throw DataError("duplicate arc " + std::to_string(a));
    if (!(arc.capacity > 0.0) || !(arc.fixed_cost > 0.0))
      throw DataError("arc " + std::to_string(a) +
                      " needs positive capacity and fixed cost");
  }
  for (std::size_t k = 0; k < commodities.size(); ++k) {
    const Commodity& c = commodities[k];
    if (c.origin < 0 || c.origin >= num_nodes || c.destination < 0 ||
        c.destination >= num_nodes || c.origin == c.destination)
      throw DataError("commodity " + std::to_string(k) +
                      " has invalid endpoints");
    if (!(c.volume > 0.0) || c.volume != std::round(c.volume))
      throw DataError("commodity " + std::to_string(k) +
                      " volume must be a positive integer");
  }
  if (routing_cost.rows() != num_arcs() ||
      routing_cost.cols() != num_commodities())
    throw DataError("routing cost matrix must be arcs x commodities");
  if ((routing_cost.array() <= 0.0).any())
    throw DataError("routing costs must be positive");
}

void GaInstance::validate() const {
  if (num_bins() < 1 || num_items() < 1)
    throw DataError("GA instance needs at least one bin and one item");
  if (profit.rows() != num_bins() || weight.rows() != num_bins() ||
      weight.cols() != num_items())
    throw DataError("profit and weight matrices must be bins x items");
  if ((capacity.array() <= 0.0).any())
    throw DataError("GA capacities must be positive");
  if ((weight.array() < 0.0).any())
    throw DataError("GA weights must be nonnegative");
}

void Distribution::validate(const std::string& field) const {
  if (!(lo < hi))
    throw ParameterError("clip interval of '" + field + "' needs lo < hi");
  if (!(variance >= 0.0))
    throw ParameterError("variance of '" + field + "' must be nonnegative");
}

double Distribution::sample(Rng& rng) const {
  double v = mean;
  if (variance > 0.0) {
    std::normal_distribution<double> normal(mean, std::sqrt(variance));
    v = normal(rng);
  }
  return std::clamp(v, lo, hi);
}

double Distribution::sample_integer(Rng& rng) const {
  const double a = std::ceil(lo);
  const double b = std::floor(hi);
  if (a > b)
    throw ParameterError("clip interval contains no integer");
  return std::clamp(std::round(sample(rng)), a, b);
}

void McGenParams::validate() const {
  if (nodes < 2) throw ParameterError("MC generation needs >= 2 nodes");
  if (arcs < 1 || arcs > nodes * (nodes - 1))
    throw ParameterError("arc count must be in [1, nodes*(nodes-1)]");
  if (commodity_counts.empty())
    throw ParameterError("commodity count set is empty");
  for (int k : commodity_counts)
    if (k < 1) throw ParameterError("commodity counts must be positive");
  if (types.empty()) throw ParameterError("MC generation needs >= 1 type");
  capacity.validate("capacity");
  fixed_cost.validate("fixed_cost");
  if (capacity.lo <= 0.0 || fixed_cost.lo <= 0.0)
    throw ParameterError("capacity and fixed cost clips must be positive");
  for (const McTypeParams& t : types) {
    t.volume.validate("volume");
    t.routing_cost.validate("routing_cost");
    if (t.volume.hi < 1.0 || t.routing_cost.lo <= 0.0)
      throw ParameterError("volumes and routing costs must be positive");
  }
  if (retry_budget < 1) throw ParameterError("retry budget must be >= 1");
}

void GaGenParams::validate() const {
  if (bins < 1 || items < 1)
    throw ParameterError("GA generation needs >= 1 bin and >= 1 item");
  capacity.validate("capacity");
  weight.validate("weight");
  profit.validate("profit");
  if (capacity.hi < 1.0 || weight.lo < 0.0)
    throw ParameterError("capacities must be positive, weights nonnegative");
}

McInstance generate_mc(const McGenParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  McInstance inst;
  if (params.network_seed) {
    Rng net_rng(*params.network_seed);
    build_network(params, net_rng, inst);
  } else {
    build_network(params, rng, inst);
  }

  std::uniform_int_distribution<std::size_t> pick_count(
      0, params.commodity_counts.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_type(
      0, params.types.size() - 1);
  std::uniform_int_distribution<int> pick_node(0, params.nodes - 1);

  // Commodity sets whose demand the network cannot carry even with every
  // arc open are redrawn.
  for (int draw = 0;; ++draw) {
    if (draw >= params.retry_budget)
      throw DataError("no commodity set routable within arc capacities after " +
                      std::to_string(params.retry_budget) + " draws");
    const int num_k = params.commodity_counts[pick_count(rng)];
    const McTypeParams& type = params.types[pick_type(rng)];
    inst.commodities.assign(num_k, Commodity{});
    for (int k = 0; k < num_k; ++k) {
      Commodity& c = inst.commodities[k];
      int attempt = 0;
      for (;; ++attempt) {
        if (attempt >= params.retry_budget)
          throw DataError("commodity " + std::to_string(k) +
                          ": no origin/destination pair with a path after " +
                          std::to_string(params.retry_budget) + " attempts");
        c.origin = pick_node(rng);
        do {
          c.destination = pick_node(rng);
        } while (c.destination == c.origin);
        if (reachable(inst, c.origin, c.destination)) break;
      }
      c.volume = std::max(1.0, type.volume.sample_integer(rng));
    }
    inst.routing_cost.resize(inst.num_arcs(), num_k);
    for (int a = 0; a < inst.num_arcs(); ++a)
      for (int k = 0; k < num_k; ++k)
        inst.routing_cost(a, k) = type.routing_cost.sample(rng);
    if (solve_cr(mc_to_milp(inst)).status == LpStatus::optimal) break;
  }
  return inst;
}

GaInstance generate_ga(const GaGenParams& params, std::uint64_t seed) {
  params.validate();
  Rng rng(seed);
  GaInstance inst;
  inst.capacity.resize(params.bins);
  inst.profit.resize(params.bins, params.items);
  inst.weight.resize(params.bins, params.items);
  for (int j = 0; j < params.bins; ++j)
    inst.capacity[j] = std::max(1.0, params.capacity.sample_integer(rng));
  for (int j = 0; j < params.bins; ++j)
    for (int i = 0; i < params.items; ++i) {
      inst.weight(j, i) = params.weight.sample_integer(rng);
      inst.profit(j, i) = params.profit.sample_integer(rng);
    }
  return inst;
}

double mc_supply(const McInstance& m, int node, int k) {
  const Commodity& c = m.commodities[k];
  if (node == c.origin) return c.volume;
  if (node == c.destination) return -c.volume;
  return 0.0;
}

MilpInstance mc_to_milp(const McInstance& inst) {
  inst.validate();
  const int na = inst.num_arcs();
  const int nk = inst.num_commodities();
  const Eigen::Index nvars = static_cast<Eigen::Index>(na) * nk + na;

  MilpInstance milp;
  milp.sense = Sense::minimize;
  milp.objective.resize(nvars);
  milp.lower = Vector::Zero(nvars);
  milp.upper.resize(nvars);
  milp.integral.assign(nvars, false);

  std::vector<Triplet> flow, cap;
  for (int a = 0; a < na; ++a) {
    const Arc& arc = inst.arcs[a];
    for (int k = 0; k < nk; ++k) {
      const Commodity& c = inst.commodities[k];
      const Eigen::Index v = mc_flow_var(inst, a, k);
      milp.objective[v] = inst.routing_cost(a, k);
      // never route into the origin or out of the destination
      const bool forced = arc.tail == c.destination || arc.head == c.origin;
      milp.upper[v] = forced ? 0.0 : c.volume;
      flow.emplace_back(mc_flow_row(inst, arc.tail, k), v, 1.0);
      flow.emplace_back(mc_flow_row(inst, arc.head, k), v, -1.0);
      cap.emplace_back(a, v, 1.0);
    }
    const Eigen::Index y = mc_design_var(inst, a);
    milp.objective[y] = arc.fixed_cost;
    milp.upper[y] = 1.0;
    milp.integral[y] = true;
    cap.emplace_back(a, y, -arc.capacity);
  }

  const Eigen::Index nflow = static_cast<Eigen::Index>(inst.num_nodes) * nk;
  milp.dualized.matrix = build_rows(nflow, nvars, flow);
  milp.dualized.rhs.resize(nflow);
  milp.dualized.relation.assign(nflow, Relation::eq);
  for (int k = 0; k < nk; ++k)
    for (int i = 0; i < inst.num_nodes; ++i)
      milp.dualized.rhs[mc_flow_row(inst, i, k)] = mc_supply(inst, i, k);

  milp.kept.matrix = build_rows(na, nvars, cap);
  milp.kept.rhs = Vector::Zero(na);
  milp.kept.relation.assign(na, Relation::leq);
  return milp;
}

MilpInstance ga_to_milp(const GaInstance& inst) {
  inst.validate();
  const int nb = inst.num_bins();
  const int ni = inst.num_items();
  const Eigen::Index nvars = static_cast<Eigen::Index>(nb) * ni;

  MilpInstance milp;
  milp.sense = Sense::maximize;
  milp.objective.resize(nvars);
  milp.lower = Vector::Zero(nvars);
  milp.upper = Vector::Ones(nvars);
  milp.integral.assign(nvars, true);

  std::vector<Triplet> assign, cap;
  for (int i = 0; i < ni; ++i)
    for (int j = 0; j < nb; ++j) {
      const Eigen::Index v = ga_var(inst, i, j);
      milp.objective[v] = inst.profit(j, i);
      assign.emplace_back(i, v, 1.0);
      if (inst.weight(j, i) != 0.0) cap.emplace_back(j, v, inst.weight(j, i));
    }
  milp.dualized.matrix = build_rows(ni, nvars, assign);
  milp.dualized.rhs = Vector::Ones(ni);
  milp.dualized.relation.assign(ni, Relation::leq);
  milp.kept.matrix = build_rows(nb, nvars, cap);
  milp.kept.rhs = inst.capacity;
  milp.kept.relation.assign(nb, Relation::leq);
  return milp;
}

Problem make_problem(McInstance inst) {
  Problem p;
  p.milp = mc_to_milp(inst);
  p.source = std::move(inst);
  return p;
}

Problem make_problem(GaInstance inst) {
  Problem p;
  p.milp = ga_to_milp(inst);
  p.source = std::move(inst);
  return p;
}

}  // namespace lmp
