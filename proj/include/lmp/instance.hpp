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

#ifndef LMP_INSTANCE_HPP_
#define LMP_INSTANCE_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/SparseCore>

#include "lmp/common.hpp"

namespace lmp {

using SparseRows = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// A block of linear rows `matrix * x (relation) rhs`.
struct RowBlock {
  SparseRows matrix;
  Vector rhs;
  std::vector<Relation> relation;

  Eigen::Index rows() const { return matrix.rows(); }
};

/// Generic MILP split into dualized rows (the ones moved into the objective
/// by the Lagrangian relaxation) and kept rows.
///
///   sense  objective' x
///   dualized.matrix x (rel) dualized.rhs
///   kept.matrix x (rel) kept.rhs
///   lower <= x <= upper,  x_j integral where integral[j]
///
/// Row order everywhere in the library is: dualized rows first, then kept.
struct MilpInstance {
  Sense sense = Sense::minimize;
  Vector objective;
  RowBlock dualized;
  RowBlock kept;
  Vector lower;
  Vector upper;
  std::vector<bool> integral;

  Eigen::Index num_vars() const { return objective.size(); }
  Eigen::Index num_dualized() const { return dualized.rows(); }
  Eigen::Index num_rows() const { return dualized.rows() + kept.rows(); }

  /// Throws DataError when dimensions or bounds are inconsistent.
  void validate() const;
};

struct Arc {
  int tail = 0;
  int head = 0;
  double capacity = 0.0;
  double fixed_cost = 0.0;
};

struct Commodity {
  int origin = 0;
  int destination = 0;
  double volume = 0.0;  // positive integer value
};

/// Multi-commodity fixed-charge network design instance.
struct McInstance {
  int num_nodes = 0;
  std::vector<Arc> arcs;
  std::vector<Commodity> commodities;
  Matrix routing_cost;  // arcs x commodities

  int num_arcs() const { return static_cast<int>(arcs.size()); }
  int num_commodities() const { return static_cast<int>(commodities.size()); }
  void validate() const;
};

/// Generalized assignment instance. Matrices are bins x items.
struct GaInstance {
  Vector capacity;
  Matrix profit;
  Matrix weight;

  int num_bins() const { return static_cast<int>(capacity.size()); }
  int num_items() const { return static_cast<int>(profit.cols()); }
  void validate() const;
};

/// Clipped Gaussian: draw N(mean, variance) then clamp into [lo, hi].
struct Distribution {
  double mean = 0.0;
  double variance = 0.0;
  double lo = 0.0;
  double hi = 1.0;

  void validate(const std::string& field) const;
  double sample(Rng& rng) const;
  /// Samples, rounds to the nearest integer and clamps into [ceil(lo), floor(hi)].
  double sample_integer(Rng& rng) const;
};

/// Per-type distributions for the commodity data of an MC instance. Types
/// encode the fixed-cost/routing and capacity/volume ratios.
struct McTypeParams {
  Distribution volume;
  Distribution routing_cost;
};

struct McGenParams {
  int nodes = 8;
  int arcs = 24;
  std::vector<int> commodity_counts{5};
  Distribution capacity;
  Distribution fixed_cost;
  std::vector<McTypeParams> types;
  /// When set, the network (arcs, capacities, fixed costs) is drawn from this
  /// seed and shared by every instance of the dataset.
  std::optional<std::uint64_t> network_seed;
  int retry_budget = 100;

  void validate() const;
};

struct GaGenParams {
  int bins = 3;
  int items = 12;
  Distribution capacity;
  Distribution weight;
  Distribution profit;

  void validate() const;
};

/// A named, versioned generation preset.
struct GenParams {
  std::string name;
  int version = 1;
  std::variant<McGenParams, GaGenParams> params;

  bool is_mc() const { return std::holds_alternative<McGenParams>(params); }
};

McInstance generate_mc(const McGenParams& params, std::uint64_t seed);
GaInstance generate_ga(const GaGenParams& params, std::uint64_t seed);

/// Variable layout of mc_to_milp: x^k_a at a*|K| + k, y_a at |A||K| + a.
/// Dualized row (node i, commodity k) at k*|N| + i.
inline Eigen::Index mc_flow_var(const McInstance& m, int arc, int k) {
  return static_cast<Eigen::Index>(arc) * m.num_commodities() + k;
}
inline Eigen::Index mc_design_var(const McInstance& m, int arc) {
  return static_cast<Eigen::Index>(m.num_arcs()) * m.num_commodities() + arc;
}
inline Eigen::Index mc_flow_row(const McInstance& m, int node, int k) {
  return static_cast<Eigen::Index>(k) * m.num_nodes + node;
}
/// Right-hand side b^k_i of the flow conservation rows.
double mc_supply(const McInstance& m, int node, int k);

/// Variable layout of ga_to_milp: x_ij at i*|J| + j; dualized row i per item.
inline Eigen::Index ga_var(const GaInstance& g, int item, int bin) {
  return static_cast<Eigen::Index>(item) * g.num_bins() + bin;
}

MilpInstance mc_to_milp(const McInstance& inst);
MilpInstance ga_to_milp(const GaInstance& inst);

/// Either problem class, together with its lowered MILP.
struct Problem {
  std::variant<McInstance, GaInstance> source;
  MilpInstance milp;

  bool is_mc() const { return std::holds_alternative<McInstance>(source); }
  const McInstance& mc() const { return std::get<McInstance>(source); }
  const GaInstance& ga() const { return std::get<GaInstance>(source); }
};

Problem make_problem(McInstance inst);
Problem make_problem(GaInstance inst);

}  // namespace lmp

#endif  // LMP_INSTANCE_HPP_
