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

#ifndef LMP_FEATURIZE_HPP_
#define LMP_FEATURIZE_HPP_

#include <filesystem>
#include <vector>

#include "lmp/instance.hpp"
#include "lmp/lp.hpp"

namespace lmp {

inline constexpr int kNodeFeatures = 8;
inline constexpr int kFlatFeatures = 22;

struct Edge {
  Eigen::Index var = 0;
  Eigen::Index con = 0;
  double coefficient = 0.0;
};

/// Variable/constraint graph of a MILP. Nodes are ordered variables first
/// (by index), then constraints in library row order (dualized, then kept).
struct BipartiteGraph {
  Eigen::Index num_vars = 0;
  Eigen::Index num_cons = 0;
  Eigen::Index num_dualized = 0;
  std::vector<Edge> edges;
  /// D^-1/2 (A + I) D^-1/2 over all nodes, 0/1 structure, compressed rows.
  Eigen::SparseMatrix<double, Eigen::RowMajor> adjacency;
  Eigen::SparseMatrix<float, Eigen::RowMajor> adjacency_f;

  Eigen::Index num_nodes() const { return num_vars + num_cons; }
  Eigen::Index con_node(Eigen::Index row) const { return num_vars + row; }
  /// Nodes of the dualized constraints, in row order.
  std::vector<Eigen::Index> dualized_nodes() const;
};

BipartiteGraph build_graph(const MilpInstance& milp);

/// Per-node feature rows:
///   variables   [w_j, x_CR, reduced cost, integral | 0 0 0 0]
///   constraints [0 0 0 0 | rhs, CR dual, equality, dualized]
/// With `use_cr` false the CR-derived entries are zero.
Matrix init_features(const MilpInstance& milp, const LpSolution& cr, bool use_cr = true);

/// Standardizes the value columns of each node type over the nodes of that
/// type (flags untouched). Columns with zero deviation are only centered.
Matrix standardize_features(const Matrix& raw, Eigen::Index num_vars);

/// CR duals of the dualized rows projected onto the sign policy; zero
/// without CR.
Vector cr_multipliers(const MilpInstance& milp, const LpSolution& cr, bool use_cr = true);

/// One row per dualized constraint: its 8 (standardized) node features and
/// the coefficient-weighted sum over its variables of the extended vector
/// [8 node features, mean/std of coefficients over dualized rows, mean/std
/// over kept rows, lower bound, upper bound] (infinite bounds as 0).
Matrix flat_features(const MilpInstance& milp, const LpSolution& cr, bool use_cr = true);

/// Node-ordered CSV dump: node,kind,index,f0..f7.
void save_feature_dump(const BipartiteGraph& graph, const Matrix& features,
                       const std::filesystem::path& path);

}  // namespace lmp

#endif  // LMP_FEATURIZE_HPP_
