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

#include "lmp/featurize.hpp"

#include <cmath>

#include "lmp/io.hpp"
#include "lmp/lagrangian.hpp"

namespace lmp {

namespace {

void check_cr(const MilpInstance& milp, const LpSolution& cr) {
  if (cr.x.size() != milp.num_vars() || cr.reduced_costs.size() != milp.num_vars() ||
      cr.row_duals.size() != milp.num_rows())
    throw DataError("CR solution does not match the instance dimensions");
}

// Visits every structural nonzero as (row in library order, var, coef).
template <typename F>
void for_each_nonzero(const MilpInstance& milp, F&& f) {
  const Eigen::Index md = milp.num_dualized();
  for (Eigen::Index i = 0; i < md; ++i)
    for (SparseRows::InnerIterator it(milp.dualized.matrix, i); it; ++it)
      if (it.value() != 0.0) f(i, it.col(), it.value());
  for (Eigen::Index i = 0; i < milp.kept.rows(); ++i)
    for (SparseRows::InnerIterator it(milp.kept.matrix, i); it; ++it)
      if (it.value() != 0.0) f(md + i, it.col(), it.value());
}

}  // namespace

std::vector<Eigen::Index> BipartiteGraph::dualized_nodes() const {
  std::vector<Eigen::Index> out(num_dualized);
  for (Eigen::Index i = 0; i < num_dualized; ++i) out[i] = con_node(i);
  return out;
}

BipartiteGraph build_graph(const MilpInstance& milp) {
  BipartiteGraph g;
  g.num_vars = milp.num_vars();
  g.num_cons = milp.num_rows();
  g.num_dualized = milp.num_dualized();
  for_each_nonzero(milp, [&](Eigen::Index row, Eigen::Index var, double coef) {
    g.edges.push_back({var, row, coef});
  });

  const Eigen::Index n = g.num_nodes();
  Vector degree = Vector::Ones(n);  // self-loop
  for (const Edge& e : g.edges) {
    degree[e.var] += 1.0;
    degree[g.con_node(e.con)] += 1.0;
  }
  const Vector inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  std::vector<Eigen::Triplet<double>> trips;
  trips.reserve(2 * g.edges.size() + n);
  for (Eigen::Index v = 0; v < n; ++v) trips.emplace_back(v, v, inv_sqrt[v] * inv_sqrt[v]);
  for (const Edge& e : g.edges) {
    const Eigen::Index c = g.con_node(e.con);
    const double w = inv_sqrt[e.var] * inv_sqrt[c];
    trips.emplace_back(e.var, c, w);
    trips.emplace_back(c, e.var, w);
  }
  g.adjacency.resize(n, n);
  g.adjacency.setFromTriplets(trips.begin(), trips.end());
  g.adjacency.makeCompressed();
  g.adjacency_f = g.adjacency.cast<float>();
  g.adjacency_f.makeCompressed();
  return g;
}

Matrix init_features(const MilpInstance& milp, const LpSolution& cr, bool use_cr) {
  if (use_cr) check_cr(milp, cr);
  const Eigen::Index n = milp.num_vars();
  const Eigen::Index md = milp.num_dualized();
  const Eigen::Index m = milp.num_rows();
  Matrix f = Matrix::Zero(n + m, kNodeFeatures);
  for (Eigen::Index j = 0; j < n; ++j) {
    f(j, 0) = milp.objective[j];
    if (use_cr) {
      f(j, 1) = cr.x[j];
      f(j, 2) = cr.reduced_costs[j];
    }
    f(j, 3) = milp.integral[j] ? 1.0 : 0.0;
  }
  for (Eigen::Index i = 0; i < m; ++i) {
    const bool dualized = i < md;
    const RowBlock& block = dualized ? milp.dualized : milp.kept;
    const Eigen::Index r = dualized ? i : i - md;
    f(n + i, 4) = block.rhs[r];
    if (use_cr) f(n + i, 5) = cr.row_duals[i];
    f(n + i, 6) = block.relation[r] == Relation::eq ? 1.0 : 0.0;
    f(n + i, 7) = dualized ? 1.0 : 0.0;
  }
  return f;
}

Matrix standardize_features(const Matrix& raw, Eigen::Index num_vars) {
  Matrix f = raw;
  auto standardize = [&](Eigen::Index first, Eigen::Index count, int col) {
    if (count == 0) return;
    auto column = f.col(col).segment(first, count);
    const double mean = column.mean();
    column.array() -= mean;
    const double sd = std::sqrt(column.squaredNorm() / static_cast<double>(count));
    if (sd > 1e-12) column /= sd;
  };
  const Eigen::Index num_cons = raw.rows() - num_vars;
  for (int col : {0, 1, 2}) standardize(0, num_vars, col);
  for (int col : {4, 5}) standardize(num_vars, num_cons, col);
  return f;
}

Vector cr_multipliers(const MilpInstance& milp, const LpSolution& cr, bool use_cr) {
  if (!use_cr) return Vector::Zero(milp.num_dualized());
  check_cr(milp, cr);
  return project_sign(cr.row_duals.head(milp.num_dualized()), sign_policy(milp));
}

Matrix flat_features(const MilpInstance& milp, const LpSolution& cr, bool use_cr) {
  const Eigen::Index n = milp.num_vars();
  const Eigen::Index md = milp.num_dualized();
  const Matrix node = standardize_features(init_features(milp, cr, use_cr), n);

  // coefficient statistics per variable over dualized and kept rows
  Vector sum_d = Vector::Zero(n), sq_d = Vector::Zero(n), cnt_d = Vector::Zero(n);
  Vector sum_k = Vector::Zero(n), sq_k = Vector::Zero(n), cnt_k = Vector::Zero(n);
  for_each_nonzero(milp, [&](Eigen::Index row, Eigen::Index var, double coef) {
    if (row < md) {
      sum_d[var] += coef;
      sq_d[var] += coef * coef;
      cnt_d[var] += 1.0;
    } else {
      sum_k[var] += coef;
      sq_k[var] += coef * coef;
      cnt_k[var] += 1.0;
    }
  });
  auto stats = [](double s, double q, double c) {
    if (c == 0.0) return std::pair{0.0, 0.0};
    const double mean = s / c;
    return std::pair{mean, std::sqrt(std::max(q / c - mean * mean, 0.0))};
  };
  Matrix extended(n, 14);
  for (Eigen::Index j = 0; j < n; ++j) {
    extended.row(j).head(kNodeFeatures) = node.row(j);
    const auto [md_mean, md_sd] = stats(sum_d[j], sq_d[j], cnt_d[j]);
    const auto [mk_mean, mk_sd] = stats(sum_k[j], sq_k[j], cnt_k[j]);
    extended(j, 8) = md_mean;
    extended(j, 9) = md_sd;
    extended(j, 10) = mk_mean;
    extended(j, 11) = mk_sd;
    extended(j, 12) = std::isfinite(milp.lower[j]) ? milp.lower[j] : 0.0;
    extended(j, 13) = std::isfinite(milp.upper[j]) ? milp.upper[j] : 0.0;
  }

  Matrix out = Matrix::Zero(md, kFlatFeatures);
  for (Eigen::Index i = 0; i < md; ++i) {
    out.row(i).head(kNodeFeatures) = node.row(n + i);
    for (SparseRows::InnerIterator it(milp.dualized.matrix, i); it; ++it)
      out.row(i).tail(14) += it.value() * extended.row(it.col());
  }
  return out;
}

void save_feature_dump(const BipartiteGraph& graph, const Matrix& features,
                       const std::filesystem::path& path) {
  if (features.rows() != graph.num_nodes())
    throw DataError("feature rows do not match graph nodes");
  std::vector<std::string> header{"node", "kind", "index"};
  for (int k = 0; k < kNodeFeatures; ++k) header.push_back("f" + std::to_string(k));
  CsvWriter csv(header);
  for (Eigen::Index v = 0; v < graph.num_nodes(); ++v) {
    const bool is_var = v < graph.num_vars;
    std::vector<std::string> cells{
        std::to_string(v), is_var ? "var" : "con",
        std::to_string(is_var ? v : v - graph.num_vars)};
    for (int k = 0; k < kNodeFeatures; ++k) cells.push_back(format_double(features(v, k)));
    csv.row(cells);
  }
  csv.save(path);
}

}  // namespace lmp
