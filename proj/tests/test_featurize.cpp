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

#include <catch2/catch_amalgamated.hpp>

#include <fstream>
#include <numeric>

#include "lmp/featurize.hpp"
#include "test_support.hpp"

using namespace lmp;
using namespace lmp::testing;
using Catch::Approx;

namespace {

GaInstance small_ga() {
  GaInstance g;
  g.capacity = Vector{{4.0, 4.0}};
  g.profit = Matrix{{6.0, 5.0, 4.0}, {3.0, 7.0, 2.0}};
  g.weight = Matrix{{2.0, 3.0, 2.0}, {2.0, 4.0, 1.0}};
  return g;
}

// Renames variable j to perm[j].
MilpInstance permute_vars(const MilpInstance& m, const std::vector<int>& perm) {
  Eigen::PermutationMatrix<Eigen::Dynamic> p(m.num_vars());
  for (size_t j = 0; j < perm.size(); ++j) p.indices()[j] = perm[j];
  MilpInstance out = m;
  out.objective = p * m.objective;
  out.lower = p * m.lower;
  out.upper = p * m.upper;
  for (size_t j = 0; j < perm.size(); ++j) out.integral[perm[j]] = m.integral[j];
  out.dualized.matrix = m.dualized.matrix * p.transpose();
  out.kept.matrix = m.kept.matrix * p.transpose();
  return out;
}

}  // namespace

TEST_CASE("graph of a small assignment problem", "[featurize]") {
  const Problem ga = make_problem(small_ga());
  const BipartiteGraph g = build_graph(ga.milp);
  CHECK(g.num_vars == 6);
  CHECK(g.num_cons == 5);
  CHECK(g.num_dualized == 3);
  CHECK(g.dualized_nodes() == std::vector<Eigen::Index>{6, 7, 8});
  const auto nnz = ga.milp.dualized.matrix.nonZeros() + ga.milp.kept.matrix.nonZeros();
  CHECK(static_cast<Eigen::Index>(g.edges.size()) == nnz);
  CHECK(g.adjacency.rows() == 11);
}

TEST_CASE("single arc adjacency", "[featurize]") {
  const Problem mc = make_problem(single_arc_mc(10.0, 1.0, 2.0, 5.0));
  // 2 vars (flow, design), 2 flow rows (dualized), 1 capacity row
  const BipartiteGraph g = build_graph(mc.milp);
  REQUIRE(g.num_nodes() == 5);
  const Eigen::MatrixXd a = Eigen::MatrixXd(g.adjacency);
  CHECK(a.isApprox(a.transpose()));
  // flow var touches both flow rows and the capacity row: degree 4 with loop
  CHECK(a(0, 0) == Approx(1.0 / 4.0));
  // the capacity row touches flow and design vars: degree 3
  CHECK(a(4, 4) == Approx(1.0 / 3.0));
  CHECK(a(0, 4) == Approx(1.0 / std::sqrt(12.0)));
  CHECK(a(0, 1) == 0.0);
}

TEST_CASE("normalized adjacency is coefficient agnostic", "[featurize][property]") {
  std::mt19937_64 rng(53);
  for (int t = 0; t < 5; ++t) {
    const Problem p = t % 2 ? make_problem(random_ga(rng, 3, 7))
                            : make_problem(random_mc(rng, 6, 14, 3));
    const BipartiteGraph g = build_graph(p.milp);
    const Eigen::Index n = g.num_nodes();
    Vector degree = Vector::Ones(n);
    for (const Edge& e : g.edges) {
      CHECK(e.coefficient != 0.0);
      degree[e.var] += 1;
      degree[g.con_node(e.con)] += 1;
    }
    // (A + I) D^-1/2 1 summed against D^-1/2 reproduces each row directly
    const Vector ones_scaled = degree.cwiseSqrt();
    const Vector lhs = g.adjacency * ones_scaled;
    CHECK((lhs - degree.cwiseSqrt()).norm() < 1e-10 * std::sqrt(double(n)));
    CHECK(g.adjacency.nonZeros() == Eigen::Index(2 * g.edges.size() + n));
  }
}

TEST_CASE("node feature flags and CR entries", "[featurize]") {
  const Problem mc = make_problem(single_arc_mc(10.0, 1.0, 2.0, 5.0));
  const LpSolution cr = solve_cr(mc.milp);
  const Matrix f = init_features(mc.milp, cr);
  REQUIRE(f.rows() == 5);
  // variables: integral flag only on the design variable
  CHECK(f(0, 3) == 0.0);
  CHECK(f(1, 3) == 1.0);
  CHECK(f(0, 0) == 1.0);
  CHECK(f(1, 0) == 10.0);
  CHECK(f(0, 1) == Approx(cr.x[0]));
  CHECK(f.block(0, 4, 2, 4).isZero());
  // constraints: flow rows are equalities and dualized, capacity row neither
  CHECK(f(2, 6) == 1.0);
  CHECK(f(2, 7) == 1.0);
  CHECK(f(4, 6) == 0.0);
  CHECK(f(4, 7) == 0.0);
  CHECK(f.block(2, 0, 3, 4).isZero());
  CHECK(f(4, 5) == Approx(cr.row_duals[2]));

  const Matrix bare = init_features(mc.milp, cr, false);
  CHECK(bare.col(1).isZero());
  CHECK(bare.col(2).isZero());
  CHECK(bare.col(5).isZero());
  CHECK(bare.col(0) == f.col(0));
  CHECK(bare.col(4) == f.col(4));
  CHECK(cr_multipliers(mc.milp, cr, false).isZero());
}

TEST_CASE("standardization per node type", "[featurize]") {
  std::mt19937_64 rng(59);
  const Problem mc = make_problem(random_mc(rng, 6, 14, 3));
  const LpSolution cr = solve_cr(mc.milp);
  const Eigen::Index n = mc.milp.num_vars();
  const Matrix raw = init_features(mc.milp, cr);
  const Matrix s = standardize_features(raw, n);
  const Eigen::Index m = raw.rows() - n;
  for (int col : {0, 1, 2}) {
    CHECK(std::abs(s.col(col).head(n).mean()) < 1e-12);
    CHECK(s.col(col).head(n).squaredNorm() / double(n) == Approx(1.0));
  }
  CHECK(std::abs(s.col(4).tail(m).mean()) < 1e-12);
  for (int col : {3, 6, 7}) CHECK(s.col(col) == raw.col(col));
  CHECK(s.block(0, 4, n, 4).isZero());
  CHECK(s.block(n, 0, m, 4).isZero());

  // zero-deviation columns stay centered zero
  const Matrix bare = standardize_features(init_features(mc.milp, cr, false), n);
  CHECK(bare.col(1).isZero());
  CHECK(bare.col(5).isZero());
}

TEST_CASE("flat features of a single coefficient-2 variable", "[featurize]") {
  MilpInstance m;
  m.objective = Vector{{3.0}};
  m.dualized.matrix = dense_rows(Matrix{{2.0}});
  m.dualized.rhs = Vector{{3.0}};
  m.dualized.relation = {Relation::leq};
  m.kept.matrix.resize(0, 1);
  m.lower = Vector{{0.0}};
  m.upper = Vector{{4.0}};
  m.integral = {true};
  const LpSolution cr = solve_cr(m);
  const Matrix flat = flat_features(m, cr);
  REQUIRE(flat.rows() == 1);
  REQUIRE(flat.cols() == kFlatFeatures);
  // single-node columns center to zero; the dualized/equality flags remain
  CHECK(flat(0, 7) == 1.0);
  CHECK(flat(0, 6) == 0.0);
  Vector expected_tail = Vector::Zero(14);
  expected_tail[3] = 2.0;       // 2 * integral flag
  expected_tail[8] = 4.0;       // 2 * mean dualized coefficient
  expected_tail[13] = 8.0;      // 2 * upper bound
  CHECK((flat.row(0).tail(14).transpose() - expected_tail).norm() < 1e-12);
}

TEST_CASE("features are equivariant under variable renaming", "[featurize][property]") {
  std::mt19937_64 rng(61);
  for (int t = 0; t < 4; ++t) {
    const Problem p = t % 2 ? make_problem(random_ga(rng, 3, 6))
                            : make_problem(random_mc(rng, 5, 10, 3));
    const MilpInstance& m = p.milp;
    const Eigen::Index n = m.num_vars();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    const MilpInstance q = permute_vars(m, perm);

    LpSolution cr = solve_cr(m);
    LpSolution crq = cr;
    for (Eigen::Index j = 0; j < n; ++j) {
      crq.x[perm[j]] = cr.x[j];
      crq.reduced_costs[perm[j]] = cr.reduced_costs[j];
    }
    const Matrix f = standardize_features(init_features(m, cr), n);
    const Matrix fq = standardize_features(init_features(q, crq), n);
    for (Eigen::Index j = 0; j < n; ++j)
      CHECK((f.row(j) - fq.row(perm[j])).norm() < 1e-12);
    CHECK((f.bottomRows(m.num_rows()) - fq.bottomRows(m.num_rows())).norm() < 1e-12);
    CHECK((flat_features(m, cr) - flat_features(q, crq)).norm() < 1e-9);

    const BipartiteGraph g = build_graph(m), gq = build_graph(q);
    Eigen::PermutationMatrix<Eigen::Dynamic> node_perm(g.num_nodes());
    for (Eigen::Index v = 0; v < g.num_nodes(); ++v)
      node_perm.indices()[v] = v < n ? perm[v] : int(v);
    const Eigen::MatrixXd a = Eigen::MatrixXd(g.adjacency);
    const Eigen::MatrixXd aq = Eigen::MatrixXd(gq.adjacency);
    CHECK((node_perm * a * node_perm.transpose() - aq).norm() < 1e-12);
  }
}

TEST_CASE("feature dump is node ordered", "[featurize]") {
  const Problem ga = make_problem(small_ga());
  const LpSolution cr = solve_cr(ga.milp);
  const BipartiteGraph g = build_graph(ga.milp);
  const auto dir = temp_dir("features");
  save_feature_dump(g, init_features(ga.milp, cr), dir / "features.csv");
  std::ifstream in(dir / "features.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "node,kind,index,f0,f1,f2,f3,f4,f5,f6,f7");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 11);
  CHECK_THROWS_AS(save_feature_dump(g, Matrix::Zero(3, 8), dir / "bad.csv"), DataError);
}
