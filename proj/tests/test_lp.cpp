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

#include "lmp/io.hpp"
#include "lmp/lp.hpp"
#include "test_support.hpp"

using namespace lmp;
using namespace lmp::testing;
using Catch::Approx;

TEST_CASE("textbook maximization", "[lp]") {
  // max 3x + 5y, x <= 4, 2y <= 12, 3x + 2y <= 18
  Matrix a(3, 2);
  a << 1, 0, 0, 2, 3, 2;
  const LpProblem lp = make_lp(Sense::maximize, Vector{{3.0, 5.0}}, a,
                               Vector{{4.0, 12.0, 18.0}}, {Relation::leq, Relation::leq, Relation::leq},
                               Vector::Zero(2), Vector::Constant(2, kInfinity));
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.objective == Approx(36.0));
  CHECK(s.x[0] == Approx(2.0));
  CHECK(s.x[1] == Approx(6.0));
  // shadow prices of the three rows
  CHECK(s.row_duals[0] == Approx(0.0).margin(1e-9));
  CHECK(s.row_duals[1] == Approx(1.5));
  CHECK(s.row_duals[2] == Approx(1.0));
  CHECK(verify_kkt(lp, s).ok());
}

TEST_CASE("minimization with equality, >= rows and a free variable", "[lp]") {
  // min x + 2y + 3z, x + y + z = 4, x - y >= -1, z free in [-inf, inf]
  // with z >= -2 via row: z >= -2
  Matrix a(3, 3);
  a << 1, 1, 1, 1, -1, 0, 0, 0, 1;
  const LpProblem lp =
      make_lp(Sense::minimize, Vector{{1.0, 2.0, 3.0}}, a, Vector{{4.0, -1.0, -2.0}},
              {Relation::eq, Relation::geq, Relation::geq},
              Vector{{0.0, 0.0, -kInfinity}}, Vector::Constant(3, kInfinity));
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  // z as low as possible (-2), x = 6, y = 0 gives 6 - 6 = 0
  CHECK(s.objective == Approx(0.0).margin(1e-9));
  CHECK(s.x[0] == Approx(6.0));
  CHECK(s.x[2] == Approx(-2.0));
  CHECK(verify_kkt(lp, s).ok());
}

TEST_CASE("infeasible and unbounded programs are reported", "[lp]") {
  Matrix a(2, 1);
  a << 1, 1;
  const LpProblem infeasible =
      make_lp(Sense::minimize, Vector{{1.0}}, a, Vector{{1.0, 3.0}},
              {Relation::leq, Relation::geq}, Vector::Zero(1), Vector::Constant(1, 10.0));
  CHECK(solve_lp(infeasible).status == LpStatus::infeasible);

  Matrix b(1, 2);
  b << 1, -1;
  const LpProblem unbounded =
      make_lp(Sense::maximize, Vector{{1.0, 0.0}}, b, Vector{{1.0}}, {Relation::leq},
              Vector::Zero(2), Vector::Constant(2, kInfinity));
  CHECK(solve_lp(unbounded).status == LpStatus::unbounded);
}

TEST_CASE("degenerate program terminates", "[lp]") {
  // Many redundant rows through the optimal vertex.
  const int m = 30;
  Matrix a(m, 3);
  Vector b(m);
  std::vector<Relation> rel(m, Relation::leq);
  for (int i = 0; i < m; ++i) {
    a.row(i) << 1.0 + i % 3, 1.0 + (i + 1) % 3, 1.0 + (i + 2) % 3;
    b[i] = 0.0;
  }
  const LpProblem lp = make_lp(Sense::maximize, Vector{{1.0, 1.0, 1.0}}, a, b, rel,
                               Vector::Constant(3, -1.0), Vector::Constant(3, 1.0));
  const LpSolution s = solve_lp(lp);
  REQUIRE(s.status == LpStatus::optimal);
  CHECK(s.objective == Approx(0.0).margin(1e-9));
  CHECK(verify_kkt(lp, s).ok());
}

TEST_CASE("simplex matches vertex enumeration on random programs", "[lp][property]") {
  std::mt19937_64 rng(7);
  int optimal = 0;
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 2 + trial % 3;
    const int m = 1 + trial % 4;
    const LpProblem lp = random_lp(rng, n, m);
    const std::optional<double> oracle = vertex_enumeration(lp);
    const LpSolution s = solve_lp(lp);
    INFO("trial " << trial);
    if (!oracle) {
      CHECK(s.status == LpStatus::infeasible);
      continue;
    }
    REQUIRE(s.status == LpStatus::optimal);
    ++optimal;
    CHECK(s.objective == Approx(*oracle).margin(1e-7));
    const KktReport k = verify_kkt(lp, s);
    CHECK(k.ok());
  }
  CHECK(optimal > 100);
}

TEST_CASE("solution export and import", "[lp][io]") {
  std::mt19937_64 rng(11);
  const Problem p = make_problem(random_mc(rng, 5, 10, 3));
  const LpSolution s = solve_cr(p.milp);
  REQUIRE(s.status == LpStatus::optimal);
  REQUIRE(verify_kkt(p.milp, s).ok());

  const auto dir = temp_dir("lp_io");
  export_solution(s, dir / "cr.json");
  const LpSolution back = import_solution(p.milp, dir / "cr.json");
  CHECK(back.status == LpStatus::optimal);
  CHECK(back.objective == s.objective);
  CHECK((back.row_duals - s.row_duals).norm() == 0.0);

  // A corrupted dual vector no longer satisfies the KKT conditions.
  LpSolution bad = s;
  bad.row_duals[0] += 1.0;
  export_solution(bad, dir / "bad.json");
  const LpSolution b2 = import_solution(p.milp, dir / "bad.json");
  CHECK(b2.status == LpStatus::unverified);
  CHECK_FALSE(b2.warnings.empty());

  // Wrong dimensions are data errors.
  LpSolution shorter = s;
  shorter.x.conservativeResize(s.x.size() - 1);
  export_solution(shorter, dir / "short.json");
  CHECK_THROWS_AS(import_solution(p.milp, dir / "short.json"), DataError);
}

TEST_CASE("continuous relaxation of a generated instance satisfies KKT", "[lp]") {
  std::mt19937_64 rng(3);
  for (int t = 0; t < 5; ++t) {
    const Problem mc = make_problem(random_mc(rng, 6, 14, 4));
    const LpSolution s = solve_cr(mc.milp);
    REQUIRE(s.status == LpStatus::optimal);
    CHECK(verify_kkt(mc.milp, s).ok());
    const Problem ga = make_problem(random_ga(rng, 3, 10));
    const LpSolution g = solve_cr(ga.milp);
    REQUIRE(g.status == LpStatus::optimal);
    CHECK(verify_kkt(ga.milp, g).ok());
  }
}
