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

#include "lmp/brute_force.hpp"
#include "lmp/dual.hpp"
#include "lmp/lp.hpp"
#include "test_support.hpp"

using namespace lmp;
using namespace lmp::testing;
using Catch::Approx;

namespace {

// LR(pi) = min(pi, 2 - pi), maximized at pi = 1 with value 1.
DualOracle tent_oracle() {
  DualOracle o;
  o.sense = Sense::minimize;
  o.sign = {SignPolicy::free};
  o.evaluate = [](const Vector& pi) {
    LrResult r;
    const double left = pi[0], right = 2.0 - pi[0];
    r.value = std::min(left, right);
    r.supergradient = Vector::Constant(1, left < right ? 1.0 : -1.0);
    return r;
  };
  return o;
}

}  // namespace

TEST_CASE("subgradient on the tent function", "[dual]") {
  StopRule stop;
  stop.max_calls = 201;
  const SolveTrace tr = subgradient_solve(tent_oracle(), Vector::Zero(1), stop);
  CHECK(tr.best_value == Approx(1.0).margin(1e-2));
  CHECK(std::abs(tr.best_pi[0] - 1.0) <= 1e-2);
  // best value never degrades
  double best = tr.records.front().value;
  for (const TraceRecord& r : tr.records) best = std::max(best, r.value);
  CHECK(best == tr.best_value);
}

TEST_CASE("bundle needs fewer calls than subgradient on the tent function", "[dual]") {
  StopRule stop;
  stop.max_calls = 1000;
  stop.reference = 1.0;
  stop.epsilon = 1e-4;
  stop.relative = false;
  // From 0 both methods land on the kink with their first step; start
  // off-center so the comparison means something.
  const Vector start = Vector::Constant(1, 0.3);
  const SolveTrace b = bundle_solve(tent_oracle(), start, stop);
  const SolveTrace s = subgradient_solve(tent_oracle(), start, stop);
  CHECK(b.reason == "epsilon");
  CHECK(b.best_value >= 1.0 - 1e-4);
  CHECK(b.calls < s.calls);
}

TEST_CASE("starting within epsilon stops before any master solve", "[dual]") {
  StopRule stop;
  stop.reference = 1.0;
  stop.epsilon = 1e-6;
  const SolveTrace b = bundle_solve(tent_oracle(), Vector::Ones(1), stop);
  CHECK(b.calls == 1);
  CHECK(b.master_solves == 0);
  CHECK(b.reason == "epsilon");
}

TEST_CASE("master problem special cases", "[dual][master]") {
  const std::vector<SignPolicy> free2(2, SignPolicy::free);
  const Vector center{{1.0, -1.0}};
  const Vector g{{0.5, 2.0}};
  const MasterSolution one = solve_master({{center, 3.0, g}}, center, 2.0, free2);
  CHECK(one.alpha[0] == Approx(1.0));
  CHECK((one.trial - (center + 2.0 * g)).norm() < 1e-12);

  const MasterSolution two =
      solve_master({{center, 3.0, g}, {center, 3.0, -g}}, center, 2.0, free2);
  CHECK((two.trial - center).norm() < 1e-7);
  CHECK(two.alpha.sum() == Approx(1.0));
}

TEST_CASE("master dual matches a grid search over the weight simplex", "[dual][master][property]") {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int trial = 0; trial < 12; ++trial) {
    const int n = 3;
    std::vector<SignPolicy> sign(n, trial % 2 ? SignPolicy::nonnegative : SignPolicy::free);
    Vector center(n);
    for (auto& v : center) v = trial % 2 ? std::abs(noise(rng)) : noise(rng);
    std::vector<Cut> cuts;
    for (int j = 0; j < 3; ++j) {
      Cut c;
      c.point = center + Vector::NullaryExpr(n, [&] { return noise(rng); });
      if (trial % 2) c.point = c.point.cwiseAbs();
      c.slope = Vector::NullaryExpr(n, [&] { return 2.0 * noise(rng); });
      c.value = noise(rng);
      cuts.push_back(c);
    }
    const double t = 0.5 + trial % 3;
    const MasterSolution ms = solve_master(cuts, center, t, sign);
    double grid = kInfinity;
    const int steps = 1000;
    for (int i = 0; i <= steps; ++i)
      for (int k = 0; i + k <= steps; ++k) {
        const Vector alpha{{i / 1000.0, k / 1000.0, (steps - i - k) / 1000.0}};
        grid = std::min(grid, master_dual_value(cuts, center, t, sign, alpha));
      }
    INFO("trial " << trial);
    CHECK(ms.dual_value == Approx(grid).margin(1e-5));
    CHECK(ms.dual_value <= grid + 1e-9);
    CHECK((ms.alpha.array() >= 0.0).all());
    CHECK(ms.alpha.sum() == Approx(1.0));
    for (Eigen::Index i = 0; i < n; ++i)
      if (sign[i] == SignPolicy::nonnegative) CHECK(ms.trial[i] >= 0.0);
    // the cutting-plane model at the trial point is the dual optimum plus
    // the proximal term (strong duality of the master)
    CHECK(ms.model_value - (ms.trial - center).squaredNorm() / (2.0 * t) ==
          Approx(ms.dual_value).margin(1e-6));
  }
}

TEST_CASE("iterates respect the sign policy", "[dual]") {
  std::mt19937_64 rng(31);
  const Problem ga = make_problem(random_ga(rng, 3, 10));
  DualOracle o = make_oracle(ga);
  double lowest = 0.0;
  const auto inner = o.evaluate;
  o.evaluate = [&](const Vector& pi) {
    lowest = std::min(lowest, pi.minCoeff());
    return inner(pi);
  };
  StopRule stop;
  stop.max_calls = 200;
  subgradient_solve(o, Vector::Zero(10), stop);
  bundle_solve(o, Vector::Zero(10), stop);
  CHECK(lowest == 0.0);
}

TEST_CASE("solvers agree on small instances", "[dual][property]") {
  std::mt19937_64 rng(37);
  for (int t = 0; t < 3; ++t) {
    const Problem mc = make_problem(random_mc(rng, 6, 14, 4));
    const DualOracle o = make_oracle(mc);
    StopRule stop;
    stop.max_calls = 3000;
    const SolveTrace b = bundle_solve(o, Vector::Zero(o.dimension()), stop);
    stop.max_calls = 20000;
    const SolveTrace s = subgradient_solve(o, Vector::Zero(o.dimension()), stop);
    INFO("instance " << t << " bundle " << b.best_value << " (" << b.calls
                     << " calls) subgradient " << s.best_value);
    CHECK(std::abs(b.best_value - s.best_value) <= 1e-3 * (1.0 + std::abs(b.best_value)));
  }
}

TEST_CASE("serious steps improve by a fraction of the predicted ascent", "[dual]") {
  std::mt19937_64 rng(41);
  const Problem mc = make_problem(random_mc(rng, 6, 14, 4));
  const DualOracle o = make_oracle(mc);
  StopRule stop;
  stop.max_calls = 300;
  const SolveTrace b = bundle_solve(o, Vector::Zero(o.dimension()), stop);
  double center = b.records.front().value;
  int serious = 0;
  for (size_t i = 1; i < b.records.size(); ++i) {
    const TraceRecord& r = b.records[i];
    CHECK(r.predicted >= 0.0);
    if (!r.serious) {
      CHECK(r.value - center < 0.1 * r.predicted);
      continue;
    }
    CHECK(r.value - center >= 0.1 * r.predicted);
    center = r.value;
    ++serious;
  }
  CHECK(serious > 0);
  // no recorded value exceeds the dual optimum
  const ReferenceSolution ref = compute_reference(mc, 3000);
  for (const TraceRecord& r : b.records) CHECK(r.value <= ref.value + 1e-7);
}

TEST_CASE("reference multipliers dominate the continuous relaxation", "[dual]") {
  std::mt19937_64 rng(43);
  for (int t = 0; t < 3; ++t) {
    const Problem mc = make_problem(random_mc(rng, 6, 12, 3));
    const LpSolution cr = solve_cr(mc.milp);
    const ReferenceSolution ref = compute_reference(mc);
    CHECK(ref.value >= cr.objective - 1e-6);
    const ExactSolution opt = brute_force_opt(mc.milp);
    CHECK(ref.value <= opt.value + 1e-7);
    const ReferenceSolution more = compute_reference(mc, 6000);
    CHECK(more.value >= ref.value - 1e-9 * (1.0 + std::abs(ref.value)));

    const Problem ga = make_problem(random_ga(rng, 3, 9));
    const ReferenceSolution gref = compute_reference(ga);
    const double at_zero = evaluate_lr(ga, Vector::Zero(9)).value;
    CHECK(gref.value <= at_zero + 1e-9);
    CHECK(gref.value >= brute_force_opt(ga.milp).value - 1e-7);
  }
}

TEST_CASE("warm-start benchmark layout", "[dual]") {
  std::mt19937_64 rng(47);
  std::vector<Problem> problems;
  for (int i = 0; i < 3; ++i) problems.push_back(make_problem(random_mc(rng, 6, 12, 3)));
  std::vector<BenchInstance> instances;
  InitSet zero{"zero", {}}, opt{"optimal", {}};
  for (const Problem& p : problems) {
    const ReferenceSolution ref = compute_reference(p);
    instances.push_back({&p, ref.value});
    zero.starts.push_back(Vector::Zero(p.milp.num_dualized()));
    opt.starts.push_back(ref.pi);
  }
  StopRule budget;
  budget.max_calls = 500;
  const std::vector<double> eps{1e-1, 1e-2, 1e-3};
  const auto rows =
      warmstart_bench(instances, {zero, opt}, DualMethod::bundle, eps, budget, 2);
  REQUIRE(rows.size() == eps.size() * 2);
  for (const BenchRow& r : rows) {
    if (r.init == "optimal") {
      CHECK(r.iter_mean == 0.0);
      CHECK(r.reached == 3);
    }
  }
  const auto dir = temp_dir("bench");
  save_bench_csv(rows, dir / "bench.csv");
  CHECK(std::filesystem::exists(dir / "bench.csv"));
  CHECK(std::filesystem::exists(dir / "bench.timing.csv"));
  std::ifstream in(dir / "bench.csv");
  std::string header;
  std::getline(in, header);
  CHECK(header == "eps,init,iter_mean,iter_std,reached,instances");
}
