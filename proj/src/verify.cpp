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

#include "lmp/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <random>
#include <sstream>

#include "lmp/brute_force.hpp"
#include "lmp/dual.hpp"
#include "lmp/io.hpp"
#include "lmp/lagrangian.hpp"
#include "lmp/learn.hpp"
#include "lmp/lp.hpp"
#include "lmp/neural/grad_check.hpp"

namespace lmp {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double scale(double v) { return std::max(1.0, std::abs(v)); }

// Multipliers of the magnitude of the objective coefficients, sign-projected.
Vector random_pi(const Problem& p, Rng& rng) {
  const double sd = 0.5 * p.milp.objective.cwiseAbs().maxCoeff() + 1.0;
  std::normal_distribution<double> n(0.0, sd);
  Vector pi(p.milp.num_dualized());
  for (auto& v : pi) v = n(rng);
  return project_sign(std::move(pi), sign_policy(p.milp));
}

// Worst value of a scalar across threads, with the case that produced it.
struct Worst {
  std::mutex mutex;
  double value = 0.0;
  std::string where;
  int failures = 0;

  void record(double v, bool fail, const std::string& at) {
    std::lock_guard lock(mutex);
    if (fail) ++failures;
    if (v > value) {
      value = v;
      where = at;
    }
  }
};

std::string fmt(double v) {
  std::ostringstream s;
  s.precision(3);
  s << v;
  return s.str();
}

}  // namespace

std::vector<Problem> tiny_family(int count, std::uint64_t seed) {
  const GenParams mc_preset = load_preset("tiny-mc");
  const GenParams ga_preset = load_preset("tiny-ga");
  std::vector<Problem> out;
  out.reserve(count);
  Rng rng(derive_seed(seed, "tiny-family"));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, "tiny/" + std::to_string(i));
    if (i % 2 == 0) {
      McGenParams p = std::get<McGenParams>(mc_preset.params);
      p.nodes = std::uniform_int_distribution<int>(4, 8)(rng);
      p.arcs = std::uniform_int_distribution<int>(p.nodes, std::min(24, p.nodes * (p.nodes - 1)))(rng);
      p.commodity_counts = {std::uniform_int_distribution<int>(1, 5)(rng)};
      out.push_back(make_problem(generate_mc(p, s)));
    } else {
      GaGenParams p = std::get<GaGenParams>(ga_preset.params);
      p.bins = std::uniform_int_distribution<int>(1, 3)(rng);
      p.items = std::uniform_int_distribution<int>(2, 12)(rng);
      out.push_back(make_problem(generate_ga(p, s)));
    }
  }
  return out;
}

std::vector<Problem> tiny_preset_family(int count, std::uint64_t seed) {
  const GenParams mc = load_preset("tiny-mc");
  const GenParams ga = load_preset("tiny-ga");
  std::vector<Problem> out;
  out.reserve(count);
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, "tiny-preset/" + std::to_string(i));
    if (i % 2 == 0) out.push_back(make_problem(generate_mc(std::get<McGenParams>(mc.params), s)));
    else out.push_back(make_problem(generate_ga(std::get<GaGenParams>(ga.params), s)));
  }
  return out;
}

CheckResult check_oracle_exactness(const std::vector<Problem>& problems, int pis_per_instance,
                                   std::uint64_t seed, int threads) {
  const auto t0 = Clock::now();
  Worst worst;
  parallel_for(problems.size(), threads, [&](std::size_t i) {
    const Problem& p = problems[i];
    Rng rng(derive_seed(seed, "oracle/" + std::to_string(i)));
    for (int k = 0; k < pis_per_instance; ++k) {
      const Vector pi = random_pi(p, rng);
      const double fast = evaluate_lr(p, pi).value;
      const double slow = lr_generic(p.milp, pi).value;
      const double rel = std::abs(fast - slow) / scale(slow);
      worst.record(rel, rel > 1e-8, "instance " + std::to_string(i));
    }
  });
  CheckResult r{"oracle exactness", worst.failures == 0, "", seconds_since(t0)};
  r.detail = std::to_string(problems.size() * pis_per_instance) + " evaluations, max rel error " +
             fmt(worst.value) + (worst.where.empty() ? "" : " (" + worst.where + ")");
  return r;
}

CheckResult check_weak_duality(const std::vector<Problem>& problems, int pis_per_instance,
                               std::uint64_t seed, int threads) {
  const auto t0 = Clock::now();
  Worst crossing;
  Worst geoffrion;
  std::mutex mutex;
  int infeasible = 0;
  parallel_for(problems.size(), threads, [&](std::size_t i) {
    const Problem& p = problems[i];
    const double s = sense_sign(p.milp.sense);
    const std::string at = "instance " + std::to_string(i);
    const ExactSolution opt = brute_force_opt(p.milp);
    if (!opt.feasible) {
      std::lock_guard lock(mutex);
      ++infeasible;
      return;
    }
    Rng rng(derive_seed(seed, "duality/" + std::to_string(i)));
    const ReferenceSolution ref = compute_reference(p);
    std::vector<double> values{ref.value};
    for (int k = 0; k < pis_per_instance; ++k) values.push_back(evaluate_lr(p, random_pi(p, rng)).value);
    for (double v : values) {
      // positive when the bound crosses the optimum
      const double excess = (s * (v - opt.value)) / scale(opt.value);
      crossing.record(excess, excess > 1e-8, at);
    }
    const LpSolution cr = solve_cr(p.milp);
    const double short_of_cr = s * (cr.objective - ref.value);
    geoffrion.record(short_of_cr, short_of_cr > 1e-6, at);
  });
  const bool pass = crossing.failures == 0 && geoffrion.failures == 0 && infeasible == 0;
  CheckResult r{"weak duality and continuous relaxation bound", pass, "", seconds_since(t0)};
  r.detail = "max crossing " + fmt(crossing.value) + " (scaled), reference short of CR by " +
             fmt(geoffrion.value) + ", " + std::to_string(crossing.failures + geoffrion.failures) +
             " violations, " + std::to_string(infeasible) + " infeasible";
  return r;
}

CheckResult check_concavity(const std::vector<Problem>& problems, int pairs, std::uint64_t seed) {
  const auto t0 = Clock::now();
  Rng rng(derive_seed(seed, "concavity"));
  std::uniform_int_distribution<std::size_t> pick(0, problems.size() - 1);
  double worst_sg = 0.0;
  double worst_mid = 0.0;
  int failures = 0;
  for (int k = 0; k < pairs; ++k) {
    const Problem& p = problems[pick(rng)];
    const double s = sense_sign(p.milp.sense);
    const Vector a = random_pi(p, rng);
    const Vector b = random_pi(p, rng);
    const LrResult la = evaluate_lr(p, a);
    const LrResult lb = evaluate_lr(p, b);
    const LrResult lm = evaluate_lr(p, 0.5 * (a + b));
    const double tol_scale = std::max({1.0, std::abs(la.value), std::abs(lb.value)});
    // s * L is concave in both senses
    const double sg = s * (lb.value - la.value - la.supergradient.dot(b - a)) / tol_scale;
    const double mid = s * (0.5 * (la.value + lb.value) - lm.value) / tol_scale;
    worst_sg = std::max(worst_sg, sg);
    worst_mid = std::max(worst_mid, mid);
    if (sg > 1e-9 || mid > 1e-9) ++failures;
  }
  CheckResult r{"concavity and supergradient", failures == 0, "", seconds_since(t0)};
  r.detail = std::to_string(pairs) + " pairs, worst supergradient excess " + fmt(worst_sg) +
             ", worst midpoint excess " + fmt(worst_mid);
  return r;
}

CheckResult check_lp(const std::vector<Problem>& problems, int random_lps, std::uint64_t seed) {
  const auto t0 = Clock::now();
  int kkt_fail = 0;
  double worst_duality = 0.0;
  for (const Problem& p : problems) {
    const LpSolution cr = solve_cr(p.milp);
    const KktReport k = verify_kkt(p.milp, cr, 1e-6);
    worst_duality = std::max(worst_duality, k.strong_duality.max_violation);
    if (cr.status != LpStatus::optimal || !k.ok()) ++kkt_fail;
  }
  Rng rng(derive_seed(seed, "random-lp"));
  int lp_fail = 0;
  int optimal = 0;
  double worst_rel = 0.0;
  for (int t = 0; t < random_lps; ++t) {
    const int n = 2 + t % 7;
    const int m = 1 + t % 4;
    const LpProblem lp = random_lp(rng, n, m);
    const std::optional<double> oracle = vertex_enumeration(lp);
    const LpSolution s = solve_lp(lp);
    if (!oracle) {
      if (s.status != LpStatus::infeasible) ++lp_fail;
      continue;
    }
    ++optimal;
    if (s.status != LpStatus::optimal) {
      ++lp_fail;
      continue;
    }
    const double rel = std::abs(s.objective - *oracle) / scale(*oracle);
    worst_rel = std::max(worst_rel, rel);
    if (rel > 1e-8 || !verify_kkt(lp, s, 1e-6).ok()) ++lp_fail;
  }
  CheckResult r{"LP correctness", kkt_fail == 0 && lp_fail == 0, "", seconds_since(t0)};
  r.detail = std::to_string(problems.size()) + " CR solves (" + std::to_string(kkt_fail) +
             " KKT failures, worst duality gap " + fmt(worst_duality) + "), " +
             std::to_string(random_lps) + " random LPs (" + std::to_string(optimal) +
             " feasible, " + std::to_string(lp_fail) + " mismatches, worst rel " +
             fmt(worst_rel) + ")";
  return r;
}

CheckResult check_gradients(const std::vector<std::uint64_t>& seeds) {
  const auto t0 = Clock::now();
  nn::ModelConfig gnn;
  gnn.hidden = 16;
  gnn.blocks = 2;
  gnn.embed = 24;
  gnn.mlp_width = 32;
  gnn.decoder_width = 24;
  nn::ModelConfig mlp;
  mlp.arch = nn::Architecture::mlp;
  mlp.in_features = kFlatFeatures;
  mlp.decoder_width = 32;
  double worst = 0.0;
  std::string where;
  int checked = 0;
  auto take = [&](const nn::GradCheckResult& g, std::uint64_t seed) {
    checked += g.checked;
    if (g.max_rel_error > worst) {
      worst = g.max_rel_error;
      where = g.name + " seed " + std::to_string(seed) + " " + g.worst;
    }
  };
  for (std::uint64_t seed : seeds) {
    for (const auto& g : nn::check_primitives(seed)) take(g, seed);
    take(nn::grad_check_model(gnn, seed), seed);
    take(nn::grad_check_model(mlp, seed), seed);
  }
  CheckResult r{"gradient fidelity", worst <= 1e-4, "", seconds_since(t0)};
  r.detail = std::to_string(checked) + " checks over " + std::to_string(seeds.size()) +
             " seeds, max rel error " + fmt(worst) + (where.empty() ? "" : " (" + where + ")");
  return r;
}

// subgradient iteration cap of the solver comparison
constexpr int kSubgradientBudget = 100000;

CheckResult check_dual_solvers(const std::vector<Problem>& problems, int threads) {
  const auto t0 = Clock::now();
  std::vector<int> bundle_calls(problems.size());
  std::vector<int> subgradient_calls(problems.size());
  std::vector<double> disagreement(problems.size());
  parallel_for(problems.size(), threads, [&](std::size_t i) {
    const Problem& p = problems[i];
    const DualOracle oracle = make_oracle(p);
    const ReferenceSolution ref = compute_reference(p);
    const Vector zero = Vector::Zero(oracle.dimension());
    StopRule stop;
    stop.reference = ref.value;
    stop.epsilon = 1e-4;
    stop.max_calls = 3000;
    const SolveTrace b = bundle_solve(oracle, zero, stop);
    stop.max_calls = kSubgradientBudget;
    const SolveTrace s = subgradient_solve(oracle, zero, stop);
    // calls to reach epsilon; one past the budget when never reached
    bundle_calls[i] = b.reason == "epsilon" ? b.calls : 3001;
    subgradient_calls[i] = s.reason == "epsilon" ? s.calls : kSubgradientBudget + 1;
    disagreement[i] = std::abs(b.best_value - s.best_value) / scale(b.best_value);
  });
  int wins = 0;
  int agree = 0;
  for (size_t i = 0; i < problems.size(); ++i) {
    if (bundle_calls[i] < subgradient_calls[i]) ++wins;
    if (disagreement[i] <= 1e-3) ++agree;
  }
  const double worst = problems.empty() ? 0.0 : *std::max_element(disagreement.begin(), disagreement.end());
  const bool pass = worst <= 1e-3 && wins >= 0.8 * static_cast<double>(problems.size());
  CheckResult r{"dual solver convergence", pass, "", seconds_since(t0)};
  r.detail = "agreement within 1e-3 on " + std::to_string(agree) + "/" +
             std::to_string(problems.size()) + " (max " + fmt(worst) + "), bundle faster on " + std::to_string(wins) +
             "/" + std::to_string(problems.size());
  return r;
}

std::vector<CheckResult> run_verify_suite(std::string_view suite, std::uint64_t seed, int threads) {
  const bool full = suite == "full";
  if (!full && suite != "quick") throw ParameterError("unknown verify suite '" + std::string(suite) + "'");
  const std::vector<Problem> family = tiny_family(full ? 200 : 40, seed);
  std::vector<CheckResult> out;
  out.push_back(check_oracle_exactness(family, full ? 50 : 10, seed, threads));
  out.push_back(check_weak_duality(family, full ? 50 : 10, seed, threads));
  out.push_back(check_concavity(family, full ? 1000 : 200, seed));
  out.push_back(check_lp(family, full ? 600 : 120, seed));
  out.push_back(check_gradients(full ? std::vector<std::uint64_t>{seed, seed + 1, seed + 2}
                                     : std::vector<std::uint64_t>{seed}));
  return out;
}

}  // namespace lmp
