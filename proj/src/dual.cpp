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

#include "lmp/dual.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <thread>

#include "lmp/io.hpp"
#include "lmp/lp.hpp"

namespace lmp {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point start) {
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

std::filesystem::path timing_path(const std::filesystem::path& path) {
  return path.parent_path() / (path.stem().string() + ".timing.csv");
}

// Shared bookkeeping of both solvers: evaluation, best value, trace and the
// stopping tests that apply after every oracle call.
class Run {
 public:
  Run(const DualOracle& oracle, const StopRule& stop)
      : oracle_(oracle), stop_(stop), start_(Clock::now()) {
    if (stop.max_calls < 1) throw ParameterError("max_calls must be >= 1");
  }

  LrResult evaluate(const Vector& pi, int iteration, double step) {
    LrResult r = oracle_.evaluate(pi);
    ++trace_.calls;
    if (!std::isfinite(r.value))
      throw NumericalError("oracle returned a non-finite value at iteration " +
                           std::to_string(iteration));
    if (trace_.records.empty() ||
        oracle_.ascent() * r.value > oracle_.ascent() * trace_.best_value) {
      trace_.best_value = r.value;
      trace_.best_pi = pi;
    }
    trace_.records.push_back(
        {iteration, r.value, step, r.supergradient.norm(), ms_since(start_)});
    return r;
  }

  // Returns true and sets the reason when the run must end.
  bool done() {
    if (stop_.reference &&
        dual_gap(oracle_, *stop_.reference, trace_.best_value, stop_.relative) <=
            stop_.epsilon) {
      trace_.reason = "epsilon";
      return true;
    }
    if (trace_.calls >= stop_.max_calls) {
      trace_.reason = "max_calls";
      return true;
    }
    if (stop_.time_limit > 0.0 && ms_since(start_) >= 1000.0 * stop_.time_limit) {
      trace_.reason = "time_limit";
      return true;
    }
    return false;
  }

  SolveTrace& trace() { return trace_; }

 private:
  const DualOracle& oracle_;
  const StopRule& stop_;
  Clock::time_point start_;
  SolveTrace trace_;
};

void check_start(const DualOracle& oracle, const Vector& pi0) {
  if (pi0.size() != oracle.dimension())
    throw ParameterError("starting point has " + std::to_string(pi0.size()) +
                         " entries, expected " + std::to_string(oracle.dimension()));
  Multipliers{pi0, oracle.sign}.validate();
}

// True when the supergradient certifies optimality over the sign orthant.
bool stationary(const Vector& ascent_g, const Vector& pi,
                const std::vector<SignPolicy>& sign) {
  for (Eigen::Index i = 0; i < pi.size(); ++i) {
    if (ascent_g[i] == 0.0) continue;
    if (sign[i] == SignPolicy::nonnegative && pi[i] == 0.0 && ascent_g[i] < 0.0)
      continue;
    return false;
  }
  return true;
}

Vector project(const Vector& v, const std::vector<SignPolicy>& sign) {
  return project_sign(v, sign);
}

}  // namespace

DualOracle make_oracle(const Problem& problem) {
  DualOracle o;
  o.sense = problem.milp.sense;
  o.sign = sign_policy(problem.milp);
  const Problem* p = &problem;
  o.evaluate = [p](const Vector& pi) { return evaluate_lr(*p, pi); };
  return o;
}

double dual_gap(const DualOracle& oracle, double reference, double value,
                bool relative) {
  const double d = oracle.ascent() * (reference - value);
  return relative ? d / (1.0 + std::abs(reference)) : d;
}

void SolveTrace::save_csv(const std::filesystem::path& path) const {
  CsvWriter main({"iteration", "value", "step", "gnorm"});
  CsvWriter timing({"iteration", "elapsed_ms"});
  for (const TraceRecord& r : records) {
    main.row({std::to_string(r.iteration), format_double(r.value),
              format_double(r.step), format_double(r.gnorm)});
    timing.row({std::to_string(r.iteration), format_double(r.elapsed_ms)});
  }
  main.save(path);
  timing.save(timing_path(path));
}

SolveTrace subgradient_solve(const DualOracle& oracle, const Vector& pi0,
                             const StopRule& stop, const SubgradientOptions& options) {
  check_start(oracle, pi0);
  Run run(oracle, stop);
  Vector pi = pi0;
  LrResult r = run.evaluate(pi, 0, 0.0);
  double previous = r.value;
  int worse = 0;
  for (int iteration = 1;; ++iteration) {
    if (run.done()) break;
    const Vector g = oracle.ascent() * r.supergradient;
    if (stationary(g, pi, oracle.sign)) {
      run.trace().reason = "stationary";
      break;
    }
    const double step = 1.0 / (1.0 + worse);
    const double scale = options.normalize ? g.norm() : 1.0;
    pi = project(pi + (step / scale) * g, oracle.sign);
    r = run.evaluate(pi, iteration, step);
    if (oracle.ascent() * r.value < oracle.ascent() * previous) ++worse;
    previous = r.value;
  }
  return std::move(run.trace());
}

double master_dual_value(const std::vector<Cut>& cuts, const Vector& center,
                         double t, const std::vector<SignPolicy>& sign,
                         const Vector& alpha) {
  Vector u = Vector::Zero(center.size());
  double linear = 0.0;
  for (size_t j = 0; j < cuts.size(); ++j) {
    u += alpha[j] * cuts[j].slope;
    linear += alpha[j] * (cuts[j].value - cuts[j].slope.dot(cuts[j].point));
  }
  const Vector pi = project(center + t * u, sign);
  return linear + u.dot(pi) - (pi - center).squaredNorm() / (2.0 * t);
}

MasterSolution solve_master(const std::vector<Cut>& cuts, const Vector& center,
                            double t, const std::vector<SignPolicy>& sign,
                            double gap_tol, int max_iterations) {
  const auto m = static_cast<Eigen::Index>(cuts.size());
  if (m == 0) throw ParameterError("master problem needs at least one cut");
  const Eigen::Index n = center.size();
  Matrix g(n, m);
  Vector a(m);
  double scale = 1.0;
  for (Eigen::Index j = 0; j < m; ++j) {
    g.col(j) = cuts[j].slope;
    a[j] = cuts[j].value - cuts[j].slope.dot(cuts[j].point);
    scale = std::max(scale, 1.0 + std::abs(cuts[j].value));
  }
  bool constrained = false;
  for (SignPolicy s : sign) constrained = constrained || s == SignPolicy::nonnegative;

  MasterSolution out;
  // start at the cut with the smallest value at the center
  Vector pi = center;
  Vector grad = a + g.transpose() * pi;
  Eigen::Index start = 0;
  grad.minCoeff(&start);
  out.alpha = Vector::Zero(m);
  out.alpha[start] = 1.0;
  Vector u = g.col(start);

  for (int it = 0;; ++it) {
    pi = project(center + t * u, sign);
    grad = a + g.transpose() * pi;
    Eigen::Index s = 0;
    const double best = grad.minCoeff(&s);
    const double at_alpha = grad.dot(out.alpha);
    out.fw_gap = at_alpha - best;
    out.iterations = it;
    if (out.fw_gap <= gap_tol * scale) break;
    if (it >= max_iterations) {
      out.capped = true;
      break;
    }
    // away vertex: largest gradient among active weights
    Eigen::Index v = -1;
    for (Eigen::Index j = 0; j < m; ++j)
      if (out.alpha[j] > 0.0 && (v < 0 || grad[j] > grad[v])) v = j;

    Vector d;
    double gamma_max = 1.0;
    if (at_alpha - best >= grad[v] - at_alpha || out.alpha[v] >= 1.0) {
      d = -out.alpha;
      d[s] += 1.0;
    } else {
      d = out.alpha;
      d[v] -= 1.0;
      gamma_max = out.alpha[v] / (1.0 - out.alpha[v]);
    }
    const Vector gd = g * d;
    const double ad = a.dot(d);
    // derivative of the dual objective along d; nondecreasing in gamma
    auto slope = [&](double gamma) {
      return ad + gd.dot(project(center + t * (u + gamma * gd), sign));
    };
    double gamma = 0.0;
    if (!constrained) {
      const double curv = t * gd.squaredNorm();
      const double s0 = ad + gd.dot(center + t * u);
      gamma = curv > 0.0 ? std::clamp(-s0 / curv, 0.0, gamma_max)
                         : (s0 < 0.0 ? gamma_max : 0.0);
    } else if (slope(gamma_max) <= 0.0) {
      gamma = gamma_max;
    } else {
      double lo = 0.0, hi = gamma_max;
      for (int b = 0; b < 60 && hi - lo > 1e-15 * gamma_max; ++b) {
        const double mid = 0.5 * (lo + hi);
        (slope(mid) > 0.0 ? hi : lo) = mid;
      }
      gamma = 0.5 * (lo + hi);
    }
    if (gamma <= 0.0) {
      // no progress possible along the chosen direction; treat as converged
      break;
    }
    out.alpha += gamma * d;
    out.alpha = out.alpha.cwiseMax(0.0);
    out.alpha /= out.alpha.sum();
    u = g * out.alpha;
  }
  out.trial = project(center + t * u, sign);
  const Vector at_trial = a + g.transpose() * out.trial;
  out.model_value = at_trial.minCoeff();
  out.dual_value = out.alpha.dot(a) + u.dot(out.trial) -
                   (out.trial - center).squaredNorm() / (2.0 * t);
  return out;
}

SolveTrace bundle_solve(const DualOracle& oracle, const Vector& pi0,
                        const StopRule& stop, const BundleOptions& options) {
  check_start(oracle, pi0);
  const double s = oracle.ascent();
  Run run(oracle, stop);
  Vector center = pi0;
  LrResult r = run.evaluate(center, 0, 0.0);
  double center_value = s * r.value;
  std::vector<Cut> cuts{{center, center_value, s * r.supergradient}};
  double t = options.t_initial;
  int serious = 0, null = 0;

  for (int iteration = 1;; ++iteration) {
    if (run.done()) break;
    // the master must be solved more accurately than the stopping test
    const double gap_tol = std::min(options.master_gap, 0.01 * stop.tolerance);
    const MasterSolution master = solve_master(cuts, center, t, oracle.sign,
                                               gap_tol, options.master_iterations);
    ++run.trace().master_solves;
    if (master.capped) ++run.trace().master_warnings;
    const double predicted = master.model_value - center_value;
    // Stop on the aggregate linearization error at the center plus the
    // squared aggregate direction; unlike the predicted ascent this does
    // not vanish merely because t has become small.
    double aggregate_error = -center_value;
    for (size_t j = 0; j < cuts.size(); ++j)
      aggregate_error += master.alpha[j] *
                         (cuts[j].value + cuts[j].slope.dot(center - cuts[j].point));
    const double direction = (master.trial - center).squaredNorm() / (t * t);
    const double measure = std::max(aggregate_error, 0.0) +
                           std::max(t, options.t_initial) * direction;
    if (measure <= stop.tolerance * (1.0 + std::abs(center_value))) {
      run.trace().reason = "converged";
      break;
    }

    r = run.evaluate(master.trial, iteration, t);
    const double value = s * r.value;
    if (static_cast<int>(cuts.size()) >= options.max_cuts) {
      Eigen::Index worst = 0;
      master.alpha.minCoeff(&worst);
      cuts.erase(cuts.begin() + worst);
    }
    cuts.push_back({master.trial, value, s * r.supergradient});

    run.trace().records.back().predicted = predicted;
    if (value - center_value >= options.kappa * predicted) {
      run.trace().records.back().serious = true;
      center = master.trial;
      center_value = value;
      null = 0;
      if (++serious >= options.serious_to_grow) {
        t = std::min(2.0 * t, options.t_max);
        serious = 0;
      }
    } else {
      serious = 0;
      if (++null >= options.null_to_shrink) {
        t = std::max(0.5 * t, options.t_min);
        null = 0;
      }
    }
  }
  return std::move(run.trace());
}

std::string_view to_string(DualMethod m) {
  return m == DualMethod::bundle ? "bundle" : "subgradient";
}

DualMethod parse_dual_method(std::string_view s) {
  if (s == "bundle") return DualMethod::bundle;
  if (s == "subgradient") return DualMethod::subgradient;
  throw ParameterError("unknown dual method '" + std::string(s) +
                       "' (expected bundle or subgradient)");
}

SolveTrace dual_solve(DualMethod method, const DualOracle& oracle,
                      const Vector& pi0, const StopRule& stop,
                      const BundleOptions& options) {
  return method == DualMethod::bundle ? bundle_solve(oracle, pi0, stop, options)
                                      : subgradient_solve(oracle, pi0, stop, {});
}

ReferenceSolution compute_reference(const Problem& problem, int max_calls,
                                    double tolerance) {
  const DualOracle oracle = make_oracle(problem);
  Vector start = Vector::Zero(oracle.dimension());
  const LpSolution cr = solve_cr(problem.milp);
  int calls = 0;
  if (cr.status == LpStatus::optimal) {
    const Vector lambda =
        project_sign(cr.row_duals.head(oracle.dimension()), oracle.sign);
    const double at_zero = oracle.evaluate(start).value;
    const double at_cr = oracle.evaluate(lambda).value;
    calls += 2;
    if (oracle.ascent() * at_cr > oracle.ascent() * at_zero) start = lambda;
  }
  StopRule stop;
  stop.max_calls = max_calls;
  stop.tolerance = tolerance;
  const SolveTrace trace = bundle_solve(oracle, start, stop);
  ReferenceSolution out;
  out.pi = trace.best_pi;
  out.value = trace.best_value;
  out.calls = calls + trace.calls;
  out.provenance = trace.reason == "converged" ? "in-repo bundle" : "budget-capped";
  return out;
}

std::vector<BenchRow> warmstart_bench(const std::vector<BenchInstance>& instances,
                                      const std::vector<InitSet>& inits,
                                      DualMethod method,
                                      const std::vector<double>& epsilons,
                                      const StopRule& budget, int threads) {
  if (epsilons.empty()) throw ParameterError("epsilon list is empty");
  for (const InitSet& init : inits)
    if (init.starts.size() != instances.size())
      throw ParameterError("init '" + init.name + "' has " +
                           std::to_string(init.starts.size()) +
                           " starting points for " +
                           std::to_string(instances.size()) + " instances");
  const double finest = *std::min_element(epsilons.begin(), epsilons.end());
  const size_t ne = epsilons.size();

  // per job: iterations and seconds for every threshold, plus reached flags
  struct JobResult {
    std::vector<double> iterations, seconds;
    std::vector<bool> reached;
  };
  const size_t jobs = instances.size() * inits.size();
  std::vector<JobResult> results(jobs);
  std::atomic<size_t> next{0};
  auto worker = [&]() {
    for (size_t job = next++; job < jobs; job = next++) {
      const size_t inst = job / inits.size();
      const size_t init = job % inits.size();
      const DualOracle oracle = make_oracle(*instances[inst].problem);
      StopRule stop = budget;
      stop.reference = instances[inst].reference;
      stop.epsilon = finest;
      const SolveTrace trace =
          dual_solve(method, oracle, inits[init].starts[inst], stop);
      JobResult& out = results[job];
      out.iterations.assign(ne, trace.records.back().iteration);
      out.seconds.assign(ne, trace.records.back().elapsed_ms / 1000.0);
      out.reached.assign(ne, false);
      double best = trace.records.front().value;
      for (const TraceRecord& rec : trace.records) {
        if (oracle.ascent() * rec.value > oracle.ascent() * best) best = rec.value;
        const double gap =
            dual_gap(oracle, instances[inst].reference, best, stop.relative);
        for (size_t e = 0; e < ne; ++e) {
          if (out.reached[e] || gap > epsilons[e]) continue;
          out.reached[e] = true;
          out.iterations[e] = rec.iteration;
          out.seconds[e] = rec.elapsed_ms / 1000.0;
        }
      }
    }
  };
  const int nthreads = std::max(1, std::min<int>(threads, static_cast<int>(jobs)));
  std::vector<std::thread> pool;
  for (int i = 1; i < nthreads; ++i) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  auto mean_std = [](const std::vector<double>& v) {
    const double n = static_cast<double>(v.size());
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= n;
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    return std::pair{mean, v.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
  };

  std::vector<BenchRow> rows;
  for (size_t e = 0; e < ne; ++e) {
    for (size_t init = 0; init < inits.size(); ++init) {
      BenchRow row;
      row.epsilon = epsilons[e];
      row.init = inits[init].name;
      row.instances = static_cast<int>(instances.size());
      std::vector<double> iters, secs;
      for (size_t inst = 0; inst < instances.size(); ++inst) {
        const JobResult& jr = results[inst * inits.size() + init];
        iters.push_back(jr.iterations[e]);
        secs.push_back(jr.seconds[e]);
        if (jr.reached[e]) ++row.reached;
      }
      if (!iters.empty()) {
        std::tie(row.iter_mean, row.iter_std) = mean_std(iters);
        std::tie(row.time_mean, row.time_std) = mean_std(secs);
      }
      rows.push_back(row);
    }
  }
  return rows;
}

void save_bench_csv(const std::vector<BenchRow>& rows,
                    const std::filesystem::path& path) {
  CsvWriter main({"eps", "init", "iter_mean", "iter_std", "reached", "instances"});
  CsvWriter timing({"eps", "init", "time_mean", "time_std"});
  for (const BenchRow& r : rows) {
    main.row({format_double(r.epsilon), r.init, format_double(r.iter_mean),
              format_double(r.iter_std), std::to_string(r.reached),
              std::to_string(r.instances)});
    timing.row({format_double(r.epsilon), r.init, format_double(r.time_mean),
                format_double(r.time_std)});
  }
  main.save(path);
  timing.save(timing_path(path));
}

}  // namespace lmp
