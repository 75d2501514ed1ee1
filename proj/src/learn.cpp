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

#include "lmp/learn.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <mutex>
#include <numeric>
#include <thread>

namespace lmp {

namespace {

using Clock = std::chrono::steady_clock;
using nn::Tensor;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::filesystem::path sidecar(const std::filesystem::path& path) {
  return path.parent_path() / (path.stem().string() + ".timing.csv");
}

Tensor<float> column(const Vector& v) {
  Tensor<float> t(v.size(), 1);
  for (Eigen::Index i = 0; i < v.size(); ++i) t(i, 0) = static_cast<float>(v[i]);
  return t;
}

nn::DecodeOptions decode_options(const Ablation& a) { return {a.adds_lambda()}; }

bool uses_noise(const nn::ModelConfig& m, const Ablation& a) {
  return m.arch == nn::Architecture::gnn && !a.no_sample;
}

void check_inputs(const nn::ModelConfig& m, const Prepared& p) {
  if (m.arch == nn::Architecture::gnn && p.graph == nullptr)
    throw ParameterError("instance " + p.id + " was prepared for the flat model");
  if (m.arch == nn::Architecture::mlp && p.graph != nullptr)
    throw ParameterError("instance " + p.id + " was prepared for the graph model");
}

// Multipliers of one forward pass in eval mode.
Vector infer(const nn::ModelConfig& model, const nn::ParamMap<float>& params,
             const Ablation& ablation, const Prepared& inst, const Tensor<float>& eps) {
  nn::Tape<float> tape;
  const nn::Bound<float> bound = nn::bind_params(tape, params, false);
  const nn::Var pi = nn::forward(tape, bound, model, inst.input, nn::Mode::eval, nullptr, eps,
                                 decode_options(ablation));
  return tape.value(pi).col(0).cast<double>();
}

struct Scored {
  EvalRow row;
  Vector pi;
};

// Best of the configured number of draws for instance `index`.
Scored score_model(const nn::Checkpoint& ck, const Ablation& ablation, const Prepared& inst,
                   std::size_t index, const EvalOptions& o) {
  check_inputs(ck.model, inst);
  Rng rng(derive_seed(o.seed, "eval/" + std::to_string(index)));
  const bool noisy = uses_noise(ck.model, ablation);
  const int samples = noisy && !ablation.no_max ? std::max(1, o.samples) : 1;
  const double ascent = sense_sign(inst.problem->milp.sense);
  Scored out;
  out.row.instance = inst.id;
  out.row.method = o.method;
  out.row.cr_ms = inst.cr_ms;
  bool have = false;
  for (int s = 0; s < samples; ++s) {
    const Tensor<float> eps =
        noisy ? nn::draw_noise<float>(inst.input.lambda.rows(), ck.model, rng) : Tensor<float>();
    auto t0 = Clock::now();
    Vector pi = infer(ck.model, ck.params, ablation, inst, eps);
    out.row.forward_ms += ms_since(t0);
    t0 = Clock::now();
    const double value = evaluate_lr(*inst.problem, pi).value;
    out.row.oracle_ms += ms_since(t0);
    if (!have || ascent * value > ascent * out.row.bound) {
      out.row.bound = value;
      out.pi = std::move(pi);
      have = true;
    }
  }
  out.row.time_ms = out.row.cr_ms + out.row.forward_ms + out.row.oracle_ms;
  return out;
}

void fill_gap(std::vector<EvalRow>& rows, const std::vector<double>& reference) {
  if (reference.size() != rows.size())
    throw ParameterError("expected one reference value per instance");
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].reference = reference[i];
    rows[i].gap = gap(rows[i].bound, reference[i]);
  }
}

}  // namespace

// ---- configuration -------------------------------------------------------

std::string Ablation::label() const {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += "+";
    s += name;
  };
  add(no_max, "-max");
  add(no_sum, "-sum");
  add(no_cr, "-cr");
  add(no_sample, "-sample");
  return s.empty() ? "ours" : s;
}

Ablation Ablation::parse(std::string_view s) {
  Ablation a;
  if (s == "ours" || s.empty()) return a;
  size_t start = 0;
  while (start <= s.size()) {
    const size_t end = std::min(s.find('+', start), s.size());
    const std::string_view part = s.substr(start, end - start);
    if (part == "-max") a.no_max = true;
    else if (part == "-sum") a.no_sum = true;
    else if (part == "-cr") a.no_cr = true;
    else if (part == "-sample") a.no_sample = true;
    else throw ParameterError("unknown ablation '" + std::string(part) + "'");
    start = end + 1;
  }
  return a;
}

void TrainConfig::validate() const {
  model.validate();
  if (batch_size < 1) throw ParameterError("train.batch_size must be at least 1");
  if (epochs < 0) throw ParameterError("train.epochs must be nonnegative");
  if (eval_samples < 1) throw ParameterError("train.eval_samples must be at least 1");
  if (!(optimizer.lr > 0.0)) throw ParameterError("optimizer.lr must be positive");
  if (time_limit < 0.0) throw ParameterError("train.time_limit must be nonnegative");
}

Json TrainConfig::to_json() const {
  return {{"model", nn::to_json(model)},
          {"optimizer",
           {{"lr", optimizer.lr},
            {"beta1", optimizer.beta1},
            {"beta2", optimizer.beta2},
            {"eps", optimizer.eps},
            {"clip_norm", optimizer.clip_norm},
            {"decay", optimizer.decay},
            {"decay_every", optimizer.decay_every},
            {"min_lr", optimizer.min_lr}}},
          {"batch_size", batch_size},
          {"epochs", epochs},
          {"seed", seed},
          {"ablation", ablation.label()},
          {"eval_samples", eval_samples},
          {"time_limit", time_limit}};
}

TrainConfig TrainConfig::from_json(const Json& j) {
  TrainConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "model") {
      c.model = nn::model_config_from_json(v);
    } else if (key == "optimizer") {
      for (const auto& [k, x] : v.items()) {
        if (k == "lr") c.optimizer.lr = x.get<double>();
        else if (k == "beta1") c.optimizer.beta1 = x.get<double>();
        else if (k == "beta2") c.optimizer.beta2 = x.get<double>();
        else if (k == "eps") c.optimizer.eps = x.get<double>();
        else if (k == "clip_norm") c.optimizer.clip_norm = x.get<double>();
        else if (k == "decay") c.optimizer.decay = x.get<double>();
        else if (k == "decay_every") c.optimizer.decay_every = x.get<long>();
        else if (k == "min_lr") c.optimizer.min_lr = x.get<double>();
        else throw ParameterError("unknown optimizer key '" + k + "'");
      }
    } else if (key == "batch_size") c.batch_size = v.get<int>();
    else if (key == "epochs") c.epochs = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "ablation") c.ablation = Ablation::parse(v.get<std::string>());
    else if (key == "eval_samples") c.eval_samples = v.get<int>();
    else if (key == "time_limit") c.time_limit = v.get<double>();
    else throw ParameterError("unknown train key '" + key + "'");
  }
  c.validate();
  return c;
}

// ---- data ----------------------------------------------------------------

Matrix standardize_columns(const Matrix& m) {
  Matrix out = m;
  if (m.rows() == 0) return out;
  for (Eigen::Index c = 0; c < m.cols(); ++c) {
    auto col = out.col(c);
    col.array() -= col.mean();
    const double sd = std::sqrt(col.squaredNorm() / static_cast<double>(m.rows()));
    if (sd > 1e-12) col /= sd;
  }
  return out;
}

Prepared prepare_instance(std::string id, std::shared_ptr<const Problem> problem,
                          const std::optional<LpSolution>& cached_cr, nn::Architecture arch,
                          bool use_cr) {
  if (!problem) throw ParameterError("prepare_instance: no problem");
  Prepared p;
  p.id = std::move(id);
  p.problem = problem;
  const MilpInstance& milp = problem->milp;
  LpSolution cr;
  if (use_cr) {
    if (cached_cr) {
      cr = *cached_cr;
    } else {
      const auto t0 = Clock::now();
      cr = solve_cr(milp);
      p.cr_ms = ms_since(t0);
    }
    if (cr.status != LpStatus::optimal)
      throw DataError("continuous relaxation of " + p.id + " is not optimal");
    p.cr_objective = cr.objective;
  }
  p.lambda = cr_multipliers(milp, cr, use_cr);
  p.input.lambda = column(p.lambda);
  const std::vector<SignPolicy> sign = sign_policy(milp);
  p.input.softplus_rows.resize(sign.size());
  for (size_t i = 0; i < sign.size(); ++i)
    p.input.softplus_rows[i] = sign[i] == SignPolicy::nonnegative;

  if (arch == nn::Architecture::gnn) {
    auto graph = std::make_shared<BipartiteGraph>(build_graph(milp));
    p.input.features =
        standardize_features(init_features(milp, cr, use_cr), graph->num_vars).cast<float>();
    p.input.dualized_nodes = graph->dualized_nodes();
    p.input.adjacency = &graph->adjacency_f;
    p.graph = std::move(graph);
  } else {
    p.input.features = standardize_columns(flat_features(milp, cr, use_cr)).cast<float>();
  }
  return p;
}

double gap(double bound, double reference) {
  if (reference == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 100.0 * std::abs(reference - bound) / std::abs(reference);
}

double mean_gap(const std::vector<EvalRow>& rows) {
  double sum = 0.0;
  int n = 0;
  for (const EvalRow& r : rows)
    if (std::isfinite(r.gap)) {
      sum += r.gap;
      ++n;
    }
  return n ? sum / n : std::numeric_limits<double>::quiet_NaN();
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(n)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (int w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (std::thread& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

// ---- training ------------------------------------------------------------

TrainResult train(const TrainConfig& config, const std::vector<Prepared>& train_set,
                  const std::vector<Prepared>& validation_set,
                  const std::vector<double>& validation_reference) {
  config.validate();
  if (train_set.empty()) throw ParameterError("train: empty training set");
  if (validation_reference.size() != validation_set.size())
    throw ParameterError("train: one reference value per validation instance expected");
  for (const Prepared& p : train_set) check_inputs(config.model, p);
  for (const Prepared& p : validation_set) check_inputs(config.model, p);

  TrainResult result;
  nn::Checkpoint current;
  current.model = config.model;
  current.hyper = config.to_json();
  current.seed = config.seed;
  current.params = nn::init_params(config.model, derive_seed(config.seed, "init"));

  Rng shuffle_rng(derive_seed(config.seed, "shuffle"));
  Rng dropout_rng(derive_seed(config.seed, "dropout"));
  Rng noise_rng(derive_seed(config.seed, "latent"));
  const nn::DecodeOptions decode = decode_options(config.ablation);
  const bool noisy = uses_noise(config.model, config.ablation);
  const auto start = Clock::now();
  auto out_of_time = [&] {
    return config.time_limit > 0.0 && ms_since(start) > 1000.0 * config.time_limit;
  };

  auto validate_epoch = [&]() {
    EvalOptions o;
    o.samples = 1;
    std::vector<EvalRow> rows(validation_set.size());
    for (size_t i = 0; i < validation_set.size(); ++i) {
      const Prepared& inst = validation_set[i];
      // zero noise: the mean latent, so selection is not subject to draws
      const Vector pi = infer(config.model, current.params, config.ablation, inst, {});
      rows[i].bound = evaluate_lr(*inst.problem, pi).value;
    }
    fill_gap(rows, validation_reference);
    return mean_gap(rows);
  };

  double best = kInfinity;
  long processed = 0;
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  bool stop = false;
  for (int epoch = 0; epoch < config.epochs && !stop; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    for (size_t b = 0; b < order.size() && !stop; b += config.batch_size) {
      nn::ParamMap<float> grads;
      double loss = 0.0;
      int used = 0;
      for (size_t k = b; k < std::min(order.size(), b + config.batch_size); ++k) {
        const Prepared& inst = train_set[order[k]];
        ++processed;
        nn::Tape<float> tape;
        const nn::Bound<float> bound = nn::bind_params(tape, current.params);
        const Tensor<float> eps =
            noisy ? nn::draw_noise<float>(inst.input.lambda.rows(), config.model, noise_rng)
                  : Tensor<float>();
        const nn::Var pi = nn::forward(tape, bound, config.model, inst.input, nn::Mode::train,
                                       &dropout_rng, eps, decode);
        const Vector pid = tape.value(pi).col(0).cast<double>();
        LrResult lr;
        try {
          if (!pid.allFinite()) throw NumericalError("non-finite multipliers");
          lr = evaluate_lr(*inst.problem, pid);
        } catch (const Error&) {
          ++result.skipped_instances;
          continue;
        }
        const double s = sense_sign(inst.problem->milp.sense);
        // d(-s LR)/d pi = -s g with the relaxed solution held fixed
        tape.backward(tape.weighted_sum(pi, column(-s * lr.supergradient)));
        const nn::ParamMap<float> g = nn::collect_grads(tape, bound);
        if (grads.empty()) {
          grads = g;
        } else {
          for (auto& [name, t] : grads) t += g.at(name);
        }
        loss += -s * lr.value;
        ++used;
      }
      if (used == 0) continue;
      for (auto& [name, t] : grads) t /= static_cast<float>(used);
      const nn::StepReport r =
          nn::optimizer_step(current.params, std::move(grads), current.optimizer, config.optimizer);
      result.log.push_back({current.optimizer.step, loss / used, r.lr, r.gnorm});
      stop = out_of_time();
    }
    if (result.skipped_instances > 0.01 * static_cast<double>(processed))
      throw NumericalError("train: " + std::to_string(result.skipped_instances) + " of " +
                           std::to_string(processed) + " oracle calls failed");
    const double g = validation_set.empty() ? -static_cast<double>(epoch) : validate_epoch();
    result.validation_gap.push_back(g);
    if (g < best || result.best_epoch < 0) {
      best = g;
      result.best_epoch = epoch;
      result.best = current;
    }
  }
  if (result.best_epoch < 0) result.best = current;
  return result;
}

void save_train_log(const std::vector<TrainLogRow>& log, const std::filesystem::path& path) {
  CsvWriter csv({"step", "loss", "lr", "gnorm"});
  for (const TrainLogRow& r : log)
    csv.row({std::to_string(r.step), format_double(r.loss), format_double(r.lr),
             format_double(r.gnorm)});
  csv.save(path);
}

// ---- evaluation ----------------------------------------------------------

std::vector<EvalRow> evaluate_model(const nn::Checkpoint& model, const Ablation& ablation,
                                    const std::vector<Prepared>& instances,
                                    const std::vector<double>& reference,
                                    const EvalOptions& options) {
  std::vector<EvalRow> rows(instances.size());
  parallel_for(instances.size(), options.threads, [&](std::size_t i) {
    rows[i] = score_model(model, ablation, instances[i], i, options).row;
  });
  fill_gap(rows, reference);
  return rows;
}

std::vector<Vector> predict_multipliers(const nn::Checkpoint& model, const Ablation& ablation,
                                        const std::vector<Prepared>& instances,
                                        const EvalOptions& options) {
  std::vector<Vector> pis(instances.size());
  parallel_for(instances.size(), options.threads, [&](std::size_t i) {
    pis[i] = score_model(model, ablation, instances[i], i, options).pi;
  });
  return pis;
}

std::vector<EvalRow> evaluate_multipliers(const std::string& method,
                                          const std::vector<Prepared>& instances,
                                          const std::vector<Vector>& pis,
                                          const std::vector<double>& reference, int threads) {
  if (pis.size() != instances.size())
    throw ParameterError("expected one multiplier vector per instance");
  std::vector<EvalRow> rows(instances.size());
  parallel_for(instances.size(), threads, [&](std::size_t i) {
    EvalRow& r = rows[i];
    r.instance = instances[i].id;
    r.method = method;
    const auto t0 = Clock::now();
    r.bound = evaluate_lr(*instances[i].problem, pis[i]).value;
    r.oracle_ms = ms_since(t0);
    r.time_ms = r.oracle_ms;
  });
  fill_gap(rows, reference);
  return rows;
}

std::vector<EvalRow> baseline_lr0(const std::vector<Prepared>& instances,
                                  const std::vector<double>& reference, int threads) {
  std::vector<Vector> pis;
  for (const Prepared& p : instances) pis.push_back(Vector::Zero(p.problem->milp.num_dualized()));
  return evaluate_multipliers("LR(0)", instances, pis, reference, threads);
}

std::vector<EvalRow> baseline_lrcr(const std::vector<Prepared>& instances,
                                   const std::vector<double>& reference, int threads) {
  std::vector<Vector> pis;
  for (const Prepared& p : instances) pis.push_back(p.lambda);
  std::vector<EvalRow> rows = evaluate_multipliers("LR(CR)", instances, pis, reference, threads);
  for (size_t i = 0; i < rows.size(); ++i) {
    rows[i].cr_ms = instances[i].cr_ms;
    rows[i].time_ms += rows[i].cr_ms;
  }
  return rows;
}

KnnBank build_knn_bank(const std::vector<Prepared>& flat_instances,
                       const std::vector<Vector>& reference_pis) {
  if (flat_instances.size() != reference_pis.size())
    throw ParameterError("knn: one multiplier vector per training instance expected");
  Eigen::Index rows = 0;
  for (const Prepared& p : flat_instances) {
    if (p.graph != nullptr) throw ParameterError("knn: instances must carry flat features");
    rows += p.input.features.rows();
  }
  KnnBank bank;
  bank.features.resize(rows, kFlatFeatures);
  bank.targets.resize(rows);
  Eigen::Index at = 0;
  for (size_t i = 0; i < flat_instances.size(); ++i) {
    const auto& f = flat_instances[i].input.features;
    if (reference_pis[i].size() != f.rows())
      throw ParameterError("knn: multiplier count does not match " + flat_instances[i].id);
    bank.features.middleRows(at, f.rows()) = f.cast<double>();
    bank.targets.segment(at, f.rows()) = reference_pis[i];
    at += f.rows();
  }
  return bank;
}

Vector knn_predict(const KnnBank& bank, const Matrix& queries, int k) {
  if (bank.features.rows() == 0) throw ParameterError("knn: empty bank");
  if (queries.cols() != bank.features.cols()) throw ParameterError("knn: feature width mismatch");
  const Eigen::Index kk = std::min<Eigen::Index>(std::max(k, 1), bank.features.rows());
  Vector out(queries.rows());
  std::vector<std::pair<double, Eigen::Index>> dist(bank.features.rows());
  for (Eigen::Index q = 0; q < queries.rows(); ++q) {
    for (Eigen::Index r = 0; r < bank.features.rows(); ++r)
      dist[r] = {(bank.features.row(r) - queries.row(q)).squaredNorm(), r};
    std::nth_element(dist.begin(), dist.begin() + (kk - 1), dist.end());
    double sum = 0.0;
    for (Eigen::Index j = 0; j < kk; ++j) sum += bank.targets[dist[j].second];
    out[q] = sum / static_cast<double>(kk);
  }
  return out;
}

void save_eval_csv(const std::vector<EvalRow>& rows, const std::filesystem::path& path) {
  CsvWriter csv({"instance", "method", "bound", "reference", "gap"});
  CsvWriter timing({"instance", "method", "time_ms", "cr_ms", "forward_ms", "oracle_ms"});
  for (const EvalRow& r : rows) {
    csv.row({r.instance, r.method, format_double(r.bound), format_double(r.reference),
             format_double(r.gap)});
    timing.row({r.instance, r.method, format_double(r.time_ms), format_double(r.cr_ms),
                format_double(r.forward_ms), format_double(r.oracle_ms)});
  }
  csv.save(path);
  timing.save(sidecar(path));
}

SummaryRow summarize(const std::string& dataset, const std::string& method,
                     const std::vector<EvalRow>& rows) {
  SummaryRow s;
  s.dataset = dataset;
  s.method = method;
  s.gap = mean_gap(rows);
  for (const EvalRow& r : rows) {
    if (!std::isfinite(r.gap)) continue;
    ++s.instances;
    s.time_ms += r.time_ms;
  }
  if (s.instances) s.time_ms /= s.instances;
  return s;
}

void save_summary_csv(const std::vector<SummaryRow>& rows, const std::filesystem::path& path) {
  CsvWriter csv({"dataset", "method", "gap_percent", "instances"});
  CsvWriter timing({"dataset", "method", "time_ms"});
  for (const SummaryRow& r : rows) {
    csv.row({r.dataset, r.method, format_double(r.gap), std::to_string(r.instances)});
    timing.row({r.dataset, r.method, format_double(r.time_ms)});
  }
  csv.save(path);
  timing.save(sidecar(path));
}

}  // namespace lmp
