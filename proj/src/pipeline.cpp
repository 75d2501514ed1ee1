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

#include "lmp/pipeline.hpp"

#include <unistd.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <map>

#include "lmp/config.hpp"

namespace lmp {

namespace fs = std::filesystem;

namespace {

std::string numbered(int i) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%06d", i);
  return buf;
}

std::string stem_of(const std::string& path) { return fs::path(path).stem().string(); }

}  // namespace

DatasetManifest generate_dataset(const GenParams& preset, int count, std::uint64_t seed,
                                 const SplitFractions& f, const fs::path& dir) {
  if (count < 1) throw ParameterError("gen: count must be positive");
  if (f.train < 0 || f.validation < 0 || f.test < 0 ||
      std::abs(f.train + f.validation + f.test - 1.0) > 1e-9)
    throw ParameterError("gen: split fractions must be nonnegative and sum to 1");
  fs::create_directories(dir / "instances");
  DatasetManifest m;
  m.directory = dir;
  m.train_fraction = f.train;
  m.validation_fraction = f.validation;
  m.test_fraction = f.test;
  const int n_train = static_cast<int>(std::lround(f.train * count));
  const int n_val = std::min(count - n_train, static_cast<int>(std::lround(f.validation * count)));
  for (int i = 0; i < count; ++i) {
    const std::uint64_t s = derive_seed(seed, "gen/" + std::to_string(i));
    const Problem p =
        preset.is_mc() ? make_problem(generate_mc(std::get<McGenParams>(preset.params), s))
                       : make_problem(generate_ga(std::get<GaGenParams>(preset.params), s));
    ManifestEntry e;
    e.path = "instances/" + numbered(i) + ".json";
    e.split = i < n_train ? Split::train : i < n_train + n_val ? Split::validation : Split::test;
    save_problem(p, dir / e.path);
    m.entries.push_back(std::move(e));
  }
  save_manifest(m, dir / "manifest.json");
  return m;
}

void cache_cr(const fs::path& manifest_path, int threads) {
  DatasetManifest m = load_manifest(manifest_path);
  fs::create_directories(m.directory / "cr");
  parallel_for(m.entries.size(), threads, [&](std::size_t i) {
    ManifestEntry& e = m.entries[i];
    if (e.cr_path) return;
    const Problem p = load_problem(m.resolve(e.path));
    const LpSolution cr = solve_cr(p.milp);
    if (cr.status != LpStatus::optimal)
      throw DataError("continuous relaxation of " + e.path + " is " +
                      std::string(to_string(cr.status)));
    const std::string rel = "cr/" + stem_of(e.path) + ".json";
    export_solution(cr, m.resolve(rel));
    e.cr_path = rel;
  });
  save_manifest(m, manifest_path);
}

void cache_references(const fs::path& manifest_path, const std::vector<Split>& splits,
                      int max_calls, double tolerance, int threads) {
  DatasetManifest m = load_manifest(manifest_path);
  fs::create_directories(m.directory / "ref");
  auto wanted = [&](Split s) { return std::find(splits.begin(), splits.end(), s) != splits.end(); };
  parallel_for(m.entries.size(), threads, [&](std::size_t i) {
    ManifestEntry& e = m.entries[i];
    if (!wanted(e.split) || (e.ref_dual_value && e.ref_multipliers_path)) return;
    const Problem p = load_problem(m.resolve(e.path));
    const ReferenceSolution ref = compute_reference(p, max_calls, tolerance);
    const std::string rel = "ref/" + stem_of(e.path) + ".json";
    save_multipliers(m.resolve(rel), problem_hash(p), ref.pi);
    e.ref_dual_value = ref.value;
    e.ref_dual_provenance = ref.provenance;
    e.ref_multipliers_path = rel;
  });
  save_manifest(m, manifest_path);
}

Dataset load_dataset(const fs::path& manifest_path, Split split, nn::Architecture arch,
                     bool use_cr, bool require_reference, bool with_reference_pi, int threads) {
  const DatasetManifest m = load_manifest(manifest_path);
  const std::vector<std::size_t> idx = m.indices(split);
  Dataset d;
  d.name = manifest_path.parent_path().filename().string();
  d.items.resize(idx.size());
  d.reference.assign(idx.size(), std::numeric_limits<double>::quiet_NaN());
  if (with_reference_pi) d.reference_pi.resize(idx.size());
  parallel_for(idx.size(), threads, [&](std::size_t k) {
    const ManifestEntry& e = m.entries[idx[k]];
    auto problem = std::make_shared<const Problem>(load_problem(m.resolve(e.path)));
    std::optional<LpSolution> cr;
    if (use_cr && e.cr_path) cr = import_solution(problem->milp, m.resolve(*e.cr_path));
    if ((require_reference || with_reference_pi) && !e.ref_dual_value)
      throw DataError(e.path + " has no reference dual value; run `lmp reference` first");
    if (e.ref_dual_value) d.reference[k] = *e.ref_dual_value;
    if (with_reference_pi) {
      if (!e.ref_multipliers_path) throw DataError(e.path + " has no reference multipliers");
      d.reference_pi[k] = load_multipliers(m.resolve(*e.ref_multipliers_path), problem_hash(*problem));
    }
    d.items[k] = prepare_instance(stem_of(e.path), problem, cr, arch, use_cr);
  });
  return d;
}

TrainResult train_on_manifest(const TrainConfig& config, const fs::path& manifest_path,
                              int threads) {
  const bool cr = config.ablation.uses_cr();
  const Dataset tr = load_dataset(manifest_path, Split::train, config.model.arch, cr, false, false, threads);
  const Dataset va =
      load_dataset(manifest_path, Split::validation, config.model.arch, cr, true, false, threads);
  return train(config, tr.items, va.items, va.reference);
}

std::vector<EvalRow> evaluate_methods(const Dataset& test, const MethodSet& ms) {
  const int threads = ms.options.threads;
  std::vector<EvalRow> rows;
  auto append = [&](std::vector<EvalRow> more) {
    rows.insert(rows.end(), std::make_move_iterator(more.begin()), std::make_move_iterator(more.end()));
  };
  // CR bound itself, from the prepared relaxation
  std::vector<EvalRow> cr(test.items.size());
  for (size_t i = 0; i < cr.size(); ++i) {
    cr[i].instance = test.items[i].id;
    cr[i].method = "CR";
    cr[i].bound = test.items[i].cr_objective;
    cr[i].reference = test.reference[i];
    cr[i].gap = gap(cr[i].bound, cr[i].reference);
    cr[i].cr_ms = cr[i].time_ms = test.items[i].cr_ms;
  }
  append(std::move(cr));
  append(baseline_lr0(test.items, test.reference, threads));
  append(baseline_lrcr(test.items, test.reference, threads));
  if (ms.model) {
    EvalOptions o = ms.options;
    o.method = "ours";
    append(evaluate_model(*ms.model, ms.ablation, test.items, test.reference, o));
  }
  if (ms.mlp || ms.knn_train) {
    if (!ms.flat_test) throw ParameterError("flat baselines need the flat test features");
    if (ms.flat_test->items.size() != test.items.size())
      throw ParameterError("flat and graph test sets differ");
  }
  if (ms.mlp) {
    EvalOptions o = ms.options;
    o.method = "LR(MLP)";
    append(evaluate_model(*ms.mlp, Ablation{}, ms.flat_test->items, test.reference, o));
  }
  if (ms.knn_train) {
    const KnnBank bank = build_knn_bank(ms.knn_train->items, ms.knn_train->reference_pi);
    std::vector<Vector> pis(ms.flat_test->items.size());
    std::vector<double> predict_ms(pis.size());
    parallel_for(pis.size(), threads, [&](std::size_t i) {
      const Prepared& p = ms.flat_test->items[i];
      const auto t0 = std::chrono::steady_clock::now();
      pis[i] = project_sign(knn_predict(bank, p.input.features.cast<double>(), ms.knn_k),
                            sign_policy(p.problem->milp));
      predict_ms[i] =
          std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    });
    std::vector<EvalRow> knn =
        evaluate_multipliers("LR(k-NN)", ms.flat_test->items, pis, test.reference, threads);
    for (size_t i = 0; i < knn.size(); ++i) {
      knn[i].forward_ms = predict_ms[i];
      knn[i].time_ms += predict_ms[i];
    }
    append(std::move(knn));
  }
  return rows;
}

std::vector<SummaryRow> summarize_methods(const std::string& dataset,
                                          const std::vector<EvalRow>& rows) {
  std::vector<std::string> order;
  std::map<std::string, std::vector<EvalRow>> by;
  for (const EvalRow& r : rows) {
    if (!by.count(r.method)) order.push_back(r.method);
    by[r.method].push_back(r);
  }
  std::vector<SummaryRow> out;
  for (const std::string& m : order) out.push_back(summarize(dataset, m, by[m]));
  return out;
}

std::vector<SummaryRow> generalization_eval(const nn::Checkpoint& model, const Dataset& test,
                                            const EvalOptions& options) {
  std::map<int, std::vector<std::size_t>> buckets;
  for (size_t i = 0; i < test.items.size(); ++i) {
    const Problem& p = *test.items[i].problem;
    if (!p.is_mc()) throw ParameterError("generalization buckets need MC instances");
    buckets[p.mc().num_commodities()].push_back(i);
  }
  std::vector<SummaryRow> out;
  for (const auto& [k, idx] : buckets) {
    std::vector<Prepared> items;
    std::vector<double> ref;
    for (std::size_t i : idx) {
      items.push_back(test.items[i]);
      ref.push_back(test.reference[i]);
    }
    const std::string label = test.name + " K=" + std::to_string(k);
    EvalOptions o = options;
    o.method = "ours";
    out.push_back(summarize(label, "ours", evaluate_model(model, Ablation{}, items, ref, o)));
    out.push_back(summarize(label, "LR(CR)", baseline_lrcr(items, ref, options.threads)));
  }
  return out;
}

void save_ablation_csv(const std::vector<SummaryRow>& rows, const fs::path& path) {
  std::vector<std::string> datasets;
  std::vector<std::string> methods;
  std::map<std::pair<std::string, std::string>, double> cell;
  for (const SummaryRow& r : rows) {
    if (std::find(datasets.begin(), datasets.end(), r.dataset) == datasets.end())
      datasets.push_back(r.dataset);
    if (std::find(methods.begin(), methods.end(), r.method) == methods.end())
      methods.push_back(r.method);
    cell[{r.method, r.dataset}] = r.gap;
  }
  std::vector<std::string> header{"ablation"};
  header.insert(header.end(), datasets.begin(), datasets.end());
  CsvWriter csv(header);
  for (const std::string& m : methods) {
    std::vector<std::string> line{m};
    for (const std::string& d : datasets) {
      const auto it = cell.find({m, d});
      line.push_back(it == cell.end() ? "" : format_double(it->second));
    }
    csv.row(line);
  }
  csv.save(path);
}

std::vector<InitSet> build_inits(const std::vector<std::string>& names, const Dataset& test,
                                 const nn::Checkpoint* model, const Ablation& ablation,
                                 const EvalOptions& options) {
  std::vector<InitSet> out;
  for (const std::string& name : names) {
    InitSet s;
    s.name = name;
    if (name == "zero") {
      for (const Prepared& p : test.items) s.starts.push_back(Vector::Zero(p.lambda.size()));
    } else if (name == "cr") {
      for (const Prepared& p : test.items) s.starts.push_back(p.lambda);
    } else if (name == "predicted") {
      if (!model) throw ParameterError("init 'predicted' needs a checkpoint");
      s.starts = predict_multipliers(*model, ablation, test.items, options);
    } else {
      throw ParameterError("unknown init '" + name + "' (zero, cr, predicted)");
    }
    out.push_back(std::move(s));
  }
  return out;
}

void write_run_metadata(const fs::path& run_dir, const Json& config, const std::string& command) {
  fs::create_directories(run_dir);
  write_text_file(run_dir / (command + ".config.json"), dump_json(config));
  write_text_file(run_dir / (command + ".run.json"),
                  dump_json(Json{{"command", command},
                                 {"config_hash", config_hash(config)},
                                 {"seed", config["run"]["seed"]}}));
  char host[256] = {0};
  gethostname(host, sizeof host - 1);
  char stamp[32];
  const std::time_t now = std::time(nullptr);
  std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
  write_text_file(run_dir / (command + ".meta.json"),
                  dump_json(Json{{"timestamp", stamp}, {"host", host}}));
}

}  // namespace lmp
