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

// lmp: command line entry point.
//
//   lmp <command> [--config FILE] [--run-dir DIR] [--seed N] [--threads N]
//                 [--section.key=value ...] [command options]
//
// Exit codes: 0 success, 1 usage or parameter error, 2 data error,
// 3 numerical failure, 4 verification failure.

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

#include "lmp/config.hpp"
#include "lmp/pipeline.hpp"
#include "lmp/verify.hpp"

namespace fs = std::filesystem;
using namespace lmp;

namespace {

constexpr int kVerificationFailed = 4;

struct Context {
  Json config;
  fs::path run_dir;
  std::string command;

  int threads() const { return config["run"]["threads"].get<int>(); }
  std::uint64_t seed() const { return config["run"]["seed"].get<std::uint64_t>(); }
  fs::path manifest() const { return config["data"]["manifest"].get<std::string>(); }
  std::string str(const char* section, const char* key) const {
    return config[section][key].get<std::string>();
  }
};

std::vector<Split> parse_splits(const Json& list) {
  std::vector<Split> out;
  for (const auto& s : list) out.push_back(parse_split(s.get<std::string>()));
  return out;
}

void print_summary(const std::vector<SummaryRow>& rows) {
  for (const SummaryRow& r : rows)
    std::cout << r.dataset << "  " << r.method << "  GAP " << format_double(r.gap) << " %  ("
              << r.instances << " instances, " << r.time_ms << " ms)\n";
}

Vector multipliers_for(const std::string& source, const Problem& p) {
  if (source == "zero") return Vector::Zero(p.milp.num_dualized());
  if (source == "cr") {
    const LpSolution cr = solve_cr(p.milp);
    if (cr.status != LpStatus::optimal) throw DataError("continuous relaxation is not optimal");
    return cr_multipliers(p.milp, cr, true);
  }
  return load_multipliers(source, problem_hash(p));
}

fs::path checkpoint_path(const Context& c, const char* section, const char* key,
                         const char* fallback) {
  const std::string s = c.str(section, key);
  return s.empty() ? c.run_dir / fallback : fs::path(s);
}

TrainConfig train_config(const Context& c, const char* section) {
  return TrainConfig::from_json(c.config[section]);
}

int cmd_gen(const Context& c) {
  const Json& g = c.config["gen"];
  const GenParams preset = load_preset(g["preset"].get<std::string>());
  SplitFractions f{g["train"].get<double>(), g["validation"].get<double>(), g["test"].get<double>()};
  const fs::path out = g["out"].get<std::string>();
  const DatasetManifest m = generate_dataset(preset, g["count"].get<int>(), c.seed(), f, out);
  std::cout << "wrote " << m.entries.size() << " instances and " << (out / "manifest.json").string()
            << "\n";
  return 0;
}

int cmd_cr(const Context& c) {
  cache_cr(c.manifest(), c.threads());
  std::cout << "cached continuous relaxations for " << c.manifest().string() << "\n";
  return 0;
}

int cmd_reference(const Context& c) {
  const Json& r = c.config["reference"];
  cache_references(c.manifest(), parse_splits(r["splits"]), r["max_calls"].get<int>(),
                   r["tolerance"].get<double>(), c.threads());
  std::cout << "cached reference duals for " << c.manifest().string() << "\n";
  return 0;
}

int cmd_lr(const Context& c) {
  const std::string instance = c.str("lr", "instance");
  if (instance.empty()) throw ParameterError("lr: --instance is required");
  const Problem p = load_problem(instance);
  const std::string source = c.str("lr", "multipliers");
  const LrResult r = evaluate_lr(p, multipliers_for(source, p));
  CsvWriter csv({"instance", "multipliers", "value"});
  csv.row({fs::path(instance).stem().string(), source, format_double(r.value)});
  csv.save(c.run_dir / "lr.csv");
  std::cout << "LR = " << format_double(r.value) << "\n";
  return 0;
}

int cmd_ld(const Context& c) {
  const Json& s = c.config["ld"];
  const std::string instance = s["instance"].get<std::string>();
  if (instance.empty()) throw ParameterError("ld: --instance is required");
  const Problem p = load_problem(instance);
  const DualOracle oracle = make_oracle(p);
  StopRule stop;
  stop.max_calls = s["max_calls"].get<int>();
  stop.time_limit = s["time_limit"].get<double>();
  stop.epsilon = s["epsilon"].get<double>();
  if (stop.epsilon > 0.0) stop.reference = compute_reference(p).value;
  const SolveTrace t = dual_solve(parse_dual_method(s["method"].get<std::string>()), oracle,
                                  multipliers_for(s["init"].get<std::string>(), p), stop);
  t.save_csv(c.run_dir / "trace.csv");
  save_multipliers(c.run_dir / "multipliers.json", problem_hash(p), t.best_pi);
  std::cout << "best LR = " << format_double(t.best_value) << " after " << t.calls
            << " oracle calls (" << t.reason << ")\n";
  return 0;
}

void save_validation(const TrainResult& r, const fs::path& path) {
  CsvWriter csv({"epoch", "validation_gap"});
  for (size_t e = 0; e < r.validation_gap.size(); ++e)
    csv.row({std::to_string(e), format_double(r.validation_gap[e])});
  csv.save(path);
}

int cmd_train(const Context& c, bool baseline) {
  const TrainConfig cfg = train_config(c, baseline ? "mlp" : "train");
  const TrainResult r = train_on_manifest(cfg, c.manifest(), c.threads());
  const std::string name = baseline ? "mlp" : "model";
  nn::save_checkpoint(r.best, c.run_dir / (name + ".ckpt"));
  save_train_log(r.log, c.run_dir / (name + "_train_log.csv"));
  save_validation(r, c.run_dir / (name + "_validation.csv"));
  std::cout << "trained " << name << ": " << r.log.size() << " steps, best epoch " << r.best_epoch;
  if (!r.validation_gap.empty())
    std::cout << ", validation GAP " << format_double(r.validation_gap[r.best_epoch]) << " %";
  std::cout << ", skipped " << r.skipped_instances << "\n";
  return 0;
}

int cmd_eval(const Context& c) {
  const Json& e = c.config["eval"];
  const Split split = parse_split(e["split"].get<std::string>());
  const nn::Checkpoint model = nn::load_checkpoint(checkpoint_path(c, "eval", "checkpoint", "model.ckpt"));
  const Ablation ablation = TrainConfig::from_json(model.hyper).ablation;
  EvalOptions o;
  o.samples = e["samples"].get<int>();
  o.seed = c.seed();
  o.threads = c.threads();

  const Dataset test =
      load_dataset(c.manifest(), split, model.model.arch, ablation.uses_cr(), true, false, c.threads());
  MethodSet ms;
  ms.model = &model;
  ms.ablation = ablation;
  ms.options = o;
  ms.knn_k = e["knn_k"].get<int>();

  std::optional<nn::Checkpoint> mlp;
  const fs::path mlp_path = checkpoint_path(c, "eval", "mlp_checkpoint", "mlp.ckpt");
  if (fs::exists(mlp_path)) mlp = nn::load_checkpoint(mlp_path);
  std::optional<Dataset> flat_test;
  std::optional<Dataset> knn_train;
  if (mlp || e["knn"].get<bool>())
    flat_test = load_dataset(c.manifest(), split, nn::Architecture::mlp, true, true, false, c.threads());
  if (e["knn"].get<bool>())
    knn_train = load_dataset(c.manifest(), Split::train, nn::Architecture::mlp, true, true, true,
                             c.threads());
  if (mlp) ms.mlp = &*mlp;
  if (flat_test) ms.flat_test = &*flat_test;
  if (knn_train) ms.knn_train = &*knn_train;

  const std::vector<EvalRow> rows = evaluate_methods(test, ms);
  save_eval_csv(rows, c.run_dir / "eval.csv");
  std::vector<SummaryRow> summary = summarize_methods(test.name, rows);

  std::vector<SummaryRow> general;
  for (const auto& extra : c.config["data"]["extra_manifests"]) {
    const Dataset big = load_dataset(extra.get<std::string>(), split, model.model.arch,
                                     ablation.uses_cr(), true, false, c.threads());
    const auto g = generalization_eval(model, big, o);
    general.insert(general.end(), g.begin(), g.end());
  }
  save_summary_csv(summary, c.run_dir / "summary.csv");
  print_summary(summary);
  if (!general.empty()) {
    save_summary_csv(general, c.run_dir / "generalization.csv");
    print_summary(general);
  }
  return 0;
}

int cmd_ablate(const Context& c) {
  const TrainConfig base = train_config(c, "train");
  EvalOptions o;
  o.samples = c.config["eval"]["samples"].get<int>();
  o.seed = c.seed();
  o.threads = c.threads();
  std::vector<fs::path> manifests{c.manifest()};
  for (const auto& extra : c.config["data"]["extra_manifests"]) manifests.push_back(extra.get<std::string>());

  // ours is shared by "ours" and "-max"
  std::map<std::string, nn::Checkpoint> trained;
  auto model_for = [&](const Ablation& a) -> const nn::Checkpoint& {
    Ablation key = a;
    key.no_max = false;
    const std::string label = key.label();
    if (!trained.count(label)) {
      const std::string given = c.str("eval", "checkpoint");
      if (label == "ours" && !given.empty()) {
        trained[label] = nn::load_checkpoint(given);
      } else {
        TrainConfig cfg = base;
        cfg.ablation = key;
        std::cout << "training " << label << "\n";
        trained[label] = train_on_manifest(cfg, c.manifest(), c.threads()).best;
        nn::save_checkpoint(trained[label], c.run_dir / ("ablation" + label + ".ckpt"));
      }
    }
    return trained[label];
  };

  std::vector<SummaryRow> rows;
  for (const auto& v : c.config["ablate"]["variants"]) {
    const Ablation a = Ablation::parse(v.get<std::string>());
    const nn::Checkpoint& model = model_for(a);
    for (const fs::path& m : manifests) {
      const Dataset test =
          load_dataset(m, Split::test, model.model.arch, a.uses_cr(), true, false, c.threads());
      EvalOptions vo = o;
      vo.method = a.label();
      rows.push_back(summarize(test.name, a.label(), evaluate_model(model, a, test.items, test.reference, vo)));
    }
  }
  save_ablation_csv(rows, c.run_dir / "ablation.csv");
  save_summary_csv(rows, c.run_dir / "ablation_summary.csv");
  print_summary(rows);
  return 0;
}

int cmd_warmstart(const Context& c) {
  const Json& w = c.config["warmstart"];
  std::vector<std::string> inits;
  for (const auto& i : w["inits"]) inits.push_back(i.get<std::string>());
  std::vector<double> eps;
  for (const auto& e : w["eps"]) eps.push_back(e.get<double>());
  const bool predicted = std::find(inits.begin(), inits.end(), "predicted") != inits.end();
  std::optional<nn::Checkpoint> model;
  if (predicted) model = nn::load_checkpoint(checkpoint_path(c, "warmstart", "checkpoint", "model.ckpt"));
  const Ablation ablation = model ? TrainConfig::from_json(model->hyper).ablation : Ablation{};
  const nn::Architecture arch = model ? model->model.arch : nn::Architecture::gnn;
  const Dataset test = load_dataset(c.manifest(), parse_split(w["split"].get<std::string>()), arch,
                                    ablation.uses_cr(), true, false, c.threads());
  EvalOptions o;
  o.samples = c.config["eval"]["samples"].get<int>();
  o.seed = c.seed();
  o.threads = c.threads();
  const auto sets = build_inits(inits, test, model ? &*model : nullptr, ablation, o);
  std::vector<BenchInstance> bench;
  for (size_t i = 0; i < test.items.size(); ++i) bench.push_back({test.items[i].problem.get(), test.reference[i]});
  StopRule budget;
  budget.max_calls = w["max_calls"].get<int>();
  const auto rows = warmstart_bench(bench, sets, parse_dual_method(w["method"].get<std::string>()),
                                    eps, budget, c.threads());
  save_bench_csv(rows, c.run_dir / "warmstart.csv");
  for (const BenchRow& r : rows)
    std::cout << "eps " << r.epsilon << "  " << r.init << "  iterations " << r.iter_mean << " ("
              << r.reached << "/" << r.instances << " reached)\n";
  return 0;
}

int cmd_verify(const Context& c) {
  const auto results = run_verify_suite(c.str("verify", "suite"), c.seed(), c.threads());
  CsvWriter csv({"check", "pass", "detail"});
  bool ok = true;
  for (const CheckResult& r : results) {
    csv.row({r.name, r.pass ? "1" : "0", r.detail});
    std::cout << (r.pass ? "PASS " : "FAIL ") << r.name << ": " << r.detail << " [" << r.seconds
              << " s]\n";
    ok = ok && r.pass;
  }
  csv.save(c.run_dir / "verify.csv");
  return ok ? 0 : kVerificationFailed;
}

int run(int argc, char** argv) {
  // --section.key=value assignments are taken out before CLI11 sees the rest
  std::vector<std::string> overrides;
  std::vector<std::string> rest;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    const size_t eq = a.find('=');
    const std::string name = a.substr(0, eq);
    if (a.starts_with("--") && eq != std::string::npos && name.find('.') != std::string::npos)
      overrides.push_back(a.substr(2));
    else
      rest.push_back(a);
  }

  CLI::App app{"Learned Lagrangian multipliers for MILP dual bounds"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string config_file;
  std::string run_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> manifest;
  app.add_option("--config", config_file, "JSON run configuration")->check(CLI::ExistingFile);
  app.add_option("--run-dir", run_dir, "artifact directory (default $LMP_RUN_DIR or runs/<command>)");
  app.add_option("--seed", seed, "run seed");
  app.add_option("--threads", threads, "worker threads; 1 is bitwise deterministic");
  app.add_option("--manifest", manifest, "dataset manifest");

  // command options that map onto config keys
  std::vector<std::pair<std::string, std::string>> flags;
  auto opt = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    auto* value = &flags.emplace_back(key, "").second;
    // std::vector growth would invalidate the pointer; reserve below
    sub->add_option(flag, *value, help);
  };
  flags.reserve(32);

  auto* gen = app.add_subcommand("gen", "generate instances and a manifest");
  opt(gen, "--preset", "gen.preset", "generation preset name");
  opt(gen, "--count", "gen.count", "number of instances");
  opt(gen, "--out", "gen.out", "output directory");
  auto* cr = app.add_subcommand("cr", "solve and cache continuous relaxations");
  auto* lr = app.add_subcommand("lr", "evaluate LR at a multiplier file");
  opt(lr, "--instance", "lr.instance", "instance file");
  opt(lr, "--multipliers", "lr.multipliers", "zero, cr, or a multiplier file");
  auto* ld = app.add_subcommand("ld", "solve the Lagrangian dual of one instance");
  opt(ld, "--instance", "ld.instance", "instance file");
  opt(ld, "--method", "ld.method", "bundle or subgradient");
  opt(ld, "--init", "ld.init", "zero, cr, or a multiplier file");
  opt(ld, "--max-calls", "ld.max_calls", "oracle call budget");
  opt(ld, "--epsilon", "ld.epsilon", "relative gap to the reference at which to stop");
  auto* reference = app.add_subcommand("reference", "compute reference duals for a manifest");
  auto* train = app.add_subcommand("train", "train a model on the train split");
  bool baseline_mlp = false;
  train->add_flag("--mlp", baseline_mlp, "train the flat MLP baseline (config section mlp)");
  auto* eval = app.add_subcommand("eval", "evaluate a model and the baselines");
  opt(eval, "--checkpoint", "eval.checkpoint", "model checkpoint");
  opt(eval, "--samples", "eval.samples", "latent draws per instance");
  auto* warm = app.add_subcommand("warmstart", "bundle iterations from different starts");
  opt(warm, "--inits", "warmstart.inits", "comma-separated: zero,cr,predicted");
  opt(warm, "--eps", "warmstart.eps", "comma-separated thresholds");
  opt(warm, "--checkpoint", "warmstart.checkpoint", "model checkpoint");
  auto* ablate = app.add_subcommand("ablate", "train and evaluate the ablation variants");
  opt(ablate, "--variants", "ablate.variants", "comma-separated variants");
  auto* verify = app.add_subcommand("verify", "run the property suite");
  opt(verify, "--suite", "verify.suite", "quick or full");

  std::reverse(rest.begin(), rest.end());
  try {
    app.parse(rest);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  Context c;
  c.command = app.get_subcommands().front()->get_name();
  std::vector<std::string> all;
  if (seed) {
    for (const char* k : {"run.seed=", "train.seed=", "mlp.seed="}) all.push_back(k + std::to_string(*seed));
  }
  if (threads) all.push_back("run.threads=" + std::to_string(*threads));
  if (manifest) all.push_back("data.manifest=" + *manifest);
  for (const auto& [key, value] : flags)
    if (!value.empty()) all.push_back(key + "=" + value);
  all.insert(all.end(), overrides.begin(), overrides.end());
  c.config = load_run_config(config_file, all);
  if (c.config["run"]["threads"].get<int>() < 1) throw ParameterError("--threads must be at least 1");

  if (!run_dir.empty()) c.run_dir = run_dir;
  else if (!c.str("run", "dir").empty()) c.run_dir = c.str("run", "dir");
  else if (const char* env = std::getenv("LMP_RUN_DIR")) c.run_dir = env;
  else c.run_dir = fs::path("runs") / c.command;
  write_run_metadata(c.run_dir, c.config, c.command);

  if (gen->parsed()) return cmd_gen(c);
  if (cr->parsed()) return cmd_cr(c);
  if (lr->parsed()) return cmd_lr(c);
  if (ld->parsed()) return cmd_ld(c);
  if (reference->parsed()) return cmd_reference(c);
  if (train->parsed()) return cmd_train(c, baseline_mlp);
  if (eval->parsed()) return cmd_eval(c);
  if (warm->parsed()) return cmd_warmstart(c);
  if (ablate->parsed()) return cmd_ablate(c);
  if (verify->parsed()) return cmd_verify(c);
  return 1;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const ParameterError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  }
}
