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
#include <sstream>

#include "lmp/dual.hpp"
#include "lmp/learn.hpp"
#include "test_support.hpp"

using namespace lmp;
using namespace lmp::testing;
using Catch::Approx;

namespace {

std::vector<Prepared> tiny_set(int count, std::uint64_t seed, nn::Architecture arch,
                               bool use_cr = true, bool ga = false) {
  std::mt19937_64 rng(seed);
  std::vector<Prepared> out;
  for (int i = 0; i < count; ++i) {
    auto p = std::make_shared<const Problem>(ga ? make_problem(random_ga(rng, 2, 6))
                                                : make_problem(random_mc(rng, 5, 12, 3)));
    out.push_back(prepare_instance("i" + std::to_string(i), p, std::nullopt, arch, use_cr));
  }
  return out;
}

std::vector<double> references(const std::vector<Prepared>& set) {
  std::vector<double> r;
  for (const Prepared& p : set) r.push_back(compute_reference(*p.problem).value);
  return r;
}

nn::ModelConfig small_gnn() {
  nn::ModelConfig m;
  m.hidden = 16;
  m.blocks = 1;
  m.embed = 16;
  m.mlp_width = 32;
  m.decoder_width = 16;
  return m;
}

nn::Checkpoint random_checkpoint(const nn::ModelConfig& m, std::uint64_t seed) {
  nn::Checkpoint ck;
  ck.model = m;
  ck.params = nn::init_params(m, seed);
  // move the decoder away from its zero output layer
  Rng rng(seed + 1);
  std::normal_distribution<float> n(0.0f, 0.3f);
  for (auto& [name, t] : ck.params)
    if (name.ends_with(".W"))
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] += n(rng);
  return ck;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("gap arithmetic", "[learn]") {
  CHECK(gap(7.5, 7.5) == 0.0);
  CHECK(gap(0.0, 42.0) == Approx(100.0));
  CHECK(gap(174.0, 200.0) == Approx(13.0));
  // maximization bounds sit above the reference
  CHECK(gap(110.0, 100.0) == Approx(10.0));
  CHECK(std::isnan(gap(1.0, 0.0)));

  std::vector<EvalRow> rows(3);
  rows[0].gap = 10.0;
  rows[1].gap = std::numeric_limits<double>::quiet_NaN();
  rows[2].gap = 20.0;
  CHECK(mean_gap(rows) == Approx(15.0));
}

TEST_CASE("ablation labels round trip", "[learn]") {
  for (const char* s : {"ours", "-max", "-sum", "-cr", "-sample", "-cr+-sample"})
    CHECK(Ablation::parse(s).label() == s);
  CHECK_THROWS_AS(Ablation::parse("-foo"), ParameterError);
  CHECK_FALSE(Ablation::parse("-cr").adds_lambda());
  CHECK_FALSE(Ablation::parse("-sum").adds_lambda());
  CHECK(Ablation::parse("-sum").uses_cr());
}

TEST_CASE("train config json", "[learn]") {
  TrainConfig c;
  c.epochs = 3;
  c.seed = 17;
  c.ablation = Ablation::parse("-sum");
  c.optimizer.lr = 3e-4;
  const TrainConfig d = TrainConfig::from_json(c.to_json());
  CHECK(d.to_json() == c.to_json());
  Json bad = c.to_json();
  bad["unknown"] = 1;
  CHECK_THROWS_AS(TrainConfig::from_json(bad), ParameterError);
  bad = c.to_json();
  bad["batch_size"] = 0;
  CHECK_THROWS_AS(TrainConfig::from_json(bad), ParameterError);
}

TEST_CASE("k nearest neighbours", "[learn]") {
  KnnBank bank;
  bank.features = Matrix::Zero(4, kFlatFeatures);
  for (int r = 0; r < 4; ++r) bank.features(r, 0) = r;
  bank.targets = Vector{{1.0, 2.0, 3.0, 4.0}};

  Matrix q = Matrix::Zero(2, kFlatFeatures);
  q(0, 0) = 2.0;
  q(1, 0) = 0.2;
  const Vector one = knn_predict(bank, q, 1);
  CHECK(one[0] == 3.0);
  CHECK(one[1] == 1.0);
  // rows 0 and 1 are the two closest to 0.2
  CHECK(knn_predict(bank, q, 2)[1] == Approx(1.5));
  // k larger than the bank uses every row
  CHECK(knn_predict(bank, q, 20)[0] == Approx(2.5));

  bank.targets.setConstant(3.0);
  Matrix r = Matrix::Random(5, kFlatFeatures);
  CHECK((knn_predict(bank, r, 3).array() == 3.0).all());
  CHECK_THROWS_AS(knn_predict(bank, Matrix::Zero(1, 3), 1), ParameterError);
}

TEST_CASE("knn bank from flat instances", "[learn]") {
  const auto set = tiny_set(3, 5, nn::Architecture::mlp);
  std::vector<Vector> targets;
  for (const Prepared& p : set) targets.push_back(p.lambda);
  const KnnBank bank = build_knn_bank(set, targets);
  Eigen::Index rows = 0;
  for (const Prepared& p : set) rows += p.lambda.size();
  CHECK(bank.features.rows() == rows);
  // every training row is its own nearest neighbour (or a duplicate of it)
  const Matrix q = set[1].input.features.cast<double>();
  const Vector pred = knn_predict(bank, q, 1);
  for (Eigen::Index i = 0; i < q.rows(); ++i) {
    const Eigen::Index at = set[0].lambda.size() + i;
    CHECK((bank.features.row(at) - q.row(i)).norm() == 0.0);
  }
  CHECK(pred.size() == set[1].lambda.size());
}

TEST_CASE("flat columns are standardized per instance", "[learn]") {
  Matrix m(3, 2);
  m << 1, 5, 2, 5, 3, 5;
  const Matrix s = standardize_columns(m);
  CHECK(s.col(0).mean() == Approx(0.0).margin(1e-12));
  CHECK(s.col(0).squaredNorm() / 3.0 == Approx(1.0));
  CHECK(s.col(1).isZero());
}

TEST_CASE("untrained model reproduces the CR bound", "[learn]") {
  const auto set = tiny_set(4, 11, nn::Architecture::gnn);
  const auto ref = references(set);
  nn::Checkpoint ck;
  ck.model = small_gnn();
  ck.params = nn::init_params(ck.model, 3);
  const auto ours = evaluate_model(ck, Ablation{}, set, ref, {});
  const auto cr = baseline_lrcr(set, ref);
  for (size_t i = 0; i < set.size(); ++i) CHECK(ours[i].bound == Approx(cr[i].bound).epsilon(1e-5));
}

TEST_CASE("baselines and soundness of every bound", "[learn]") {
  for (bool ga : {false, true}) {
    const auto set = tiny_set(6, ga ? 21 : 22, nn::Architecture::gnn, true, ga);
    const auto ref = references(set);
    const double s = ga ? -1.0 : 1.0;
    const auto zero = baseline_lr0(set, ref);
    const auto cr = baseline_lrcr(set, ref);
    const auto ours = evaluate_model(random_checkpoint(small_gnn(), 4), Ablation{}, set, ref, {});
    for (size_t i = 0; i < set.size(); ++i) {
      const double tol = 1e-6 * std::max(1.0, std::abs(ref[i]));
      for (const auto* rows : {&zero, &cr, &ours}) {
        CHECK(s * (*rows)[i].bound <= s * ref[i] + tol);
        CHECK((*rows)[i].gap >= 0.0);
      }
      CHECK(cr[i].bound == Approx(evaluate_lr(*set[i].problem, set[i].lambda).value));
      if (!ga && ref[i] > 0) CHECK(zero[i].gap == Approx(100.0));
      if (ga) CHECK(std::isfinite(zero[i].gap));
    }
  }
}

TEST_CASE("best of five never loses to one draw", "[learn]") {
  const auto set = tiny_set(6, 31, nn::Architecture::gnn);
  const auto ref = references(set);
  const nn::Checkpoint ck = random_checkpoint(small_gnn(), 8);
  EvalOptions five;
  EvalOptions one;
  one.samples = 1;
  const auto r5 = evaluate_model(ck, Ablation{}, set, ref, five);
  const auto r1 = evaluate_model(ck, Ablation{}, set, ref, one);
  const auto rmax = evaluate_model(ck, Ablation::parse("-max"), set, ref, five);
  for (size_t i = 0; i < set.size(); ++i) {
    CHECK(r5[i].gap <= r1[i].gap + 1e-12);
    CHECK(rmax[i].bound == r1[i].bound);
  }
}

TEST_CASE("deterministic encoder gives identical draws", "[learn]") {
  const auto set = tiny_set(3, 41, nn::Architecture::gnn);
  const auto ref = references(set);
  const nn::Checkpoint ck = random_checkpoint(small_gnn(), 9);
  const Ablation det = Ablation::parse("-sample");
  EvalOptions a;
  EvalOptions b;
  b.seed = 99;
  b.samples = 1;
  const auto ra = evaluate_model(ck, det, set, ref, a);
  const auto rb = evaluate_model(ck, det, set, ref, b);
  for (size_t i = 0; i < set.size(); ++i) CHECK(ra[i].bound == rb[i].bound);
}

TEST_CASE("evaluation does not depend on the thread count", "[learn]") {
  const auto set = tiny_set(5, 51, nn::Architecture::gnn);
  const auto ref = references(set);
  const nn::Checkpoint ck = random_checkpoint(small_gnn(), 10);
  EvalOptions one;
  EvalOptions three;
  three.threads = 3;
  const auto r1 = evaluate_model(ck, Ablation{}, set, ref, one);
  const auto r3 = evaluate_model(ck, Ablation{}, set, ref, three);
  for (size_t i = 0; i < set.size(); ++i) CHECK(r1[i].bound == r3[i].bound);
  const auto p = predict_multipliers(ck, Ablation{}, set, one);
  for (size_t i = 0; i < set.size(); ++i)
    CHECK(evaluate_lr(*set[i].problem, p[i]).value == r1[i].bound);
}

TEST_CASE("flat model maps identical features to identical multipliers", "[learn]") {
  nn::ModelConfig m;
  m.arch = nn::Architecture::mlp;
  m.in_features = kFlatFeatures;
  m.decoder_width = 32;
  const nn::Checkpoint ck = random_checkpoint(m, 12);
  nn::GraphInput<float> in;
  in.features = nn::Tensor<float>::Random(4, kFlatFeatures);
  in.features.row(2) = in.features.row(0);
  in.lambda = nn::Tensor<float>::Constant(4, 1, 0.5f);
  in.softplus_rows = {true, true, true, true};
  nn::Tape<float> tape;
  const auto bound = nn::bind_params(tape, ck.params, false);
  const auto out = tape.value(nn::forward(tape, bound, m, in, nn::Mode::eval, nullptr, {}, {}));
  CHECK(out(0, 0) == out(2, 0));
  CHECK(out(0, 0) != out(1, 0));
}

TEST_CASE("instances prepared for the wrong model are rejected", "[learn]") {
  const auto flat = tiny_set(1, 61, nn::Architecture::mlp);
  nn::Checkpoint ck;
  ck.model = small_gnn();
  ck.params = nn::init_params(ck.model, 1);
  CHECK_THROWS_AS(evaluate_model(ck, Ablation{}, flat, {1.0}, {}), ParameterError);
  const auto no_cr = tiny_set(1, 61, nn::Architecture::gnn, false);
  CHECK(no_cr[0].lambda.isZero());
  CHECK(no_cr[0].cr_ms == 0.0);
}

TEST_CASE("training smoke run lowers the loss", "[learn][train]") {
  const auto set = tiny_set(20, 71, nn::Architecture::gnn);
  const auto val = tiny_set(5, 72, nn::Architecture::gnn);
  const auto val_ref = references(val);
  TrainConfig c;
  c.model.hidden = 32;
  c.model.blocks = 2;
  c.model.embed = 32;
  c.model.mlp_width = 64;
  c.model.decoder_width = 32;
  c.batch_size = 1;
  c.epochs = 10;  // 200 steps
  c.optimizer.lr = 1e-3;
  c.seed = 5;
  const TrainResult r = train(c, set, val, val_ref);
  REQUIRE(r.log.size() == 200);
  CHECK(r.skipped_instances == 0);
  CHECK(r.validation_gap.size() == 10);

  // per-epoch mean loss, best-so-far curve
  std::vector<double> epoch_loss(10, 0.0);
  for (size_t k = 0; k < r.log.size(); ++k) epoch_loss[k / 20] += r.log[k].loss / 20.0;
  double best = epoch_loss[0];
  for (double l : epoch_loss) best = std::min(best, l);
  CHECK(best < epoch_loss[0]);

  // the selected model beats the CR start on the training set
  double before = 0.0;
  double after = 0.0;
  for (const Prepared& p : set) {
    before += evaluate_lr(*p.problem, p.lambda).value;
    after += evaluate_lr(*p.problem, predict_multipliers(r.best, Ablation{}, {p}, {})[0]).value;
  }
  CHECK(after > before);
}

TEST_CASE("training is repeatable", "[learn][train]") {
  const auto set = tiny_set(6, 81, nn::Architecture::gnn);
  TrainConfig c;
  c.model = small_gnn();
  c.batch_size = 2;
  c.epochs = 2;
  c.seed = 7;
  for (const char* flags : {"ours", "-sample"}) {
    c.ablation = Ablation::parse(flags);
    const TrainResult a = train(c, set, {}, {});
    const TrainResult b = train(c, set, {}, {});
    REQUIRE(a.log.size() == b.log.size());
    for (size_t k = 0; k < a.log.size(); ++k) {
      CHECK(a.log[k].loss == b.log[k].loss);
      CHECK(a.log[k].gnorm == b.log[k].gnorm);
    }
    CHECK(a.best.params == b.best.params);
  }
}

TEST_CASE("flat model trains with the same loss", "[learn][train]") {
  const auto set = tiny_set(8, 91, nn::Architecture::mlp);
  TrainConfig c;
  c.model.arch = nn::Architecture::mlp;
  c.model.in_features = kFlatFeatures;
  c.model.decoder_width = 32;
  c.epochs = 2;
  c.batch_size = 4;
  const TrainResult r = train(c, set, {}, {});
  CHECK(r.log.size() == 4);
  for (const TrainLogRow& row : r.log) CHECK(std::isfinite(row.loss));
}

TEST_CASE("result csvs are deterministic and timing lives in a sidecar", "[learn]") {
  const auto dir = temp_dir("learn_csv");
  const auto set = tiny_set(3, 101, nn::Architecture::gnn);
  const auto ref = references(set);
  const nn::Checkpoint ck = random_checkpoint(small_gnn(), 13);
  for (const char* name : {"a.csv", "b.csv"}) {
    const auto rows = evaluate_model(ck, Ablation{}, set, ref, {});
    save_eval_csv(rows, dir / name);
    save_summary_csv({summarize("tiny", "ours", rows)}, dir / (std::string("s") + name));
  }
  CHECK(read_file(dir / "a.csv") == read_file(dir / "b.csv"));
  CHECK(read_file(dir / "sa.csv") == read_file(dir / "sb.csv"));
  CHECK(std::filesystem::exists(dir / "a.timing.csv"));
  CHECK(read_file(dir / "a.csv").starts_with("instance,method,bound,reference,gap\n"));
  CHECK(read_file(dir / "sa.csv").starts_with("dataset,method,gap_percent,instances\n"));
}
