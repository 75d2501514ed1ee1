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

#include <cmath>
#include <fstream>

#include "lmp/featurize.hpp"
#include "lmp/neural/checkpoint.hpp"
#include "lmp/neural/grad_check.hpp"
#include "test_support.hpp"

using namespace lmp;
using namespace lmp::nn;
using Catch::Approx;

namespace {

ModelConfig tiny_config() {
  ModelConfig c;
  c.hidden = 8;
  c.blocks = 1;
  return c;
}

struct TinyGraph {
  BipartiteGraph graph;
  GraphInput<float> input;
};

TinyGraph tiny_graph(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const Problem p = make_problem(lmp::testing::random_ga(rng, 2, 4));
  const LpSolution cr = solve_cr(p.milp);
  TinyGraph t;
  t.graph = build_graph(p.milp);
  t.input.adjacency = &t.graph.adjacency_f;
  t.input.features =
      standardize_features(init_features(p.milp, cr), t.graph.num_vars).cast<float>();
  t.input.dualized_nodes = t.graph.dualized_nodes();
  t.input.lambda = cr_multipliers(p.milp, cr).cast<float>();
  t.input.softplus_rows.assign(p.milp.num_dualized(), true);
  return t;
}

Tensor<float> run(const ModelConfig& c, const ParamMap<float>& params, const GraphInput<float>& in,
                  const Tensor<float>& eps, DecodeOptions o = {}) {
  Tape<float> tape;
  const Bound<float> b = bind_params(tape, params, false);
  return tape.value(forward(tape, b, c, in, Mode::eval, nullptr, eps, o));
}

// Scalar rectified Adam with the same constants, written from the update
// rule directly.
struct ScalarRAdam {
  double m = 0, v = 0, lr = 1e-3, b1 = 0.9, b2 = 0.999, eps = 1e-8;
  int t = 0;
  double step(double p, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, t));
    const double rinf = 2 / (1 - b2) - 1;
    const double rt = rinf - 2 * t * std::pow(b2, t) / (1 - std::pow(b2, t));
    if (rt <= 4) return p - lr * mhat;
    const double vhat = std::sqrt(v / (1 - std::pow(b2, t)));
    const double r = std::sqrt((rt - 4) * (rt - 2) * rinf / ((rinf - 4) * (rinf - 2) * rt));
    return p - lr * r * mhat / (vhat + eps);
  }
};

}  // namespace

TEST_CASE("primitive closed forms", "[neural]") {
  Tape<double> t;
  const Var zero = t.constant(Tensor<double>::Zero(1, 1));
  CHECK(t.value(t.softplus(zero))(0, 0) == Approx(std::log(2.0)).epsilon(1e-12));
  const Var row = t.constant(Tensor<double>::Constant(2, 5, 3.0));
  const Var gain = t.constant(Tensor<double>::Constant(1, 5, 2.0));
  const Var bias = t.constant(Tensor<double>::Constant(1, 5, 0.5));
  const Tensor<double> ln = t.value(t.layer_norm(row, gain, bias));
  CHECK((ln.array() - 0.5).abs().maxCoeff() < 1e-12);
  CHECK(Tape<double>::softplus_value(-800.0) == 0.0);
  CHECK(Tape<double>::softplus_value(800.0) == 800.0);
}

TEST_CASE("shape errors name the operation", "[neural]") {
  Tape<float> t;
  const Var a = t.constant(Tensor<float>::Zero(2, 3));
  const Var b = t.constant(Tensor<float>::Zero(2, 2));
  CHECK_THROWS_WITH(t.add(a, b), Catch::Matchers::ContainsSubstring("add"));
  CHECK_THROWS_WITH(t.matmul(a, b), Catch::Matchers::ContainsSubstring("matmul"));
  CHECK_THROWS_AS(t.backward(a), ParameterError);
}

TEST_CASE("every primitive matches finite differences", "[neural][gradcheck]") {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    for (const GradCheckResult& r : check_primitives(seed)) {
      INFO(r.name << " seed " << seed << " worst " << r.worst);
      CHECK(r.checked > 0);
      CHECK(r.max_rel_error <= 1e-4);
    }
  }
}

TEST_CASE("end-to-end gradients match finite differences", "[neural][gradcheck]") {
  ModelConfig mlp;
  mlp.arch = Architecture::mlp;
  mlp.in_features = kFlatFeatures;
  for (std::uint64_t seed : {11u, 12u, 13u}) {
    const GradCheckResult g = grad_check_model(tiny_config(), seed);
    INFO("gnn seed " << seed << " worst " << g.worst << " kinks " << g.at_kinks);
    CHECK(g.checked > 100);
    CHECK(g.max_rel_error <= 1e-4);
    const GradCheckResult m = grad_check_model(mlp, seed);
    INFO("mlp worst " << m.worst);
    CHECK(m.max_rel_error <= 1e-4);
  }
}

TEST_CASE("encoder behaviour", "[neural]") {
  const ModelConfig c = tiny_config();
  const TinyGraph g = tiny_graph(3);
  const ParamMap<float> params = init_params(c, 5);

  SECTION("eval mode is deterministic") {
    Tape<float> t1, t2;
    const Var h1 = gnn_encode(t1, bind_params(t1, params), c, g.input, Mode::eval, nullptr);
    const Var h2 = gnn_encode(t2, bind_params(t2, params), c, g.input, Mode::eval, nullptr);
    CHECK(t1.value(h1) == t2.value(h2));
    CHECK(t1.value(h1).rows() == Eigen::Index(g.input.dualized_nodes.size()));
  }
  SECTION("train mode draws dropout masks from the given stream") {
    Rng a(9), b(9), other(10);
    Tape<float> t1, t2, t3;
    const Var h1 = gnn_encode(t1, bind_params(t1, params), c, g.input, Mode::train, &a);
    const Var h2 = gnn_encode(t2, bind_params(t2, params), c, g.input, Mode::train, &b);
    const Var h3 = gnn_encode(t3, bind_params(t3, params), c, g.input, Mode::train, &other);
    CHECK(t1.value(h1) == t2.value(h2));
    CHECK(t1.value(h1) != t3.value(h3));
  }
  SECTION("zero parameters give zero embeddings") {
    ParamMap<float> zero = params;
    for (auto& [name, p] : zero) p.setZero();
    Tape<float> t;
    const Var h = gnn_encode(t, bind_params(t, zero), c, g.input, Mode::eval, nullptr);
    CHECK(t.value(h).isZero());
  }
  SECTION("relabeling nodes leaves constraint embeddings unchanged") {
    const Eigen::Index n = g.graph.num_nodes();
    std::vector<int> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::mt19937_64 rng(17);
    std::shuffle(perm.begin(), perm.end(), rng);
    Eigen::PermutationMatrix<Eigen::Dynamic> P(n);
    for (Eigen::Index v = 0; v < n; ++v) P.indices()[v] = perm[v];
    const SparseTensor<float> adj = (P * g.graph.adjacency_f * P.transpose()).eval();
    GraphInput<float> in = g.input;
    in.adjacency = &adj;
    in.features = P * g.input.features;
    for (auto& node : in.dualized_nodes) node = perm[node];
    Tape<float> t1, t2;
    const Var h1 = gnn_encode(t1, bind_params(t1, params), c, g.input, Mode::eval, nullptr);
    const Var h2 = gnn_encode(t2, bind_params(t2, params), c, in, Mode::eval, nullptr);
    CHECK((t1.value(h1) - t2.value(h2)).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("latent sampling", "[neural]") {
  const ModelConfig c = tiny_config();
  Tape<double> t;
  Tensor<double> h(2, 8);
  h.leftCols(4).setConstant(0.7);
  h.rightCols(4).setZero();
  const Var hv = t.constant(h);
  CHECK(t.value(sample_latent(t, hv, c, Tensor<double>::Zero(2, 4)).z).isApproxToConstant(0.7));
  CHECK(t.value(sample_latent(t, hv, c, Tensor<double>()).z).isApproxToConstant(0.7));
  CHECK(t.value(sample_latent(t, hv, c, Tensor<double>::Ones(2, 4)).z).isApproxToConstant(1.7));

  Tensor<double> big = h, at_cap = h;
  big.rightCols(4).setConstant(c.sigma_hi + 10);
  at_cap.rightCols(4).setConstant(c.sigma_hi);
  const Tensor<double> eps = Tensor<double>::Constant(2, 4, 0.3);
  CHECK(t.value(sample_latent(t, t.constant(big), c, eps).z) ==
        t.value(sample_latent(t, t.constant(at_cap), c, eps).z));
  CHECK_THROWS_AS(sample_latent(t, t.constant(Tensor<double>::Zero(2, 6)), c, eps),
                  ParameterError);
}

TEST_CASE("decoder projection", "[neural]") {
  const ModelConfig c = tiny_config();
  ParamMap<float> params = init_params(c, 5);
  GraphInput<float> in;
  in.lambda = Tensor<float>::Zero(3, 1);
  in.softplus_rows = {true, true, false};
  Tape<float> t;
  const Var z = t.constant(Tensor<float>::Constant(3, 4, 0.4f));
  // the output layer starts at zero, so delta = 0
  const Tensor<float> pi = t.value(decode(t, bind_params(t, params), z, in, {}));
  CHECK(pi(0, 0) == Approx(std::log(2.0)));
  CHECK(pi(1, 0) == Approx(std::log(2.0)));
  CHECK(pi(2, 0) == 0.0f);

  // -sum: lambda is ignored
  for (auto& [name, p] : params) p.setRandom();
  GraphInput<float> shifted = in;
  shifted.lambda = Tensor<float>::Constant(3, 1, 5.0f);
  const DecodeOptions no_sum{false};
  const Tensor<float> a = t.value(decode(t, bind_params(t, params), z, in, no_sum));
  const Tensor<float> b = t.value(decode(t, bind_params(t, params), z, shifted, no_sum));
  CHECK(a == b);
  const Tensor<float> with = t.value(decode(t, bind_params(t, params), z, shifted, {}));
  CHECK(with != b);
  // softplus rows stay nonnegative for any weights
  CHECK(with(0, 0) >= 0.0f);
  CHECK(with(1, 0) >= 0.0f);
}

TEST_CASE("learning rate schedule and clipping", "[neural][optimizer]") {
  RAdamOptions o;
  o.lr = 1e-4;
  CHECK(learning_rate(o, 0) == Approx(1e-4));
  CHECK(learning_rate(o, 99999) == Approx(1e-4));
  CHECK(learning_rate(o, 200000) == Approx(0.81e-4));
  CHECK(learning_rate(o, 100000000) == Approx(1e-10));

  // a single parameter vector with gradient norm 50: the first step is the
  // momentum branch, so the update is lr * clipped gradient exactly
  ParamMap<float> p{{"w", Tensor<float>::Zero(1, 2)}};
  ParamMap<float> g{{"w", Tensor<float>{{30.0f, 40.0f}}}};
  OptimizerState s;
  o.lr = 1e-2;
  const StepReport r = optimizer_step(p, g, s, o);
  CHECK(r.applied);
  CHECK(!r.adaptive);
  CHECK(r.gnorm == Approx(50.0));
  CHECK(p.at("w")(0, 0) == Approx(-1e-2 * 3.0));
  CHECK(p.at("w")(0, 1) == Approx(-1e-2 * 4.0));

  ParamMap<float> bad{{"w", Tensor<float>{{std::nanf(""), 1.0f}}}};
  const ParamMap<float> before = p;
  CHECK(!optimizer_step(p, bad, s, o).applied);
  CHECK(s.skipped == 1);
  CHECK(p.at("w") == before.at("w"));
  CHECK(s.step == 1);
}

TEST_CASE("rectified Adam matches a scalar reference", "[neural][optimizer]") {
  RAdamOptions o;
  o.lr = 1e-3;
  o.clip_norm = 1e9;
  ScalarRAdam ref;
  ParamMap<float> p{{"w", Tensor<float>::Constant(1, 1, 0.5f)}};
  OptimizerState s;
  double expected = 0.5;
  bool saw_momentum = false, saw_adaptive = false;
  for (int k = 0; k < 30; ++k) {
    const double grad = std::sin(0.7 * k) + 0.3;
    const StepReport r = optimizer_step(p, {{"w", Tensor<float>::Constant(1, 1, float(grad))}}, s, o);
    expected = ref.step(expected, grad);
    (r.adaptive ? saw_adaptive : saw_momentum) = true;
    CHECK(p.at("w")(0, 0) == Approx(expected).epsilon(1e-5));
  }
  CHECK(saw_momentum);
  CHECK(saw_adaptive);
  CHECK(radam_rho(0.999, 1) <= 4.0);
}

TEST_CASE("checkpoint round trip", "[neural][checkpoint]") {
  const ModelConfig c = tiny_config();
  const TinyGraph g = tiny_graph(7);
  Checkpoint ck;
  ck.model = c;
  ck.params = init_params(c, 21);
  for (auto& [name, p] : ck.params) p.setRandom();
  ck.seed = 99;
  ck.hyper = {{"lr", 1e-4}};
  ParamMap<float> grads = ck.params;
  optimizer_step(ck.params, grads, ck.optimizer, RAdamOptions{});

  const auto dir = lmp::testing::temp_dir("ckpt");
  save_checkpoint(ck, dir / "model.ckpt");
  const Checkpoint back = load_checkpoint(dir / "model.ckpt");
  CHECK(back.seed == 99);
  CHECK(back.optimizer.step == 1);
  CHECK(back.hyper == ck.hyper);
  CHECK(back.optimizer.m.at("dec.D2.W") == ck.optimizer.m.at("dec.D2.W"));
  Rng rng(4);
  const Tensor<float> eps = draw_noise<float>(g.input.dualized_nodes.size(), c, rng);
  CHECK(run(c, ck.params, g.input, eps) == run(back.model, back.params, g.input, eps));

  {
    std::ofstream out(dir / "short.ckpt", std::ios::binary);
    out << "LMPCKPT";
  }
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), DataError);
  std::filesystem::resize_file(dir / "model.ckpt", 200);
  CHECK_THROWS_AS(load_checkpoint(dir / "model.ckpt"), DataError);
}
