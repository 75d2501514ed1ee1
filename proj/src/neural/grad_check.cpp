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

#include "lmp/neural/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace lmp::nn {

namespace {

using Mat = Tensor<double>;

Mat random_normal(Eigen::Index r, Eigen::Index c, Rng& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Mat m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

// Random entries of `size`, all of them when size <= limit.
std::vector<Eigen::Index> pick_entries(Eigen::Index size, int limit, Rng& rng) {
  std::vector<Eigen::Index> idx(size);
  std::iota(idx.begin(), idx.end(), 0);
  if (size > limit) {
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(limit);
  }
  return idx;
}

struct Probe {
  double loss = 0.0;
  std::vector<bool> kinks;
};

void note(GradCheckResult& r, double analytic, double numeric, const std::string& where) {
  const double e = relative_error(analytic, numeric);
  ++r.checked;
  if (e > r.max_rel_error || !std::isfinite(e)) {
    r.max_rel_error = std::isfinite(e) ? e : kInfinity;
    r.worst = where;
  }
}

}  // namespace

double relative_error(double analytic, double numeric) {
  const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
  return std::abs(analytic - numeric) / scale;
}

GradCheckResult check_composition(const std::string& name, const Composition& f,
                                  const std::vector<Mat>& inputs, Rng& rng, double h,
                                  int max_entries) {
  GradCheckResult r;
  r.name = name;
  Mat weights;
  auto probe = [&](const std::vector<Mat>& in) {
    Tape<double> tape;
    tape.track_kinks(true);
    std::vector<Var> vars;
    for (const Mat& m : in) vars.push_back(tape.constant(m));
    const Var out = f(tape, vars);
    if (weights.size() == 0)
      weights = random_normal(tape.value(out).rows(), tape.value(out).cols(), rng);
    return Probe{tape.value(out).cwiseProduct(weights).sum(), tape.kink_pattern()};
  };

  Tape<double> tape;
  tape.track_kinks(true);
  std::vector<Var> vars;
  for (const Mat& m : inputs) vars.push_back(tape.parameter(m));
  const Var out = f(tape, vars);
  weights = random_normal(tape.value(out).rows(), tape.value(out).cols(), rng);
  tape.backward(tape.weighted_sum(out, weights));
  const std::vector<bool> base = tape.kink_pattern();

  std::vector<Mat> work = inputs;
  for (size_t k = 0; k < inputs.size(); ++k) {
    for (Eigen::Index e : pick_entries(inputs[k].size(), max_entries, rng)) {
      const double orig = work[k].data()[e];
      work[k].data()[e] = orig + h;
      const Probe plus = probe(work);
      work[k].data()[e] = orig - h;
      const Probe minus = probe(work);
      work[k].data()[e] = orig;
      if (plus.kinks != base || minus.kinks != base) {
        ++r.at_kinks;
        continue;
      }
      note(r, tape.grad(vars[k]).data()[e], (plus.loss - minus.loss) / (2.0 * h),
           "input " + std::to_string(k) + " entry " + std::to_string(e));
    }
  }
  return r;
}

std::vector<GradCheckResult> check_primitives(std::uint64_t seed) {
  Rng rng(seed);
  std::vector<GradCheckResult> out;
  auto run = [&](const std::string& name, const Composition& f, std::vector<Mat> in) {
    out.push_back(check_composition(name, f, in, rng));
  };
  // keeps relu/clamp inputs away from their kinks
  auto off_kink = [&](Eigen::Index r, Eigen::Index c, double center) {
    Mat m = random_normal(r, c, rng);
    for (Eigen::Index i = 0; i < m.size(); ++i)
      m.data()[i] = center + (m.data()[i] >= 0 ? 0.1 : -0.1) + 0.5 * m.data()[i];
    return m;
  };

  run("linear", [](Tape<double>& t, const std::vector<Var>& v) { return t.linear(v[0], v[1], v[2]); },
      {random_normal(3, 4, rng), random_normal(4, 5, rng), random_normal(1, 5, rng)});
  run("matmul", [](Tape<double>& t, const std::vector<Var>& v) { return t.matmul(v[0], v[1]); },
      {random_normal(3, 4, rng), random_normal(4, 2, rng)});
  const auto adjacency = std::make_shared<SparseTensor<double>>(
      random_normal(4, 3, rng).cwiseMax(0.0).sparseView());
  run("sparse_dense_matmul",
      [adjacency](Tape<double>& t, const std::vector<Var>& v) { return t.spmm(*adjacency, v[0]); },
      {random_normal(3, 2, rng)});
  run("add", [](Tape<double>& t, const std::vector<Var>& v) { return t.add(v[0], v[1]); },
      {random_normal(3, 4, rng), random_normal(3, 4, rng)});
  run("mul", [](Tape<double>& t, const std::vector<Var>& v) { return t.mul(v[0], v[1]); },
      {random_normal(3, 4, rng), random_normal(3, 4, rng)});
  run("scale", [](Tape<double>& t, const std::vector<Var>& v) { return t.scale(v[0], 1.7); },
      {random_normal(2, 3, rng)});
  run("relu", [](Tape<double>& t, const std::vector<Var>& v) { return t.relu(v[0]); },
      {off_kink(3, 4, 0.0)});
  run("softplus", [](Tape<double>& t, const std::vector<Var>& v) { return t.softplus(v[0]); },
      {random_normal(3, 4, rng, 3.0)});
  run("softplus_rows",
      [](Tape<double>& t, const std::vector<Var>& v) {
        return t.softplus_rows(v[0], {true, false, true});
      },
      {random_normal(3, 2, rng, 2.0)});
  run("exp", [](Tape<double>& t, const std::vector<Var>& v) { return t.exp(v[0]); },
      {random_normal(3, 3, rng)});
  run("clamp", [](Tape<double>& t, const std::vector<Var>& v) { return t.clamp(v[0], -0.5, 0.5); },
      {off_kink(3, 4, 0.0)});
  run("layer_norm",
      [](Tape<double>& t, const std::vector<Var>& v) { return t.layer_norm(v[0], v[1], v[2]); },
      {random_normal(3, 6, rng), random_normal(1, 6, rng), random_normal(1, 6, rng)});
  run("dropout",
      [](Tape<double>& t, const std::vector<Var>& v) {
        Rng mask_rng(123);  // same mask on every evaluation
        return t.dropout(v[0], 0.25, mask_rng);
      },
      {random_normal(4, 5, rng)});
  run("concat", [](Tape<double>& t, const std::vector<Var>& v) { return t.concat_cols(v[0], v[1]); },
      {random_normal(3, 2, rng), random_normal(3, 4, rng)});
  run("split",
      [](Tape<double>& t, const std::vector<Var>& v) {
        const auto [a, b] = t.split_cols(v[0], 2);
        return t.mul(t.concat_cols(b, b), t.concat_cols(a, t.scale(a, 2.0)));
      },
      {random_normal(3, 4, rng)});
  run("gather_rows",
      [](Tape<double>& t, const std::vector<Var>& v) { return t.gather_rows(v[0], {2, 0, 2}); },
      {random_normal(4, 3, rng)});
  run("reduce_sum", [](Tape<double>& t, const std::vector<Var>& v) { return t.reduce_sum(v[0]); },
      {random_normal(3, 4, rng)});
  const Mat c = random_normal(3, 4, rng);
  run("weighted_sum",
      [c](Tape<double>& t, const std::vector<Var>& v) { return t.weighted_sum(v[0], c); },
      {random_normal(3, 4, rng)});
  return out;
}

GradCheckResult grad_check_model(const ModelConfig& config, std::uint64_t seed,
                                 int entries_per_tensor, int directions, double h) {
  Rng rng(seed);
  GradCheckResult r;
  r.name = config.arch == Architecture::gnn ? "gnn end-to-end" : "mlp end-to-end";

  // 2 variables and 2 constraints; constraint 2 holds both variables.
  const std::vector<Eigen::Triplet<double>> trips{
      {0, 0, 1.0}, {1, 1, 1.0}, {2, 2, 1.0}, {3, 3, 1.0}, {0, 2, 1.0},
      {2, 0, 1.0}, {1, 2, 1.0}, {2, 1, 1.0}, {1, 3, 1.0}, {3, 1, 1.0}};
  SparseTensor<double> adjacency(4, 4);
  adjacency.setFromTriplets(trips.begin(), trips.end());
  Eigen::VectorXd deg = Eigen::VectorXd::Zero(4);
  for (const auto& t : trips) deg[t.row()] += 1.0;
  for (int k = 0; k < adjacency.outerSize(); ++k)
    for (SparseTensor<double>::InnerIterator it(adjacency, k); it; ++it)
      it.valueRef() /= std::sqrt(deg[it.row()] * deg[it.col()]);

  GraphInput<double> in;
  in.adjacency = &adjacency;
  in.dualized_nodes = {2, 3};
  in.features = config.arch == Architecture::gnn ? random_normal(4, config.in_features, rng)
                                                 : random_normal(2, config.in_features, rng);
  in.lambda = random_normal(2, 1, rng);
  in.softplus_rows = {true, false};
  const Mat eps = random_normal(2, config.latent(), rng);

  ParamMap<double> params = cast_params<double>(init_params(config, rng()));
  for (auto& [name, p] : params) p += random_normal(p.rows(), p.cols(), rng, 0.05);
  const Mat weights = random_normal(2, 1, rng);

  auto loss_of = [&](const ParamMap<double>& p, Tape<double>& tape, Bound<double>* bound) {
    tape.track_kinks(true);
    Bound<double> b = bind_params(tape, p, bound != nullptr);
    const Var pi = forward(tape, b, config, in, Mode::eval, nullptr, eps, DecodeOptions{});
    const Var loss = tape.weighted_sum(pi, weights);
    if (bound) *bound = std::move(b);
    return loss;
  };
  auto probe = [&](const ParamMap<double>& p) {
    Tape<double> tape;
    const Var loss = loss_of(p, tape, nullptr);
    return Probe{tape.value(loss)(0, 0), tape.kink_pattern()};
  };

  Tape<double> tape;
  Bound<double> bound;
  const Var loss = loss_of(params, tape, &bound);
  tape.backward(loss);
  const ParamMap<double> grads = collect_grads(tape, bound);
  const std::vector<bool> base = tape.kink_pattern();

  ParamMap<double> work = params;
  for (auto& [name, p] : work) {
    const Mat& g = grads.at(name);
    int done = 0;
    for (Eigen::Index e : pick_entries(p.size(), static_cast<int>(p.size()), rng)) {
      if (done >= entries_per_tensor) break;
      const double orig = p.data()[e];
      p.data()[e] = orig + h;
      const Probe plus = probe(work);
      p.data()[e] = orig - h;
      const Probe minus = probe(work);
      p.data()[e] = orig;
      if (plus.kinks != base || minus.kinks != base) {
        ++r.at_kinks;
        continue;
      }
      note(r, g.data()[e], (plus.loss - minus.loss) / (2.0 * h),
           name + "[" + std::to_string(e) + "]");
      ++done;
    }
  }

  for (int d = 0, attempts = 0; d < directions && attempts < 20 * directions; ++attempts) {
    ParamMap<double> dir;
    double sq = 0.0;
    for (const auto& [name, p] : params) {
      dir.emplace(name, random_normal(p.rows(), p.cols(), rng));
      sq += dir.at(name).squaredNorm();
    }
    double analytic = 0.0;
    ParamMap<double> plus = params, minus = params;
    for (auto& [name, v] : dir) {
      v /= std::sqrt(sq);
      analytic += grads.at(name).cwiseProduct(v).sum();
      plus.at(name) += h * v;
      minus.at(name) -= h * v;
    }
    const Probe pp = probe(plus), pm = probe(minus);
    if (pp.kinks != base || pm.kinks != base) {
      ++r.at_kinks;
      continue;
    }
    note(r, analytic, (pp.loss - pm.loss) / (2.0 * h), "direction " + std::to_string(d));
    ++d;
  }
  return r;
}

}  // namespace lmp::nn
