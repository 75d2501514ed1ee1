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

#include "lmp/neural/optimizer.hpp"

#include <cmath>

namespace lmp::nn {

double learning_rate(const RAdamOptions& o, long step) {
  const double lr = o.lr * std::pow(o.decay, static_cast<double>(step / o.decay_every));
  return std::max(lr, o.min_lr);
}

double radam_rho(double beta2, long t) {
  const double rho_inf = 2.0 / (1.0 - beta2) - 1.0;
  const double b2t = std::pow(beta2, static_cast<double>(t));
  return rho_inf - 2.0 * static_cast<double>(t) * b2t / (1.0 - b2t);
}

double global_norm(const ParamMap<float>& grads) {
  double sq = 0.0;
  for (const auto& [name, g] : grads) sq += g.template cast<double>().squaredNorm();
  return std::sqrt(sq);
}

StepReport optimizer_step(ParamMap<float>& params, ParamMap<float> grads,
                          OptimizerState& state, const RAdamOptions& o) {
  StepReport r;
  r.gnorm = global_norm(grads);
  if (!std::isfinite(r.gnorm)) {
    ++state.skipped;
    return r;
  }
  if (grads.size() != params.size()) throw ParameterError("gradient/parameter count mismatch");
  const double clip = r.gnorm > o.clip_norm ? o.clip_norm / r.gnorm : 1.0;

  const long t = state.step + 1;
  r.lr = learning_rate(o, state.step);
  const double rho_inf = 2.0 / (1.0 - o.beta2) - 1.0;
  const double rho = radam_rho(o.beta2, t);
  const double bc1 = 1.0 - std::pow(o.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(o.beta2, static_cast<double>(t));
  r.adaptive = rho > 4.0;
  const double rect =
      r.adaptive ? std::sqrt((rho - 4.0) * (rho - 2.0) * rho_inf /
                             ((rho_inf - 4.0) * (rho_inf - 2.0) * rho))
                 : 0.0;

  for (auto& [name, p] : params) {
    const auto git = grads.find(name);
    if (git == grads.end()) throw ParameterError("no gradient for '" + name + "'");
    const Tensor<float>& g = git->second;
    auto [mit, m_new] = state.m.try_emplace(name, Tensor<float>::Zero(p.rows(), p.cols()));
    auto [vit, v_new] = state.v.try_emplace(name, Tensor<float>::Zero(p.rows(), p.cols()));
    Tensor<float>& m = mit->second;
    Tensor<float>& v = vit->second;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      const double gi = clip * g.data()[i];
      const double mi = o.beta1 * m.data()[i] + (1.0 - o.beta1) * gi;
      const double vi = o.beta2 * v.data()[i] + (1.0 - o.beta2) * gi * gi;
      m.data()[i] = static_cast<float>(mi);
      v.data()[i] = static_cast<float>(vi);
      const double mhat = mi / bc1;
      double delta = r.lr * mhat;
      if (r.adaptive) delta = r.lr * rect * mhat / (std::sqrt(vi / bc2) + o.eps);
      p.data()[i] = static_cast<float>(p.data()[i] - delta);
    }
  }
  state.step = t;
  r.applied = true;
  return r;
}

}  // namespace lmp::nn
