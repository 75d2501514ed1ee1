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

#ifndef LMP_NEURAL_MODEL_HPP_
#define LMP_NEURAL_MODEL_HPP_

#include <map>
#include <optional>
#include <string>
#include <type_traits>
#include <vector>

#include <json.hpp>

#include "lmp/neural/tape.hpp"

namespace lmp::nn {

enum class Architecture { gnn, mlp };

struct ModelConfig {
  Architecture arch = Architecture::gnn;
  int hidden = 64;      // H, even: the latent z has H/2 entries
  int blocks = 5;       // L
  double dropout = 0.25;
  int in_features = 8;
  int embed = 250;      // width of the first input layer
  int mlp_width = 1000;
  int decoder_width = 250;
  double sigma_lo = -5.0;
  double sigma_hi = 2.0;

  int latent() const { return hidden / 2; }
  /// Throws ParameterError on inconsistent sizes.
  void validate() const;
};

nlohmann::json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const nlohmann::json& j);

/// Named parameters, ordered by name.
template <typename T>
using ParamMap = std::map<std::string, Tensor<T>>;

/// Glorot-uniform weights, zero biases, unit layer-norm gains. The last
/// decoder layer starts at zero so an untrained model returns the
/// projected CR multipliers.
ParamMap<float> init_params(const ModelConfig& config, std::uint64_t seed);

template <typename To, typename From>
ParamMap<To> cast_params(const ParamMap<From>& p) {
  ParamMap<To> out;
  for (const auto& [name, t] : p) out.emplace(name, t.template cast<To>());
  return out;
}

/// Throws ParameterError when a tensor is missing or misshapen.
template <typename T>
void check_params(const ModelConfig& config, const ParamMap<T>& params);

std::map<std::string, std::pair<int, int>> param_shapes(const ModelConfig& config);

/// Parameters placed on a tape.
template <typename T>
struct Bound {
  std::map<std::string, Var> vars;
  Var operator[](const std::string& name) const { return vars.at(name); }
};

template <typename T>
Bound<T> bind_params(Tape<T>& tape, const ParamMap<T>& params, bool trainable = true) {
  Bound<T> b;
  for (const auto& [name, t] : params)
    b.vars.emplace(name, trainable ? tape.parameter(t) : tape.constant(t));
  return b;
}

template <typename T>
ParamMap<T> collect_grads(const Tape<T>& tape, const Bound<T>& bound) {
  ParamMap<T> g;
  for (const auto& [name, v] : bound.vars) g.emplace(name, tape.grad(v));
  return g;
}

enum class Mode { train, eval };

/// Per-instance inputs of the network.
template <typename T>
struct GraphInput {
  const SparseTensor<T>* adjacency = nullptr;  // GNN only
  Tensor<T> features;                           // nodes x 8 (GNN) or rows x 22 (MLP)
  std::vector<Eigen::Index> dualized_nodes;     // GNN only
  Tensor<T> lambda;                             // dualized x 1, projected CR duals
  std::vector<bool> softplus_rows;              // inequality-dualized rows
};

/// h0 = F2(relu(F1(e))); each block applies
///   h' = h + DO(CONV(LN(h))),  h = h' + DO(MLP(LN(h')))
/// with CONV(x) = A x W + b. Returns h at the dualized constraint nodes.
template <typename T>
Var gnn_encode(Tape<T>& tape, const Bound<T>& p, const ModelConfig& c,
               const GraphInput<T>& in, Mode mode, Rng* rng);

struct Latent {
  Var z;
  Var mu;
  Var log_sigma;  // after clipping
};

/// z = mu + exp(clip(sigma)) * eps with [mu; sigma] = h. eps has the shape
/// of mu; an empty eps means zero noise.
template <typename T>
Latent sample_latent(Tape<T>& tape, Var h, const ModelConfig& c,
                     const std::type_identity_t<Tensor<T>>& eps);

struct DecodeOptions {
  /// Add the CR multipliers before the projection (off for -sum and -cr).
  bool add_lambda = true;
};

/// delta = D2(relu(D1(z))); pi = proj(lambda + delta) with softplus on
/// inequality rows and identity on equality rows.
template <typename T>
Var decode(Tape<T>& tape, const Bound<T>& p, Var z, const GraphInput<T>& in,
           const DecodeOptions& options);

/// Flat baseline: delta = W2 relu(W1 x), then the same projection.
template <typename T>
Var mlp_forward(Tape<T>& tape, const Bound<T>& p, const GraphInput<T>& in,
                const DecodeOptions& options);

/// Full forward pass to multipliers (dualized x 1).
template <typename T>
Var forward(Tape<T>& tape, const Bound<T>& p, const ModelConfig& c,
            const GraphInput<T>& in, Mode mode, Rng* dropout_rng,
            const Tensor<T>& eps, const DecodeOptions& options);

/// Standard-normal noise for the latent of `rows` constraints.
template <typename T>
Tensor<T> draw_noise(Eigen::Index rows, const ModelConfig& c, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Tensor<T> eps(rows, c.latent());
  for (Eigen::Index i = 0; i < eps.size(); ++i) eps.data()[i] = T(normal(rng));
  return eps;
}

}  // namespace lmp::nn

#endif  // LMP_NEURAL_MODEL_HPP_
