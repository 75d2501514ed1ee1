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

#include "lmp/neural/model.hpp"

#include <cmath>

namespace lmp::nn {

namespace {

std::string block_name(int l, const char* part) {
  return "block" + std::to_string(l) + "." + part;
}

}  // namespace

void ModelConfig::validate() const {
  if (arch == Architecture::gnn) {
    if (hidden < 2 || hidden % 2 != 0)
      throw ParameterError("model.hidden must be even and at least 2");
    if (blocks < 1) throw ParameterError("model.blocks must be at least 1");
    if (mlp_width < 1 || embed < 1)
      throw ParameterError("model widths must be positive");
  }
  if (in_features < 1 || decoder_width < 1)
    throw ParameterError("model widths must be positive");
  if (dropout < 0.0 || dropout >= 1.0) throw ParameterError("model.dropout must be in [0, 1)");
  if (!(sigma_lo < sigma_hi)) throw ParameterError("model.sigma_lo must be below sigma_hi");
}

nlohmann::json to_json(const ModelConfig& c) {
  return {{"arch", c.arch == Architecture::gnn ? "gnn" : "mlp"},
          {"hidden", c.hidden},
          {"blocks", c.blocks},
          {"dropout", c.dropout},
          {"in_features", c.in_features},
          {"embed", c.embed},
          {"mlp_width", c.mlp_width},
          {"decoder_width", c.decoder_width},
          {"sigma_lo", c.sigma_lo},
          {"sigma_hi", c.sigma_hi}};
}

ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "arch") {
      const std::string a = v.get<std::string>();
      if (a == "gnn") c.arch = Architecture::gnn;
      else if (a == "mlp") c.arch = Architecture::mlp;
      else throw ParameterError("unknown model.arch '" + a + "'");
    } else if (key == "hidden") c.hidden = v.get<int>();
    else if (key == "blocks") c.blocks = v.get<int>();
    else if (key == "dropout") c.dropout = v.get<double>();
    else if (key == "in_features") c.in_features = v.get<int>();
    else if (key == "embed") c.embed = v.get<int>();
    else if (key == "mlp_width") c.mlp_width = v.get<int>();
    else if (key == "decoder_width") c.decoder_width = v.get<int>();
    else if (key == "sigma_lo") c.sigma_lo = v.get<double>();
    else if (key == "sigma_hi") c.sigma_hi = v.get<double>();
    else throw ParameterError("unknown model key '" + key + "'");
  }
  c.validate();
  return c;
}

std::map<std::string, std::pair<int, int>> param_shapes(const ModelConfig& c) {
  c.validate();
  std::map<std::string, std::pair<int, int>> s;
  auto lin = [&](const std::string& name, int in, int out) {
    s[name + ".W"] = {in, out};
    s[name + ".b"] = {1, out};
  };
  if (c.arch == Architecture::mlp) {
    lin("mlp.L1", c.in_features, c.decoder_width);
    lin("mlp.L2", c.decoder_width, 1);
    return s;
  }
  const int h = c.hidden;
  lin("enc.F1", c.in_features, c.embed);
  lin("enc.F2", c.embed, h);
  for (int l = 0; l < c.blocks; ++l) {
    lin(block_name(l, "conv"), h, h);
    lin(block_name(l, "mlp1"), h, c.mlp_width);
    lin(block_name(l, "mlp2"), c.mlp_width, h);
    s[block_name(l, "ln1.g")] = {1, h};
    s[block_name(l, "ln1.b")] = {1, h};
    s[block_name(l, "ln2.g")] = {1, h};
    s[block_name(l, "ln2.b")] = {1, h};
  }
  lin("dec.D1", c.latent(), c.decoder_width);
  lin("dec.D2", c.decoder_width, 1);
  return s;
}

ParamMap<float> init_params(const ModelConfig& c, std::uint64_t seed) {
  Rng rng(seed);
  ParamMap<float> p;
  // std::map iteration is sorted, so the draw order is fixed by the names
  for (const auto& [name, shape] : param_shapes(c)) {
    const auto [rows, cols] = shape;
    Tensor<float> t = Tensor<float>::Zero(rows, cols);
    const bool is_gain = name.ends_with(".g");
    const bool is_weight = name.ends_with(".W");
    const bool is_output = name == "dec.D2.W" || name == "mlp.L2.W";
    if (is_gain) t.setOnes();
    if (is_weight && !is_output) {
      const double limit = std::sqrt(6.0 / (rows + cols));
      std::uniform_real_distribution<double> u(-limit, limit);
      for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(u(rng));
    }
    p.emplace(name, std::move(t));
  }
  return p;
}

template <typename T>
void check_params(const ModelConfig& c, const ParamMap<T>& params) {
  const auto shapes = param_shapes(c);
  if (shapes.size() != params.size())
    throw ParameterError("parameter count " + std::to_string(params.size()) +
                         " does not match the model (" + std::to_string(shapes.size()) + ")");
  for (const auto& [name, shape] : shapes) {
    const auto it = params.find(name);
    if (it == params.end()) throw ParameterError("missing parameter '" + name + "'");
    if (it->second.rows() != shape.first || it->second.cols() != shape.second)
      throw ParameterError("parameter '" + name + "' has the wrong shape");
  }
}

template <typename T>
Var gnn_encode(Tape<T>& tape, const Bound<T>& p, const ModelConfig& c,
               const GraphInput<T>& in, Mode mode, Rng* rng) {
  if (in.adjacency == nullptr) throw ParameterError("gnn_encode: no adjacency");
  if (in.features.cols() != c.in_features)
    throw ParameterError("gnn_encode: expected " + std::to_string(c.in_features) +
                         " features per node");
  const bool train = mode == Mode::train && c.dropout > 0.0;
  if (train && rng == nullptr) throw ParameterError("gnn_encode: train mode needs a rng");
  auto drop = [&](Var x) { return train ? tape.dropout(x, c.dropout, *rng) : x; };

  const Var e = tape.constant(in.features);
  Var h = tape.linear(tape.relu(tape.linear(e, p["enc.F1.W"], p["enc.F1.b"])),
                      p["enc.F2.W"], p["enc.F2.b"]);
  for (int l = 0; l < c.blocks; ++l) {
    auto w = [&](const char* part) { return p[block_name(l, part)]; };
    const Var n1 = tape.layer_norm(h, w("ln1.g"), w("ln1.b"));
    const Var conv = tape.linear(tape.spmm(*in.adjacency, n1), w("conv.W"), w("conv.b"));
    h = tape.add(h, drop(conv));
    const Var n2 = tape.layer_norm(h, w("ln2.g"), w("ln2.b"));
    const Var hidden = tape.relu(tape.linear(n2, w("mlp1.W"), w("mlp1.b")));
    h = tape.add(h, drop(tape.linear(hidden, w("mlp2.W"), w("mlp2.b"))));
  }
  return tape.gather_rows(h, in.dualized_nodes);
}

template <typename T>
Latent sample_latent(Tape<T>& tape, Var h, const ModelConfig& c,
                     const std::type_identity_t<Tensor<T>>& eps) {
  const Eigen::Index half = c.latent();
  if (tape.value(h).cols() != 2 * half)
    throw ParameterError("sample_latent: expected " + std::to_string(2 * half) + " columns");
  const auto [mu, raw_sigma] = tape.split_cols(h, half);
  const Var sigma = tape.clamp(raw_sigma, T(c.sigma_lo), T(c.sigma_hi));
  if (eps.size() == 0) return {mu, mu, sigma};
  if (eps.rows() != tape.value(mu).rows() || eps.cols() != half)
    throw ParameterError("sample_latent: noise shape mismatch");
  const Var noise = tape.mul(tape.exp(sigma), tape.constant(eps));
  return {tape.add(mu, noise), mu, sigma};
}

namespace {

template <typename T>
Var project(Tape<T>& tape, Var delta, const GraphInput<T>& in, const DecodeOptions& o) {
  const Eigen::Index m = tape.value(delta).rows();
  Var pre = delta;
  if (o.add_lambda) {
    if (in.lambda.rows() != m || in.lambda.cols() != 1)
      throw ParameterError("decode: lambda must be " + std::to_string(m) + "x1");
    pre = tape.add(delta, tape.constant(in.lambda));
  }
  return tape.softplus_rows(pre, in.softplus_rows);
}

}  // namespace

template <typename T>
Var decode(Tape<T>& tape, const Bound<T>& p, Var z, const GraphInput<T>& in,
           const DecodeOptions& options) {
  const Var hidden = tape.relu(tape.linear(z, p["dec.D1.W"], p["dec.D1.b"]));
  const Var delta = tape.linear(hidden, p["dec.D2.W"], p["dec.D2.b"]);
  return project(tape, delta, in, options);
}

template <typename T>
Var mlp_forward(Tape<T>& tape, const Bound<T>& p, const GraphInput<T>& in,
                const DecodeOptions& options) {
  const Var x = tape.constant(in.features);
  const Var hidden = tape.relu(tape.linear(x, p["mlp.L1.W"], p["mlp.L1.b"]));
  const Var delta = tape.linear(hidden, p["mlp.L2.W"], p["mlp.L2.b"]);
  return project(tape, delta, in, options);
}

template <typename T>
Var forward(Tape<T>& tape, const Bound<T>& p, const ModelConfig& c,
            const GraphInput<T>& in, Mode mode, Rng* dropout_rng, const Tensor<T>& eps,
            const DecodeOptions& options) {
  if (c.arch == Architecture::mlp) return mlp_forward(tape, p, in, options);
  const Var h = gnn_encode(tape, p, c, in, mode, dropout_rng);
  const Latent z = sample_latent(tape, h, c, eps);
  return decode(tape, p, z.z, in, options);
}

#define LMP_INSTANTIATE(T)                                                              \
  template void check_params<T>(const ModelConfig&, const ParamMap<T>&);                \
  template Var gnn_encode<T>(Tape<T>&, const Bound<T>&, const ModelConfig&,             \
                             const GraphInput<T>&, Mode, Rng*);                         \
  template Latent sample_latent<T>(Tape<T>&, Var, const ModelConfig&, const Tensor<T>&); \
  template Var decode<T>(Tape<T>&, const Bound<T>&, Var, const GraphInput<T>&,          \
                         const DecodeOptions&);                                         \
  template Var mlp_forward<T>(Tape<T>&, const Bound<T>&, const GraphInput<T>&,          \
                              const DecodeOptions&);                                    \
  template Var forward<T>(Tape<T>&, const Bound<T>&, const ModelConfig&,                \
                          const GraphInput<T>&, Mode, Rng*, const Tensor<T>&,           \
                          const DecodeOptions&);

LMP_INSTANTIATE(float)
LMP_INSTANTIATE(double)

#undef LMP_INSTANTIATE

}  // namespace lmp::nn
