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

#ifndef LMP_NEURAL_GRAD_CHECK_HPP_
#define LMP_NEURAL_GRAD_CHECK_HPP_

#include <functional>
#include <string>
#include <vector>

#include "lmp/neural/model.hpp"

namespace lmp::nn {

struct GradCheckResult {
  std::string name;
  double max_rel_error = 0.0;
  /// Entry (or direction) with the largest error.
  std::string worst;
  int checked = 0;
  /// Perturbations that crossed a relu/clamp kink and were redrawn.
  int at_kinks = 0;
};

/// |a - f| / max(|a|, |f|, 1e-6).
double relative_error(double analytic, double numeric);

using Composition = std::function<Var(Tape<double>&, const std::vector<Var>&)>;

/// Central differences (step h) of sum(C .* f(inputs)) for a random C
/// against the backward pass, for every input entry up to `max_entries`
/// per input (sampled without replacement beyond that).
GradCheckResult check_composition(const std::string& name, const Composition& f,
                                  const std::vector<Tensor<double>>& inputs, Rng& rng,
                                  double h = 1e-5, int max_entries = 1 << 30);

/// Every tape primitive on random inputs.
std::vector<GradCheckResult> check_primitives(std::uint64_t seed);

/// End to end through encode, latent sampling (fixed noise) and decode on a
/// 4-node graph in eval mode: per-entry checks on every parameter tensor
/// plus directional derivatives along random parameter directions.
GradCheckResult grad_check_model(const ModelConfig& config, std::uint64_t seed,
                                 int entries_per_tensor = 24, int directions = 8,
                                 double h = 1e-5);

}  // namespace lmp::nn

#endif  // LMP_NEURAL_GRAD_CHECK_HPP_
