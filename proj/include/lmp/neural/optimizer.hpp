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

#ifndef LMP_NEURAL_OPTIMIZER_HPP_
#define LMP_NEURAL_OPTIMIZER_HPP_

#include "lmp/neural/model.hpp"

namespace lmp::nn {

struct RAdamOptions {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 5.0;
  double decay = 0.9;
  long decay_every = 100000;
  double min_lr = 1e-10;
};

struct OptimizerState {
  long step = 0;     // applied updates
  long skipped = 0;  // updates rejected for non-finite gradients
  ParamMap<float> m;
  ParamMap<float> v;
};

/// base * decay^floor(step / decay_every), floored at min_lr.
double learning_rate(const RAdamOptions& o, long step);

/// Length of the variance rectification term after `t` updates; the
/// adaptive branch is taken once it exceeds 4.
double radam_rho(double beta2, long t);

struct StepReport {
  bool applied = false;
  double gnorm = 0.0;  // before clipping
  double lr = 0.0;
  bool adaptive = false;
};

/// Global norm clipping, then one rectified Adam update. Non-finite
/// gradients leave the parameters untouched and count as skipped.
StepReport optimizer_step(ParamMap<float>& params, ParamMap<float> grads,
                          OptimizerState& state, const RAdamOptions& options);

double global_norm(const ParamMap<float>& grads);

}  // namespace lmp::nn

#endif  // LMP_NEURAL_OPTIMIZER_HPP_
