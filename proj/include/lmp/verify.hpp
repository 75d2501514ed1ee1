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

#ifndef LMP_VERIFY_HPP_
#define LMP_VERIFY_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "lmp/instance.hpp"

namespace lmp {

/// Outcome of one property check.
struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Alternating MC (4-8 nodes, up to 24 arcs, 1-5 commodities) and GA
/// (1-3 bins, 2-12 items) instances small enough for brute force.
std::vector<Problem> tiny_family(int count, std::uint64_t seed);

/// Alternating instances of the tiny-mc and tiny-ga presets at their
/// nominal sizes.
std::vector<Problem> tiny_preset_family(int count, std::uint64_t seed);

/// Specialized oracles against lr_generic at random multipliers, 1e-8
/// relative.
CheckResult check_oracle_exactness(const std::vector<Problem>& problems, int pis_per_instance,
                                   std::uint64_t seed, int threads = 1);

/// LR never crosses the brute-force optimum (1e-8 scale) and the reference
/// dual value is at least as tight as the continuous relaxation (1e-6).
CheckResult check_weak_duality(const std::vector<Problem>& problems, int pis_per_instance,
                               std::uint64_t seed, int threads = 1);

/// Supergradient inequality and midpoint concavity (convexity for
/// maximization) on random multiplier pairs, 1e-9 scale.
CheckResult check_concavity(const std::vector<Problem>& problems, int pairs, std::uint64_t seed);

/// KKT (1e-6) and strong duality (1e-6 relative) of every CR solve, and
/// agreement with vertex enumeration on random LPs of at most 8 variables.
CheckResult check_lp(const std::vector<Problem>& problems, int random_lps, std::uint64_t seed);

/// Finite differences of every tape primitive and of the graph and flat
/// models in double precision, 1e-4 relative, one run per seed.
CheckResult check_gradients(const std::vector<std::uint64_t>& seeds);

/// Bundle and subgradient agree within 1e-3 and the bundle reaches relative
/// epsilon 1e-4 in fewer oracle calls on at least 80% of the instances.
CheckResult check_dual_solvers(const std::vector<Problem>& problems, int threads = 1);

/// Oracle exactness, duality, concavity, LP and gradient checks. "quick"
/// takes seconds, "full" runs them at acceptance sizes.
std::vector<CheckResult> run_verify_suite(std::string_view suite, std::uint64_t seed,
                                          int threads = 1);

}  // namespace lmp

#endif  // LMP_VERIFY_HPP_
