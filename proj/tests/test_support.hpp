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

// Small builders and independent oracles shared by the unit tests.

#ifndef LMP_TESTS_TEST_SUPPORT_HPP_
#define LMP_TESTS_TEST_SUPPORT_HPP_

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "lmp/instance.hpp"
#include "lmp/brute_force.hpp"
#include "lmp/lp.hpp"

namespace lmp::testing {

inline SparseRows dense_rows(const Matrix& m) { return m.sparseView(); }

inline LpProblem make_lp(Sense sense, const Vector& c, const Matrix& a,
                         const Vector& b, std::vector<Relation> rel,
                         const Vector& lo, const Vector& up) {
  LpProblem lp;
  lp.sense = sense;
  lp.objective = c;
  lp.rows = dense_rows(a);
  lp.rhs = b;
  lp.relation = std::move(rel);
  lp.lower = lo;
  lp.upper = up;
  return lp;
}

/// One arc 0 -> 1 carrying one commodity 0 -> 1.
inline McInstance single_arc_mc(double fixed, double routing, double volume,
                                double capacity) {
  McInstance m;
  m.num_nodes = 2;
  m.arcs = {{0, 1, capacity, fixed}};
  m.commodities = {{0, 1, volume}};
  m.routing_cost = Matrix::Constant(1, 1, routing);
  return m;
}

inline McInstance random_mc(std::mt19937_64& rng, int nodes, int arcs,
                            int commodities) {
  McGenParams p;
  p.nodes = nodes;
  p.arcs = arcs;
  p.commodity_counts = {commodities};
  p.capacity = {12.0, 16.0, 4.0, 20.0};
  p.fixed_cost = {30.0, 100.0, 10.0, 50.0};
  McTypeParams t;
  t.volume = {4.0, 4.0, 1.0, 8.0};
  t.routing_cost = {3.0, 2.0, 1.0, 6.0};
  p.types = {t};
  return generate_mc(p, rng());
}

inline GaInstance random_ga(std::mt19937_64& rng, int bins, int items) {
  GaGenParams p;
  p.bins = bins;
  p.items = items;
  p.capacity = {12.0, 4.0, 6.0, 18.0};
  p.weight = {5.0, 9.0, 1.0, 10.0};
  p.profit = {10.0, 16.0, 1.0, 20.0};
  return generate_ga(p, rng());
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("lmp_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace lmp::testing

#endif  // LMP_TESTS_TEST_SUPPORT_HPP_
