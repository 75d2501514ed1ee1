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

#include "lmp/common.hpp"

#include <cmath>
#include <cstdio>

namespace lmp {

std::string_view to_string(Sense s) {
  return s == Sense::minimize ? "minimize" : "maximize";
}

std::string_view to_string(Relation r) {
  switch (r) {
    case Relation::eq:
      return "eq";
    case Relation::geq:
      return "geq";
    case Relation::leq:
      return "leq";
  }
  return "eq";
}

Sense parse_sense(std::string_view s) {
  if (s == "minimize") return Sense::minimize;
  if (s == "maximize") return Sense::maximize;
  throw DataError("unknown objective sense '" + std::string(s) + "'");
}

Relation parse_relation(std::string_view s) {
  if (s == "eq") return Relation::eq;
  if (s == "geq") return Relation::geq;
  if (s == "leq") return Relation::leq;
  throw DataError("unknown row relation '" + std::string(s) + "'");
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view subsystem) {
  // splitmix64 finalizer over the mixed inputs
  std::uint64_t z = run_seed ^ fnv1a64(subsystem);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace lmp
