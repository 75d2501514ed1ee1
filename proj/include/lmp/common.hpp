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

#ifndef LMP_COMMON_HPP_
#define LMP_COMMON_HPP_

#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

#include <Eigen/Dense>

namespace lmp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

enum class Sense { minimize, maximize };
enum class Relation { eq, geq, leq };

/// +1 for minimization, -1 for maximization. Multiplying a maximization
/// objective by this factor turns it into the equivalent minimization.
inline double sense_sign(Sense s) { return s == Sense::minimize ? 1.0 : -1.0; }

std::string_view to_string(Sense s);
std::string_view to_string(Relation r);
Sense parse_sense(std::string_view s);
Relation parse_relation(std::string_view s);

// Error hierarchy. The command line tool maps each class to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
/// Invalid parameters or configuration (exit code 1).
class ParameterError : public Error {
 public:
  using Error::Error;
};
/// Malformed, missing or inconsistent data (exit code 2).
class DataError : public Error {
 public:
  using Error::Error;
};
/// Solver failure: iteration caps, oracle overflow (exit code 3).
class NumericalError : public Error {
 public:
  using Error::Error;
};
/// An enumeration oracle refused an instance that is too large.
class LimitError : public Error {
 public:
  using Error::Error;
};

using Rng = std::mt19937_64;

/// Derives an independent seed for a named subsystem from a run seed, so
/// that generation, dropout, latent noise and shuffling never share a stream.
std::uint64_t derive_seed(std::uint64_t run_seed, std::string_view subsystem);

/// 64-bit FNV-1a, used for problem and config fingerprints.
std::uint64_t fnv1a64(std::string_view bytes);

/// Formats a double with 17 significant digits (round-trip exact).
std::string format_double(double v);

}  // namespace lmp

#endif  // LMP_COMMON_HPP_
