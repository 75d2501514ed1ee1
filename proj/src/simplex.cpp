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

#include <algorithm>
#include <cmath>
#include <optional>

#include <Eigen/LU>

#include "lmp/lp.hpp"

namespace lmp {

namespace {

using SparseCols = Eigen::SparseMatrix<double, Eigen::ColMajor>;

enum class VarState : unsigned char { basic, at_lower, at_upper, free_zero };

// Columns are laid out as [structural | slack | artificial]. Row i reads
//   sum_j a_ij x_j + s_i + sigma_i * art_i = rhs_i
// with slack bounds encoding the relation: eq -> [0,0], leq -> [0,inf),
// geq -> (-inf,0].
class BoundedSimplex {
 public:
  BoundedSimplex(const LpProblem& lp, const LpOptions& options)
      : lp_(lp), opt_(options) {
    m_ = lp.rows.rows();
    n_ = lp.objective.size();
    const long cap = options.iteration_cap > 0 ? options.iteration_cap
                                               : 50L * (m_ + n_);
    cap_ = std::max(cap, 100L);
    setup();
  }

  LpSolution run() {
    LpSolution sol;
    // phase 1: minimize the sum of artificials
    if (num_art_ > 0) {
      cost_.setZero();
      cost_.tail(num_art_).setOnes();
      if (iterate() != Outcome::optimal)
        throw NumericalError("phase 1 of the simplex did not terminate");
      double infeas = 0.0;
      for (Eigen::Index j = n_ + m_; j < total_; ++j) infeas += x_[j];
      sol.pivots = pivots_;
      if (infeas > opt_.tol_feas * (1.0 + lp_.rhs.lpNorm<Eigen::Infinity>())) {
        sol.status = LpStatus::infeasible;
        return sol;
      }
      for (Eigen::Index j = n_ + m_; j < total_; ++j) {
        up_[j] = 0.0;
        if (state_[j] != VarState::basic) {
          state_[j] = VarState::at_lower;
          x_[j] = 0.0;
        }
      }
    }
    const double s = sense_sign(lp_.sense);
    cost_.setZero();
    cost_.head(n_) = s * lp_.objective;
    const Outcome out = iterate();
    sol.pivots = pivots_;
    if (out == Outcome::unbounded) {
      sol.status = LpStatus::unbounded;
      return sol;
    }
    refactor();
    Vector cb(m_);
    for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
    const Vector y = btran(cb);

    sol.status = LpStatus::optimal;
    sol.x = x_.head(n_);
    sol.row_duals = s * y;
    sol.reduced_costs =
        lp_.objective - lp_.rows.transpose() * sol.row_duals;
    sol.objective = lp_.objective.dot(sol.x);
    return sol;
  }

 private:
  enum class Outcome { optimal, unbounded };

  void setup() {
    // Initial point: structurals at a finite bound (lower preferred).
    Vector xs(n_);
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(lp_.lower[j]))
        xs[j] = lp_.lower[j];
      else if (std::isfinite(lp_.upper[j]))
        xs[j] = lp_.upper[j];
      else
        xs[j] = 0.0;
    }
    const Vector residual = lp_.rhs - lp_.rows * xs;

    std::vector<double> slack_lo(m_), slack_up(m_), slack_val(m_);
    std::vector<Eigen::Index> art_rows;
    std::vector<double> art_sign;
    for (Eigen::Index i = 0; i < m_; ++i) {
      switch (lp_.relation[i]) {
        case Relation::eq:
          slack_lo[i] = 0.0;
          slack_up[i] = 0.0;
          break;
        case Relation::leq:
          slack_lo[i] = 0.0;
          slack_up[i] = kInfinity;
          break;
        case Relation::geq:
          slack_lo[i] = -kInfinity;
          slack_up[i] = 0.0;
          break;
      }
      const double r = residual[i];
      const double clamped = std::clamp(r, slack_lo[i], slack_up[i]);
      slack_val[i] = clamped;
      if (std::abs(r - clamped) > 0.0) {
        art_rows.push_back(i);
        art_sign.push_back(r - clamped > 0.0 ? 1.0 : -1.0);
      }
    }
    num_art_ = static_cast<Eigen::Index>(art_rows.size());
    total_ = n_ + m_ + num_art_;

    SparseCols structural = lp_.rows;  // row-major -> column-major copy
    std::vector<Eigen::Triplet<double>> entries;
    entries.reserve(structural.nonZeros() + m_ + num_art_);
    for (Eigen::Index j = 0; j < n_; ++j)
      for (SparseCols::InnerIterator it(structural, j); it; ++it)
        entries.emplace_back(it.row(), j, it.value());
    for (Eigen::Index i = 0; i < m_; ++i) entries.emplace_back(i, n_ + i, 1.0);
    for (Eigen::Index a = 0; a < num_art_; ++a)
      entries.emplace_back(art_rows[a], n_ + m_ + a, art_sign[a]);
    a_.resize(m_, total_);
    a_.setFromTriplets(entries.begin(), entries.end());
    a_.makeCompressed();

    lo_.resize(total_);
    up_.resize(total_);
    x_.resize(total_);
    cost_ = Vector::Zero(total_);
    state_.assign(total_, VarState::at_lower);
    lo_.head(n_) = lp_.lower;
    up_.head(n_) = lp_.upper;
    x_.head(n_) = xs;
    for (Eigen::Index j = 0; j < n_; ++j) {
      if (std::isfinite(lp_.lower[j]))
        state_[j] = VarState::at_lower;
      else if (std::isfinite(lp_.upper[j]))
        state_[j] = VarState::at_upper;
      else
        state_[j] = VarState::free_zero;
    }
    head_.assign(m_, -1);
    std::vector<bool> has_art(m_, false);
    for (Eigen::Index a = 0; a < num_art_; ++a) {
      const Eigen::Index col = n_ + m_ + a;
      const Eigen::Index row = art_rows[a];
      lo_[col] = 0.0;
      up_[col] = kInfinity;
      x_[col] = std::abs(residual[row] - slack_val[row]);
      state_[col] = VarState::basic;
      head_[row] = col;
      has_art[row] = true;
    }
    for (Eigen::Index i = 0; i < m_; ++i) {
      const Eigen::Index col = n_ + i;
      lo_[col] = slack_lo[i];
      up_[col] = slack_up[i];
      x_[col] = slack_val[i];
      if (has_art[i]) {
        state_[col] = slack_val[i] == slack_lo[i] ? VarState::at_lower
                                                  : VarState::at_upper;
      } else {
        state_[col] = VarState::basic;
        head_[i] = col;
      }
    }
    refactor();
  }

  void refactor() {
    etas_.clear();
    if (m_ == 0) return;
    Matrix basis = Matrix::Zero(m_, m_);
    for (Eigen::Index i = 0; i < m_; ++i)
      for (SparseCols::InnerIterator it(a_, head_[i]); it; ++it)
        basis(it.row(), i) = it.value();
    lu_.compute(basis);
    // recompute basic values from the nonbasic ones
    Vector r = lp_.rhs;
    for (Eigen::Index j = 0; j < total_; ++j) {
      if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
      for (SparseCols::InnerIterator it(a_, j); it; ++it)
        r[it.row()] -= it.value() * x_[j];
    }
    const Vector xb = lu_.solve(r);
    for (Eigen::Index i = 0; i < m_; ++i) x_[head_[i]] = xb[i];
  }

  Vector ftran(const Vector& v) const {
    Vector w = lu_.solve(v);
    for (const Eta& e : etas_) {
      const double pivot = w[e.row] / e.col[e.row];
      w -= pivot * e.col;
      w[e.row] = pivot;
    }
    return w;
  }

  Vector btran(const Vector& v) const {
    Vector z = v;
    for (auto it = etas_.rbegin(); it != etas_.rend(); ++it) {
      const double dot = z.dot(it->col) - z[it->row] * it->col[it->row];
      z[it->row] = (z[it->row] - dot) / it->col[it->row];
    }
    return lu_.transpose().solve(z);
  }

  Vector column(Eigen::Index j) const {
    Vector c = Vector::Zero(m_);
    for (SparseCols::InnerIterator it(a_, j); it; ++it) c[it.row()] = it.value();
    return c;
  }

  bool eligible(Eigen::Index j, double d) const {
    switch (state_[j]) {
      case VarState::basic:
        return false;
      case VarState::at_lower:
        return d < -opt_.tol_dual && up_[j] > lo_[j];
      case VarState::at_upper:
        return d > opt_.tol_dual && up_[j] > lo_[j];
      case VarState::free_zero:
        return std::abs(d) > opt_.tol_dual;
    }
    return false;
  }

  Outcome iterate() {
    int stall = 0;
    bool bland = false;
    int since_refactor = 0;
    for (;;) {
      if (pivots_ >= cap_)
        throw NumericalError("simplex iteration cap exceeded after " +
                             std::to_string(pivots_) + " pivots");
      Vector cb(m_);
      for (Eigen::Index i = 0; i < m_; ++i) cb[i] = cost_[head_[i]];
      const Vector y = m_ > 0 ? btran(cb) : Vector();
      const Vector d =
          m_ > 0 ? Vector(cost_ - a_.transpose() * y) : Vector(cost_);

      Eigen::Index q = -1;
      double best = 0.0;
      for (Eigen::Index j = 0; j < total_; ++j) {
        if (!eligible(j, d[j])) continue;
        if (bland) {
          q = j;
          break;
        }
        if (std::abs(d[j]) > best) {
          best = std::abs(d[j]);
          q = j;
        }
      }
      if (q < 0) return Outcome::optimal;

      const double dir = d[q] < 0.0 ? 1.0 : -1.0;
      const Vector alpha = m_ > 0 ? ftran(column(q)) : Vector();
      const double flip = up_[q] - lo_[q];  // may be inf

      // rate_i = d x_B[i] / d theta
      auto rate = [&](Eigen::Index i) { return -dir * alpha[i]; };
      auto distance = [&](Eigen::Index i, double slackness) {
        const Eigen::Index col = head_[i];
        const double r = rate(i);
        if (r < -opt_.tol_pivot && std::isfinite(lo_[col]))
          return (x_[col] - lo_[col] + slackness) / -r;
        if (r > opt_.tol_pivot && std::isfinite(up_[col]))
          return (up_[col] - x_[col] + slackness) / r;
        return kInfinity;
      };

      Eigen::Index leave = -1;
      double theta = kInfinity;
      if (!bland) {
        // Harris two-pass ratio test
        const double harris = opt_.tol_feas * 0.1;
        double bound = kInfinity;
        for (Eigen::Index i = 0; i < m_; ++i)
          bound = std::min(bound, distance(i, harris));
        if (flip <= bound) {
          theta = flip;
        } else if (std::isfinite(bound)) {
          double big = 0.0;
          for (Eigen::Index i = 0; i < m_; ++i) {
            const double t = distance(i, 0.0);
            if (t <= bound && std::abs(alpha[i]) > big) {
              big = std::abs(alpha[i]);
              leave = i;
              theta = std::max(t, 0.0);
            }
          }
          if (leave < 0) theta = flip;
        }
      } else {
        // exact ratio test, ties broken by the smallest column index
        for (Eigen::Index i = 0; i < m_; ++i) {
          const double t = std::max(distance(i, 0.0), 0.0);
          if (!std::isfinite(t)) continue;
          if (t < theta - 1e-12) {
            theta = t;
            leave = i;
          } else if (t <= theta + 1e-12 && head_[i] < head_[leave]) {
            theta = std::min(theta, t);
            leave = i;
          }
        }
        if (flip <= theta) {
          theta = flip;
          leave = -1;
        }
      }
      if (!std::isfinite(theta)) return Outcome::unbounded;

      ++pivots_;
      x_[q] += dir * theta;
      for (Eigen::Index i = 0; i < m_; ++i) x_[head_[i]] += rate(i) * theta;

      if (leave < 0) {
        // bound flip of the entering variable
        if (dir > 0) {
          state_[q] = VarState::at_upper;
          x_[q] = up_[q];
        } else {
          state_[q] = VarState::at_lower;
          x_[q] = lo_[q];
        }
      } else {
        const Eigen::Index out = head_[leave];
        if (rate(leave) < 0.0) {
          state_[out] = VarState::at_lower;
          x_[out] = lo_[out];
        } else {
          state_[out] = VarState::at_upper;
          x_[out] = up_[out];
        }
        state_[q] = VarState::basic;
        head_[leave] = q;
        etas_.push_back({leave, alpha});
        if (++since_refactor >= opt_.refactor_every) {
          refactor();
          since_refactor = 0;
        }
      }

      if (theta <= 1e-12) {
        if (++stall >= opt_.bland_after) bland = true;
      } else {
        stall = 0;
        bland = false;
      }
    }
  }

  struct Eta {
    Eigen::Index row;
    Vector col;
  };

  const LpProblem& lp_;
  LpOptions opt_;
  Eigen::Index m_ = 0, n_ = 0, num_art_ = 0, total_ = 0;
  long cap_ = 0;
  long pivots_ = 0;
  SparseCols a_;
  Vector lo_, up_, x_, cost_;
  std::vector<VarState> state_;
  std::vector<Eigen::Index> head_;
  Eigen::PartialPivLU<Matrix> lu_;
  std::vector<Eta> etas_;
};

}  // namespace

LpProblem continuous_relaxation(const MilpInstance& milp) {
  milp.validate();
  LpProblem lp;
  lp.sense = milp.sense;
  lp.objective = milp.objective;
  lp.rows.resize(milp.num_rows(), milp.num_vars());
  std::vector<Eigen::Triplet<double>> entries;
  entries.reserve(milp.dualized.matrix.nonZeros() + milp.kept.matrix.nonZeros());
  for (Eigen::Index r = 0; r < milp.dualized.rows(); ++r)
    for (SparseRows::InnerIterator it(milp.dualized.matrix, r); it; ++it)
      entries.emplace_back(r, it.col(), it.value());
  const Eigen::Index off = milp.dualized.rows();
  for (Eigen::Index r = 0; r < milp.kept.rows(); ++r)
    for (SparseRows::InnerIterator it(milp.kept.matrix, r); it; ++it)
      entries.emplace_back(off + r, it.col(), it.value());
  lp.rows.setFromTriplets(entries.begin(), entries.end());
  lp.rhs.resize(milp.num_rows());
  lp.rhs << milp.dualized.rhs, milp.kept.rhs;
  lp.relation = milp.dualized.relation;
  lp.relation.insert(lp.relation.end(), milp.kept.relation.begin(),
                     milp.kept.relation.end());
  lp.lower = milp.lower;
  lp.upper = milp.upper;
  return lp;
}

LpSolution solve_lp(const LpProblem& lp, const LpOptions& options) {
  if (lp.rows.cols() != lp.objective.size() || lp.rhs.size() != lp.rows.rows() ||
      static_cast<Eigen::Index>(lp.relation.size()) != lp.rows.rows() ||
      lp.lower.size() != lp.objective.size() ||
      lp.upper.size() != lp.objective.size())
    throw DataError("inconsistent LP dimensions");
  BoundedSimplex simplex(lp, options);
  return simplex.run();
}

LpSolution solve_cr(const MilpInstance& milp, const LpOptions& options) {
  return solve_lp(continuous_relaxation(milp), options);
}

}  // namespace lmp
