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

// Reverse-mode differentiation over dense row-major matrices. A Tape records
// every operation with a backward rule; backward() replays them in reverse
// order. Scalar is float for training and double for gradient checks.

#ifndef LMP_NEURAL_TAPE_HPP_
#define LMP_NEURAL_TAPE_HPP_

#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "lmp/common.hpp"

namespace lmp::nn {

template <typename T>
using Tensor = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using SparseTensor = Eigen::SparseMatrix<T, Eigen::RowMajor>;

/// Handle to a tape node.
struct Var {
  int id = -1;
};

template <typename T>
class Tape {
 public:
  using Mat = Tensor<T>;

  Var constant(Mat value) { return push(std::move(value), false); }
  Var parameter(Mat value) { return push(std::move(value), true); }

  const Mat& value(Var v) const { return nodes_[v.id].value; }
  /// Gradient after backward(); empty for nodes that need none.
  const Mat& grad(Var v) const { return nodes_[v.id].grad; }
  bool needs_grad(Var v) const { return nodes_[v.id].needs_grad; }
  int size() const { return static_cast<int>(nodes_.size()); }

  /// When on, relu and clamp record which side of their kinks every entry
  /// falls on. Finite-difference checks compare these patterns to detect
  /// perturbations that cross a point of nondifferentiability.
  void track_kinks(bool on) { track_kinks_ = on; }
  const std::vector<bool>& kink_pattern() const { return kinks_; }

  /// Seeds d(out)/d(out) = 1 for a 1x1 output and propagates.
  void backward(Var out) {
    const Mat& v = value(out);
    if (v.rows() != 1 || v.cols() != 1)
      throw ParameterError("backward: output must be 1x1");
    for (int i = 0; i <= out.id; ++i) {
      Node& n = nodes_[i];
      if (n.needs_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    }
    if (!nodes_[out.id].needs_grad) return;
    nodes_[out.id].grad(0, 0) = T(1);
    for (int i = out.id; i >= 0; --i)
      if (nodes_[i].needs_grad && nodes_[i].backward) nodes_[i].backward();
  }

  // ---- primitives -------------------------------------------------------

  /// x W + b with x (n x in), W (in x out), b (1 x out).
  Var linear(Var x, Var w, Var b) {
    const Mat& xv = value(x);
    const Mat& wv = value(w);
    const Mat& bv = value(b);
    if (xv.cols() != wv.rows() || bv.rows() != 1 || bv.cols() != wv.cols())
      throw shape_error("linear", xv, wv);
    Mat y = xv * wv;
    y.rowwise() += bv.row(0);
    return record(std::move(y), {x, w, b}, [this, x, w, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(x)) grad_ref(x).noalias() += g * value(w).transpose();
      if (needs_grad(w)) grad_ref(w).noalias() += value(x).transpose() * g;
      if (needs_grad(b)) grad_ref(b) += g.colwise().sum();
    });
  }

  Var matmul(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.cols() != bv.rows()) throw shape_error("matmul", av, bv);
    Mat y = av * bv;
    return record(std::move(y), {a, b}, [this, a, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(a)) grad_ref(a).noalias() += g * value(b).transpose();
      if (needs_grad(b)) grad_ref(b).noalias() += value(a).transpose() * g;
    });
  }

  /// Sparse (constant) times dense. The matrix must outlive the tape.
  Var spmm(const SparseTensor<T>& a, Var x) {
    const Mat& xv = value(x);
    if (a.cols() != xv.rows())
      throw ParameterError("spmm: adjacency " + dims(a.rows(), a.cols()) +
                           " vs features " + dims(xv.rows(), xv.cols()));
    Mat y = a * xv;
    const SparseTensor<T>* ap = &a;
    return record(std::move(y), {x}, [this, ap, x](int self) {
      grad_ref(x).noalias() += ap->transpose() * nodes_[self].grad;
    });
  }

  Var add(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw shape_error("add", av, bv);
    return record(av + bv, {a, b}, [this, a, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(a)) grad_ref(a) += g;
      if (needs_grad(b)) grad_ref(b) += g;
    });
  }

  /// Elementwise product.
  Var mul(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows() || av.cols() != bv.cols()) throw shape_error("mul", av, bv);
    return record(av.cwiseProduct(bv), {a, b}, [this, a, b](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(a)) grad_ref(a) += g.cwiseProduct(value(b));
      if (needs_grad(b)) grad_ref(b) += g.cwiseProduct(value(a));
    });
  }

  Var scale(Var a, T c) {
    return record(value(a) * c, {a}, [this, a, c](int self) {
      grad_ref(a) += nodes_[self].grad * c;
    });
  }

  Var relu(Var x) {
    if (track_kinks_)
      for (Eigen::Index i = 0; i < value(x).size(); ++i) kinks_.push_back(value(x).data()[i] > T(0));
    return record(value(x).cwiseMax(T(0)), {x}, [this, x](int self) {
      grad_ref(x).array() += (value(x).array() > T(0)).select(nodes_[self].grad.array(), T(0));
    });
  }

  Var softplus(Var x) {
    Mat y = value(x).unaryExpr([](T v) { return softplus_value(v); });
    return record(std::move(y), {x}, [this, x](int self) {
      grad_ref(x).array() +=
          nodes_[self].grad.array() * value(x).unaryExpr([](T v) { return sigmoid(v); }).array();
    });
  }

  /// Softplus on the rows flagged in `rows`, identity elsewhere.
  Var softplus_rows(Var x, std::vector<bool> rows) {
    const Mat& xv = value(x);
    if (static_cast<Eigen::Index>(rows.size()) != xv.rows())
      throw ParameterError("softplus_rows: mask of " + std::to_string(rows.size()) +
                           " rows for " + dims(xv.rows(), xv.cols()));
    Mat y = xv;
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      if (rows[i]) y.row(i) = xv.row(i).unaryExpr([](T v) { return softplus_value(v); });
    return record(std::move(y), {x}, [this, x, rows = std::move(rows)](int self) {
      const Mat& g = nodes_[self].grad;
      Mat& gx = grad_ref(x);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        if (!rows[i]) {
          gx.row(i) += g.row(i);
          continue;
        }
        gx.row(i).array() += g.row(i).array() *
            value(x).row(i).unaryExpr([](T v) { return sigmoid(v); }).array();
      }
    });
  }

  Var exp(Var x) {
    Mat y = value(x).array().exp().matrix();
    return record(std::move(y), {x}, [this, x](int self) {
      grad_ref(x) += nodes_[self].grad.cwiseProduct(nodes_[self].value);
    });
  }

  /// Clamp into [lo, hi]; the gradient passes only strictly inside.
  Var clamp(Var x, T lo, T hi) {
    if (track_kinks_)
      for (Eigen::Index i = 0; i < value(x).size(); ++i) {
        kinks_.push_back(value(x).data()[i] > lo);
        kinks_.push_back(value(x).data()[i] < hi);
      }
    Mat y = value(x).cwiseMax(lo).cwiseMin(hi);
    return record(std::move(y), {x}, [this, x, lo, hi](int self) {
      const auto& xv = value(x).array();
      grad_ref(x).array() += ((xv > lo) && (xv < hi)).select(nodes_[self].grad.array(), T(0));
    });
  }

  /// Per-row normalization over columns, then gain and bias (1 x cols).
  Var layer_norm(Var x, Var gain, Var bias, T eps = T(1e-5)) {
    const Mat& xv = value(x);
    const Eigen::Index n = xv.rows(), d = xv.cols();
    if (value(gain).rows() != 1 || value(gain).cols() != d || value(bias).cols() != d ||
        value(bias).rows() != 1)
      throw shape_error("layer_norm", xv, value(gain));
    Mat xhat(n, d);
    Eigen::Matrix<T, Eigen::Dynamic, 1> inv_std(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const T mean = xv.row(i).mean();
      const auto centered = xv.row(i).array() - mean;
      const T var = centered.square().mean();
      inv_std[i] = T(1) / std::sqrt(var + eps);
      xhat.row(i) = (centered * inv_std[i]).matrix();
    }
    Mat y = xhat.array().rowwise() * value(gain).row(0).array();
    y.rowwise() += value(bias).row(0);
    return record(std::move(y), {x, gain, bias},
                  [this, x, gain, bias, xhat = std::move(xhat),
                   inv_std = std::move(inv_std)](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(gain)) grad_ref(gain) += g.cwiseProduct(xhat).colwise().sum();
      if (needs_grad(bias)) grad_ref(bias) += g.colwise().sum();
      if (!needs_grad(x)) return;
      const Mat dxhat = g.array().rowwise() * value(gain).row(0).array();
      Mat& gx = grad_ref(x);
      for (Eigen::Index i = 0; i < g.rows(); ++i) {
        const T m1 = dxhat.row(i).mean();
        const T m2 = dxhat.row(i).cwiseProduct(xhat.row(i)).mean();
        gx.row(i).array() +=
            inv_std[i] * (dxhat.row(i).array() - m1 - xhat.row(i).array() * m2);
      }
    });
  }

  /// Inverted dropout: zeroes entries with probability p and rescales the
  /// rest by 1/(1-p).
  Var dropout(Var x, double p, Rng& rng) {
    if (p < 0.0 || p >= 1.0) throw ParameterError("dropout: rate must be in [0, 1)");
    const Mat& xv = value(x);
    std::bernoulli_distribution keep(1.0 - p);
    const T s = T(1.0 / (1.0 - p));
    Mat mask(xv.rows(), xv.cols());
    for (Eigen::Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? s : T(0);
    Mat y = xv.cwiseProduct(mask);
    return record(std::move(y), {x}, [this, x, mask = std::move(mask)](int self) {
      grad_ref(x) += nodes_[self].grad.cwiseProduct(mask);
    });
  }

  Var concat_cols(Var a, Var b) {
    const Mat& av = value(a);
    const Mat& bv = value(b);
    if (av.rows() != bv.rows()) throw shape_error("concat", av, bv);
    Mat y(av.rows(), av.cols() + bv.cols());
    y << av, bv;
    const Eigen::Index ca = av.cols(), cb = bv.cols();
    return record(std::move(y), {a, b}, [this, a, b, ca, cb](int self) {
      const Mat& g = nodes_[self].grad;
      if (needs_grad(a)) grad_ref(a) += g.leftCols(ca);
      if (needs_grad(b)) grad_ref(b) += g.rightCols(cb);
    });
  }

  /// Columns [start, start + count).
  Var slice_cols(Var x, Eigen::Index start, Eigen::Index count) {
    const Mat& xv = value(x);
    if (start < 0 || count < 0 || start + count > xv.cols())
      throw ParameterError("split: columns [" + std::to_string(start) + ", " +
                           std::to_string(start + count) + ") of " +
                           dims(xv.rows(), xv.cols()));
    return record(xv.middleCols(start, count), {x}, [this, x, start, count](int self) {
      grad_ref(x).middleCols(start, count) += nodes_[self].grad;
    });
  }

  std::pair<Var, Var> split_cols(Var x, Eigen::Index left) {
    const Eigen::Index cols = value(x).cols();
    return {slice_cols(x, 0, left), slice_cols(x, left, cols - left)};
  }

  Var gather_rows(Var x, std::vector<Eigen::Index> rows) {
    const Mat& xv = value(x);
    Mat y(static_cast<Eigen::Index>(rows.size()), xv.cols());
    for (size_t i = 0; i < rows.size(); ++i) {
      if (rows[i] < 0 || rows[i] >= xv.rows())
        throw ParameterError("gather_rows: row " + std::to_string(rows[i]) + " of " +
                             dims(xv.rows(), xv.cols()));
      y.row(static_cast<Eigen::Index>(i)) = xv.row(rows[i]);
    }
    return record(std::move(y), {x}, [this, x, rows = std::move(rows)](int self) {
      const Mat& g = nodes_[self].grad;
      Mat& gx = grad_ref(x);
      for (size_t i = 0; i < rows.size(); ++i) gx.row(rows[i]) += g.row(static_cast<Eigen::Index>(i));
    });
  }

  /// Sum of all entries, 1x1.
  Var reduce_sum(Var x) {
    Mat y(1, 1);
    y(0, 0) = value(x).sum();
    return record(std::move(y), {x}, [this, x](int self) {
      grad_ref(x).array() += nodes_[self].grad(0, 0);
    });
  }

  /// sum(x .* c) for a constant c, 1x1.
  Var weighted_sum(Var x, Mat c) {
    const Mat& xv = value(x);
    if (xv.rows() != c.rows() || xv.cols() != c.cols())
      throw shape_error("weighted_sum", xv, c);
    Mat y(1, 1);
    y(0, 0) = xv.cwiseProduct(c).sum();
    return record(std::move(y), {x}, [this, x, c = std::move(c)](int self) {
      grad_ref(x) += c * nodes_[self].grad(0, 0);
    });
  }

  static T softplus_value(T v) {
    return v > T(0) ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
  }
  static T sigmoid(T v) {
    if (v >= T(0)) return T(1) / (T(1) + std::exp(-v));
    const T e = std::exp(v);
    return e / (T(1) + e);
  }

 private:
  struct Node {
    Mat value;
    Mat grad;
    bool needs_grad = false;
    std::function<void()> backward;
  };

  Var push(Mat value, bool needs_grad) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    nodes_.push_back(std::move(n));
    return Var{static_cast<int>(nodes_.size()) - 1};
  }

  template <typename Back>
  Var record(Mat value, std::initializer_list<Var> inputs, Back back) {
    bool any = false;
    for (Var v : inputs) any = any || needs_grad(v);
    Var out = push(std::move(value), any);
    if (any) {
      const int self = out.id;
      nodes_[self].backward = [back = std::move(back), self]() { back(self); };
    }
    return out;
  }

  Mat& grad_ref(Var v) { return nodes_[v.id].grad; }

  static std::string dims(Eigen::Index r, Eigen::Index c) {
    return std::to_string(r) + "x" + std::to_string(c);
  }
  static ParameterError shape_error(const char* op, const Mat& a, const Mat& b) {
    return ParameterError(std::string(op) + ": shape mismatch " + dims(a.rows(), a.cols()) +
                          " vs " + dims(b.rows(), b.cols()));
  }

  std::vector<Node> nodes_;
  bool track_kinks_ = false;
  std::vector<bool> kinks_;
};

}  // namespace lmp::nn

#endif  // LMP_NEURAL_TAPE_HPP_
