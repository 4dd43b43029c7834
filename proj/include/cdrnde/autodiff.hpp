// Copyright 2026 The cdrnde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Reverse-mode automatic differentiation over dense Eigen matrices.
//
// A Tape records every operation executed on Vars that belong to it. Leaves
// are either constants or bindings of persistent Tensors; on backward() the
// gradient reaching a bound Tensor is added to its grad slot. A tape and its
// Vars must stay on one thread.

#ifndef CDRNDE_AUTODIFF_HPP
#define CDRNDE_AUTODIFF_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <span>
#include <unordered_map>
#include <vector>

#include "cdrnde/tensor.hpp"

namespace cdrnde::ad {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  /// Value of a 1x1 Var.
  double scalar() const;

  Tape* tape() const { return tape_; }
  std::uint32_t id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::uint32_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::uint32_t id_ = 0;
};

class Tape {
 public:
  /// Receives the gradient reaching the node and the node's own value.
  using BackwardFn =
      std::function<void(Tape&, const Matrix& out_grad, const Matrix& out)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Matrix value);
  Var constant(const Vector& value) { return constant(Matrix(value)); }

  /// Binds a persistent tensor. Repeated binding of the same tensor returns
  /// the same Var. Gradients flow back only if t.requires_grad().
  Var variable(Tensor& t);

  /// Records an op result. `inputs` decide whether the node needs a gradient.
  Var record(Matrix value, std::initializer_list<Var> inputs,
             BackwardFn backward);
  Var record(Matrix value, std::span<const Var> inputs, BackwardFn backward);

  /// Runs the reverse sweep from a 1x1 loss and adds the result to the grad
  /// slot of every bound tensor that requires it.
  void backward(const Var& loss);

  const Matrix& value(const Var& v) const { return nodes_[v.id()].value; }
  /// Gradient of the last backward() w.r.t. v; empty when none reached it.
  const Matrix& grad(const Var& v) const { return nodes_[v.id()].grad; }
  bool needs_grad(const Var& v) const { return nodes_[v.id()].needs_grad; }

  /// Adds `g` into the gradient of `v` (no-op if v needs no gradient).
  template <typename Derived>
  void accumulate(const Var& v, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[v.id()];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0) {
      n.grad = g;
    } else {
      n.grad += g;
    }
  }

  std::size_t size() const { return nodes_.size(); }
  void clear();

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    BackwardFn backward;
    Tensor* sink = nullptr;
  };

  std::deque<Node> nodes_;
  std::unordered_map<const Tensor*, std::uint32_t> bound_;
};

// ---------------------------------------------------------------------------
// Operations. All operands must live on the same tape.

Var matmul(const Var& a, const Var& b);
/// Matrix-vector product; `x` must be a column (n x 1).
Var matvec(const Var& w, const Var& x);

Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
Var hadamard(const Var& a, const Var& b);
Var scale(const Var& a, double alpha);
/// 1 - a, elementwise.
Var one_minus(const Var& a);
Var sigmoid(const Var& a);
Var tanh(const Var& a);

/// Adds the column vector `bias` to every column of `m`.
Var add_columnwise(const Var& m, const Var& bias);

Var sum(const Var& a);
Var mean(const Var& a);

/// Column j of `m` as an r x 1 Var.
Var col(const Var& m, Eigen::Index j);
/// Stacks equal-height Vars side by side.
Var hconcat(std::span<const Var> parts);

/// base + h * sum_j coeffs[j] * terms[j], as one node. Zero coefficients are
/// skipped.
Var lincomb(const Var& base, double h, std::span<const double> coeffs,
            std::span<const Var> terms);

/// Mean over columns of -log softmax(logits[:, k])[targets[k]].
Var cross_entropy(const Var& logits, std::span<const int> targets);
/// Mean of (pred - target)^2 over all elements.
Var mse(const Var& pred, const Matrix& target);

inline Var operator+(const Var& a, const Var& b) { return add(a, b); }
inline Var operator-(const Var& a, const Var& b) { return sub(a, b); }
inline Var operator*(double alpha, const Var& a) { return scale(a, alpha); }
inline Var operator*(const Var& a, double alpha) { return scale(a, alpha); }

}  // namespace cdrnde::ad

#endif  // CDRNDE_AUTODIFF_HPP
