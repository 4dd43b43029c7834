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

#include "cdrnde/autodiff.hpp"

#include <cmath>

#include "cdrnde/errors.hpp"

namespace cdrnde::ad {

const Matrix& Var::value() const {
  if (!tape_) throw ContractError("use of an unbound Var");
  return tape_->value(*this);
}

double Var::scalar() const {
  const Matrix& v = value();
  if (v.size() != 1) {
    throw ContractError("scalar() on a " + shape_string(v.rows(), v.cols()) +
                        " value");
  }
  return v(0, 0);
}

// ---------------------------------------------------------------------------
// Tape

Var Tape::constant(Matrix value) {
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::variable(Tensor& t) {
  if (auto it = bound_.find(&t); it != bound_.end()) return {this, it->second};
  Node& n = nodes_.emplace_back();
  n.value = t.value();
  n.needs_grad = t.requires_grad();
  n.sink = t.requires_grad() ? &t : nullptr;
  auto id = static_cast<std::uint32_t>(nodes_.size() - 1);
  bound_.emplace(&t, id);
  return {this, id};
}

Var Tape::record(Matrix value, std::initializer_list<Var> inputs,
                 BackwardFn backward) {
  return record(std::move(value), std::span<const Var>(inputs.begin(), inputs.size()),
                std::move(backward));
}

Var Tape::record(Matrix value, std::span<const Var> inputs,
                 BackwardFn backward) {
  bool needs = false;
  for (const Var& in : inputs) {
    if (in.tape() != this) throw ContractError("operands live on different tapes");
    needs = needs || nodes_[in.id()].needs_grad;
  }
  Node& n = nodes_.emplace_back();
  n.value = std::move(value);
  n.needs_grad = needs;
  if (needs) n.backward = std::move(backward);
  return {this, static_cast<std::uint32_t>(nodes_.size() - 1)};
}

void Tape::backward(const Var& loss) {
  if (loss.tape() != this) throw ContractError("loss is not on this tape");
  if (nodes_.empty()) throw ContractError("backward on an empty tape");
  const Matrix& lv = nodes_[loss.id()].value;
  if (lv.size() != 1) {
    throw ContractError("backward needs a scalar loss, got " +
                        shape_string(lv.rows(), lv.cols()));
  }
  for (Node& n : nodes_) n.grad.resize(0, 0);
  Node& root = nodes_[loss.id()];
  if (!root.needs_grad) return;
  root.grad = Matrix::Ones(1, 1);

  for (std::size_t i = loss.id() + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.size() == 0 || !n.backward) continue;
    n.backward(*this, n.grad, n.value);
  }
  for (Node& n : nodes_) {
    if (!n.sink || n.grad.size() == 0) continue;
    auto& g = n.sink->grad();
    if (!g) {
      g = n.grad;
    } else {
      *g += n.grad;
    }
  }
}

void Tape::clear() {
  nodes_.clear();
  bound_.clear();
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void require_same_shape(const char* op, const Var& a, const Var& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string("shape mismatch in ") + op + ": " +
                         shape_string(a.rows(), a.cols()) + " vs " +
                         shape_string(b.rows(), b.cols()));
  }
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  if (a.cols() != b.rows()) {
    throw DimensionError("shape mismatch in matmul: " +
                         shape_string(a.rows(), a.cols()) + " vs " +
                         shape_string(b.rows(), b.cols()));
  }
  Tape& t = *a.tape();
  return t.record(a.value() * b.value(), {a, b},
                  [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                    if (tp.needs_grad(a)) tp.accumulate(a, g * tp.value(b).transpose());
                    if (tp.needs_grad(b)) tp.accumulate(b, tp.value(a).transpose() * g);
                  });
}

Var matvec(const Var& w, const Var& x) {
  if (x.cols() != 1) {
    throw DimensionError("matvec needs a column vector, got " +
                         shape_string(x.rows(), x.cols()));
  }
  return matmul(w, x);
}

Var add(const Var& a, const Var& b) {
  require_same_shape("add", a, b);
  return a.tape()->record(a.value() + b.value(), {a, b},
                          [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                            tp.accumulate(a, g);
                            tp.accumulate(b, g);
                          });
}

Var sub(const Var& a, const Var& b) {
  require_same_shape("sub", a, b);
  return a.tape()->record(a.value() - b.value(), {a, b},
                          [a, b](Tape& tp, const Matrix& g, const Matrix&) {
                            tp.accumulate(a, g);
                            tp.accumulate(b, -g);
                          });
}

Var hadamard(const Var& a, const Var& b) {
  require_same_shape("hadamard", a, b);
  return a.tape()->record(
      a.value().cwiseProduct(b.value()), {a, b},
      [a, b](Tape& tp, const Matrix& g, const Matrix&) {
        if (tp.needs_grad(a)) tp.accumulate(a, g.cwiseProduct(tp.value(b)));
        if (tp.needs_grad(b)) tp.accumulate(b, g.cwiseProduct(tp.value(a)));
      });
}

Var scale(const Var& a, double alpha) {
  return a.tape()->record(alpha * a.value(), {a},
                          [a, alpha](Tape& tp, const Matrix& g, const Matrix&) {
                            tp.accumulate(a, alpha * g);
                          });
}

Var one_minus(const Var& a) {
  Matrix v = (1.0 - a.value().array()).matrix();
  return a.tape()->record(std::move(v), {a}, [a](Tape& tp, const Matrix& g, const Matrix&) {
    tp.accumulate(a, -g);
  });
}

Var sigmoid(const Var& a) {
  Matrix v = (1.0 / (1.0 + (-a.value().array()).exp())).matrix();
  return a.tape()->record(std::move(v), {a},
                          [a](Tape& tp, const Matrix& g, const Matrix& y) {
                            tp.accumulate(a, (g.array() * y.array() *
                                              (1.0 - y.array()))
                                                 .matrix());
                          });
}

Var tanh(const Var& a) {
  Matrix v = a.value().array().tanh().matrix();
  return a.tape()->record(std::move(v), {a},
                          [a](Tape& tp, const Matrix& g, const Matrix& y) {
                            tp.accumulate(
                                a, (g.array() * (1.0 - y.array().square()))
                                       .matrix());
                          });
}

Var add_columnwise(const Var& m, const Var& bias) {
  if (bias.cols() != 1 || bias.rows() != m.rows()) {
    throw DimensionError("shape mismatch in add_columnwise: " +
                         shape_string(m.rows(), m.cols()) + " vs " +
                         shape_string(bias.rows(), bias.cols()));
  }
  Matrix v = m.value();
  v.colwise() += bias.value().col(0);
  return m.tape()->record(std::move(v), {m, bias},
                          [m, bias](Tape& tp, const Matrix& g, const Matrix&) {
                            tp.accumulate(m, g);
                            if (tp.needs_grad(bias)) {
                              tp.accumulate(bias, g.rowwise().sum());
                            }
                          });
}

Var sum(const Var& a) {
  Matrix v(1, 1);
  v(0, 0) = a.value().sum();
  const Eigen::Index r = a.rows(), c = a.cols();
  return a.tape()->record(std::move(v), {a},
                          [a, r, c](Tape& tp, const Matrix& g, const Matrix&) {
                            tp.accumulate(a, Matrix::Constant(r, c, g(0, 0)));
                          });
}

Var mean(const Var& a) {
  const double n = static_cast<double>(a.value().size());
  if (n == 0) throw ContractError("mean of an empty value");
  return scale(sum(a), 1.0 / n);
}

Var col(const Var& m, Eigen::Index j) {
  if (j < 0 || j >= m.cols()) {
    throw RangeError("column " + std::to_string(j) + " out of range for " +
                     shape_string(m.rows(), m.cols()));
  }
  const Eigen::Index r = m.rows(), c = m.cols();
  return m.tape()->record(
      Matrix(m.value().col(j)), {m},
      [m, j, r, c](Tape& tp, const Matrix& g, const Matrix&) {
        Matrix full = Matrix::Zero(r, c);
        full.col(j) = g.col(0);
        tp.accumulate(m, full);
      });
}

Var hconcat(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("hconcat of no parts");
  const Eigen::Index r = parts[0].rows();
  Eigen::Index c = 0;
  for (const Var& p : parts) {
    if (p.rows() != r) {
      throw DimensionError("shape mismatch in hconcat: " +
                           shape_string(r, parts[0].cols()) + " vs " +
                           shape_string(p.rows(), p.cols()));
    }
    c += p.cols();
  }
  Matrix v(r, c);
  Eigen::Index at = 0;
  for (const Var& p : parts) {
    v.middleCols(at, p.cols()) = p.value();
    at += p.cols();
  }
  std::vector<Var> inputs(parts.begin(), parts.end());
  return parts[0].tape()->record(
      std::move(v), parts,
      [inputs](Tape& tp, const Matrix& g, const Matrix&) {
        Eigen::Index at = 0;
        for (const Var& p : inputs) {
          const Eigen::Index w = tp.value(p).cols();
          if (tp.needs_grad(p)) tp.accumulate(p, g.middleCols(at, w));
          at += w;
        }
      });
}

Var lincomb(const Var& base, double h, std::span<const double> coeffs,
            std::span<const Var> terms) {
  if (coeffs.size() != terms.size()) {
    throw ContractError("lincomb: coefficient/term count mismatch");
  }
  Matrix v = base.value();
  std::vector<Var> inputs{base};
  std::vector<double> weights;
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (coeffs[j] == 0.0) continue;
    if (terms[j].rows() != v.rows() || terms[j].cols() != v.cols()) {
      throw DimensionError("shape mismatch in lincomb: " +
                           shape_string(v.rows(), v.cols()) + " vs " +
                           shape_string(terms[j].rows(), terms[j].cols()));
    }
    v.noalias() += (h * coeffs[j]) * terms[j].value();
    inputs.push_back(terms[j]);
    weights.push_back(h * coeffs[j]);
  }
  std::span<const Var> ins(inputs);
  return base.tape()->record(
      std::move(v), ins,
      [inputs, weights](Tape& tp, const Matrix& g, const Matrix&) {
        tp.accumulate(inputs[0], g);
        for (std::size_t j = 0; j < weights.size(); ++j) {
          if (tp.needs_grad(inputs[j + 1])) {
            tp.accumulate(inputs[j + 1], weights[j] * g);
          }
        }
      });
}

Var cross_entropy(const Var& logits, std::span<const int> targets) {
  const Matrix& z = logits.value();
  const Eigen::Index classes = z.rows(), steps = z.cols();
  if (classes < 2) throw ContractError("cross_entropy needs at least 2 classes");
  if (static_cast<std::size_t>(steps) != targets.size()) {
    throw DimensionError("cross_entropy: " + std::to_string(steps) +
                         " logit columns vs " + std::to_string(targets.size()) +
                         " targets");
  }
  Matrix probs(classes, steps);
  double total = 0.0;
  for (Eigen::Index k = 0; k < steps; ++k) {
    const int y = targets[static_cast<std::size_t>(k)];
    if (y < 0 || y >= classes) {
      throw RangeError("target class " + std::to_string(y) + " outside [0, " +
                       std::to_string(classes) + ")");
    }
    const double m = z.col(k).maxCoeff();
    auto e = (z.col(k).array() - m).exp();
    const double lse = std::log(e.sum()) + m;
    probs.col(k) = (e / e.sum()).matrix();
    total += lse - z(y, k);
  }
  Matrix v(1, 1);
  v(0, 0) = total / static_cast<double>(steps);
  std::vector<int> ys(targets.begin(), targets.end());
  return logits.tape()->record(
      std::move(v), {logits},
      [logits, probs = std::move(probs), ys = std::move(ys)](
          Tape& tp, const Matrix& g, const Matrix&) {
        Matrix d = probs;
        for (std::size_t k = 0; k < ys.size(); ++k) {
          d(ys[k], static_cast<Eigen::Index>(k)) -= 1.0;
        }
        tp.accumulate(logits, (g(0, 0) / static_cast<double>(ys.size())) * d);
      });
}

Var mse(const Var& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("shape mismatch in mse: " +
                         shape_string(pred.rows(), pred.cols()) + " vs " +
                         shape_string(target.rows(), target.cols()));
  }
  Matrix diff = pred.value() - target;
  const double n = static_cast<double>(diff.size());
  Matrix v(1, 1);
  v(0, 0) = diff.squaredNorm() / n;
  return pred.tape()->record(
      std::move(v), {pred},
      [pred, diff = std::move(diff), n](Tape& tp, const Matrix& g,
                                        const Matrix&) {
        tp.accumulate(pred, (2.0 * g(0, 0) / n) * diff);
      });
}

}  // namespace cdrnde::ad
