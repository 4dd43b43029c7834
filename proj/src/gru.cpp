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

#include "cdrnde/gru.hpp"

#include <cmath>

#include "cdrnde/errors.hpp"

namespace cdrnde::gru {

using ad::Var;

namespace {

Tensor uniform_tensor(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape), true);
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : t.data()) v = dist(rng);
  return t;
}

void check_width(const char* what, Eigen::Index rows, std::size_t hidden) {
  if (static_cast<std::size_t>(rows) != hidden) {
    throw DimensionError(std::string(what) + " has width " +
                         std::to_string(rows) + ", GRU hidden width is " +
                         std::to_string(hidden));
  }
}

void check_operands(const Matrix& below, const Matrix& state,
                    std::size_t hidden) {
  check_width("below", below.rows(), hidden);
  check_width("state", state.rows(), hidden);
  if (below.cols() != state.cols()) {
    throw DimensionError("below/state column counts differ: " +
                         shape_string(below.rows(), below.cols()) + " vs " +
                         shape_string(state.rows(), state.cols()));
  }
}

Matrix sigmoid(const Matrix& x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

}  // namespace

GruParams GruParams::zeros(std::size_t hidden) {
  GruParams p;
  p.hidden = hidden;
  for (Tensor* t : {&p.W_r, &p.U_r, &p.W_z, &p.U_z, &p.W_h, &p.U_h}) {
    *t = Tensor({hidden, hidden}, true);
  }
  for (Tensor* t : {&p.b_r, &p.b_z, &p.b_h}) *t = Tensor({hidden}, true);
  return p;
}

GruParams GruParams::uniform(std::size_t hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  GruParams p;
  p.hidden = hidden;
  p.W_r = uniform_tensor({hidden, hidden}, bound, rng);
  p.U_r = uniform_tensor({hidden, hidden}, bound, rng);
  p.b_r = uniform_tensor({hidden}, bound, rng);
  p.W_z = uniform_tensor({hidden, hidden}, bound, rng);
  p.U_z = uniform_tensor({hidden, hidden}, bound, rng);
  p.b_z = uniform_tensor({hidden}, bound, rng);
  p.W_h = uniform_tensor({hidden, hidden}, bound, rng);
  p.U_h = uniform_tensor({hidden, hidden}, bound, rng);
  p.b_h = uniform_tensor({hidden}, bound, rng);
  return p;
}

std::vector<NamedTensor> GruParams::named(const std::string& prefix) {
  return {{prefix + "W_r", &W_r}, {prefix + "U_r", &U_r}, {prefix + "b_r", &b_r},
          {prefix + "W_z", &W_z}, {prefix + "U_z", &U_z}, {prefix + "b_z", &b_z},
          {prefix + "W_h", &W_h}, {prefix + "U_h", &U_h}, {prefix + "b_h", &b_h}};
}

void GruParams::validate() const {
  const Shape square{hidden, hidden}, column{hidden};
  for (const Tensor* t : {&W_r, &U_r, &W_z, &U_z, &W_h, &U_h}) {
    if (t->shape() != square) {
      throw DimensionError("GRU weight " + shape_string(t->shape()) +
                           ", expected " + shape_string(square));
    }
  }
  for (const Tensor* t : {&b_r, &b_z, &b_h}) {
    if (t->shape() != column) {
      throw DimensionError("GRU bias " + shape_string(t->shape()) +
                           ", expected " + shape_string(column));
    }
  }
}

GruVars bind(ad::Tape& tape, GruParams& p) {
  return {p.hidden,
          tape.variable(p.W_r), tape.variable(p.U_r), tape.variable(p.b_r),
          tape.variable(p.W_z), tape.variable(p.U_z), tape.variable(p.b_z),
          tape.variable(p.W_h), tape.variable(p.U_h), tape.variable(p.b_h)};
}

GateActivations gru_gates(const Var& below, const Var& state,
                          const GruVars& p) {
  check_operands(below.value(), state.value(), p.hidden);
  Var r = ad::sigmoid(ad::add_columnwise(
      ad::matmul(p.W_r, below) + ad::matmul(p.U_r, state), p.b_r));
  Var z = ad::sigmoid(ad::add_columnwise(
      ad::matmul(p.W_z, below) + ad::matmul(p.U_z, state), p.b_z));
  Var g = ad::tanh(ad::add_columnwise(
      ad::matmul(p.W_h, below) + ad::matmul(p.U_h, ad::hadamard(r, state)),
      p.b_h));
  return {r, z, g};
}

Var gru_discrete_step(const Var& below, const Var& state, const GruVars& p) {
  auto [r, z, g] = gru_gates(below, state, p);
  return ad::hadamard(z, state) + ad::hadamard(ad::one_minus(z), g);
}

Var gru_ode_field(const Var& below, const Var& state, const GruVars& p) {
  auto [r, z, g] = gru_gates(below, state, p);
  return ad::hadamard(ad::one_minus(z), g - state);
}

GateValues gru_gates(const Matrix& below, const Matrix& state,
                     const GruParams& p) {
  check_operands(below, state, p.hidden);
  Matrix pre_r = p.W_r.value() * below + p.U_r.value() * state;
  pre_r.colwise() += p.b_r.value().col(0);
  Matrix pre_z = p.W_z.value() * below + p.U_z.value() * state;
  pre_z.colwise() += p.b_z.value().col(0);
  GateValues out;
  out.r = sigmoid(pre_r);
  out.z = sigmoid(pre_z);
  Matrix pre_g = p.W_h.value() * below +
                 p.U_h.value() * out.r.cwiseProduct(state);
  pre_g.colwise() += p.b_h.value().col(0);
  out.g = pre_g.array().tanh().matrix();
  return out;
}

Matrix gru_discrete_step(const Matrix& below, const Matrix& state,
                         const GruParams& p) {
  GateValues a = gru_gates(below, state, p);
  return (a.z.array() * state.array() + (1.0 - a.z.array()) * a.g.array())
      .matrix();
}

Matrix gru_ode_field(const Matrix& below, const Matrix& state,
                     const GruParams& p) {
  GateValues a = gru_gates(below, state, p);
  return ((1.0 - a.z.array()) * (a.g.array() - state.array())).matrix();
}

// ---------------------------------------------------------------------------

InputEncoder InputEncoder::zeros(std::size_t input_dim, std::size_t hidden) {
  InputEncoder e;
  e.input_dim = input_dim;
  e.hidden = hidden;
  e.W_e = Tensor({hidden, input_dim}, true);
  e.b_e = Tensor({hidden}, true);
  return e;
}

InputEncoder InputEncoder::identity(std::size_t hidden) {
  InputEncoder e = zeros(hidden, hidden);
  e.W_e.value().setIdentity();
  return e;
}

InputEncoder InputEncoder::uniform(std::size_t input_dim, std::size_t hidden,
                                   std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(input_dim));
  InputEncoder e;
  e.input_dim = input_dim;
  e.hidden = hidden;
  e.W_e = uniform_tensor({hidden, input_dim}, bound, rng);
  e.b_e = uniform_tensor({hidden}, bound, rng);
  return e;
}

std::vector<NamedTensor> InputEncoder::named(const std::string& prefix) {
  return {{prefix + "W_e", &W_e}, {prefix + "b_e", &b_e}};
}

EncoderVars bind(ad::Tape& tape, InputEncoder& e) {
  return {tape.variable(e.W_e), tape.variable(e.b_e)};
}

Var encode_input(const Var& x, const EncoderVars& e) {
  if (x.rows() != e.W_e.cols()) {
    throw DimensionError("input has width " + std::to_string(x.rows()) +
                         ", encoder expects " + std::to_string(e.W_e.cols()));
  }
  return ad::add_columnwise(ad::matmul(e.W_e, x), e.b_e);
}

Matrix encode_input(const Matrix& x, const InputEncoder& e) {
  if (x.rows() != e.W_e.value().cols()) {
    throw DimensionError("input has width " + std::to_string(x.rows()) +
                         ", encoder expects " +
                         std::to_string(e.W_e.value().cols()));
  }
  Matrix out = e.W_e.value() * x;
  out.colwise() += e.b_e.value().col(0);
  return out;
}

}  // namespace cdrnde::gru
