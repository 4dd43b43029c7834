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

#include <cmath>

#include "doctest.h"

#include "cdrnde/errors.hpp"
#include "cdrnde/gru.hpp"
#include "helpers.hpp"

using namespace cdrnde;
using ad::Tape;
using ad::Var;

namespace {

Matrix sig(const Matrix& x) { return (1.0 / (1.0 + (-x.array()).exp())).matrix(); }

// Gate formulas written out directly from the matrices.
struct Reference {
  Matrix r, z, g;
};

Reference reference_gates(const Matrix& below, const Matrix& state, const gru::GruParams& p) {
  Reference o;
  const Matrix br = p.b_r.value().replicate(1, below.cols());
  const Matrix bz = p.b_z.value().replicate(1, below.cols());
  const Matrix bh = p.b_h.value().replicate(1, below.cols());
  o.r = sig(p.W_r.value() * below + p.U_r.value() * state + br);
  o.z = sig(p.W_z.value() * below + p.U_z.value() * state + bz);
  o.g = (p.W_h.value() * below + p.U_h.value() * o.r.cwiseProduct(state) + bh).array().tanh();
  return o;
}

}  // namespace

TEST_CASE("zero parameters give half-open gates and a zero candidate") {
  auto p = gru::GruParams::zeros(3);
  std::mt19937_64 rng(1);
  const Matrix below = testing::random_matrix(3, 2, rng);
  const Matrix state = testing::random_matrix(3, 2, rng);
  const auto g = gru::gru_gates(below, state, p);
  CHECK(g.r.isApprox(Matrix::Constant(3, 2, 0.5)));
  CHECK(g.z.isApprox(Matrix::Constant(3, 2, 0.5)));
  CHECK(g.g.isZero());
  CHECK(gru::gru_discrete_step(below, state, p).isApprox(0.5 * state));
  CHECK(gru::gru_ode_field(below, state, p).isApprox(-0.5 * state));
}

TEST_CASE("gate values match the written-out formulas") {
  std::mt19937_64 rng(2);
  auto p = gru::GruParams::uniform(4, rng);
  const Matrix below = testing::random_matrix(4, 3, rng);
  const Matrix state = testing::random_matrix(4, 3, rng, 0.5);
  const Reference ref = reference_gates(below, state, p);

  const auto v = gru::gru_gates(below, state, p);
  CHECK((v.r - ref.r).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((v.z - ref.z).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((v.g - ref.g).cwiseAbs().maxCoeff() <= 1e-14);

  const Matrix step = ref.z.cwiseProduct(state) +
                      (Matrix::Ones(4, 3) - ref.z).cwiseProduct(ref.g);
  const Matrix field = (Matrix::Ones(4, 3) - ref.z).cwiseProduct(ref.g - state);
  CHECK((gru::gru_discrete_step(below, state, p) - step).cwiseAbs().maxCoeff() <= 1e-14);
  CHECK((gru::gru_ode_field(below, state, p) - field).cwiseAbs().maxCoeff() <= 1e-14);

  Tape t;
  const auto vars = gru::bind(t, p);
  const Var field_var = gru::gru_ode_field(t.constant(below), t.constant(state), vars);
  CHECK((field_var.value() - field).cwiseAbs().maxCoeff() <= 1e-14);
  const Var step_var = gru::gru_discrete_step(t.constant(below), t.constant(state), vars);
  CHECK((step_var.value() - step).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("batched columns equal column-by-column evaluation") {
  std::mt19937_64 rng(3);
  auto p = gru::GruParams::uniform(3, rng);
  const Matrix below = testing::random_matrix(3, 5, rng);
  const Matrix state = testing::random_matrix(3, 5, rng);
  const Matrix all = gru::gru_ode_field(below, state, p);
  for (Eigen::Index j = 0; j < 5; ++j) {
    const Matrix one = gru::gru_ode_field(Matrix(below.col(j)), Matrix(state.col(j)), p);
    CHECK((all.col(j) - one).cwiseAbs().maxCoeff() == 0.0);
  }
}

TEST_CASE("gate ranges") {
  std::mt19937_64 rng(4);
  auto p = gru::GruParams::uniform(6, rng);
  const Matrix below = testing::random_matrix(6, 20, rng, 5.0);
  const Matrix state = testing::random_matrix(6, 20, rng, 5.0);
  const auto g = gru::gru_gates(below, state, p);
  CHECK(g.r.minCoeff() > 0.0);
  CHECK(g.r.maxCoeff() < 1.0);
  CHECK(g.z.minCoeff() > 0.0);
  CHECK(g.z.maxCoeff() < 1.0);
  CHECK(g.g.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("Euler steps of the GRU-ODE field stay in the unit box") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> unit(-1.0, 1.0), step(0.0, 1.0);
  auto p = gru::GruParams::uniform(5, rng);
  Matrix h(5, 1);
  for (Eigen::Index i = 0; i < 5; ++i) h(i, 0) = unit(rng);
  for (int n = 0; n < 2000; ++n) {
    const Matrix below = testing::random_matrix(5, 1, rng, 3.0);
    h += step(rng) * gru::gru_ode_field(below, h, p);
    REQUIRE(h.cwiseAbs().maxCoeff() <= 1.0);
  }
}

TEST_CASE("uniform init respects the fan-in bound") {
  std::mt19937_64 rng(6);
  auto p = gru::GruParams::uniform(16, rng);
  double largest = 0.0;
  for (const auto& t : p.named("gru.")) {
    CHECK(t.tensor->all_finite());
    CHECK(t.tensor->requires_grad());
    largest = std::max(largest, t.tensor->value().cwiseAbs().maxCoeff());
  }
  CHECK(largest <= 0.25);
  CHECK(largest > 0.2);
  CHECK(p.named("gru.").size() == 9);
  CHECK(p.named("gru.")[0].name == "gru.W_r");
}

TEST_CASE("shape checks") {
  auto p = gru::GruParams::zeros(3);
  CHECK_NOTHROW(p.validate());
  CHECK_THROWS_AS(gru::gru_gates(Matrix(Matrix::Zero(2, 1)), Matrix(Matrix::Zero(3, 1)), p),
                  DimensionError);
  CHECK_THROWS_AS(gru::gru_gates(Matrix(Matrix::Zero(3, 2)), Matrix(Matrix::Zero(3, 1)), p),
                  DimensionError);
  p.W_z = Tensor({3, 2});
  CHECK_THROWS_AS(p.validate(), DimensionError);
}

TEST_CASE("input encoder") {
  auto id = gru::InputEncoder::identity(3);
  const Matrix x = Matrix::Random(3, 4);
  CHECK(gru::encode_input(x, id) == x);

  std::mt19937_64 rng(7);
  auto e = gru::InputEncoder::uniform(2, 5, rng);
  const Matrix xs = testing::random_matrix(2, 3, rng);
  const Matrix expect = e.W_e.value() * xs + e.b_e.value().replicate(1, 3);
  CHECK((gru::encode_input(xs, e) - expect).cwiseAbs().maxCoeff() <= 1e-15);
  Tape t;
  const Var enc = gru::encode_input(t.constant(xs), gru::bind(t, e));
  CHECK((enc.value() - expect).cwiseAbs().maxCoeff() <= 1e-15);
  CHECK_THROWS_AS(gru::encode_input(Matrix(Matrix::Zero(3, 1)), e), DimensionError);
}
