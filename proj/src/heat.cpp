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

#include "cdrnde/heat.hpp"

#include "cdrnde/errors.hpp"

namespace cdrnde {

using ad::Var;

void RowState::validate() const {
  const std::size_t k = size();
  if (k == 0) throw ContractError("row state needs at least one column");
  if (gaps.size() + 1 != k) {
    throw DimensionError("row of " + std::to_string(k) + " columns needs " +
                         std::to_string(k - 1) + " gaps, got " +
                         std::to_string(gaps.size()));
  }
  for (double g : gaps) {
    if (!(g > 0.0)) throw ContractError("row gaps must be positive");
  }
}

namespace {

struct Stencil {
  double left, centre, right;
};

// Three-point second-difference weights for column i; the weights attach to
// the left neighbor (or ghost), the column itself and the right neighbor.
Stencil stencil_weights(std::size_t i, std::size_t k,
                        const std::vector<double>& gaps, SpacingMode spacing) {
  if (spacing == SpacingMode::uniform) return {1.0, -2.0, 1.0};
  double dl = 1.0, dr = 1.0;
  if (k > 1) {
    dl = i > 0 ? gaps[i - 1] : gaps[0];
    dr = i + 1 < k ? gaps[i] : gaps[k - 2];
  }
  return {2.0 / (dl * (dl + dr)), -2.0 / (dl * dr), 2.0 / (dr * (dl + dr))};
}

}  // namespace

Matrix discrete_laplacian(const RowState& row, const ModelConfig& cfg) {
  row.validate();
  const std::size_t k = row.size();
  const Matrix& h = row.states;
  const bool flux = cfg.boundary == BoundaryMode::zero_flux;
  Matrix out(h.rows(), h.cols());
  for (std::size_t i = 0; i < k; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    const Stencil w = stencil_weights(i, k, row.gaps, cfg.spacing);
    Vector left = i > 0 ? Vector(h.col(c - 1))
                        : (flux ? Vector(h.col(c)) : Vector::Zero(h.rows()));
    Vector right = i + 1 < k ? Vector(h.col(c + 1))
                             : (flux ? Vector(h.col(c)) : Vector::Zero(h.rows()));
    out.col(c) = cfg.diffusivity * (w.left * left + w.centre * h.col(c) + w.right * right);
  }
  return out;
}

Matrix laplacian_operator(std::size_t columns, const std::vector<double>& gaps,
                          const ModelConfig& cfg) {
  const auto k = static_cast<Eigen::Index>(columns);
  const bool flux = cfg.boundary == BoundaryMode::zero_flux;
  Matrix a = Matrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const Stencil w = stencil_weights(static_cast<std::size_t>(i), columns, gaps, cfg.spacing);
    a(i, i) += w.centre;
    if (i > 0) {
      a(i - 1, i) += w.left;
    } else if (flux) {
      a(i, i) += w.left;
    }
    if (i + 1 < k) {
      a(i + 1, i) += w.right;
    } else if (flux) {
      a(i, i) += w.right;
    }
  }
  return cfg.diffusivity * a;
}

Matrix left_shift_operator(std::size_t columns) {
  const auto k = static_cast<Eigen::Index>(columns);
  Matrix s = Matrix::Zero(k, k);
  for (Eigen::Index i = 1; i < k; ++i) s(i - 1, i) = 1.0;
  return s;
}

RowState fdm_step(const RowState& row, double dt, const HeatModel& m) {
  row.validate();
  if (dt < 0.0) throw ContractError("fdm_step needs dt >= 0");
  const ModelConfig& cfg = m.config();
  const Matrix second = discrete_laplacian(row, cfg);
  const Matrix f = m.forcing(row.states);
  RowState next{row.states, row.gaps};
  if (cfg.spacing == SpacingMode::uniform) {
    // Unit grid distance, so the diffusion factor is dt' / 1^2.
    const double ratio = dt / (1.0 * 1.0);
    next.states = ratio * second + dt * f + row.states;
  } else {
    next.states = dt * second + dt * f + row.states;
  }
  return next;
}

// ---------------------------------------------------------------------------

HeatModel::HeatModel(ModelConfig config, std::mt19937_64& rng)
    : SequenceModel(std::move(config)) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  encoder = gru::InputEncoder::uniform(config_.input_dim, h, rng);
  p = gru::GruParams::uniform(h, rng);
  head = OutputHead::uniform(h, config_.output_dim, rng);
}

HeatModel::Bound HeatModel::bind(ad::Tape& tape) {
  return {gru::bind(tape, p), gru::bind(tape, encoder), cdrnde::bind(tape, head)};
}

HeatModel::DepthOperators HeatModel::depth_operators(
    ad::Tape& tape, const std::vector<double>& gaps) const {
  const std::size_t k = gaps.size() + 1;
  return {tape.constant(laplacian_operator(k, gaps, config_)),
          tape.constant(left_shift_operator(k))};
}

TimeAxisSolve HeatModel::heat_row_init(ad::Tape& tape,
                                       const data::SequenceRecord& seq) {
  check_sequence(seq);
  const Bound b = bind(tape);
  const Var encoded = gru::encode_input(
      tape.constant(Matrix(seq.inputs.transpose())), b.encoder);
  return solve_time_axis(
      encoded, seq.times,
      [&b](const Var& below, const Var& state) {
        return gru::gru_ode_field(below, state, b.gru);
      },
      config_.solve_t);
}

Var HeatModel::mol_field(const Var& states, const DepthOperators& ops,
                         const gru::GruVars& gv) const {
  Var lap = ad::matmul(states, ops.laplacian);
  if (!config_.gru_forcing) return lap;
  Var left = ad::matmul(states, ops.left_shift);
  auto [r, z, g] = gru::gru_gates(states, left, gv);
  return lap + ad::hadamard(z, left) + ad::hadamard(ad::one_minus(z), g);
}

Matrix HeatModel::mol_field(const RowState& row) {
  row.validate();
  ad::Tape tape;
  const Bound b = bind(tape);
  return mol_field(tape.constant(row.states), depth_operators(tape, row.gaps), b.gru)
      .value();
}

Matrix HeatModel::forcing(const Matrix& states) const {
  Matrix f = Matrix::Zero(states.rows(), states.cols());
  if (!config_.gru_forcing) return f;
  for (Eigen::Index i = 0; i < states.cols(); ++i) {
    const Matrix h = states.col(i);
    const Matrix left = i > 0 ? Matrix(states.col(i - 1)) : Matrix::Zero(states.rows(), 1);
    const gru::GateValues a = gru::gru_gates(h, left, p);
    f.col(i) = (a.z.array() * left.array() + (1.0 - a.z.array()) * a.g.array()).matrix();
  }
  return f;
}

std::pair<Var, std::size_t> HeatModel::depth_solve(ad::Tape& tape, const Bound& b,
                                                   const Var& row0,
                                                   const std::vector<double>& gaps) {
  if (config_.depth_T == 0.0) return {row0, 0};
  const DepthOperators ops = depth_operators(tape, gaps);
  auto field = [&](double, const Var& s) { return mol_field(s, ops, b.gru); };
  auto traj = ode::integrate(field, row0, 0.0, config_.depth_T, config_.solve_depth);
  return {traj.back(), traj.nfe};
}

ForwardResult HeatModel::forward(ad::Tape& tape, const data::SequenceRecord& seq) {
  TimeAxisSolve row = heat_row_init(tape, seq);
  const Bound b = bind(tape);
  auto [final_states, nfe] = depth_solve(tape, b, ad::hconcat(row.observed), seq.gaps());
  ForwardResult r;
  r.outputs = apply_head(final_states, b.head);
  r.time_nfe = row.trajectory.nfe;
  r.depth_nfe = nfe;
  return r;
}

std::vector<NamedTensor> HeatModel::parameters() {
  auto out = encoder.named("encoder.");
  for (auto& t : p.named("gru.")) out.push_back(t);
  for (auto& t : head.named("head.")) out.push_back(t);
  return out;
}

}  // namespace cdrnde
