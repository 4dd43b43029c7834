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

#include "cdrnde/cdr_nde.hpp"

#include "cdrnde/errors.hpp"

namespace cdrnde {

using ad::Var;

Var horizontal_field(const Var& state, const Var& below, const gru::GruVars& p) {
  auto [r, z, g] = gru::gru_gates(below, state, p);
  return ad::hadamard(z, state) + ad::hadamard(ad::one_minus(z), g) + below - state;
}

Var vertical_field(const Var& state, const Var& left, const gru::GruVars& p) {
  auto [r, z, g] = gru::gru_gates(state, left, p);
  return ad::hadamard(z, left) + ad::hadamard(ad::one_minus(z), g);
}

CdrNdeModel::CdrNdeModel(ModelConfig config, std::mt19937_64& rng)
    : SequenceModel(std::move(config)) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  encoder = gru::InputEncoder::uniform(config_.input_dim, h, rng);
  p_h = gru::GruParams::uniform(h, rng);
  if (!config_.tie_weights) p_v = gru::GruParams::uniform(h, rng);
  head = OutputHead::uniform(h, config_.output_dim, rng);
}

CdrNdeModel::Bound CdrNdeModel::bind(ad::Tape& tape) {
  Bound b;
  b.horizontal = gru::bind(tape, p_h);
  b.vertical = config_.tie_weights ? b.horizontal : gru::bind(tape, p_v);
  b.encoder = gru::bind(tape, encoder);
  b.head = cdrnde::bind(tape, head);
  return b;
}

TimeAxisSolve CdrNdeModel::stage1_solve(ad::Tape& tape,
                                        const data::SequenceRecord& seq) {
  check_sequence(seq);
  const Bound b = bind(tape);
  const Var encoded = gru::encode_input(
      tape.constant(Matrix(seq.inputs.transpose())), b.encoder);
  return solve_time_axis(
      encoded, seq.times,
      [&b](const Var& below, const Var& state) {
        return horizontal_field(state, below, b.horizontal);
      },
      config_.solve_t);
}

HiddenGrid CdrNdeModel::stage2_solve(ad::Tape& tape, TimeAxisSolve row0) {
  const Bound b = bind(tape);
  HiddenGrid grid;
  grid.columns.reserve(row0.observed.size());
  const double depth = config_.depth_T;
  const Var zero = tape.constant(Matrix(Matrix::Zero(
      static_cast<Eigen::Index>(config_.hidden_dim), 1)));

  for (std::size_t i = 0; i < row0.observed.size(); ++i) {
    if (depth == 0.0) {
      ode::Trajectory<Var> single;
      single.push(0.0, row0.observed[i]);
      grid.columns.push_back(std::move(single));
      continue;
    }
    const ode::Trajectory<Var>* left_col = i == 0 ? nullptr : &grid.columns[i - 1];
    auto field = [&](double s, const Var& h) {
      const Var left = left_col ? ode::interpolate(*left_col, s) : zero;
      return vertical_field(h, left, b.vertical);
    };
    try {
      auto col = ode::integrate(field, row0.observed[i], 0.0, depth,
                                config_.solve_depth);
      grid.depth_nfe += col.nfe;
      grid.columns.push_back(std::move(col));
    } catch (const SolverError& e) {
      throw SolverError(std::string("column ") + std::to_string(i) + ": " + e.what(),
                        e.step(), e.s());
    }
  }
  grid.row0 = std::move(row0);
  return grid;
}

ForwardResult CdrNdeModel::forward(ad::Tape& tape, const data::SequenceRecord& seq) {
  TimeAxisSolve row0 = stage1_solve(tape, seq);
  const std::size_t time_nfe = row0.trajectory.nfe;
  HiddenGrid grid = stage2_solve(tape, std::move(row0));
  std::vector<Var> finals;
  finals.reserve(grid.columns.size());
  for (const auto& c : grid.columns) finals.push_back(c.back());
  ForwardResult r;
  r.outputs = apply_head(ad::hconcat(finals), bind(tape).head);
  r.time_nfe = time_nfe;
  r.depth_nfe = grid.depth_nfe;
  return r;
}

std::vector<NamedTensor> CdrNdeModel::parameters() {
  auto out = encoder.named("encoder.");
  for (auto& p : p_h.named(config_.tie_weights ? "gru." : "gru_h.")) out.push_back(p);
  if (!config_.tie_weights) {
    for (auto& p : p_v.named("gru_v.")) out.push_back(p);
  }
  for (auto& p : head.named("head.")) out.push_back(p);
  return out;
}

}  // namespace cdrnde
