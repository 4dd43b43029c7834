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

#include "cdrnde/model.hpp"

#include <cmath>

#include "cdrnde/cdr_nde.hpp"
#include "cdrnde/errors.hpp"
#include "cdrnde/heat.hpp"

namespace cdrnde {

using ad::Var;

std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::gru_ode: return "gru_ode";
    case ModelKind::cdr_nde: return "cdr_nde";
    case ModelKind::cdr_nde_heat: return "cdr_nde_heat";
  }
  return "?";
}

std::string to_string(SpacingMode m) {
  return m == SpacingMode::uniform ? "uniform" : "actual";
}

std::string to_string(BoundaryMode m) {
  return m == BoundaryMode::zero_flux ? "zero_flux" : "zero_ghost";
}

ModelKind model_kind_from_string(const std::string& s) {
  if (s == "gru_ode") return ModelKind::gru_ode;
  if (s == "cdr_nde") return ModelKind::cdr_nde;
  if (s == "cdr_nde_heat") return ModelKind::cdr_nde_heat;
  throw ConfigError("unknown model kind '" + s +
                    "' (expected gru_ode, cdr_nde or cdr_nde_heat)");
}

SpacingMode spacing_from_string(const std::string& s) {
  if (s == "uniform") return SpacingMode::uniform;
  if (s == "actual") return SpacingMode::actual;
  throw ConfigError("unknown spacing_mode '" + s + "' (expected uniform or actual)");
}

BoundaryMode boundary_from_string(const std::string& s) {
  if (s == "zero_flux") return BoundaryMode::zero_flux;
  if (s == "zero_ghost") return BoundaryMode::zero_ghost;
  throw ConfigError("unknown boundary_mode '" + s +
                    "' (expected zero_flux or zero_ghost)");
}

void ModelConfig::validate() const {
  if (input_dim == 0 || hidden_dim == 0 || output_dim == 0) {
    throw ConfigError("model dimensions must be >= 1");
  }
  if (task == data::TaskKind::classification && output_dim < 2) {
    throw ConfigError("classification needs output_dim >= 2");
  }
  if (!(depth_T >= 0.0) || !std::isfinite(depth_T)) {
    throw ConfigError("depth_T must be finite and >= 0");
  }
  if (!(diffusivity > 0.0)) throw ConfigError("diffusivity must be > 0");
  solve_t.validate();
  solve_depth.validate();
}

// ---------------------------------------------------------------------------

OutputHead OutputHead::zeros(std::size_t hidden, std::size_t outputs) {
  return {Tensor({outputs, hidden}, true), Tensor({outputs}, true)};
}

OutputHead OutputHead::uniform(std::size_t hidden, std::size_t outputs,
                               std::mt19937_64& rng) {
  OutputHead h = zeros(hidden, outputs);
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& v : h.W_o.data()) v = dist(rng);
  for (double& v : h.b_o.data()) v = dist(rng);
  return h;
}

std::vector<NamedTensor> OutputHead::named(const std::string& prefix) {
  return {{prefix + "W_o", &W_o}, {prefix + "b_o", &b_o}};
}

HeadVars bind(ad::Tape& tape, OutputHead& head) {
  return {tape.variable(head.W_o), tape.variable(head.b_o)};
}

Var apply_head(const Var& states, const HeadVars& head) {
  return ad::add_columnwise(ad::matmul(head.W_o, states), head.b_o);
}

TimeAxisSolve solve_time_axis(const Var& encoded,
                              const std::vector<double>& times,
                              const TimeField& field,
                              const ode::SolveConfig& cfg) {
  const std::size_t k = times.size();
  if (k == 0) throw ContractError("time-axis solve of an empty sequence");
  if (static_cast<std::size_t>(encoded.cols()) != k) {
    throw DimensionError("encoded inputs have " + std::to_string(encoded.cols()) +
                         " columns for " + std::to_string(k) + " times");
  }
  TimeAxisSolve out;
  out.observed.reserve(k);
  out.observed.push_back(ad::col(encoded, 0));
  out.trajectory.push(times[0], out.observed.back());
  for (std::size_t i = 1; i < k; ++i) {
    if (!(times[i] > times[i - 1])) {
      throw DataError("times must be strictly increasing at step " + std::to_string(i));
    }
    const Var below = ad::col(encoded, static_cast<Eigen::Index>(i));
    auto f = [&](double, const Var& h) { return field(below, h); };
    auto seg = ode::integrate(f, out.observed.back(), times[i - 1], times[i], cfg);
    for (std::size_t j = 1; j < seg.size(); ++j) {
      out.trajectory.push(seg.s[j], seg.y[j]);
    }
    out.trajectory.nfe += seg.nfe;
    out.trajectory.accepted += seg.accepted;
    out.trajectory.rejected += seg.rejected;
    out.observed.push_back(seg.back());
  }
  return out;
}

void SequenceModel::check_sequence(const data::SequenceRecord& seq) const {
  seq.validate();
  if (seq.input_dim() != config_.input_dim) {
    throw DimensionError("sequence '" + seq.id + "' has input width " +
                         std::to_string(seq.input_dim()) + ", model expects " +
                         std::to_string(config_.input_dim));
  }
}

// ---------------------------------------------------------------------------

GruOdeModel::GruOdeModel(ModelConfig config, std::mt19937_64& rng)
    : SequenceModel(std::move(config)) {
  config_.validate();
  const std::size_t h = config_.hidden_dim;
  encoder = gru::InputEncoder::uniform(config_.input_dim, h, rng);
  cell = gru::GruParams::uniform(h, rng);
  head = OutputHead::uniform(h, config_.output_dim, rng);
}

ForwardResult GruOdeModel::forward(ad::Tape& tape, const data::SequenceRecord& seq) {
  check_sequence(seq);
  const gru::GruVars p = gru::bind(tape, cell);
  const Var encoded = gru::encode_input(
      tape.constant(Matrix(seq.inputs.transpose())), gru::bind(tape, encoder));
  TimeAxisSolve row = solve_time_axis(
      encoded, seq.times,
      [&p](const Var& below, const Var& state) {
        return gru::gru_ode_field(below, state, p);
      },
      config_.solve_t);
  ForwardResult r;
  r.outputs = apply_head(ad::hconcat(row.observed), cdrnde::bind(tape, head));
  r.time_nfe = row.trajectory.nfe;
  return r;
}

std::vector<NamedTensor> GruOdeModel::parameters() {
  auto out = encoder.named("encoder.");
  for (auto& p : cell.named("gru.")) out.push_back(p);
  for (auto& p : head.named("head.")) out.push_back(p);
  return out;
}

std::unique_ptr<SequenceModel> make_model(const ModelConfig& config,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  switch (config.kind) {
    case ModelKind::gru_ode: return std::make_unique<GruOdeModel>(config, rng);
    case ModelKind::cdr_nde: return std::make_unique<CdrNdeModel>(config, rng);
    case ModelKind::cdr_nde_heat: return std::make_unique<HeatModel>(config, rng);
  }
  throw ConfigError("unknown model kind");
}

}  // namespace cdrnde
