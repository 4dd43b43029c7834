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

// Shared model plumbing: configuration, output head, the time-axis solve
// that produces depth-0 states, and the polymorphic model interface used by
// the training loop.

#ifndef CDRNDE_MODEL_HPP
#define CDRNDE_MODEL_HPP

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "cdrnde/autodiff.hpp"
#include "cdrnde/data.hpp"
#include "cdrnde/gru.hpp"
#include "cdrnde/ode.hpp"

namespace cdrnde {

enum class ModelKind { gru_ode, cdr_nde, cdr_nde_heat };
enum class SpacingMode { uniform, actual };
enum class BoundaryMode { zero_flux, zero_ghost };

std::string to_string(ModelKind k);
std::string to_string(SpacingMode m);
std::string to_string(BoundaryMode m);
ModelKind model_kind_from_string(const std::string& s);
SpacingMode spacing_from_string(const std::string& s);
BoundaryMode boundary_from_string(const std::string& s);

struct ModelConfig {
  ModelKind kind = ModelKind::cdr_nde_heat;
  data::TaskKind task = data::TaskKind::classification;
  std::size_t input_dim = 1;
  std::size_t hidden_dim = 64;
  /// Number of classes, or regression target width.
  std::size_t output_dim = 2;
  /// Maximum depth T'. Zero skips the depth solve entirely.
  double depth_T = 1.0;
  double diffusivity = 1.0;
  SpacingMode spacing = SpacingMode::uniform;
  BoundaryMode boundary = BoundaryMode::zero_flux;
  bool tie_weights = true;
  /// Heat model only: include the GRU forcing term in the depth field.
  bool gru_forcing = true;
  ode::SolveConfig solve_t;
  ode::SolveConfig solve_depth;

  void validate() const;
};

/// o_h: a single affine layer from hidden states to outputs.
struct OutputHead {
  Tensor W_o;  ///< C x H
  Tensor b_o;  ///< C

  static OutputHead zeros(std::size_t hidden, std::size_t outputs);
  static OutputHead uniform(std::size_t hidden, std::size_t outputs,
                            std::mt19937_64& rng);
  std::vector<NamedTensor> named(const std::string& prefix);
};

struct HeadVars {
  ad::Var W_o, b_o;
};

HeadVars bind(ad::Tape& tape, OutputHead& head);
/// W_o·states + b_o, column by column (H x K in, C x K out).
ad::Var apply_head(const ad::Var& states, const HeadVars& head);

/// Depth-0 states along the time axis.
struct TimeAxisSolve {
  ode::Trajectory<ad::Var> trajectory;  ///< every solver knot
  std::vector<ad::Var> observed;        ///< state at each t_i
};

/// f(below, state) for the time-axis field.
using TimeField = std::function<ad::Var(const ad::Var& below, const ad::Var& state)>;

/// Integrates `field` from h(t_1) = encoded column 0. On (t_{i-1}, t_i] the
/// `below` argument is held at encoded column i, so the observation at t_i
/// drives the state into t_i the way x_t drives a discrete GRU step.
TimeAxisSolve solve_time_axis(const ad::Var& encoded,
                              const std::vector<double>& times,
                              const TimeField& field,
                              const ode::SolveConfig& cfg);

struct ForwardResult {
  ad::Var outputs;  ///< C x K
  std::size_t time_nfe = 0;
  std::size_t depth_nfe = 0;
};

class SequenceModel {
 public:
  explicit SequenceModel(ModelConfig config) : config_(std::move(config)) {}
  virtual ~SequenceModel() = default;

  const ModelConfig& config() const { return config_; }

  virtual ForwardResult forward(ad::Tape& tape,
                                const data::SequenceRecord& seq) = 0;
  /// Stable order; names are unique and used by checkpoints.
  virtual std::vector<NamedTensor> parameters() = 0;
  virtual std::unique_ptr<SequenceModel> clone() const = 0;

 protected:
  void check_sequence(const data::SequenceRecord& seq) const;

  ModelConfig config_;
};

/// Randomly initialized model of the configured kind.
std::unique_ptr<SequenceModel> make_model(const ModelConfig& config,
                                          std::uint64_t seed);

/// GRU-ODE baseline: the time-axis solve with the GRU field, then the head.
class GruOdeModel final : public SequenceModel {
 public:
  GruOdeModel(ModelConfig config, std::mt19937_64& rng);

  ForwardResult forward(ad::Tape& tape, const data::SequenceRecord& seq) override;
  std::vector<NamedTensor> parameters() override;
  std::unique_ptr<SequenceModel> clone() const override {
    return std::make_unique<GruOdeModel>(*this);
  }

  gru::GruParams cell;
  gru::InputEncoder encoder;
  OutputHead head;
};

}  // namespace cdrnde

#endif  // CDRNDE_MODEL_HPP
