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

#ifndef CDRNDE_CDR_NDE_HPP
#define CDRNDE_CDR_NDE_HPP

#include "cdrnde/model.hpp"

namespace cdrnde {

/// Temporal field at depth 0: z ⊙ state + (1 - z) ⊙ g + below - state, with
/// gates from gru_gates(below, state).
ad::Var horizontal_field(const ad::Var& state, const ad::Var& below,
                         const gru::GruVars& p);

/// Depth field: z' ⊙ left + (1 - z') ⊙ g', with gates from
/// gru_gates(below = state, state = left).
ad::Var vertical_field(const ad::Var& state, const ad::Var& left,
                       const gru::GruVars& p);

/// Hidden states on the (time, depth) grid: the depth-0 row plus one depth
/// trajectory per observation.
struct HiddenGrid {
  TimeAxisSolve row0;
  std::vector<ode::Trajectory<ad::Var>> columns;
  std::size_t depth_nfe = 0;
};

/// Two-stage model: evolve depth 0 along time, then each column along depth
/// with the interpolated previous column as its left neighbor.
class CdrNdeModel final : public SequenceModel {
 public:
  CdrNdeModel(ModelConfig config, std::mt19937_64& rng);

  struct Bound {
    gru::GruVars horizontal;
    gru::GruVars vertical;
    gru::EncoderVars encoder;
    HeadVars head;
  };

  Bound bind(ad::Tape& tape);

  TimeAxisSolve stage1_solve(ad::Tape& tape, const data::SequenceRecord& seq);
  /// Columns are solved left to right; the first column sees a zero left
  /// neighbor.
  HiddenGrid stage2_solve(ad::Tape& tape, TimeAxisSolve row0);

  ForwardResult forward(ad::Tape& tape, const data::SequenceRecord& seq) override;
  std::vector<NamedTensor> parameters() override;
  std::unique_ptr<SequenceModel> clone() const override {
    return std::make_unique<CdrNdeModel>(*this);
  }

  gru::GruParams& vertical_params() { return config_.tie_weights ? p_h : p_v; }

  gru::GruParams p_h;
  /// Only used when weights are untied.
  gru::GruParams p_v;
  gru::InputEncoder encoder;
  OutputHead head;
};

}  // namespace cdrnde

#endif  // CDRNDE_CDR_NDE_HPP
