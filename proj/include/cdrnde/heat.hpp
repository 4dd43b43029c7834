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

#ifndef CDRNDE_HEAT_HPP
#define CDRNDE_HEAT_HPP

#include "cdrnde/model.hpp"

namespace cdrnde {

/// All column states at one depth, plus the time gaps between columns.
struct RowState {
  Matrix states;             ///< H x K, column i is h_(t_i, t')
  std::vector<double> gaps;  ///< K - 1 positive gaps

  std::size_t size() const { return static_cast<std::size_t>(states.cols()); }
  void validate() const;
};

/// Second difference along the columns, scaled by cfg.diffusivity.
/// Uniform spacing uses unit grid distance; actual spacing uses the
/// non-uniform three-point stencil over the true gaps. Boundary ghosts are
/// the boundary state itself (zero_flux) or zero (zero_ghost) and sit one
/// adjacent gap away.
Matrix discrete_laplacian(const RowState& row, const ModelConfig& cfg);

/// K x K operator A with discrete_laplacian(row) == row.states * A.
Matrix laplacian_operator(std::size_t columns, const std::vector<double>& gaps,
                          const ModelConfig& cfg);

/// K x K operator S with (states * S).col(i) == states.col(i - 1), and a
/// zero first column.
Matrix left_shift_operator(std::size_t columns);

class HeatModel;

/// One explicit finite-difference update of the whole row:
/// h <- h + dt' * (Laplacian + f), computed column by column.
RowState fdm_step(const RowState& row, double dt, const HeatModel& m);

/// Depth evolution as a non-homogeneous heat equation over the columns,
/// integrated jointly as one method-of-lines system.
class HeatModel final : public SequenceModel {
 public:
  HeatModel(ModelConfig config, std::mt19937_64& rng);

  struct Bound {
    gru::GruVars gru;
    gru::EncoderVars encoder;
    HeadVars head;
  };

  /// Per-sequence constants of the depth field.
  struct DepthOperators {
    ad::Var laplacian;   ///< K x K
    ad::Var left_shift;  ///< K x K
  };

  Bound bind(ad::Tape& tape);
  DepthOperators depth_operators(ad::Tape& tape,
                                 const std::vector<double>& gaps) const;

  /// Depth-0 row from a GRU-ODE solve along time (H x K).
  TimeAxisSolve heat_row_init(ad::Tape& tape, const data::SequenceRecord& seq);

  /// Field for the stacked H x K depth system.
  ad::Var mol_field(const ad::Var& states, const DepthOperators& ops,
                    const gru::GruVars& p) const;
  /// Value-only evaluation of the same field.
  Matrix mol_field(const RowState& row);

  /// f term alone (z ⊙ left + (1 - z) ⊙ g), column by column; zeros when
  /// forcing is disabled.
  Matrix forcing(const Matrix& states) const;

  ForwardResult forward(ad::Tape& tape, const data::SequenceRecord& seq) override;
  /// Final depth states (H x K) along with the nfe of the depth solve.
  std::pair<ad::Var, std::size_t> depth_solve(ad::Tape& tape,
                                              const Bound& b,
                                              const ad::Var& row0,
                                              const std::vector<double>& gaps);

  std::vector<NamedTensor> parameters() override;
  std::unique_ptr<SequenceModel> clone() const override {
    return std::make_unique<HeatModel>(*this);
  }

  gru::GruParams p;
  gru::InputEncoder encoder;
  OutputHead head;
};

}  // namespace cdrnde

#endif  // CDRNDE_HEAT_HPP
