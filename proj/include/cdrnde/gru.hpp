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

// GRU gate algebra shared by every vector field in the library.
//
// Argument convention: the W matrices always act on `below` (the input-like
// argument) and the U matrices on `state`. Every function accepts H x n
// operands, so n columns can be evaluated in one call.

#ifndef CDRNDE_GRU_HPP
#define CDRNDE_GRU_HPP

#include <random>
#include <string>
#include <vector>

#include "cdrnde/autodiff.hpp"
#include "cdrnde/tensor.hpp"

namespace cdrnde::gru {

struct GruParams {
  std::size_t hidden = 0;
  Tensor W_r, U_r, b_r;
  Tensor W_z, U_z, b_z;
  Tensor W_h, U_h, b_h;

  static GruParams zeros(std::size_t hidden);
  /// Uniform in [-1/sqrt(H), 1/sqrt(H)].
  static GruParams uniform(std::size_t hidden, std::mt19937_64& rng);

  std::vector<NamedTensor> named(const std::string& prefix);
  void validate() const;
};

struct GruVars {
  std::size_t hidden = 0;
  ad::Var W_r, U_r, b_r;
  ad::Var W_z, U_z, b_z;
  ad::Var W_h, U_h, b_h;
};

GruVars bind(ad::Tape& tape, GruParams& p);

template <typename T>
struct GateSet {
  T r;  ///< reset gate, in (0, 1)
  T z;  ///< update gate, in (0, 1)
  T g;  ///< candidate, in (-1, 1)
};

using GateActivations = GateSet<ad::Var>;
using GateValues = GateSet<Matrix>;

/// r = σ(W_r·below + U_r·state + b_r), z likewise,
/// g = tanh(W_h·below + U_h·(r ⊙ state) + b_h).
GateActivations gru_gates(const ad::Var& below, const ad::Var& state,
                          const GruVars& p);
/// z ⊙ state + (1 - z) ⊙ g.
ad::Var gru_discrete_step(const ad::Var& below, const ad::Var& state,
                          const GruVars& p);
/// (1 - z) ⊙ (g - state): the continuous-time GRU field.
ad::Var gru_ode_field(const ad::Var& below, const ad::Var& state,
                      const GruVars& p);

// Value-only counterparts, no tape involved.
GateValues gru_gates(const Matrix& below, const Matrix& state,
                     const GruParams& p);
Matrix gru_discrete_step(const Matrix& below, const Matrix& state,
                         const GruParams& p);
Matrix gru_ode_field(const Matrix& below, const Matrix& state,
                     const GruParams& p);

/// Affine lift of D-dimensional observations to the hidden width.
struct InputEncoder {
  std::size_t input_dim = 0;
  std::size_t hidden = 0;
  Tensor W_e;  ///< H x D
  Tensor b_e;  ///< H

  static InputEncoder zeros(std::size_t input_dim, std::size_t hidden);
  /// Requires input_dim == hidden.
  static InputEncoder identity(std::size_t hidden);
  static InputEncoder uniform(std::size_t input_dim, std::size_t hidden,
                              std::mt19937_64& rng);

  std::vector<NamedTensor> named(const std::string& prefix);
};

struct EncoderVars {
  ad::Var W_e, b_e;
};

EncoderVars bind(ad::Tape& tape, InputEncoder& e);

/// W_e·x + b_e for each column of the D x n input.
ad::Var encode_input(const ad::Var& x, const EncoderVars& e);
Matrix encode_input(const Matrix& x, const InputEncoder& e);

}  // namespace cdrnde::gru

#endif  // CDRNDE_GRU_HPP
