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

#ifndef CDRNDE_GRAD_CHECK_HPP
#define CDRNDE_GRAD_CHECK_HPP

#include <functional>
#include <limits>
#include <span>
#include <string>

#include "cdrnde/autodiff.hpp"

namespace cdrnde::ad {

/// Builds a scalar loss on the given tape. It must bind the parameters under
/// test through Tape::variable so their gradients are tracked.
using LossFunction = std::function<Var(Tape&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::size_t coordinates = 0;
  /// Coordinates where the loss was non-finite at a perturbed point.
  std::size_t failures = 0;
  /// "name[index]" of the worst coordinate.
  std::string worst;

  bool passed(double tolerance) const {
    return failures == 0 && max_relative_error <= tolerance;
  }
};

/// Compares reverse-mode gradients with central differences
/// (f(θ + εe_i) - f(θ - εe_i)) / 2ε for every element of every parameter.
/// Relative error per coordinate is |a - n| / max(1e-8, |a| + |n|).
/// Parameter values are restored on return; their grad slots are overwritten.
GradCheckResult grad_check(const LossFunction& f,
                           std::span<const NamedTensor> params, double eps);

}  // namespace cdrnde::ad

#endif  // CDRNDE_GRAD_CHECK_HPP
