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

#include "cdrnde/grad_check.hpp"

#include <cmath>

#include "cdrnde/errors.hpp"

namespace cdrnde::ad {

namespace {

double evaluate(const LossFunction& f) {
  Tape tape;
  return f(tape).scalar();
}

}  // namespace

GradCheckResult grad_check(const LossFunction& f,
                           std::span<const NamedTensor> params, double eps) {
  if (!(eps > 0.0)) throw ContractError("grad_check needs eps > 0");

  std::vector<bool> saved_flags;
  for (const NamedTensor& p : params) {
    saved_flags.push_back(p.tensor->requires_grad());
    p.tensor->set_requires_grad(true);
    p.tensor->zero_grad();
  }
  {
    Tape tape;
    Var loss = f(tape);
    tape.backward(loss);
  }

  GradCheckResult result;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& t = *params[pi].tensor;
    const Matrix analytic = *t.grad();
    auto data = t.data();
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double original = data[i];
      data[i] = original + eps;
      const double plus = evaluate(f);
      data[i] = original - eps;
      const double minus = evaluate(f);
      data[i] = original;

      ++result.coordinates;
      double rel;
      if (!std::isfinite(plus) || !std::isfinite(minus)) {
        ++result.failures;
        rel = std::numeric_limits<double>::infinity();
      } else {
        const double numeric = (plus - minus) / (2.0 * eps);
        const double a = analytic.data()[i];
        rel = std::abs(a - numeric) /
              std::max(1e-8, std::abs(a) + std::abs(numeric));
      }
      if (rel > result.max_relative_error || result.worst.empty()) {
        result.max_relative_error = rel;
        result.worst = params[pi].name + "[" + std::to_string(i) + "]";
      }
    }
  }
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    params[pi].tensor->set_requires_grad(saved_flags[pi]);
  }
  return result;
}

}  // namespace cdrnde::ad
