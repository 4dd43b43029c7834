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

// Initial-value-problem integrators with dense (knot) output.
//
// The solvers are templated on the state type. A state type needs two
// customization points visible from this namespace:
//   values(state)                      -> Eigen object holding its numbers
//   linear_combination(base, h, c, ks) -> base + h * sum_j c[j] * ks[j]
// Both are provided for Eigen dense types (below) and for ad::Var, so the
// same code integrates plain vectors and differentiable tape states.

#ifndef CDRNDE_ODE_HPP
#define CDRNDE_ODE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "cdrnde/autodiff.hpp"
#include "cdrnde/errors.hpp"

namespace cdrnde::ode {

enum class Method { euler, dopri5 };

struct SolveConfig {
  Method method = Method::euler;
  int euler_steps_per_interval = 2;
  double atol = 1e-3;
  double rtol = 1e-3;
  int max_steps = 10000;

  void validate() const {
    if (euler_steps_per_interval < 1) {
      throw ConfigError("euler_steps_per_interval must be >= 1");
    }
    if (!(atol > 0.0) || !(rtol > 0.0)) {
      throw ConfigError("solver tolerances must be > 0");
    }
    if (max_steps < 1) throw ConfigError("max_steps must be >= 1");
  }
};

inline std::string to_string(Method m);
inline Method method_from_string(const std::string& name);

template <typename State>
struct Trajectory {
  std::vector<double> s;
  std::vector<State> y;
  std::size_t nfe = 0;
  std::size_t accepted = 0;
  std::size_t rejected = 0;

  const State& front() const { return y.front(); }
  const State& back() const { return y.back(); }
  std::size_t size() const { return s.size(); }

  void push(double at, State state) {
    s.push_back(at);
    y.push_back(std::move(state));
  }
};

// ---------------------------------------------------------------------------
// State customization points.

template <typename Derived>
const Derived& values(const Eigen::PlainObjectBase<Derived>& y) {
  return y.derived();
}

inline const Matrix& values(const ad::Var& y) { return y.value(); }

template <typename Derived>
Derived linear_combination(const Eigen::PlainObjectBase<Derived>& base,
                           double h, std::span<const double> coeffs,
                           std::span<const Derived> terms) {
  Derived out = base.derived();
  for (std::size_t j = 0; j < terms.size(); ++j) {
    if (coeffs[j] != 0.0) out += (h * coeffs[j]) * terms[j];
  }
  return out;
}

inline ad::Var linear_combination(const ad::Var& base, double h,
                                  std::span<const double> coeffs,
                                  std::span<const ad::Var> terms) {
  return ad::lincomb(base, h, coeffs, terms);
}

// ---------------------------------------------------------------------------

/// Explicit Euler with n_steps equal steps; every step is a knot.
template <typename State, typename Field>
Trajectory<State> euler_solve(Field&& field, State y0, double s0, double s1,
                              int n_steps) {
  if (!(s1 > s0)) throw ContractError("euler_solve needs s1 > s0");
  if (n_steps < 1) throw ContractError("euler_solve needs n_steps >= 1");
  const double h = (s1 - s0) / n_steps;
  Trajectory<State> traj;
  traj.s.reserve(n_steps + 1);
  traj.y.reserve(n_steps + 1);
  traj.push(s0, y0);
  static constexpr std::array<double, 1> one{1.0};
  for (int k = 0; k < n_steps; ++k) {
    const double s = s0 + k * h;
    State dy = field(s, traj.y.back());
    ++traj.nfe;
    if (!values(dy).allFinite()) {
      throw SolverError("non-finite vector field in Euler step",
                        static_cast<std::size_t>(k), s);
    }
    std::array<State, 1> ks{dy};
    State next = linear_combination(traj.y.back(), h, std::span(one),
                                    std::span<const State>(ks));
    traj.push(k + 1 == n_steps ? s1 : s0 + (k + 1) * h, std::move(next));
    ++traj.accepted;
  }
  return traj;
}

namespace detail {

struct DormandPrince {
  static constexpr std::array<double, 7> c{0.0, 1.0 / 5, 3.0 / 10, 4.0 / 5,
                                           8.0 / 9, 1.0, 1.0};
  static constexpr std::array<std::array<double, 6>, 7> a{{
      {},
      {1.0 / 5},
      {3.0 / 40, 9.0 / 40},
      {44.0 / 45, -56.0 / 15, 32.0 / 9},
      {19372.0 / 6561, -25360.0 / 2187, 64448.0 / 6561, -212.0 / 729},
      {9017.0 / 3168, -355.0 / 33, 46732.0 / 5247, 49.0 / 176,
       -5103.0 / 18656},
      {35.0 / 384, 0.0, 500.0 / 1113, 125.0 / 192, -2187.0 / 6784,
       11.0 / 84},
  }};
  // Fifth-order weights minus the embedded fourth-order weights.
  static constexpr std::array<double, 7> e{
      35.0 / 384 - 5179.0 / 57600,
      0.0,
      500.0 / 1113 - 7571.0 / 16695,
      125.0 / 192 - 393.0 / 640,
      -2187.0 / 6784 + 92097.0 / 339200,
      11.0 / 84 - 187.0 / 2100,
      -1.0 / 40};
};

}  // namespace detail

/// Dormand-Prince 5(4) with an I-controller (safety 0.9, factor clamped to
/// [0.2, 10]) and first-same-as-last stage reuse. Accepted steps become
/// knots. nfe counts every field evaluation, including rejected attempts.
template <typename State, typename Field>
Trajectory<State> dopri5_solve(Field&& field, State y0, double s0, double s1,
                               const SolveConfig& cfg) {
  using Tab = detail::DormandPrince;
  if (!(s1 > s0)) throw ContractError("dopri5_solve needs s1 > s0");
  cfg.validate();

  Trajectory<State> traj;
  traj.push(s0, y0);
  double s = s0;
  double h = (s1 - s0) / 10.0;
  std::vector<State> k;
  k.reserve(7);
  k.push_back(field(s, y0));
  traj.nfe = 1;
  std::size_t attempts = 0;

  while (s < s1) {
    if (attempts >= static_cast<std::size_t>(cfg.max_steps)) {
      throw SolverError("dopri5 exceeded max_steps", attempts, s);
    }
    ++attempts;
    bool last = false;
    if (s + h >= s1) {
      h = s1 - s;
      last = true;
    }
    const State& y = traj.y.back();
    State y5;
    for (std::size_t i = 1; i < 7; ++i) {
      State stage = linear_combination(
          y, h, std::span<const double>(Tab::a[i].data(), i),
          std::span<const State>(k.data(), i));
      if (!values(stage).allFinite()) {
        throw SolverError("non-finite dopri5 stage", attempts, s);
      }
      k.push_back(field(s + Tab::c[i] * h, stage));
      ++traj.nfe;
      // The last stage point is the fifth-order solution (FSAL).
      if (i == 6) y5 = std::move(stage);
    }
    const auto& y_old = values(y);
    const auto& y_new = values(y5);
    using Values = std::decay_t<decltype(y_old)>;
    Values err = Values::Zero(y_old.rows(), y_old.cols());
    for (std::size_t j = 0; j < 7; ++j) {
      if (Tab::e[j] != 0.0) err += (h * Tab::e[j]) * values(k[j]);
    }
    const auto scale =
        cfg.atol + cfg.rtol * y_old.array().abs().max(y_new.array().abs());
    const double norm = std::sqrt((err.array() / scale).square().mean());
    if (!std::isfinite(norm)) {
      throw SolverError("non-finite dopri5 error estimate", attempts, s);
    }

    double factor;
    if (norm == 0.0) {
      factor = 10.0;
    } else {
      factor = std::clamp(0.9 * std::pow(norm, -0.2), 0.2, 10.0);
    }
    if (norm <= 1.0) {
      s = last ? s1 : s + h;
      State slope = std::move(k[6]);
      traj.push(s, std::move(y5));
      ++traj.accepted;
      k.clear();
      k.push_back(std::move(slope));
    } else {
      ++traj.rejected;
      k.resize(1);
    }
    h *= factor;
  }
  return traj;
}

/// Integrates over [s0, s1] with the configured method. Euler uses
/// cfg.euler_steps_per_interval steps.
template <typename State, typename Field>
Trajectory<State> integrate(Field&& field, State y0, double s0, double s1,
                            const SolveConfig& cfg) {
  if (cfg.method == Method::euler) {
    return euler_solve(std::forward<Field>(field), std::move(y0), s0, s1,
                       cfg.euler_steps_per_interval);
  }
  return dopri5_solve(std::forward<Field>(field), std::move(y0), s0, s1, cfg);
}

/// Linear interpolation between the knots bracketing s; exact at knots.
template <typename State>
State interpolate(const Trajectory<State>& traj, double s) {
  if (traj.s.empty()) throw RangeError("interpolate on an empty trajectory");
  const double lo = traj.s.front(), hi = traj.s.back();
  const double slack = 1e-12 * std::max(1.0, hi - lo);
  if (s < lo - slack || s > hi + slack) {
    throw RangeError("interpolate: s = " + std::to_string(s) +
                     " outside [" + std::to_string(lo) + ", " +
                     std::to_string(hi) + "]");
  }
  s = std::clamp(s, lo, hi);
  auto it = std::lower_bound(traj.s.begin(), traj.s.end(), s);
  const auto idx = static_cast<std::size_t>(it - traj.s.begin());
  if (idx < traj.s.size() && traj.s[idx] == s) return traj.y[idx];
  // lower_bound found the first knot greater than s; idx >= 1 here.
  const double s_a = traj.s[idx - 1], s_b = traj.s[idx];
  const double w = (s - s_a) / (s_b - s_a);
  static constexpr std::array<double, 2> c{1.0, -1.0};
  std::array<State, 2> terms{traj.y[idx], traj.y[idx - 1]};
  return linear_combination(traj.y[idx - 1], w, std::span(c),
                            std::span<const State>(terms));
}

inline std::string to_string(Method m) {
  return m == Method::euler ? "euler" : "dopri5";
}

inline Method method_from_string(const std::string& name) {
  if (name == "euler") return Method::euler;
  if (name == "dopri5") return Method::dopri5;
  throw ConfigError("unknown solver method '" + name +
                    "' (expected euler or dopri5)");
}

}  // namespace cdrnde::ode

#endif  // CDRNDE_ODE_HPP
