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

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "cdrnde/data.hpp"
#include "cdrnde/errors.hpp"

namespace cdrnde::data {

std::vector<SequenceRecord> synth_classification(
    std::size_t n_seqs, std::size_t length, std::size_t input_dim,
    std::uint64_t seed, const ClassificationSynthOptions& opt) {
  if (n_seqs == 0 || length == 0 || input_dim == 0) {
    throw ContractError("synth_classification needs n_seqs, K, D >= 1");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> omega_dist(opt.omega_min, opt.omega_max);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> time_dist(0.0, opt.horizon);
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<SequenceRecord> out;
  out.reserve(n_seqs);
  for (std::size_t n = 0; n < n_seqs; ++n) {
    const double omega = omega_dist(rng);
    const double phase = phase_dist(rng);
    SequenceRecord r;
    r.id = "cls-" + std::to_string(n);
    r.times.resize(length);
    for (double& t : r.times) t = time_dist(rng);
    std::sort(r.times.begin(), r.times.end());
    for (std::size_t i = 1; i < length; ++i) {
      if (!(r.times[i] > r.times[i - 1])) {
        r.times[i] = std::nextafter(r.times[i - 1], opt.horizon + 1.0);
      }
    }
    const auto k = static_cast<Eigen::Index>(length);
    r.inputs = Matrix::Zero(k, static_cast<Eigen::Index>(input_dim));
    r.labels.resize(length);
    for (std::size_t i = 0; i < length; ++i) {
      const auto row = static_cast<Eigen::Index>(i);
      const double s = std::sin(omega * r.times[i] + phase);
      r.labels[i] = s > 0.0 ? 1 : 0;
      r.inputs(row, 0) = s + opt.noise * normal(rng);
      if (input_dim > 1) r.inputs(row, 1) = i == 0 ? 0.0 : r.times[i] - r.times[i - 1];
      if (input_dim > 2) r.inputs(row, 2) = r.times[i] / opt.horizon;
      for (std::size_t d = 3; d < input_dim; ++d) {
        r.inputs(row, static_cast<Eigen::Index>(d)) = normal(rng);
      }
    }
    out.push_back(std::move(r));
  }
  return out;
}

std::array<double, 2> oscillator_state(double amplitude, double omega,
                                       double damping, double phase,
                                       double t) {
  const double env = amplitude * std::exp(-damping * t);
  const double c = std::cos(omega * t + phase), s = std::sin(omega * t + phase);
  return {env * c, env * (-damping * c - omega * s)};
}

std::vector<SequenceRecord> synth_regression(std::size_t n_seqs,
                                             std::size_t length,
                                             std::uint64_t seed,
                                             const RegressionSynthOptions& opt) {
  if (n_seqs == 0 || length == 0) {
    throw ContractError("synth_regression needs n_seqs, K >= 1");
  }
  if (!(opt.drop_rate >= 0.0 && opt.drop_rate < 1.0)) {
    throw ContractError("drop_rate must lie in [0, 1)");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> amp_dist(0.5, 1.5);
  std::uniform_real_distribution<double> omega_dist(opt.omega_min, opt.omega_max);
  std::uniform_real_distribution<double> damp_dist(0.0, opt.damping_max);
  std::uniform_real_distribution<double> phase_dist(0.0, 2.0 * std::numbers::pi);
  std::normal_distribution<double> normal(0.0, 1.0);

  // One extra kept point supplies the last step's target.
  const std::size_t kept = length + 1;
  const auto grid = static_cast<std::size_t>(
      std::llround(static_cast<double>(kept) / (1.0 - opt.drop_rate)));
  const std::size_t n_grid = std::max(grid, kept);

  std::vector<SequenceRecord> out;
  out.reserve(n_seqs);
  for (std::size_t n = 0; n < n_seqs; ++n) {
    const double amp = amp_dist(rng);
    const double omega = omega_dist(rng);
    const double damping = damp_dist(rng);
    const double phase = phase_dist(rng);

    std::vector<std::size_t> idx(n_grid);
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    idx.resize(kept);
    std::sort(idx.begin(), idx.end());

    SequenceRecord r;
    r.id = "reg-" + std::to_string(n);
    const auto k = static_cast<Eigen::Index>(length);
    r.inputs = Matrix::Zero(k, 3);
    r.targets = Matrix::Zero(k, 2);
    for (std::size_t i = 0; i < length; ++i) {
      const double t = static_cast<double>(idx[i]) * opt.dt;
      const double t_next = static_cast<double>(idx[i + 1]) * opt.dt;
      const auto now = oscillator_state(amp, omega, damping, phase, t);
      const auto next = oscillator_state(amp, omega, damping, phase, t_next);
      const auto row = static_cast<Eigen::Index>(i);
      r.times.push_back(t);
      r.inputs(row, 0) = now[0] + opt.noise * normal(rng);
      r.inputs(row, 1) = now[1] + opt.noise * normal(rng);
      r.inputs(row, 2) = t_next - t;
      r.targets(row, 0) = next[0];
      r.targets(row, 1) = next[1];
    }
    out.push_back(std::move(r));
  }
  return out;
}

// ---------------------------------------------------------------------------

double majority_baseline_accuracy(std::span<const SequenceRecord> train,
                                  std::span<const SequenceRecord> test) {
  std::vector<std::size_t> counts;
  for (const SequenceRecord& r : train) {
    for (int y : r.labels) {
      if (static_cast<std::size_t>(y) >= counts.size()) counts.resize(y + 1, 0);
      ++counts[static_cast<std::size_t>(y)];
    }
  }
  if (counts.empty()) throw ContractError("majority baseline needs labeled train data");
  const int majority = static_cast<int>(
      std::max_element(counts.begin(), counts.end()) - counts.begin());
  std::size_t hit = 0, total = 0;
  for (const SequenceRecord& r : test) {
    for (int y : r.labels) {
      hit += y == majority;
      ++total;
    }
  }
  return total ? static_cast<double>(hit) / static_cast<double>(total) : 0.0;
}

namespace {

struct Design {
  Eigen::MatrixXd x;  // steps x (D + 1), last column is the bias
  Eigen::VectorXd y;
};

Design design(std::span<const SequenceRecord> records, const Eigen::RowVectorXd& mu,
              const Eigen::RowVectorXd& sigma) {
  std::size_t steps = 0;
  for (const SequenceRecord& r : records) steps += r.length();
  const Eigen::Index d = mu.size();
  Design out{Eigen::MatrixXd(static_cast<Eigen::Index>(steps), d + 1),
             Eigen::VectorXd(static_cast<Eigen::Index>(steps))};
  Eigen::Index row = 0;
  for (const SequenceRecord& r : records) {
    for (std::size_t i = 0; i < r.length(); ++i, ++row) {
      const int y = r.labels.at(i);
      if (y > 1) throw ContractError("logistic baseline supports binary labels only");
      out.x.row(row).head(d) =
          (r.inputs.row(static_cast<Eigen::Index>(i)) - mu).cwiseQuotient(sigma);
      out.x(row, d) = 1.0;
      out.y(row) = y;
    }
  }
  return out;
}

}  // namespace

double logistic_baseline_accuracy(std::span<const SequenceRecord> train,
                                  std::span<const SequenceRecord> test) {
  if (train.empty()) throw ContractError("logistic baseline needs train data");
  const Eigen::Index d = train.front().inputs.cols();
  Eigen::RowVectorXd mu = Eigen::RowVectorXd::Zero(d);
  Eigen::RowVectorXd sq = Eigen::RowVectorXd::Zero(d);
  double steps = 0.0;
  for (const SequenceRecord& r : train) {
    mu += r.inputs.colwise().sum();
    sq += r.inputs.array().square().matrix().colwise().sum();
    steps += static_cast<double>(r.length());
  }
  mu /= steps;
  Eigen::RowVectorXd sigma =
      (sq / steps - mu.cwiseProduct(mu)).cwiseMax(0.0).cwiseSqrt();
  for (Eigen::Index c = 0; c < d; ++c) {
    if (sigma(c) < 1e-12) sigma(c) = 1.0;
  }

  const Design tr = design(train, mu, sigma);
  constexpr double ridge = 1e-4;
  Eigen::VectorXd w = Eigen::VectorXd::Zero(d + 1);
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXd p = (1.0 / (1.0 + (-(tr.x * w).array()).exp())).matrix();
    Eigen::VectorXd grad = tr.x.transpose() * (p - tr.y) + ridge * w;
    Eigen::VectorXd s = (p.array() * (1.0 - p.array())).matrix();
    Eigen::MatrixXd hessian = tr.x.transpose() * s.asDiagonal() * tr.x;
    hessian.diagonal().array() += ridge;
    Eigen::VectorXd step = hessian.ldlt().solve(grad);
    w -= step;
    if (step.norm() < 1e-10) break;
  }

  const Design te = design(test, mu, sigma);
  if (te.y.size() == 0) return 0.0;
  Eigen::ArrayXd score = te.x * w;
  const auto correct = ((score > 0.0).cast<double>() == te.y.array()).count();
  return static_cast<double>(correct) / static_cast<double>(te.y.size());
}

double persistence_baseline_mse(std::span<const SequenceRecord> records) {
  double total = 0.0;
  std::size_t count = 0;
  for (const SequenceRecord& r : records) {
    const Eigen::Index c = r.targets.cols();
    if (c == 0) throw ContractError("persistence baseline needs regression targets");
    if (r.inputs.cols() < c) {
      throw ContractError("persistence baseline needs inputs at least as wide as targets");
    }
    total += (r.inputs.leftCols(c) - r.targets).squaredNorm();
    count += static_cast<std::size_t>(r.targets.size());
  }
  return count ? total / static_cast<double>(count) : 0.0;
}

}  // namespace cdrnde::data
