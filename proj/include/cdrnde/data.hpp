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

#ifndef CDRNDE_DATA_HPP
#define CDRNDE_DATA_HPP

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdrnde/tensor.hpp"

namespace cdrnde::data {

enum class TaskKind { classification, regression };

std::string to_string(TaskKind t);
TaskKind task_from_string(const std::string& name);

/// One irregularly sampled, labeled sequence.
struct SequenceRecord {
  std::string id;
  std::vector<double> times;  ///< strictly increasing, K entries
  Matrix inputs;              ///< K x D
  std::vector<int> labels;    ///< classification targets, K entries
  Matrix targets;             ///< regression targets, K x C

  std::size_t length() const { return times.size(); }
  std::size_t input_dim() const { return static_cast<std::size_t>(inputs.cols()); }
  bool is_classification() const { return !labels.empty(); }
  /// K - 1 gaps t_{i+1} - t_i.
  std::vector<double> gaps() const;

  /// Throws DataError (tagged with the line number when nonzero) on any broken
  /// invariant.
  void validate(std::size_t line = 0) const;
};

/// One JSON object per line: {"times": [...], "inputs": [[...], ...],
/// "targets": [...], "id": "..."}. Targets are class indices or vectors.
/// Blank lines are skipped; an empty file yields no records and a warning.
std::vector<SequenceRecord> load_jsonl(const std::string& path);
std::vector<SequenceRecord> parse_jsonl(std::istream& in);
std::string to_json_line(const SequenceRecord& r);
void write_jsonl(const std::string& path, std::span<const SequenceRecord> records);

/// Records padded to the longest member. mask[b][k] is true for real steps;
/// padded steps repeat the last time and carry zero inputs/targets.
struct Batch {
  std::vector<SequenceRecord> padded;
  std::vector<std::vector<bool>> mask;
  std::size_t max_length = 0;

  std::size_t size() const { return padded.size(); }
  std::size_t mask_count() const;
  /// The b-th record with its padding stripped.
  SequenceRecord real(std::size_t b) const;
};

Batch pad(std::span<const SequenceRecord> records);
/// Seeded shuffle, then consecutive chunks of batch_size (last may be short).
std::vector<Batch> make_batches(std::span<const SequenceRecord> records,
                                std::size_t batch_size, std::uint64_t seed);

struct Split {
  std::vector<SequenceRecord> train, val, test;
};

/// Seeded disjoint partition; val and test sizes are floor(n * ratio) and the
/// remainder goes to train.
Split split(std::vector<SequenceRecord> records,
            const std::array<double, 3>& ratios, std::uint64_t seed);

/// Rescales every record's times so that the mean gap over the dataset is 1.
/// Returns the factor applied (1 when there are no gaps).
double rescale_times(std::span<SequenceRecord> records);
/// Multiplies every time by `factor` (> 0).
void scale_times(std::span<SequenceRecord> records, double factor);

// ---------------------------------------------------------------------------
// Synthetic tasks.

struct ClassificationSynthOptions {
  double noise = 0.6;
  double horizon = 10.0;
  double omega_min = 0.5;
  double omega_max = 2.0;
};

/// Latent s(t) = sin(ωt + φ) observed at sorted uniform times over
/// [0, horizon]. Feature 0 is s(t_i) + noise, feature 1 the gap to the
/// previous observation, feature 2 the normalized time t_i / horizon, and
/// any further features are pure noise. Label is 1 when s(t_i) > 0.
std::vector<SequenceRecord> synth_classification(
    std::size_t n_seqs, std::size_t length, std::size_t input_dim,
    std::uint64_t seed, const ClassificationSynthOptions& opt = {});

struct RegressionSynthOptions {
  double dt = 0.2;
  double drop_rate = 0.1;
  double noise = 0.02;
  double omega_min = 1.0;
  double omega_max = 2.5;
  double damping_max = 0.2;
};

/// Damped oscillator x(t) = A e^{-ζt} cos(ωt + φ) sampled on a regular grid
/// with round(drop_rate * N) grid points removed at random. Inputs are
/// (x + noise, v + noise, gap to next kept step); the target at each kept
/// step is the clean (x, v) of the next kept step.
std::vector<SequenceRecord> synth_regression(
    std::size_t n_seqs, std::size_t length, std::uint64_t seed,
    const RegressionSynthOptions& opt = {});

/// Closed-form oscillator state (x, v) used by the generator.
std::array<double, 2> oscillator_state(double amplitude, double omega,
                                       double damping, double phase, double t);

// ---------------------------------------------------------------------------
// Reference baselines.

/// Accuracy on `test` of always predicting the most frequent train label.
double majority_baseline_accuracy(std::span<const SequenceRecord> train,
                                  std::span<const SequenceRecord> test);

/// Per-step binary logistic regression on the raw input features (plus
/// bias), fit by ridge-regularized Newton iterations; test accuracy.
double logistic_baseline_accuracy(std::span<const SequenceRecord> train,
                                  std::span<const SequenceRecord> test);

/// MSE of predicting the target from the first C input features (the
/// current observed state).
double persistence_baseline_mse(std::span<const SequenceRecord> records);

}  // namespace cdrnde::data

#endif  // CDRNDE_DATA_HPP
