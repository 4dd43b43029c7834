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

// Losses, RMSprop, the learning-rate schedule and the training/evaluation
// loops.

#ifndef CDRNDE_TRAIN_HPP
#define CDRNDE_TRAIN_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "cdrnde/data.hpp"
#include "cdrnde/model.hpp"

namespace cdrnde::train {

/// -log softmax(logits)[target], with max subtraction.
double cross_entropy(const Vector& logits, int target);
/// Mean squared difference over all elements.
double mse(const Matrix& pred, const Matrix& target);

/// Mean per-step loss of one sequence: cross-entropy for classification
/// records, MSE otherwise.
ad::Var sequence_loss(const ForwardResult& out, const data::SequenceRecord& seq);

struct LrSchedule {
  double base_lr = 5e-3;
  double gamma = 0.1;
  int milestone_epoch = 100;

  void validate() const;
};

double lr_at_epoch(int epoch, const LrSchedule& s);

struct RmspropState {
  double alpha = 0.99;
  double epsilon = 1e-8;
  double lr = 5e-3;
  /// Running average of squared gradients, one per parameter; sized lazily.
  std::vector<Matrix> v;
  /// Number of steps skipped because of non-finite gradients.
  std::size_t skipped = 0;

  void validate() const;
};

/// v <- αv + (1-α)g², θ <- θ - lr·g/(√v + ε). A parameter without a gradient
/// is treated as g = 0. Returns false and leaves everything untouched when
/// any gradient is non-finite.
bool rmsprop_step(std::span<const NamedTensor> params, RmspropState& state);

/// Rescales all gradients so their global L2 norm is at most max_norm.
/// Returns the norm before clipping.
double clip_grad_norm(std::span<const NamedTensor> params, double max_norm);

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 256;
  std::size_t hidden_dim = 64;
  std::uint64_t seed = 0;
  ModelKind model = ModelKind::cdr_nde_heat;
  data::TaskKind task = data::TaskKind::classification;
  LrSchedule schedule;
  double rmsprop_alpha = 0.99;
  double rmsprop_epsilon = 1e-8;
  /// Global gradient-norm cap; 0 disables clipping.
  double clip_norm = 10.0;
  /// Worker threads; 0 reads CDRNDE_THREADS, falling back to the core count.
  std::size_t threads = 0;

  void validate() const;
};

/// Thread count after resolving 0 through CDRNDE_THREADS.
std::size_t resolve_threads(std::size_t requested);

struct NfeStats {
  std::size_t min = 0;
  std::size_t max = 0;
  double mean = 0.0;
  std::size_t count = 0;

  void add(std::size_t nfe);
};

struct EvalMetrics {
  double loss = std::numeric_limits<double>::quiet_NaN();
  /// Accuracy for classification, MSE for regression.
  double metric = std::numeric_limits<double>::quiet_NaN();
  std::size_t sequences = 0;
  std::size_t steps = 0;
  NfeStats depth_nfe;
  NfeStats time_nfe;
};

struct EpochSummary {
  double mean_loss = 0.0;
  /// Training accuracy or MSE, from the forward passes before each step.
  double metric = 0.0;
  /// Mean of time plus depth nfe per sequence.
  double nfe_mean = 0.0;
  std::size_t skipped_steps = 0;
  std::size_t sequences = 0;
};

/// One pass over `batches`: per batch, forward and backward every sequence
/// (padding stripped), average the gradients over sequences, clip, and take
/// one RMSprop step. Per-sequence gradients are summed in sequence order, so
/// the result does not depend on the thread count. Throws NumericalError on
/// a non-finite loss.
EpochSummary train_epoch(SequenceModel& model, std::span<const data::Batch> batches,
                         RmspropState& opt, const TrainConfig& cfg);

EvalMetrics evaluate(SequenceModel& model, std::span<const data::SequenceRecord> records,
                     std::size_t threads = 1);
EvalMetrics evaluate(SequenceModel& model, std::span<const data::Batch> batches,
                     std::size_t threads = 1);

/// Mean of the per-sequence losses of the real part of a batch.
double batch_loss(SequenceModel& model, const data::Batch& batch);

struct EpochRecord {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_metric = 0.0;
  double wall_seconds = 0.0;
  double nfe_mean = 0.0;
};

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Full schedule: cfg.epochs epochs with batches reshuffled per epoch from
/// cfg.seed, validation after each epoch.
std::vector<EpochRecord> fit(SequenceModel& model,
                             std::span<const data::SequenceRecord> train_set,
                             std::span<const data::SequenceRecord> val_set,
                             const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace cdrnde::train

#endif  // CDRNDE_TRAIN_HPP
