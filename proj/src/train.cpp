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

#include "cdrnde/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>

#include "cdrnde/errors.hpp"

namespace cdrnde::train {

using ad::Var;

double cross_entropy(const Vector& logits, int target) {
  if (logits.size() < 2) throw ContractError("cross_entropy needs at least 2 classes");
  if (target < 0 || target >= logits.size()) {
    throw RangeError("target class " + std::to_string(target) + " outside [0, " +
                     std::to_string(logits.size()) + ")");
  }
  const double m = logits.maxCoeff();
  return std::log((logits.array() - m).exp().sum()) + m - logits(target);
}

double mse(const Matrix& pred, const Matrix& target) {
  if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
    throw DimensionError("shape mismatch in mse: " + shape_string(pred.rows(), pred.cols()) +
                         " vs " + shape_string(target.rows(), target.cols()));
  }
  if (pred.size() == 0) return 0.0;
  return (pred - target).squaredNorm() / static_cast<double>(pred.size());
}

Var sequence_loss(const ForwardResult& out, const data::SequenceRecord& seq) {
  if (seq.is_classification()) return ad::cross_entropy(out.outputs, seq.labels);
  return ad::mse(out.outputs, Matrix(seq.targets.transpose()));
}

void LrSchedule::validate() const {
  if (!(base_lr > 0.0)) throw ConfigError("base_lr must be > 0");
  if (!(gamma > 0.0 && gamma <= 1.0)) throw ConfigError("gamma must lie in (0, 1]");
  if (milestone_epoch < 0) throw ConfigError("milestone_epoch must be >= 0");
}

double lr_at_epoch(int epoch, const LrSchedule& s) {
  if (epoch < 0) throw ContractError("epoch must be >= 0");
  return epoch < s.milestone_epoch ? s.base_lr : s.base_lr * s.gamma;
}

void RmspropState::validate() const {
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("rmsprop alpha must lie in (0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("rmsprop epsilon must be > 0");
  if (!(lr >= 0.0)) throw ConfigError("learning rate must be >= 0");
}

bool rmsprop_step(std::span<const NamedTensor> params, RmspropState& state) {
  state.validate();
  if (state.v.size() != params.size()) {
    state.v.clear();
    for (const auto& p : params) {
      state.v.push_back(Matrix::Zero(p.tensor->value().rows(), p.tensor->value().cols()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& g = params[i].tensor->grad();
    if (!g) continue;
    if (g->rows() != state.v[i].rows() || g->cols() != state.v[i].cols()) {
      throw DimensionError("gradient of " + params[i].name + " has shape " +
                           shape_string(g->rows(), g->cols()));
    }
    if (!g->allFinite()) {
      ++state.skipped;
      std::cerr << "warning: non-finite gradient in " << params[i].name
                << ", optimizer step skipped\n";
      return false;
    }
  }
  const double a = state.alpha;
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& v = state.v[i];
    const auto& g = params[i].tensor->grad();
    if (!g) {
      v *= a;
      continue;
    }
    v = a * v + (1.0 - a) * g->cwiseAbs2();
    params[i].tensor->value().array() -=
        state.lr * g->array() / (v.array().sqrt() + state.epsilon);
  }
  return true;
}

double clip_grad_norm(std::span<const NamedTensor> params, double max_norm) {
  double sq = 0.0;
  for (const auto& p : params) {
    if (p.tensor->grad()) sq += p.tensor->grad()->squaredNorm();
  }
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm && std::isfinite(norm)) {
    const double f = max_norm / norm;
    for (const auto& p : params) {
      if (p.tensor->grad()) *p.tensor->grad() *= f;
    }
  }
  return norm;
}

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0 || hidden_dim == 0) {
    throw ConfigError("epochs, batch_size and hidden_dim must be >= 1");
  }
  schedule.validate();
  RmspropState probe{rmsprop_alpha, rmsprop_epsilon, schedule.base_lr, {}, 0};
  probe.validate();
  if (!(clip_norm >= 0.0)) throw ConfigError("clip_norm must be >= 0");
}

std::size_t resolve_threads(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("CDRNDE_THREADS")) {
    char* end = nullptr;
    const long n = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && n > 0) return static_cast<std::size_t>(n);
    throw ConfigError(std::string("CDRNDE_THREADS must be a positive integer, got '") +
                      env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void NfeStats::add(std::size_t nfe) {
  if (count == 0) {
    min = max = nfe;
  } else {
    min = std::min(min, nfe);
    max = std::max(max, nfe);
  }
  ++count;
  mean += (static_cast<double>(nfe) - mean) / static_cast<double>(count);
}

namespace {

// Runs job(model, i) for i in [0, n). Worker 0 is the master model, the
// others are replicas whose parameters are refreshed from the master first.
class Workers {
 public:
  Workers(SequenceModel& master, std::size_t threads) : master_(master) {
    for (std::size_t t = 1; t < threads; ++t) replicas_.push_back(master.clone());
  }

  template <typename Job>
  void run(std::size_t n, Job&& job) {
    const std::size_t used = std::min(n, replicas_.size() + 1);
    if (used <= 1) {
      for (std::size_t i = 0; i < n; ++i) job(master_, i);
      return;
    }
    sync(used - 1);
    std::vector<std::exception_ptr> errors(used);
    std::vector<std::thread> pool;
    auto body = [&](std::size_t w) {
      SequenceModel& m = w == 0 ? master_ : *replicas_[w - 1];
      try {
        for (std::size_t i = w; i < n; i += used) job(m, i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    };
    for (std::size_t w = 1; w < used; ++w) pool.emplace_back(body, w);
    body(0);
    for (auto& t : pool) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

 private:
  void sync(std::size_t count) {
    auto src = master_.parameters();
    for (std::size_t r = 0; r < count; ++r) {
      auto dst = replicas_[r]->parameters();
      for (std::size_t i = 0; i < src.size(); ++i) {
        dst[i].tensor->value() = src[i].tensor->value();
      }
    }
  }

  SequenceModel& master_;
  std::vector<std::unique_ptr<SequenceModel>> replicas_;
};

struct SequenceStats {
  double loss = 0.0;
  double correct = 0.0;  // classification hits
  double sse = 0.0;      // regression squared error
  std::size_t steps = 0;
  std::size_t outputs = 0;
  std::size_t time_nfe = 0;
  std::size_t depth_nfe = 0;
};

SequenceStats score(const ForwardResult& out, const Var& loss,
                    const data::SequenceRecord& seq) {
  SequenceStats s;
  s.loss = loss.scalar();
  s.steps = seq.length();
  s.time_nfe = out.time_nfe;
  s.depth_nfe = out.depth_nfe;
  const Matrix& y = out.outputs.value();
  if (seq.is_classification()) {
    for (Eigen::Index k = 0; k < y.cols(); ++k) {
      Eigen::Index best = 0;
      y.col(k).maxCoeff(&best);
      if (best == seq.labels[static_cast<std::size_t>(k)]) s.correct += 1.0;
    }
  } else {
    s.sse = (y - seq.targets.transpose()).squaredNorm();
    s.outputs = static_cast<std::size_t>(y.size());
  }
  return s;
}

double pooled_metric(std::span<const SequenceStats> stats, bool classification) {
  double num = 0.0;
  std::size_t den = 0;
  for (const auto& s : stats) {
    num += classification ? s.correct : s.sse;
    den += classification ? s.steps : s.outputs;
  }
  return den == 0 ? std::numeric_limits<double>::quiet_NaN() : num / static_cast<double>(den);
}

std::vector<data::SequenceRecord> unpad(std::span<const data::Batch> batches) {
  std::vector<data::SequenceRecord> out;
  for (const auto& b : batches) {
    for (std::size_t i = 0; i < b.size(); ++i) out.push_back(b.real(i));
  }
  return out;
}

EvalMetrics evaluate_with(Workers& workers, std::span<const data::SequenceRecord> records) {
  std::vector<SequenceStats> stats(records.size());
  workers.run(records.size(), [&](SequenceModel& m, std::size_t i) {
    ad::Tape tape;
    const ForwardResult out = m.forward(tape, records[i]);
    stats[i] = score(out, sequence_loss(out, records[i]), records[i]);
  });
  EvalMetrics r;
  r.sequences = records.size();
  if (records.empty()) return r;
  double loss = 0.0;
  for (const auto& s : stats) {
    loss += s.loss;
    r.steps += s.steps;
    r.depth_nfe.add(s.depth_nfe);
    r.time_nfe.add(s.time_nfe);
  }
  r.loss = loss / static_cast<double>(records.size());
  r.metric = pooled_metric(stats, records.front().is_classification());
  return r;
}

EpochSummary train_epoch_with(Workers& workers, SequenceModel& model,
                              std::span<const data::Batch> batches, RmspropState& opt,
                              const TrainConfig& cfg) {
  if (batches.empty()) throw ContractError("train_epoch needs at least one batch");
  const auto params = model.parameters();
  std::vector<SequenceStats> all;
  std::size_t skipped = 0;
  bool classification = false;

  for (std::size_t bi = 0; bi < batches.size(); ++bi) {
    std::vector<data::SequenceRecord> seqs;
    for (std::size_t i = 0; i < batches[bi].size(); ++i) seqs.push_back(batches[bi].real(i));
    if (seqs.empty()) continue;
    classification = seqs.front().is_classification();

    std::vector<SequenceStats> stats(seqs.size());
    std::vector<std::vector<Matrix>> grads(seqs.size());
    workers.run(seqs.size(), [&](SequenceModel& m, std::size_t i) {
      ad::Tape tape;
      const ForwardResult out = m.forward(tape, seqs[i]);
      const Var loss = sequence_loss(out, seqs[i]);
      stats[i] = score(out, loss, seqs[i]);
      if (!std::isfinite(stats[i].loss)) return;
      auto mp = m.parameters();
      for (auto& p : mp) p.tensor->clear_grad();
      tape.backward(loss);
      grads[i].reserve(mp.size());
      for (auto& p : mp) {
        const Matrix& v = p.tensor->value();
        grads[i].push_back(p.tensor->grad() ? *p.tensor->grad()
                                            : Matrix(Matrix::Zero(v.rows(), v.cols())));
        p.tensor->clear_grad();
      }
    });

    for (std::size_t i = 0; i < seqs.size(); ++i) {
      if (!std::isfinite(stats[i].loss)) {
        throw NumericalError("non-finite loss on sequence '" + seqs[i].id + "' (batch " +
                             std::to_string(bi) + ", position " + std::to_string(i) + ")");
      }
    }

    const double inv = 1.0 / static_cast<double>(seqs.size());
    for (std::size_t k = 0; k < params.size(); ++k) {
      Matrix total = grads[0][k];
      for (std::size_t i = 1; i < seqs.size(); ++i) total += grads[i][k];
      params[k].tensor->grad() = inv * total;
    }
    if (cfg.clip_norm > 0.0) clip_grad_norm(params, cfg.clip_norm);
    if (!rmsprop_step(params, opt)) ++skipped;
    for (const auto& p : params) p.tensor->clear_grad();
    all.insert(all.end(), stats.begin(), stats.end());
  }

  EpochSummary s;
  s.sequences = all.size();
  s.skipped_steps = skipped;
  if (all.empty()) return s;
  double loss = 0.0, nfe = 0.0;
  for (const auto& st : all) {
    loss += st.loss;
    nfe += static_cast<double>(st.time_nfe + st.depth_nfe);
  }
  s.mean_loss = loss / static_cast<double>(all.size());
  s.nfe_mean = nfe / static_cast<double>(all.size());
  s.metric = pooled_metric(all, classification);
  return s;
}

}  // namespace

EpochSummary train_epoch(SequenceModel& model, std::span<const data::Batch> batches,
                         RmspropState& opt, const TrainConfig& cfg) {
  Workers workers(model, resolve_threads(cfg.threads));
  return train_epoch_with(workers, model, batches, opt, cfg);
}

EvalMetrics evaluate(SequenceModel& model, std::span<const data::SequenceRecord> records,
                     std::size_t threads) {
  Workers workers(model, std::max<std::size_t>(1, threads));
  return evaluate_with(workers, records);
}

EvalMetrics evaluate(SequenceModel& model, std::span<const data::Batch> batches,
                     std::size_t threads) {
  const auto records = unpad(batches);
  return evaluate(model, records, threads);
}

double batch_loss(SequenceModel& model, const data::Batch& batch) {
  if (batch.size() == 0) throw ContractError("batch_loss on an empty batch");
  double total = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto seq = batch.real(i);
    ad::Tape tape;
    total += sequence_loss(model.forward(tape, seq), seq).scalar();
  }
  return total / static_cast<double>(batch.size());
}

std::vector<EpochRecord> fit(SequenceModel& model,
                             std::span<const data::SequenceRecord> train_set,
                             std::span<const data::SequenceRecord> val_set,
                             const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  if (train_set.empty()) throw DataError("training set is empty");
  Workers workers(model, resolve_threads(cfg.threads));
  RmspropState opt{cfg.rmsprop_alpha, cfg.rmsprop_epsilon, cfg.schedule.base_lr, {}, 0};
  std::vector<EpochRecord> history;
  using clock = std::chrono::steady_clock;

  for (std::size_t e = 0; e < cfg.epochs; ++e) {
    const auto start = clock::now();
    opt.lr = lr_at_epoch(static_cast<int>(e), cfg.schedule);
    const auto batches = data::make_batches(train_set, cfg.batch_size,
                                            cfg.seed * 0x9E3779B97F4A7C15ULL + e);
    const EpochSummary s = train_epoch_with(workers, model, batches, opt, cfg);
    const EvalMetrics v = evaluate_with(workers, val_set);
    EpochRecord r;
    r.epoch = e + 1;
    r.lr = opt.lr;
    r.train_loss = s.mean_loss;
    r.val_loss = v.loss;
    r.val_metric = v.metric;
    r.nfe_mean = s.nfe_mean;
    r.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    history.push_back(r);
    if (on_epoch) on_epoch(r);
  }
  return history;
}

}  // namespace cdrnde::train
