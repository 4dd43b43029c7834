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

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cdrnde/checkpoint.hpp"
#include "cdrnde/errors.hpp"
#include "cdrnde/train.hpp"
#include "json.hpp"
#include "helpers.hpp"

using namespace cdrnde;
using namespace cdrnde::train;

namespace {

std::vector<data::SequenceRecord> random_set(std::size_t n, std::size_t k, std::uint64_t seed) {
  std::vector<data::SequenceRecord> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(testing::random_sequence(k + i % 3, 2, seed + i));
  return out;
}

std::vector<Matrix> snapshot(SequenceModel& m) {
  std::vector<Matrix> out;
  for (const auto& p : m.parameters()) out.push_back(p.tensor->value());
  return out;
}

double direct_loss(SequenceModel& m, const data::SequenceRecord& seq) {
  ad::Tape t;
  const Matrix out = m.forward(t, seq).outputs.value();
  double total = 0.0;
  for (std::size_t k = 0; k < seq.length(); ++k) {
    total += train::cross_entropy(Vector(out.col(static_cast<Eigen::Index>(k))), seq.labels[k]);
  }
  return total / static_cast<double>(seq.length());
}

TrainConfig quick_config(std::size_t threads = 1) {
  TrainConfig c;
  c.epochs = 1;
  c.batch_size = 4;
  c.hidden_dim = 3;
  c.threads = threads;
  return c;
}

}  // namespace

TEST_CASE("cross-entropy values") {
  CHECK(train::cross_entropy(Vector::Zero(4), 2) == doctest::Approx(std::log(4.0)));
  Vector confident(2);
  confident << 100.0, 0.0;
  CHECK(train::cross_entropy(confident, 0) == doctest::Approx(0.0).epsilon(1e-12));
  Vector l(2);
  l << 1.0, 2.0;
  CHECK(train::cross_entropy(l, 0) == doctest::Approx(1.3132617).epsilon(1e-7));
  CHECK_THROWS_AS(train::cross_entropy(l, 2), RangeError);
  CHECK_THROWS_AS(train::cross_entropy(l, -1), RangeError);
  Vector huge(2);
  huge << 1000.0, -1000.0;
  CHECK(std::isfinite(train::cross_entropy(huge, 1)));
}

TEST_CASE("mean squared error values") {
  const Matrix a = Matrix::Ones(2, 2);
  CHECK(train::mse(a, a) == 0.0);
  CHECK(train::mse(a, Matrix::Zero(2, 2)) == 1.0);
  Matrix p(1, 2), q(1, 2);
  p << 1.0, 4.0;
  q << 0.0, 2.0;
  CHECK(train::mse(p, q) == 2.5);
  CHECK_THROWS_AS(train::mse(a, Matrix::Zero(2, 3)), DimensionError);
}

TEST_CASE("RMSprop update") {
  Tensor w = Tensor::from_matrix(Matrix::Constant(1, 1, 1.0), true);
  std::vector<NamedTensor> params{{"w", &w}};
  RmspropState s;
  s.lr = 0.005;
  w.grad() = Matrix::Constant(1, 1, 1.0);
  REQUIRE(rmsprop_step(params, s));
  CHECK(s.v[0](0, 0) == doctest::Approx(0.01));
  CHECK(w.value()(0, 0) == doctest::Approx(1.0 - 0.005 / (0.1 + 1e-8)).epsilon(1e-12));
  CHECK(1.0 - w.value()(0, 0) == doctest::Approx(0.05).epsilon(1e-6));

  const double before = w.value()(0, 0);
  w.grad() = Matrix::Zero(1, 1);
  REQUIRE(rmsprop_step(params, s));
  CHECK(w.value()(0, 0) == before);
  CHECK(s.v[0](0, 0) == doctest::Approx(0.0099));

  w.clear_grad();
  REQUIRE(rmsprop_step(params, s));
  CHECK(s.v[0](0, 0) == doctest::Approx(0.0099 * 0.99));
  CHECK(w.value()(0, 0) == before);
}

TEST_CASE("RMSprop skips non-finite gradients") {
  Tensor a = Tensor::from_matrix(Matrix::Constant(1, 2, 1.0), true);
  Tensor b = Tensor::from_matrix(Matrix::Constant(1, 1, 2.0), true);
  std::vector<NamedTensor> params{{"a", &a}, {"b", &b}};
  RmspropState s;
  a.grad() = Matrix::Constant(1, 2, 0.5);
  b.grad() = Matrix::Constant(1, 1, std::nan(""));
  CHECK_FALSE(rmsprop_step(params, s));
  CHECK(s.skipped == 1);
  CHECK(a.value() == Matrix::Constant(1, 2, 1.0));
  CHECK(b.value()(0, 0) == 2.0);
  s.lr = -1.0;
  CHECK_THROWS_AS(rmsprop_step(params, s), ConfigError);
}

TEST_CASE("milestone learning rate") {
  LrSchedule s;
  CHECK(lr_at_epoch(0, s) == 5e-3);
  CHECK(lr_at_epoch(50, s) == 5e-3);
  CHECK(lr_at_epoch(99, s) == 5e-3);
  CHECK(lr_at_epoch(100, s) == doctest::Approx(5e-4));
  CHECK(lr_at_epoch(150, s) == doctest::Approx(5e-4));
  CHECK_THROWS_AS(lr_at_epoch(-1, s), ContractError);
  s.gamma = 0.0;
  CHECK_THROWS_AS(s.validate(), ConfigError);
}

TEST_CASE("gradient clipping") {
  Tensor a = Tensor::from_matrix(Matrix::Constant(1, 1, 0.0), true);
  Tensor b = Tensor::from_matrix(Matrix::Constant(1, 1, 0.0), true);
  std::vector<NamedTensor> params{{"a", &a}, {"b", &b}};
  a.grad() = Matrix::Constant(1, 1, 30.0);
  b.grad() = Matrix::Constant(1, 1, 40.0);
  CHECK(clip_grad_norm(params, 10.0) == doctest::Approx(50.0));
  CHECK((*a.grad())(0, 0) == doctest::Approx(6.0));
  CHECK((*b.grad())(0, 0) == doctest::Approx(8.0));
  CHECK(clip_grad_norm(params, 10.0) == doctest::Approx(10.0));
  CHECK((*a.grad())(0, 0) == doctest::Approx(6.0));
  a.grad() = Matrix::Constant(1, 1, 0.3);
  b.grad() = Matrix::Constant(1, 1, 0.4);
  CHECK(clip_grad_norm(params, 10.0) == doctest::Approx(0.5));
  CHECK((*b.grad())(0, 0) == 0.4);
}

TEST_CASE("thread count resolution") {
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}

TEST_CASE("zero learning rate leaves parameters bit-identical") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 1);
  const auto before = snapshot(*m);
  const auto set = random_set(5, 3, 10);
  const auto batches = data::make_batches(set, 2, 0);
  RmspropState opt;
  opt.lr = 0.0;
  const auto s = train_epoch(*m, batches, opt, quick_config());
  const auto after = snapshot(*m);
  for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
  CHECK(s.sequences == 5);
  CHECK(opt.v.size() == before.size());
}

TEST_CASE("single-sequence epoch loss equals the direct loss") {
  for (auto kind : {ModelKind::cdr_nde, ModelKind::cdr_nde_heat, ModelKind::gru_ode}) {
    auto m = make_model(testing::small_config(kind, 2, 3, 2), 2);
    const auto seq = testing::random_sequence(2, 2, 20);
    const double expect = direct_loss(*m, seq);
    const std::vector<data::SequenceRecord> one{seq};
    RmspropState opt;
    opt.lr = 0.0;
    const auto s = train_epoch(*m, data::make_batches(one, 1, 0), opt, quick_config());
    CHECK(s.mean_loss == doctest::Approx(expect).epsilon(1e-14));
  }
}

TEST_CASE("padded batch loss equals the mean of unpadded losses") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 3);
  const std::vector<data::SequenceRecord> recs{testing::random_sequence(3, 2, 30),
                                               testing::random_sequence(5, 2, 31)};
  const auto batch = data::pad(recs);
  const double expect = 0.5 * (direct_loss(*m, recs[0]) + direct_loss(*m, recs[1]));
  CHECK(std::abs(batch_loss(*m, batch) - expect) <= 1e-12);
}

TEST_CASE("one training step matches a manual averaged update") {
  const auto cfg_model = testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2);
  auto trained = make_model(cfg_model, 4);
  auto manual = make_model(cfg_model, 4);
  const std::vector<data::SequenceRecord> recs{testing::random_sequence(3, 2, 40),
                                               testing::random_sequence(5, 2, 41)};
  const std::vector<data::Batch> batches{data::pad(recs)};
  auto cfg = quick_config();
  cfg.clip_norm = 0.0;
  RmspropState opt;
  train_epoch(*trained, batches, opt, cfg);

  auto params = manual->parameters();
  for (auto& p : params) p.tensor->zero_grad();
  for (const auto& r : recs) {
    ad::Tape t;
    t.backward(sequence_loss(manual->forward(t, r), r));
  }
  for (auto& p : params) *p.tensor->grad() *= 0.5;
  RmspropState ref;
  rmsprop_step(params, ref);
  const auto a = snapshot(*trained);
  const auto b = snapshot(*manual);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK((a[i] - b[i]).cwiseAbs().maxCoeff() <= 1e-14);
  }
}

TEST_CASE("evaluation of a constant perfect predictor") {
  auto m = make_model(testing::small_config(ModelKind::gru_ode, 2, 3, 2), 5);
  auto params = m->parameters();
  for (auto& p : params) p.tensor->value().setZero();
  params.back().tensor->value() << -5.0, 5.0;
  std::vector<data::SequenceRecord> recs;
  for (std::uint64_t s = 0; s < 4; ++s) {
    auto r = testing::random_sequence(3, 2, 50 + s);
    std::fill(r.labels.begin(), r.labels.end(), 1);
    recs.push_back(r);
  }
  const auto e = evaluate(*m, recs);
  CHECK(e.metric == 1.0);
  CHECK(e.sequences == 4);
  CHECK(e.steps == 12);
  CHECK(e.loss == doctest::Approx(std::log1p(std::exp(-10.0))));
  CHECK(e.time_nfe.count == 4);
}

TEST_CASE("regression evaluation pools the squared error over steps") {
  auto cfg = testing::small_config(ModelKind::gru_ode, 2, 3, 2);
  cfg.task = data::TaskKind::regression;
  auto m = make_model(cfg, 6);
  for (auto& p : m->parameters()) p.tensor->value().setZero();
  std::vector<data::SequenceRecord> recs{testing::random_regression_sequence(2, 2, 2, 60),
                                         testing::random_regression_sequence(4, 2, 2, 61)};
  const auto e = evaluate(*m, recs);
  double sq = 0.0;
  double per_seq = 0.0;
  for (const auto& r : recs) {
    sq += r.targets.squaredNorm();
    per_seq += r.targets.squaredNorm() / static_cast<double>(r.targets.size());
  }
  CHECK(e.metric == doctest::Approx(sq / 12.0));
  CHECK(e.loss == doctest::Approx(per_seq / 2.0));
}

TEST_CASE("training reduces the loss for most seeds") {
  int improved = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    auto set = data::synth_classification(24, 8, 3, 70 + seed);
    auto mc = testing::small_config(ModelKind::cdr_nde_heat, 3, 8, 2);
    auto m = make_model(mc, seed);
    TrainConfig tc = quick_config();
    tc.epochs = 10;
    tc.batch_size = 8;
    tc.hidden_dim = 8;
    tc.seed = seed;
    const double before = evaluate(*m, set).loss;
    fit(*m, set, set, tc);
    if (evaluate(*m, set).loss < before) ++improved;
  }
  CHECK(improved >= 4);
}

TEST_CASE("training is independent of the thread count") {
  const auto set = random_set(7, 4, 80);
  auto run = [&](std::size_t threads) {
    auto m = make_model(testing::small_config(ModelKind::cdr_nde, 2, 3, 2), 8);
    auto tc = quick_config(threads);
    tc.epochs = 2;
    tc.batch_size = 3;
    const auto hist = fit(*m, set, set, tc);
    return std::make_pair(snapshot(*m), hist.back().val_loss);
  };
  const auto a = run(1);
  const auto b = run(3);
  CHECK(a.second == b.second);
  for (std::size_t i = 0; i < a.first.size(); ++i) CHECK(a.first[i] == b.first[i]);
}

TEST_CASE("fit records each epoch") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 9);
  const auto set = random_set(4, 3, 90);
  auto tc = quick_config();
  tc.epochs = 3;
  tc.schedule.milestone_epoch = 2;
  std::size_t calls = 0;
  const auto hist = fit(*m, set, set, tc, [&](const EpochRecord&) { ++calls; });
  REQUIRE(hist.size() == 3);
  CHECK(calls == 3);
  CHECK(hist[1].lr == 5e-3);
  CHECK(hist[2].lr == doctest::Approx(5e-4));
  CHECK(hist[0].nfe_mean > 0.0);
  CHECK_THROWS_AS(fit(*m, {}, set, tc), DataError);
  tc.epochs = 0;
  CHECK_THROWS_AS(tc.validate(), ConfigError);
}

TEST_CASE("non-finite loss raises a numerical error") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 10);
  m->parameters().back().tensor->value()(0, 0) = std::numeric_limits<double>::infinity();
  const auto set = random_set(2, 3, 95);
  RmspropState opt;
  CHECK_THROWS_AS(train_epoch(*m, data::make_batches(set, 2, 0), opt, quick_config()),
                  NumericalError);
}

TEST_CASE("checkpoint round trip") {
  for (auto kind : {ModelKind::cdr_nde, ModelKind::cdr_nde_heat, ModelKind::gru_ode}) {
    auto cfg = testing::small_config(kind, 2, 3, 2);
    cfg.tie_weights = kind != ModelKind::cdr_nde;
    auto m = make_model(cfg, 11);
    const std::string text = checkpoint_string(*m);
    auto loaded = parse_checkpoint(text);
    CHECK(checkpoint_string(*loaded) == text);
    const auto seq = testing::random_sequence(4, 2, 110);
    ad::Tape t1, t2;
    const Matrix a = m->forward(t1, seq).outputs.value();
    const Matrix b = loaded->forward(t2, seq).outputs.value();
    CHECK((a - b).cwiseAbs().maxCoeff() <= 1e-15);
    CHECK(loaded->config().tie_weights == cfg.tie_weights);
  }
}

TEST_CASE("checkpoint files and corruption") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 12);
  const auto dir = std::filesystem::temp_directory_path() / "cdrnde_ckpt_test";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "ckpt.json").string();
  save_checkpoint(*m, path);
  auto loaded = load_checkpoint(path);
  CHECK(checkpoint_string(*loaded) == checkpoint_string(*m));

  const std::string text = checkpoint_string(*m);
  CHECK_THROWS_AS(parse_checkpoint(text.substr(0, text.size() / 2)), CheckpointError);
  auto j = nlohmann::json::parse(text);
  j["format_version"] = 99;
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointError);
  j = nlohmann::json::parse(text);
  j.erase("params");
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointError);
  CHECK_THROWS_AS(load_checkpoint((dir / "missing.json").string()), CheckpointError);

  m->parameters()[0].tensor->value()(0, 0) = std::nan("");
  CHECK_THROWS_AS(checkpoint_string(*m), CheckpointError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("checkpoint rejects inconsistent contents") {
  auto m = make_model(testing::small_config(ModelKind::cdr_nde_heat, 2, 3, 2), 13);
  const auto text = checkpoint_string(*m);
  auto j = nlohmann::json::parse(text);
  j["model_kind"] = "cdr_nde";
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointError);
  j = nlohmann::json::parse(text);
  j["params"].erase(j["params"].begin());
  CHECK_THROWS_AS(parse_checkpoint(j.dump()), CheckpointError);
  CHECK_THROWS_AS(parse_checkpoint("[]"), CheckpointError);
}
