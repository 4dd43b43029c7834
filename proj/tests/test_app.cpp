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
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"

#include "cdrnde/app.hpp"
#include "cdrnde/checkpoint.hpp"
#include "cdrnde/errors.hpp"

using namespace cdrnde;
using namespace cdrnde::app;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::size_t count_lines(const std::string& s) {
  return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n'));
}

int guarded(const std::function<int()>& body) {
  std::ostringstream err;
  return run_guarded(body, err);
}

SynthOptions small_synth(const fs::path& dir, std::size_t n = 10) {
  SynthOptions o;
  o.sequences = n;
  o.length = 5;
  o.input_dim = 3;
  o.seed = 4;
  o.out_dir = dir.string();
  return o;
}

RunConfig small_run(const fs::path& data, const fs::path& out) {
  RunConfig c;
  c.train_data = (data / "train.jsonl").string();
  c.val_data = (data / "val.jsonl").string();
  c.test_data = (data / "test.jsonl").string();
  c.output_dir = out.string();
  c.train.epochs = 1;
  c.train.batch_size = 4;
  c.train.hidden_dim = 4;
  c.model.hidden_dim = 4;
  c.train.threads = 1;
  return c;
}

}  // namespace

TEST_CASE("run configuration defaults") {
  const RunConfig c = RunConfig::from_json(config::Json::object());
  CHECK(c.model.hidden_dim == 64);
  CHECK(c.train.batch_size == 256);
  CHECK(c.train.epochs == 200);
  CHECK(c.train.schedule.base_lr == 5e-3);
  CHECK(c.train.schedule.gamma == 0.1);
  CHECK(c.train.clip_norm == 10.0);
  CHECK(c.model.input_dim == 0);
  const auto j = c.to_json();
  CHECK(j.at("hidden_dim") == 64);
  CHECK(j.at("lr") == 5e-3);
  CHECK(RunConfig::from_json(j).to_json() == j);
}

TEST_CASE("run configuration errors and overrides") {
  config::Json j = config::Json::object();
  j["hiden_dim"] = 3;
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = config::Json::object();
  j["epochs"] = "many";
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);
  j = config::Json::object();
  j["model"] = "transformer";
  CHECK_THROWS_AS(RunConfig::from_json(j), ConfigError);

  config::Json base = config::Json::object();
  apply_overrides(base, {"hidden_dim=8", "model=cdr_nde", "lr=0.01", "tie_weights=false"});
  const auto c = RunConfig::from_json(base);
  CHECK(c.model.hidden_dim == 8);
  CHECK(c.model.kind == ModelKind::cdr_nde);
  CHECK(c.train.schedule.base_lr == 0.01);
  CHECK_FALSE(c.model.tie_weights);
  CHECK_THROWS_AS(apply_overrides(base, {"novalue"}), ConfigError);

  TempDir dir("cdrnde_app_cfg");
  const auto path = dir.path / "cfg.json";
  std::ofstream(path) << "{\"epochs\": 3, \"seed\": 9}";
  const auto loaded = load_run_config(path.string());
  CHECK(loaded.train.epochs == 3);
  CHECK(loaded.train.seed == 9);
  std::ofstream(dir.path / "bad.json") << "{\"epochs\": ";
  CHECK_THROWS_AS(load_run_config((dir.path / "bad.json").string()), ConfigError);
  std::ostringstream log;
  CHECK(guarded([&] { return cmd_train(RunConfig::from_json(j), log); }) == kConfigError);
}

TEST_CASE("number formatting") {
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(3.0) == "3");
  CHECK(format_number(0.1) == "0.1");
  CHECK(format_number(std::nan("")) == "nan");
  CHECK(format_number(std::numeric_limits<double>::infinity()) == "inf");
  CHECK(std::stod(format_number(1.0 / 3.0)) == 1.0 / 3.0);
}

TEST_CASE("synth writes a reproducible split") {
  TempDir a("cdrnde_app_synth_a"), b("cdrnde_app_synth_b");
  std::ostringstream log;
  REQUIRE(cmd_synth(small_synth(a.path), log) == kOk);
  REQUIRE(cmd_synth(small_synth(b.path), log) == kOk);
  std::size_t total = 0;
  for (const char* f : {"train.jsonl", "val.jsonl", "test.jsonl"}) {
    REQUIRE(fs::exists(a.path / f));
    CHECK(slurp(a.path / f) == slurp(b.path / f));
    const auto recs = data::load_jsonl((a.path / f).string());
    CHECK(recs.size() == count_lines(slurp(a.path / f)));
    total += recs.size();
  }
  CHECK(total == 10);
  CHECK(data::load_jsonl((a.path / "train.jsonl").string()).size() == 6);

  auto reg = small_synth(a.path / "reg");
  reg.task = data::TaskKind::regression;
  REQUIRE(cmd_synth(reg, log) == kOk);
  CHECK_FALSE(data::load_jsonl((a.path / "reg" / "test.jsonl").string())[0].is_classification());
}

TEST_CASE("train writes metrics, a checkpoint and reproducible outputs") {
  TempDir d("cdrnde_app_train");
  std::ostringstream log;
  REQUIRE(cmd_synth(small_synth(d.path / "data"), log) == kOk);
  auto cfg = small_run(d.path / "data", d.path / "run1");
  REQUIRE(cmd_train(cfg, log) == kOk);
  cfg.output_dir = (d.path / "run2").string();
  REQUIRE(cmd_train(cfg, log) == kOk);

  const std::string metrics = slurp(d.path / "run1" / "metrics.csv");
  CHECK(count_lines(metrics) == 2);
  CHECK(metrics.rfind("epoch,lr,train_loss,val_loss,val_metric,wall_seconds,nfe_mean\n", 0) == 0);
  for (const char* f : {"metrics.csv", "checkpoint.json", "report.json"}) {
    CHECK(slurp(d.path / "run1" / f) == slurp(d.path / "run2" / f));
  }
  CHECK(fs::exists(d.path / "run1" / "timing.csv"));
  const auto run = config::Json::parse(slurp(d.path / "run1" / "run.json"));
  CHECK(run.at("input_dim") == 3);
  CHECK(run.at("output_dim") == 2);
  CHECK(run.at("lr") == 5e-3);
  CHECK(run.at("train_data") == cfg.train_data);

  const auto report = config::Json::parse(slurp(d.path / "run1" / "report.json"));
  CHECK(report.at("sequences") == 2);
  CHECK(report.at("nfe").at("depth").at("min") <= report.at("nfe").at("depth").at("max"));
}

TEST_CASE("train reports data problems with the data exit code") {
  TempDir d("cdrnde_app_train_err");
  std::ostringstream log;
  REQUIRE(cmd_synth(small_synth(d.path / "data"), log) == kOk);
  auto cfg = small_run(d.path / "data", d.path / "run");
  cfg.model.input_dim = 5;
  CHECK(guarded([&] { return cmd_train(cfg, log); }) == kDataError);
  cfg = small_run(d.path / "data", d.path / "run");
  cfg.train_data = (d.path / "nope.jsonl").string();
  CHECK(guarded([&] { return cmd_train(cfg, log); }) == kDataError);
  cfg = small_run(d.path / "data", d.path / "run");
  cfg.train_data.clear();
  CHECK(guarded([&] { return cmd_train(cfg, log); }) == kConfigError);
}

TEST_CASE("eval of an overfit toy model and dimension mismatches") {
  TempDir d("cdrnde_app_eval");
  std::ostringstream log;
  data::ClassificationSynthOptions clean;
  clean.noise = 0.0;
  auto recs = data::synth_classification(8, 6, 3, 2, clean);
  for (auto& r : recs) std::fill(r.labels.begin(), r.labels.end(), 1);
  data::write_jsonl((d.path / "toy.jsonl").string(), recs);

  RunConfig cfg;
  cfg.train_data = (d.path / "toy.jsonl").string();
  cfg.output_dir = (d.path / "run").string();
  cfg.train.epochs = 30;
  cfg.train.batch_size = 8;
  cfg.model.hidden_dim = 4;
  cfg.train.hidden_dim = 4;
  cfg.train.threads = 1;
  cfg.train.schedule.base_lr = 0.05;
  REQUIRE(cmd_train(cfg, log) == kOk);

  const auto report_path = d.path / "report.json";
  REQUIRE(cmd_eval((d.path / "run" / "checkpoint.json").string(), cfg.train_data,
                   report_path.string(), log) == kOk);
  const auto report = config::Json::parse(slurp(report_path));
  CHECK(report.at("metric").get<double>() >= 0.99);
  CHECK(report.at("metric_name") == "accuracy");
  CHECK(report.at("nfe").at("time").contains("min"));
  CHECK(report.at("nfe").at("time").contains("max"));

  auto wide = data::synth_classification(2, 4, 4, 3);
  data::write_jsonl((d.path / "wide.jsonl").string(), wide);
  CHECK(guarded([&] {
          return cmd_eval((d.path / "run" / "checkpoint.json").string(),
                          (d.path / "wide.jsonl").string(), report_path.string(), log);
        }) == kDataError);
  CHECK(guarded([&] {
          return cmd_eval((d.path / "missing.json").string(), cfg.train_data,
                          report_path.string(), log);
        }) == kDataError);
}

TEST_CASE("gradcheck command") {
  std::ostringstream log;
  for (auto kind : {ModelKind::cdr_nde, ModelKind::cdr_nde_heat, ModelKind::gru_ode}) {
    GradcheckOptions o;
    o.kind = kind;
    CHECK(cmd_gradcheck(o, log) == kOk);
  }
  CHECK(log.str().find("PASS") != std::string::npos);
  GradcheckOptions big;
  big.length = 4;
  CHECK(guarded([&] { return cmd_gradcheck(big, log); }) == kConfigError);
  big.length = 3;
  big.hidden = 5;
  CHECK(guarded([&] { return cmd_gradcheck(big, log); }) == kConfigError);
  GradcheckOptions strict;
  strict.threshold = 0.0;
  strict.eps = 1e-1;
  CHECK(cmd_gradcheck(strict, log) == kGradcheckFailed);
}

TEST_CASE("bench compares per-epoch cost") {
  TempDir d("cdrnde_app_bench");
  RunConfig cfg;
  cfg.model.hidden_dim = 16;
  cfg.train.hidden_dim = 16;
  cfg.train.batch_size = 32;
  cfg.train.threads = 1;
  BenchOptions o;
  o.sequences = 32;
  o.length = 16;
  o.out_path = (d.path / "bench.csv").string();
  std::ostringstream log;
  REQUIRE(cmd_bench(cfg, o, log) == kOk);
  const std::string csv = slurp(d.path / "bench.csv");
  CHECK(count_lines(csv) == 3);
  CHECK(csv.rfind("model,epoch_seconds,nfe_mean\n", 0) == 0);
  const auto rows = run_bench(cfg, o);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].kind == ModelKind::cdr_nde);
  CHECK(rows[1].epoch_seconds < rows[0].epoch_seconds);
  o.kinds.clear();
  CHECK_THROWS_AS(run_bench(cfg, o), ConfigError);
}

TEST_CASE("guarded runner maps errors to exit codes") {
  CHECK(guarded([] { return 0; }) == kOk);
  CHECK(guarded([]() -> int { throw ConfigError("x"); }) == kConfigError);
  CHECK(guarded([]() -> int { throw DataError("x"); }) == kDataError);
  CHECK(guarded([]() -> int { throw CheckpointError("x"); }) == kDataError);
  CHECK(guarded([]() -> int { throw NumericalError("x"); }) == kNumericalError);
  CHECK(guarded([]() -> int { throw std::runtime_error("x"); }) == kConfigError);
  std::ostringstream err;
  run_guarded([]() -> int { throw DataError("bad row", 7); }, err);
  CHECK(err.str().find("line 7") != std::string::npos);
}
