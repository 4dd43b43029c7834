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

#include "cdrnde/app.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "cdrnde/checkpoint.hpp"
#include "cdrnde/errors.hpp"

namespace cdrnde::app {

namespace fs = std::filesystem;
using config::Json;

// ---------------------------------------------------------------------------
// Run configuration

Json RunConfig::to_json() const {
  return Json{{"model", cdrnde::to_string(model.kind)},
              {"task", data::to_string(model.task)},
              {"input_dim", model.input_dim},
              {"output_dim", model.output_dim},
              {"hidden_dim", model.hidden_dim},
              {"depth_T", model.depth_T},
              {"diffusivity", model.diffusivity},
              {"spacing_mode", cdrnde::to_string(model.spacing)},
              {"boundary_mode", cdrnde::to_string(model.boundary)},
              {"tie_weights", model.tie_weights},
              {"gru_forcing", model.gru_forcing},
              {"solve_t", config::to_json(model.solve_t)},
              {"solve_depth", config::to_json(model.solve_depth)},
              {"epochs", train.epochs},
              {"batch_size", train.batch_size},
              {"lr", train.schedule.base_lr},
              {"lr_gamma", train.schedule.gamma},
              {"lr_milestone", train.schedule.milestone_epoch},
              {"rmsprop_alpha", train.rmsprop_alpha},
              {"rmsprop_epsilon", train.rmsprop_epsilon},
              {"clip_norm", train.clip_norm},
              {"seed", train.seed},
              {"train_data", train_data},
              {"val_data", val_data},
              {"test_data", test_data},
              {"output_dir", output_dir},
              {"rescale_times", rescale_times},
              {"record_wall_time", record_wall_time}};
}

RunConfig RunConfig::from_json(const Json& j) {
  RunConfig c;
  config::ObjectReader r(j, "");
  std::string kind = cdrnde::to_string(c.model.kind);
  std::string task = data::to_string(c.model.task);
  std::string spacing = cdrnde::to_string(c.model.spacing);
  std::string boundary = cdrnde::to_string(c.model.boundary);
  std::size_t hidden = c.train.hidden_dim;
  r.read("model", kind);
  r.read("task", task);
  r.read("input_dim", c.model.input_dim);
  r.read("output_dim", c.model.output_dim);
  r.read("hidden_dim", hidden);
  r.read("depth_T", c.model.depth_T);
  r.read("diffusivity", c.model.diffusivity);
  r.read("spacing_mode", spacing);
  r.read("boundary_mode", boundary);
  r.read("tie_weights", c.model.tie_weights);
  r.read("gru_forcing", c.model.gru_forcing);
  if (const Json* s = r.object("solve_t")) {
    c.model.solve_t = config::solve_config_from_json(*s, "solve_t");
  }
  if (const Json* s = r.object("solve_depth")) {
    c.model.solve_depth = config::solve_config_from_json(*s, "solve_depth");
  }
  r.read("epochs", c.train.epochs);
  r.read("batch_size", c.train.batch_size);
  r.read("lr", c.train.schedule.base_lr);
  r.read("lr_gamma", c.train.schedule.gamma);
  r.read("lr_milestone", c.train.schedule.milestone_epoch);
  r.read("rmsprop_alpha", c.train.rmsprop_alpha);
  r.read("rmsprop_epsilon", c.train.rmsprop_epsilon);
  r.read("clip_norm", c.train.clip_norm);
  r.read("seed", c.train.seed);
  r.read("train_data", c.train_data);
  r.read("val_data", c.val_data);
  r.read("test_data", c.test_data);
  r.read("output_dir", c.output_dir);
  r.read("rescale_times", c.rescale_times);
  r.read("record_wall_time", c.record_wall_time);
  r.finish();

  c.model.kind = model_kind_from_string(kind);
  c.model.task = data::task_from_string(task);
  c.model.spacing = spacing_from_string(spacing);
  c.model.boundary = boundary_from_string(boundary);
  c.model.hidden_dim = c.train.hidden_dim = hidden;
  c.train.model = c.model.kind;
  c.train.task = c.model.task;
  return c;
}

void RunConfig::validate() const {
  train.validate();
  if (!(model.depth_T >= 0.0) || !(model.diffusivity > 0.0)) {
    throw ConfigError("depth_T must be >= 0 and diffusivity > 0");
  }
  model.solve_t.validate();
  model.solve_depth.validate();
  if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path);
  try {
    return RunConfig::from_json(Json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path + ": " + e.what());
  }
}

void apply_overrides(Json& j, const std::vector<std::string>& overrides) {
  for (const std::string& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw ConfigError("override '" + kv + "' is not key=value");
    }
    const std::string key = kv.substr(0, eq), text = kv.substr(eq + 1);
    Json value = Json::parse(text, nullptr, false);
    if (value.is_discarded()) value = text;
    Json* target = &j;
    std::size_t start = 0;
    for (std::size_t dot; (dot = key.find('.', start)) != std::string::npos; start = dot + 1) {
      target = &(*target)[key.substr(start, dot - start)];
    }
    (*target)[key.substr(start)] = std::move(value);
  }
}

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Helpers

namespace {

std::vector<data::SequenceRecord> load_optional(const std::string& path) {
  if (path.empty()) return {};
  return data::load_jsonl(path);
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw ConfigError("cannot create directory " + dir + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + p.string());
  return out;
}

void write_json(const fs::path& p, const Json& j) {
  auto out = open_out(p);
  out << j.dump(2) << "\n";
}

// Number of classes needed to cover every label, or target width.
std::size_t required_outputs(std::span<const data::SequenceRecord> records,
                             data::TaskKind task) {
  std::size_t need = task == data::TaskKind::classification ? 2 : 0;
  for (const auto& r : records) {
    if (task == data::TaskKind::classification) {
      for (int y : r.labels) need = std::max(need, static_cast<std::size_t>(y) + 1);
    } else {
      need = std::max(need, static_cast<std::size_t>(r.targets.cols()));
    }
  }
  return need;
}

// Checks that `records` fit a model configured as `m`.
void check_compatible(std::span<const data::SequenceRecord> records, const ModelConfig& m,
                      const std::string& what) {
  const bool cls = m.task == data::TaskKind::classification;
  for (const auto& r : records) {
    if (r.input_dim() != m.input_dim) {
      throw DataError(what + ": record '" + r.id + "' has input width " +
                      std::to_string(r.input_dim()) + " but the model expects input_dim " +
                      std::to_string(m.input_dim));
    }
    if (r.is_classification() != cls) {
      throw DataError(what + ": record '" + r.id + "' does not carry " +
                      (cls ? "class labels" : "regression targets") + " for task " +
                      data::to_string(m.task));
    }
    if (cls) {
      for (int y : r.labels) {
        if (static_cast<std::size_t>(y) >= m.output_dim) {
          throw DataError(what + ": record '" + r.id + "' has label " + std::to_string(y) +
                          " but the model has " + std::to_string(m.output_dim) + " classes");
        }
      }
    } else if (static_cast<std::size_t>(r.targets.cols()) != m.output_dim) {
      throw DataError(what + ": record '" + r.id + "' has target width " +
                      std::to_string(r.targets.cols()) + " but the model has output_dim " +
                      std::to_string(m.output_dim));
    }
  }
}

Json nfe_json(const train::NfeStats& s) {
  return Json{{"min", s.min}, {"max", s.max}, {"mean", s.mean}, {"count", s.count}};
}

Json report_json(const train::EvalMetrics& m, data::TaskKind task) {
  auto num = [](double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); };
  return Json{{"task", data::to_string(task)},
              {"loss", num(m.loss)},
              {"metric_name", task == data::TaskKind::classification ? "accuracy" : "mse"},
              {"metric", num(m.metric)},
              {"sequences", m.sequences},
              {"steps", m.steps},
              {"nfe", Json{{"depth", nfe_json(m.depth_nfe)}, {"time", nfe_json(m.time_nfe)}}}};
}

}  // namespace

// ---------------------------------------------------------------------------
// train

int cmd_train(const RunConfig& cfg_in, std::ostream& log) {
  cfg_in.validate();
  RunConfig cfg = cfg_in;
  if (cfg.train_data.empty()) throw ConfigError("train_data is required");
  auto train_set = data::load_jsonl(cfg.train_data);
  auto val_set = load_optional(cfg.val_data);
  auto test_set = load_optional(cfg.test_data);
  if (train_set.empty()) throw DataError("training data " + cfg.train_data + " is empty");
  if (cfg.rescale_times) {
    const double f = data::rescale_times(train_set);
    data::scale_times(val_set, f);
    data::scale_times(test_set, f);
  }

  ModelConfig& m = cfg.model;
  const std::size_t width = train_set.front().input_dim();
  if (m.input_dim == 0) m.input_dim = width;
  std::vector<data::SequenceRecord> everything = train_set;
  everything.insert(everything.end(), val_set.begin(), val_set.end());
  everything.insert(everything.end(), test_set.begin(), test_set.end());
  if (m.output_dim == 0) m.output_dim = required_outputs(everything, m.task);
  m.validate();
  check_compatible(train_set, m, "train_data");
  check_compatible(val_set, m, "val_data");
  check_compatible(test_set, m, "test_data");

  const fs::path dir(cfg.output_dir);
  ensure_dir(cfg.output_dir);
  write_json(dir / "run.json", cfg.to_json());

  auto model = make_model(m, cfg.train.seed);
  auto metrics = open_out(dir / "metrics.csv");
  auto timing = open_out(dir / "timing.csv");
  metrics << "epoch,lr,train_loss,val_loss,val_metric,wall_seconds,nfe_mean\n";
  timing << "epoch,wall_seconds\n";
  auto on_epoch = [&](const train::EpochRecord& r) {
    const double wall = cfg.record_wall_time ? r.wall_seconds : 0.0;
    metrics << r.epoch << ',' << format_number(r.lr) << ',' << format_number(r.train_loss)
            << ',' << format_number(r.val_loss) << ',' << format_number(r.val_metric) << ','
            << format_number(wall) << ',' << format_number(r.nfe_mean) << '\n';
    metrics.flush();
    timing << r.epoch << ',' << format_number(r.wall_seconds) << '\n';
    log << "epoch " << r.epoch << "  lr " << format_number(r.lr) << "  train_loss "
        << format_number(r.train_loss) << "  val_loss " << format_number(r.val_loss)
        << "  val_metric " << format_number(r.val_metric) << "\n";
  };
  train::fit(*model, train_set, val_set, cfg.train, on_epoch);
  train::save_checkpoint(*model, (dir / "checkpoint.json").string());

  if (!test_set.empty()) {
    const auto rep = train::evaluate(*model, test_set, train::resolve_threads(cfg.train.threads));
    write_json(dir / "report.json", report_json(rep, m.task));
    log << "test loss " << format_number(rep.loss) << "  test metric "
        << format_number(rep.metric) << "\n";
  }
  log << "wrote " << (dir / "metrics.csv").string() << ", checkpoint.json, run.json\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// eval

int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& report_path, std::ostream& log) {
  auto model = train::load_checkpoint(checkpoint);
  const auto records = data::load_jsonl(data_path);
  check_compatible(records, model->config(), data_path);
  const auto rep = train::evaluate(*model, records, train::resolve_threads(0));
  const Json report = report_json(rep, model->config().task);
  write_json(report_path, report);
  log << report.dump(2) << "\n";
  return kOk;
}

// ---------------------------------------------------------------------------
// gradcheck

ad::GradCheckResult gradcheck_model(const GradcheckOptions& opt) {
  if (opt.length == 0 || opt.length > 3) throw ConfigError("gradcheck needs 1 <= K <= 3");
  if (opt.hidden == 0 || opt.hidden > 4) throw ConfigError("gradcheck needs 1 <= H <= 4");
  if (opt.input_dim == 0) throw ConfigError("gradcheck needs D >= 1");

  ModelConfig mc;
  mc.kind = opt.kind;
  mc.task = opt.task;
  mc.input_dim = opt.input_dim;
  mc.hidden_dim = opt.hidden;
  mc.output_dim = opt.outputs;
  mc.spacing = opt.spacing;
  mc.boundary = opt.boundary;
  mc.tie_weights = opt.tie_weights;
  auto model = make_model(mc, opt.seed);

  std::mt19937_64 rng(opt.seed + 1);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> gap(0.5, 1.5);
  data::SequenceRecord seq;
  seq.id = "gradcheck";
  const auto k = static_cast<Eigen::Index>(opt.length);
  double t = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    seq.times.push_back(t);
    t += gap(rng);
  }
  seq.inputs = Matrix(k, static_cast<Eigen::Index>(opt.input_dim));
  for (Eigen::Index i = 0; i < seq.inputs.size(); ++i) seq.inputs.data()[i] = normal(rng);
  if (opt.task == data::TaskKind::classification) {
    std::uniform_int_distribution<int> cls(0, static_cast<int>(opt.outputs) - 1);
    for (Eigen::Index i = 0; i < k; ++i) seq.labels.push_back(cls(rng));
  } else {
    seq.targets = Matrix(k, static_cast<Eigen::Index>(opt.outputs));
    for (Eigen::Index i = 0; i < seq.targets.size(); ++i) seq.targets.data()[i] = normal(rng);
  }

  auto params = model->parameters();
  auto loss = [&](ad::Tape& tape) {
    return train::sequence_loss(model->forward(tape, seq), seq);
  };
  return ad::grad_check(loss, params, opt.eps);
}

int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& log) {
  const auto r = gradcheck_model(opt);
  const bool ok = r.passed(opt.threshold);
  log << (ok ? "PASS" : "FAIL") << " gradcheck " << cdrnde::to_string(opt.kind)
      << " spacing=" << cdrnde::to_string(opt.spacing)
      << " boundary=" << cdrnde::to_string(opt.boundary)
      << " tie_weights=" << (opt.tie_weights ? "true" : "false") << " K=" << opt.length
      << " H=" << opt.hidden << " D=" << opt.input_dim
      << " max_rel_error=" << format_number(r.max_relative_error)
      << " coordinates=" << r.coordinates << " failures=" << r.failures
      << " worst=" << r.worst << "\n";
  return ok ? kOk : kGradcheckFailed;
}

// ---------------------------------------------------------------------------
// bench

std::vector<BenchRow> run_bench(const RunConfig& cfg, const BenchOptions& opt) {
  cfg.validate();
  if (opt.kinds.empty()) throw ConfigError("bench needs at least one model kind");
  if (opt.epochs == 0) throw ConfigError("bench needs epochs >= 1");
  std::vector<data::SequenceRecord> records =
      cfg.train_data.empty()
          ? data::synth_classification(opt.sequences, opt.length, opt.input_dim, cfg.train.seed)
          : data::load_jsonl(cfg.train_data);
  if (records.empty()) throw DataError("bench data is empty");

  std::vector<BenchRow> rows;
  for (ModelKind kind : opt.kinds) {
    ModelConfig m = cfg.model;
    m.kind = kind;
    m.task = records.front().is_classification() ? data::TaskKind::classification
                                                 : data::TaskKind::regression;
    m.input_dim = records.front().input_dim();
    m.output_dim = required_outputs(records, m.task);
    check_compatible(records, m, "bench data");
    auto model = make_model(m, cfg.train.seed);
    train::TrainConfig tc = cfg.train;
    tc.model = kind;
    train::RmspropState rms{tc.rmsprop_alpha, tc.rmsprop_epsilon, tc.schedule.base_lr, {}, 0};
    double seconds = 0.0, nfe = 0.0;
    for (std::size_t e = 0; e < opt.epochs; ++e) {
      const auto batches = data::make_batches(records, tc.batch_size, tc.seed + e);
      const auto start = std::chrono::steady_clock::now();
      const auto s = train::train_epoch(*model, batches, rms, tc);
      seconds += std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      nfe += s.nfe_mean;
    }
    const double n = static_cast<double>(opt.epochs);
    rows.push_back({kind, seconds / n, nfe / n});
  }
  return rows;
}

int cmd_bench(const RunConfig& cfg, const BenchOptions& opt, std::ostream& log) {
  const auto rows = run_bench(cfg, opt);
  auto out = open_out(opt.out_path);
  out << "model,epoch_seconds,nfe_mean\n";
  for (const auto& r : rows) {
    out << cdrnde::to_string(r.kind) << ',' << format_number(r.epoch_seconds) << ','
        << format_number(r.nfe_mean) << '\n';
    log << cdrnde::to_string(r.kind) << ": " << format_number(r.epoch_seconds)
        << " s/epoch, nfe_mean " << format_number(r.nfe_mean) << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------
// synth

int cmd_synth(const SynthOptions& opt, std::ostream& log) {
  if (opt.sequences == 0 || opt.length == 0 || opt.input_dim == 0) {
    throw ConfigError("synth needs n, K and D >= 1");
  }
  auto records = opt.task == data::TaskKind::classification
                     ? data::synth_classification(opt.sequences, opt.length, opt.input_dim,
                                                  opt.seed, opt.classification)
                     : data::synth_regression(opt.sequences, opt.length, opt.seed,
                                              opt.regression);
  const auto parts = data::split(std::move(records), opt.ratios, opt.seed);
  ensure_dir(opt.out_dir);
  const fs::path dir(opt.out_dir);
  const std::pair<const char*, const std::vector<data::SequenceRecord>*> files[] = {
      {"train.jsonl", &parts.train}, {"val.jsonl", &parts.val}, {"test.jsonl", &parts.test}};
  for (const auto& [name, recs] : files) {
    const auto path = (dir / name).string();
    try {
      data::write_jsonl(path, *recs);
    } catch (const DataError& e) {
      throw ConfigError(e.what());
    }
    log << "wrote " << recs->size() << " records to " << path << "\n";
  }
  return kOk;
}

// ---------------------------------------------------------------------------

int run_guarded(const std::function<int()>& body, std::ostream& err) {
  try {
    return body();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const SolverError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const DataError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kDataError;
  } catch (const DimensionError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const RangeError& e) {
    err << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kConfigError;
  }
}

}  // namespace cdrnde::app
