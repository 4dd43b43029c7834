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

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "cdrnde/app.hpp"
#include "cdrnde/errors.hpp"

namespace {

using cdrnde::config::Json;

Json read_config_json(const std::string& path) {
  if (path.empty()) return Json::object();
  std::ifstream in(path);
  if (!in) throw cdrnde::ConfigError("cannot read config " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw cdrnde::ConfigError("config " + path + ": " + e.what());
  }
}

cdrnde::app::RunConfig resolve_config(const std::string& path,
                                      const std::vector<std::string>& overrides) {
  Json j = read_config_json(path);
  cdrnde::app::apply_overrides(j, overrides);
  return cdrnde::app::RunConfig::from_json(j);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Continuous-depth recurrent neural differential equations"};
  cli.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> overrides;
  std::string output_dir;

  auto* train = cli.add_subcommand("train", "Train a model from a JSON run config");
  train->add_option("-c,--config", config_path, "Run config (JSON)")->required();
  train->add_option("--set", overrides, "Override a config key: key=value");
  train->add_option("-o,--output-dir", output_dir, "Overrides output_dir");

  std::string checkpoint, data_path, report_path = "report.json";
  auto* eval = cli.add_subcommand("eval", "Evaluate a checkpoint on a JSONL dataset");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint JSON")->required();
  eval->add_option("--data", data_path, "JSONL dataset")->required();
  eval->add_option("--report", report_path, "Where to write report.json");

  cdrnde::app::GradcheckOptions gc;
  std::string gc_kind = "cdr_nde_heat", gc_task = "classification";
  std::string gc_spacing = "uniform", gc_boundary = "zero_flux";
  bool gc_untied = false;
  auto* grad = cli.add_subcommand("gradcheck", "Check gradients against finite differences");
  grad->add_option("--model", gc_kind, "gru_ode, cdr_nde or cdr_nde_heat");
  grad->add_option("--task", gc_task, "classification or regression");
  grad->add_option("--K", gc.length, "Sequence length (<= 3)");
  grad->add_option("--H", gc.hidden, "Hidden width (<= 4)");
  grad->add_option("--D", gc.input_dim, "Input width");
  grad->add_option("--C", gc.outputs, "Classes or target width");
  grad->add_option("--spacing", gc_spacing, "uniform or actual");
  grad->add_option("--boundary", gc_boundary, "zero_flux or zero_ghost");
  grad->add_flag("--untied", gc_untied, "Separate horizontal and vertical weights");
  grad->add_option("--seed", gc.seed, "Seed for parameters and sequence");
  grad->add_option("--eps", gc.eps, "Finite-difference step");

  cdrnde::app::BenchOptions bench_opt;
  std::vector<std::string> bench_models{"cdr_nde", "cdr_nde_heat"};
  std::string bench_config;
  std::vector<std::string> bench_overrides;
  auto* bench = cli.add_subcommand("bench", "Time one training epoch per model kind");
  bench->add_option("-c,--config", bench_config, "Run config (JSON)");
  bench->add_option("--set", bench_overrides, "Override a config key: key=value");
  bench->add_option("--models", bench_models, "Model kinds to time")->delimiter(',');
  bench->add_option("--n", bench_opt.sequences, "Synthetic sequences");
  bench->add_option("--K", bench_opt.length, "Synthetic sequence length");
  bench->add_option("--D", bench_opt.input_dim, "Synthetic input width");
  bench->add_option("--epochs", bench_opt.epochs, "Timed epochs per model");
  bench->add_option("--out", bench_opt.out_path, "Where to write bench.csv");

  cdrnde::app::SynthOptions so;
  std::string synth_task = "classification";
  std::vector<double> ratios{0.6, 0.2, 0.2};
  auto* synth = cli.add_subcommand("synth", "Generate synthetic train/val/test JSONL");
  synth->add_option("--task", synth_task, "classification or regression");
  synth->add_option("--n", so.sequences, "Number of sequences");
  synth->add_option("--K", so.length, "Observations per sequence");
  synth->add_option("--D", so.input_dim, "Input width (classification only)");
  synth->add_option("--seed", so.seed, "Generator and split seed");
  synth->add_option("--noise", so.classification.noise, "Classification observation noise");
  synth->add_option("--drop-rate", so.regression.drop_rate, "Regression dropped-step fraction");
  synth->add_option("--ratios", ratios, "train,val,test fractions")->delimiter(',')->expected(3);
  synth->add_option("-o,--out", so.out_dir, "Output directory");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = cli.exit(e);
    return code == 0 ? 0 : cdrnde::app::kConfigError;
  }

  return cdrnde::app::run_guarded(
      [&]() -> int {
        if (*train) {
          auto cfg = resolve_config(config_path, overrides);
          if (!output_dir.empty()) cfg.output_dir = output_dir;
          return cdrnde::app::cmd_train(cfg, std::cout);
        }
        if (*eval) return cdrnde::app::cmd_eval(checkpoint, data_path, report_path, std::cout);
        if (*grad) {
          gc.kind = cdrnde::model_kind_from_string(gc_kind);
          gc.task = cdrnde::data::task_from_string(gc_task);
          gc.spacing = cdrnde::spacing_from_string(gc_spacing);
          gc.boundary = cdrnde::boundary_from_string(gc_boundary);
          gc.tie_weights = !gc_untied;
          return cdrnde::app::cmd_gradcheck(gc, std::cout);
        }
        if (*bench) {
          const auto cfg = resolve_config(bench_config, bench_overrides);
          bench_opt.kinds.clear();
          for (const auto& m : bench_models) {
            bench_opt.kinds.push_back(cdrnde::model_kind_from_string(m));
          }
          return cdrnde::app::cmd_bench(cfg, bench_opt, std::cout);
        }
        so.task = cdrnde::data::task_from_string(synth_task);
        so.ratios = {ratios[0], ratios[1], ratios[2]};
        return cdrnde::app::cmd_synth(so, std::cout);
      },
      std::cerr);
}
