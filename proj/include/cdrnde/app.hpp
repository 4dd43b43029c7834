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

// Command implementations behind the cdrnde executable. Each cmd_* returns a
// process exit code; run_guarded maps library exceptions onto those codes.

#ifndef CDRNDE_APP_HPP
#define CDRNDE_APP_HPP

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "cdrnde/config.hpp"
#include "cdrnde/grad_check.hpp"
#include "cdrnde/train.hpp"

namespace cdrnde::app {

enum ExitCode : int {
  kOk = 0,
  kConfigError = 1,
  kDataError = 2,
  kNumericalError = 3,
  kGradcheckFailed = 4,
};

/// Everything a training run needs. Serialized as one flat JSON object whose
/// keys mirror the field names; solver settings are nested objects.
struct RunConfig {
  /// input_dim and output_dim start at 0, meaning "infer from the data".
  RunConfig() {
    model.input_dim = 0;
    model.output_dim = 0;
  }

  train::TrainConfig train;
  ModelConfig model;
  std::string train_data;
  std::string val_data;
  std::string test_data;
  std::string output_dir = "run";
  /// Scale times so the mean training gap is 1 (val/test use the same factor).
  bool rescale_times = false;
  /// Write measured epoch times into metrics.csv; off keeps it reproducible.
  bool record_wall_time = false;

  config::Json to_json() const;
  static RunConfig from_json(const config::Json& j);
  void validate() const;
};

RunConfig load_run_config(const std::string& path);
/// Applies "key=value" overrides; the value is parsed as JSON when it can
/// be, otherwise taken as a string.
void apply_overrides(config::Json& j, const std::vector<std::string>& overrides);

/// Shortest round-trip decimal, locale independent; "nan"/"inf" otherwise.
std::string format_number(double v);

int cmd_train(const RunConfig& cfg, std::ostream& log);
int cmd_eval(const std::string& checkpoint, const std::string& data_path,
             const std::string& report_path, std::ostream& log);

struct GradcheckOptions {
  ModelKind kind = ModelKind::cdr_nde_heat;
  data::TaskKind task = data::TaskKind::classification;
  std::size_t length = 3;
  std::size_t hidden = 4;
  std::size_t input_dim = 2;
  std::size_t outputs = 2;
  SpacingMode spacing = SpacingMode::uniform;
  BoundaryMode boundary = BoundaryMode::zero_flux;
  bool tie_weights = true;
  std::uint64_t seed = 0;
  double eps = 1e-5;
  double threshold = 1e-4;
};

/// Full-loss gradient check of a freshly initialized model on a seeded
/// random sequence. Enforces length <= 3 and hidden <= 4.
ad::GradCheckResult gradcheck_model(const GradcheckOptions& opt);
int cmd_gradcheck(const GradcheckOptions& opt, std::ostream& log);

struct BenchOptions {
  std::vector<ModelKind> kinds{ModelKind::cdr_nde, ModelKind::cdr_nde_heat};
  std::size_t sequences = 64;
  std::size_t length = 16;
  std::size_t input_dim = 3;
  std::size_t epochs = 1;
  std::string out_path = "bench.csv";
};

struct BenchRow {
  ModelKind kind;
  double epoch_seconds;
  double nfe_mean;
};

/// Times each model kind on identical data. Uses cfg.train_data when set,
/// otherwise synthetic classification data drawn from cfg.train.seed.
std::vector<BenchRow> run_bench(const RunConfig& cfg, const BenchOptions& opt);
int cmd_bench(const RunConfig& cfg, const BenchOptions& opt, std::ostream& log);

struct SynthOptions {
  data::TaskKind task = data::TaskKind::classification;
  std::size_t sequences = 500;
  std::size_t length = 16;
  std::size_t input_dim = 3;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.6, 0.2, 0.2};
  data::ClassificationSynthOptions classification;
  data::RegressionSynthOptions regression;
  std::string out_dir = "data";
};

/// Writes train.jsonl, val.jsonl and test.jsonl into opt.out_dir.
int cmd_synth(const SynthOptions& opt, std::ostream& log);

/// Runs `body`, printing any exception to `err` and returning its exit code.
int run_guarded(const std::function<int()>& body, std::ostream& err);

}  // namespace cdrnde::app

#endif  // CDRNDE_APP_HPP
