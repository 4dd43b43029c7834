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

#include "cdrnde/checkpoint.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "cdrnde/config.hpp"
#include "cdrnde/errors.hpp"

namespace cdrnde::train {

using config::Json;

std::string checkpoint_string(SequenceModel& model) {
  Json params = Json::object();
  for (const auto& p : model.parameters()) {
    if (!p.tensor->all_finite()) {
      throw CheckpointError("parameter " + p.name + " is not finite");
    }
    Json values = Json::array();
    for (double v : p.tensor->data()) values.push_back(v);
    params[p.name] = Json{{"shape", p.tensor->shape()}, {"values", std::move(values)}};
  }
  Json doc{{"format_version", kCheckpointVersion},
           {"model_kind", to_string(model.config().kind)},
           {"config", config::to_json(model.config())},
           {"params", std::move(params)}};
  return doc.dump(1) + "\n";
}

void save_checkpoint(SequenceModel& model, const std::string& path) {
  const std::string text = checkpoint_string(model);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot write checkpoint " + path);
  out << text;
  if (!out) throw CheckpointError("failed writing checkpoint " + path);
}

std::unique_ptr<SequenceModel> parse_checkpoint(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("malformed checkpoint: ") + e.what());
  }
  if (!doc.is_object()) throw CheckpointError("malformed checkpoint: not an object");
  for (const char* key : {"format_version", "model_kind", "config", "params"}) {
    if (!doc.contains(key)) {
      throw CheckpointError(std::string("malformed checkpoint: missing '") + key + "'");
    }
  }
  if (!doc["format_version"].is_number_integer() ||
      doc["format_version"].get<int>() != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint format_version " +
                          doc["format_version"].dump() + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }

  ModelConfig cfg;
  try {
    cfg = config::model_config_from_json(doc["config"]);
  } catch (const Error& e) {
    throw CheckpointError(std::string("bad checkpoint config: ") + e.what());
  }
  if (!doc["model_kind"].is_string() ||
      doc["model_kind"].get<std::string>() != to_string(cfg.kind)) {
    throw CheckpointError("model_kind disagrees with config.kind");
  }

  auto model = make_model(cfg, 0);
  const Json& params = doc["params"];
  if (!params.is_object()) throw CheckpointError("malformed checkpoint: params");
  auto named = model->parameters();
  if (params.size() != named.size()) {
    throw CheckpointError("checkpoint has " + std::to_string(params.size()) +
                          " parameters, model expects " + std::to_string(named.size()));
  }
  for (const auto& p : named) {
    auto it = params.find(p.name);
    if (it == params.end()) throw CheckpointError("checkpoint lacks parameter " + p.name);
    try {
      const auto shape = it->at("shape").get<Shape>();
      if (shape != p.tensor->shape()) {
        throw CheckpointError("parameter " + p.name + " has shape " + shape_string(shape) +
                              ", expected " + shape_string(p.tensor->shape()));
      }
      const Json& values = it->at("values");
      if (!values.is_array() || values.size() != p.tensor->size()) {
        throw CheckpointError("parameter " + p.name + " has the wrong number of values");
      }
      auto dst = p.tensor->data();
      for (std::size_t i = 0; i < dst.size(); ++i) {
        if (!values[i].is_number()) {
          throw CheckpointError("parameter " + p.name + " holds a non-number");
        }
        dst[i] = values[i].get<double>();
      }
    } catch (const nlohmann::json::exception& e) {
      throw CheckpointError("malformed parameter " + p.name + ": " + e.what());
    }
  }
  return model;
}

std::unique_ptr<SequenceModel> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot read checkpoint " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_checkpoint(buf.str());
}

}  // namespace cdrnde::train
