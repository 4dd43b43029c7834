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

#include "cdrnde/config.hpp"

#include "cdrnde/errors.hpp"

namespace cdrnde::config {

ObjectReader::ObjectReader(const Json& object, std::string where)
    : object_(object), where_(std::move(where)) {
  if (!object_.is_object()) throw ConfigError(where_ + " must be a JSON object");
}

std::string ObjectReader::path(const std::string& key) const {
  return where_.empty() ? key : where_ + "." + key;
}

const Json* ObjectReader::find(const std::string& key) {
  seen_.insert(key);
  auto it = object_.find(key);
  return it == object_.end() ? nullptr : &*it;
}

void ObjectReader::read(const std::string& key, double& out) {
  if (const Json* v = find(key)) {
    if (!v->is_number()) throw ConfigError(path(key) + " must be a number");
    out = v->get<double>();
  }
}

void ObjectReader::read(const std::string& key, bool& out) {
  if (const Json* v = find(key)) {
    if (!v->is_boolean()) throw ConfigError(path(key) + " must be true or false");
    out = v->get<bool>();
  }
}

void ObjectReader::read(const std::string& key, std::string& out) {
  if (const Json* v = find(key)) {
    if (!v->is_string()) throw ConfigError(path(key) + " must be a string");
    out = v->get<std::string>();
  }
}

void ObjectReader::read(const std::string& key, int& out) {
  if (const Json* v = find(key)) {
    if (!v->is_number_integer()) throw ConfigError(path(key) + " must be an integer");
    out = v->get<int>();
  }
}

void ObjectReader::read(const std::string& key, std::size_t& out) {
  if (const Json* v = find(key)) {
    if (!v->is_number_unsigned()) {
      throw ConfigError(path(key) + " must be a non-negative integer");
    }
    out = v->get<std::size_t>();
  }
}

const Json* ObjectReader::object(const std::string& key) {
  const Json* v = find(key);
  if (v && !v->is_object()) throw ConfigError(path(key) + " must be an object");
  return v;
}

void ObjectReader::finish() const {
  std::string unknown;
  for (auto it = object_.begin(); it != object_.end(); ++it) {
    if (seen_.count(it.key())) continue;
    unknown += (unknown.empty() ? "" : ", ") + path(it.key());
  }
  if (!unknown.empty()) throw ConfigError("unknown config key(s): " + unknown);
}

Json to_json(const ode::SolveConfig& c) {
  return Json{{"method", ode::to_string(c.method)},
              {"euler_steps_per_interval", c.euler_steps_per_interval},
              {"atol", c.atol},
              {"rtol", c.rtol},
              {"max_steps", c.max_steps}};
}

ode::SolveConfig solve_config_from_json(const Json& j, const std::string& where,
                                        ode::SolveConfig base) {
  ObjectReader r(j, where);
  std::string method = ode::to_string(base.method);
  r.read("method", method);
  base.method = ode::method_from_string(method);
  r.read("euler_steps_per_interval", base.euler_steps_per_interval);
  r.read("atol", base.atol);
  r.read("rtol", base.rtol);
  r.read("max_steps", base.max_steps);
  r.finish();
  base.validate();
  return base;
}

Json to_json(const ModelConfig& c) {
  return Json{{"kind", to_string(c.kind)},
              {"task", data::to_string(c.task)},
              {"input_dim", c.input_dim},
              {"hidden_dim", c.hidden_dim},
              {"output_dim", c.output_dim},
              {"depth_T", c.depth_T},
              {"diffusivity", c.diffusivity},
              {"spacing_mode", to_string(c.spacing)},
              {"boundary_mode", to_string(c.boundary)},
              {"tie_weights", c.tie_weights},
              {"gru_forcing", c.gru_forcing},
              {"solve_t", to_json(c.solve_t)},
              {"solve_depth", to_json(c.solve_depth)}};
}

ModelConfig model_config_from_json(const Json& j) {
  ModelConfig c;
  ObjectReader r(j, "config");
  std::string kind = to_string(c.kind), task = data::to_string(c.task);
  std::string spacing = to_string(c.spacing), boundary = to_string(c.boundary);
  r.read("kind", kind);
  r.read("task", task);
  r.read("input_dim", c.input_dim);
  r.read("hidden_dim", c.hidden_dim);
  r.read("output_dim", c.output_dim);
  r.read("depth_T", c.depth_T);
  r.read("diffusivity", c.diffusivity);
  r.read("spacing_mode", spacing);
  r.read("boundary_mode", boundary);
  r.read("tie_weights", c.tie_weights);
  r.read("gru_forcing", c.gru_forcing);
  if (const Json* s = r.object("solve_t")) c.solve_t = solve_config_from_json(*s, "config.solve_t");
  if (const Json* s = r.object("solve_depth")) {
    c.solve_depth = solve_config_from_json(*s, "config.solve_depth");
  }
  r.finish();
  c.kind = model_kind_from_string(kind);
  c.task = data::task_from_string(task);
  c.spacing = spacing_from_string(spacing);
  c.boundary = boundary_from_string(boundary);
  c.validate();
  return c;
}

}  // namespace cdrnde::config
