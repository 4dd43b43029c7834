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

// JSON views of the configuration structs. Readers are strict: unknown keys
// and wrongly typed values raise ConfigError naming the key.

#ifndef CDRNDE_CONFIG_HPP
#define CDRNDE_CONFIG_HPP

#include <set>
#include <string>

#include "json.hpp"

#include "cdrnde/model.hpp"

namespace cdrnde::config {

using Json = nlohmann::ordered_json;

/// Reads typed fields out of a JSON object and remembers which keys were
/// consumed, so finish() can reject the rest.
class ObjectReader {
 public:
  ObjectReader(const Json& object, std::string where);

  bool has(const std::string& key) const { return object_.contains(key); }

  /// Leaves `out` untouched when the key is absent.
  void read(const std::string& key, double& out);
  void read(const std::string& key, bool& out);
  void read(const std::string& key, std::string& out);
  void read(const std::string& key, int& out);
  void read(const std::string& key, std::size_t& out);
  const Json* object(const std::string& key);

  /// Throws ConfigError listing every key that was never read.
  void finish() const;

 private:
  const Json* find(const std::string& key);
  std::string path(const std::string& key) const;

  const Json& object_;
  std::string where_;
  std::set<std::string> seen_;
};

Json to_json(const ode::SolveConfig& c);
/// Starts from `base` and overrides the keys present in `j`.
ode::SolveConfig solve_config_from_json(const Json& j, const std::string& where,
                                        ode::SolveConfig base = {});

Json to_json(const ModelConfig& c);
ModelConfig model_config_from_json(const Json& j);

}  // namespace cdrnde::config

#endif  // CDRNDE_CONFIG_HPP
