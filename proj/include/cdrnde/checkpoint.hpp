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

// Versioned JSON checkpoints:
//   {"format_version": 1, "model_kind": ..., "config": {...},
//    "params": {name: {"shape": [...], "values": [...]}}}
// Numbers are written as shortest round-trip decimals, so a load reproduces
// every parameter bit for bit and re-saving yields an identical file.

#ifndef CDRNDE_CHECKPOINT_HPP
#define CDRNDE_CHECKPOINT_HPP

#include <memory>
#include <string>

#include "cdrnde/model.hpp"

namespace cdrnde::train {

inline constexpr int kCheckpointVersion = 1;

std::string checkpoint_string(SequenceModel& model);
void save_checkpoint(SequenceModel& model, const std::string& path);

/// Rebuilds the model described by the file. Throws CheckpointError on an
/// unreadable, malformed, truncated or wrong-version file, or on parameters
/// that do not match the stored configuration.
std::unique_ptr<SequenceModel> load_checkpoint(const std::string& path);
std::unique_ptr<SequenceModel> parse_checkpoint(const std::string& text);

}  // namespace cdrnde::train

#endif  // CDRNDE_CHECKPOINT_HPP
