// Copyright 2026 The c2f Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/datagen.hpp"
#include "c2f/eval.hpp"
#include "c2f/training.hpp"

namespace c2f {

struct AblateConfig {
  std::vector<std::uint64_t> seeds{0, 1, 2};
};

// Everything a command may read from a config file. Files are flat JSON
// objects with dotted keys ("train.lr", "model.cbam"); unknown keys are errors.
struct RunConfig {
  // "desk" (default) or "paper"; paper raises the epoch default to 100.
  std::string profile = "desk";
  DataConfig data;
  TrainConfig train;
  EvalConfig eval;
  AblateConfig ablate;

  // Flat dotted form of every key; from_json(to_json()) is the identity.
  nlohmann::json to_json() const;
  static RunConfig from_json(const nlohmann::json& j);
  void validate() const;
};

RunConfig load_config(const std::filesystem::path& path);

// Every accepted dotted key, sorted.
std::vector<std::string> config_keys();

}  // namespace c2f
