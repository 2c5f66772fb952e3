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

#include <torch/torch.h>

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/model.hpp"

namespace c2f {

enum class Domain { Coarse, Fine };
std::string_view domain_name(Domain d);
Domain parse_domain(std::string_view name);

enum class Role { Teacher, Student };
std::string_view role_name(Role r);

// Named float32 parameters plus the architecture they belong to.
struct Checkpoint {
  ModelConfig config;
  Role role = Role::Teacher;
  Domain trained_on = Domain::Coarse;
  bool frozen = false;
  std::vector<std::pair<std::string, torch::Tensor>> parameters;  // module order
  nlohmann::json info = nlohmann::json::object();                 // free-form run metadata
};

Checkpoint capture(torch::nn::Module& module, const ModelConfig& config, Role role,
                   Domain trained_on, bool frozen);

// Copies parameters into module. Names and shapes must match exactly.
void apply_checkpoint(const Checkpoint& ckpt, torch::nn::Module& module);

// Builds a fresh network for the checkpoint's role and loads its weights.
SegmentationNet make_teacher(const Checkpoint& ckpt);
StudentNet make_student(const Checkpoint& ckpt);

// File layout: "C2FCKPT\0", u32 version, u64 header length, JSON header, then
// the tensors as consecutive f32le blobs at the offsets listed in the header.
void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

// FNV-1a over parameter names, shapes and raw bytes.
std::uint64_t parameter_checksum(torch::nn::Module& module);

}  // namespace c2f
