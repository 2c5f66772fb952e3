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
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/datagen.hpp"
#include "c2f/eval.hpp"
#include "c2f/training.hpp"

namespace c2f {

enum class AblationKind { Injection, Distill, Bands, Loss };
std::string_view ablation_name(AblationKind k);
// Throws ConfigError listing the valid names.
AblationKind parse_ablation(std::string_view name);

// One table row: a method label and the student config it trains.
struct AblationVariant {
  std::string method;
  std::string slug;  // run directory stem
  TrainConfig train;
};

std::vector<AblationVariant> ablation_variants(AblationKind kind, const TrainConfig& base);

struct SeedResult {
  std::uint64_t seed = 0;
  std::optional<MetricsReport> test;  // empty when the run failed
  std::string error;
  std::filesystem::path run_dir;
};

struct AblationRow {
  std::string method;
  std::vector<SeedResult> seeds;
  // Median over successful seeds of each metric separately.
  std::optional<MetricsSummary> median;
  std::optional<double> delta_miou;  // vs row 1; empty on row 1
};

struct AblationTable {
  AblationKind kind = AblationKind::Injection;
  std::vector<AblationRow> rows;

  // Header "Method,Acc.,mF1,mIoU,ΔmIoU"; row 1's delta is the "—" sentinel.
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

struct AblationOptions {
  EvalConfig eval;
  std::function<void(const std::string&)> progress;
};

// Teacher for one (backbone, seed); reused from dir when it already holds a
// finished run, otherwise trained there.
Checkpoint ensure_teacher(const TrainConfig& base, std::uint64_t seed, const DatasetSplits& data,
                          const std::filesystem::path& dir, const AblationOptions& options = {});

// Trains and tests one student run in dir (resumed when finished already).
SeedResult run_variant(const AblationVariant& variant, const Checkpoint& teacher,
                       std::uint64_t seed, const DatasetSplits& data,
                       const std::filesystem::path& dir, const AblationOptions& options = {});

// Every row over every seed with shared teachers per backbone and seed. A row
// whose runs fail is kept with its error and the remaining rows still run.
AblationTable run_ablation(AblationKind kind, const TrainConfig& base,
                           std::span<const std::uint64_t> seeds, const DatasetSplits& data,
                           const std::filesystem::path& out_dir,
                           const AblationOptions& options = {});

AblationTable ablate_feature_injection(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                       const DatasetSplits& data, const std::filesystem::path& out_dir,
                                       const AblationOptions& options = {});
AblationTable ablate_distillation(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                  const DatasetSplits& data, const std::filesystem::path& out_dir,
                                  const AblationOptions& options = {});
AblationTable ablate_bands(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                           const DatasetSplits& data, const std::filesystem::path& out_dir,
                           const AblationOptions& options = {});
AblationTable ablate_student_loss(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                  const DatasetSplits& data, const std::filesystem::path& out_dir,
                                  const AblationOptions& options = {});

double median(std::vector<double> values);

}  // namespace c2f
