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
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/checkpoint.hpp"
#include "c2f/datagen.hpp"
#include "c2f/eval.hpp"
#include "c2f/losses.hpp"
#include "c2f/model.hpp"
#include "c2f/rng.hpp"

namespace c2f {

enum class Task { Teacher, Student };
std::string_view task_name(Task t);

// Each transform fires independently with its probability.
struct AugmentConfig {
  bool enabled = true;
  double p_hflip = 0.5;
  double p_vflip = 0.5;
  double p_rot90 = 0.5;
  double p_ssr = 0.5;
  double scale_limit = 0.3;   // scale drawn from [1 - l, 1 + l]
  double rotate_limit = 15.0;  // degrees
  double shift_limit = 0.1;    // fraction of width/height

  void validate() const;
};

struct TrainConfig {
  Task task = Task::Student;
  int epochs = 30;
  int batch_size = 8;
  double lr = 1e-3;
  double weight_decay = 1e-4;
  int warmup_epochs = 5;
  int plateau_patience = 3;
  double plateau_factor = 0.5;
  double lr_floor = 1e-6;
  int early_stop_patience = 10;
  std::uint64_t seed = 0;
  // 0 disables clipping of the global gradient norm.
  double grad_clip = 0.0;
  // Student starts from the teacher's backbone and decoder; false = random init.
  bool warm_start = true;
  AugmentConfig augment;
  LossTerms loss_terms;
  DistillConfig distill;
  ModelConfig model;

  void validate() const;
};

// --- augmentation ---------------------------------------------------------------

void hflip(SampleRecord& s);
void vflip(SampleRecord& s);
// Quarter turns counter-clockwise; odd k needs a square sample.
void rot90(SampleRecord& s, int k);

struct SsrParams {
  double scale = 1.0;
  double angle_deg = 0.0;
  double shift_x = 0.0;  // fraction of width
  double shift_y = 0.0;  // fraction of height
};

// Shift-scale-rotate about the image center with bilinear sampling and
// reflect-101 borders; masks are re-thresholded at 0.5.
void shift_scale_rotate(SampleRecord& s, const SsrParams& p);

SampleRecord augment(const SampleRecord& sample, Rng& rng, const AugmentConfig& config);

// --- schedule ---------------------------------------------------------------------

struct PlateauState {
  double best = -std::numeric_limits<double>::infinity();
  int bad_epochs = 0;
  int reductions = 0;
};

// Linear warmup lr * (epoch + 1) / warmup, then lr * factor^reductions, floored.
double lr_at(int epoch, const TrainConfig& config, const PlateauState& state);
// Feed the validation metric observed at the end of `epoch`. Non-improving
// epochs count only after warmup.
void update_plateau(PlateauState& state, int epoch, double metric, const TrainConfig& config);

class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}
  // True when training should stop after this epoch.
  bool observe(double metric);

 private:
  int patience_;
  double best_ = -std::numeric_limits<double>::infinity();
  int bad_ = 0;
};

// --- logging ----------------------------------------------------------------------

struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  int steps = 0;
  LossBreakdown train;  // means over steps
  double selected_pixel_fraction = 0.0;
  MetricsSummary val;
  double seconds = 0.0;

  nlohmann::json to_json() const;
  static EpochRecord from_json(const nlohmann::json& j);
};

struct RunLog {
  std::vector<EpochRecord> epochs;
  int best_epoch = -1;
  double best_val_miou = 0.0;
  double wall_time = 0.0;

  nlohmann::json to_json() const;
};

std::vector<EpochRecord> read_log(const std::filesystem::path& path);

struct RunManifest {
  std::string command;
  std::string config_path;
  std::string dataset_root;
  std::string run_dir;
  std::uint64_t seed = 0;
  std::string tool_version;
  std::string started_at;

  nlohmann::json to_json() const;
};

// Creates dir (refusing a non-empty one with ExistsError) and writes
// manifest.json and config.json before any work starts.
void create_run_dir(const std::filesystem::path& dir, const RunManifest& manifest,
                    const nlohmann::json& config);

// --- tasks ------------------------------------------------------------------------

struct TrainOptions {
  // Appends one JSON line per epoch when set.
  std::optional<std::filesystem::path> log_path;
  std::function<void(const EpochRecord&)> on_epoch;
  // Called with the selection masks of every student step (tests).
  std::function<void(int epoch, int step, const SelectionMasks&, const LossBreakdown&)> on_step;
};

struct TrainResult {
  Checkpoint checkpoint;  // best validation epoch
  RunLog log;
  std::uint64_t teacher_checksum_before = 0;
  std::uint64_t teacher_checksum_after = 0;
};

// Task 1: BCE on the coarse labels of the train split, validated on coarse val labels.
TrainResult train_teacher(const DatasetSplits& data, const TrainConfig& config,
                          const TrainOptions& options = {});
// Task 2: composite loss plus selective distillation on fine labels.
TrainResult train_student(const DatasetSplits& data, const Checkpoint& teacher,
                          const TrainConfig& config, const TrainOptions& options = {});

}  // namespace c2f
