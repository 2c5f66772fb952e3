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

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/checkpoint.hpp"
#include "c2f/datagen.hpp"
#include "c2f/model.hpp"

namespace c2f {

// Pixel counts with foreground (mining) as the positive class.
struct ConfusionCounts {
  std::int64_t tn = 0;
  std::int64_t fp = 0;
  std::int64_t fn = 0;
  std::int64_t tp = 0;

  std::int64_t total() const { return tn + fp + fn + tp; }
  // {tn, fp, fn, tp} as percentages of total.
  std::array<double, 4> as_percent() const;
  // Same counts with the two classes relabelled.
  ConfusionCounts swapped() const { return {tp, fn, fp, tn}; }
  ConfusionCounts& operator+=(const ConfusionCounts& o);
  bool operator==(const ConfusionCounts&) const = default;

  nlohmann::json to_json() const;
  static ConfusionCounts from_json(const nlohmann::json& j);
};

struct MetricsSummary {
  double accuracy = 0.0;
  double mean_f1 = 0.0;
  double mean_iou = 0.0;
  ConfusionCounts confusion;
  std::int64_t n_images = 0;

  nlohmann::json to_json() const;
  static MetricsSummary from_json(const nlohmann::json& j);
};

struct MetricsReport : MetricsSummary {
  std::map<std::string, MetricsSummary> per_stratum;

  nlohmann::json to_json() const;
};

// Pixel: scores of the summed confusion. Image: mean of per-image scores.
enum class Pooling { Pixel, Image };
std::string_view pooling_name(Pooling p);
Pooling parse_pooling(std::string_view name);

struct EvalConfig {
  Pooling pooling = Pooling::Pixel;
  std::string strata_key = "terrain";
  int batch_size = 8;

  void validate() const;
};

// sigmoid(logits) >= 0.5, as uint8. A logit of exactly 0 is foreground.
torch::Tensor binarize(const torch::Tensor& logits);

ConfusionCounts confusion(const torch::Tensor& pred, const torch::Tensor& truth);
// One entry per leading-dimension slice.
std::vector<ConfusionCounts> confusion_per_image(const torch::Tensor& pred,
                                                 const torch::Tensor& truth);

// Macro mean over the two classes; a class absent from both prediction and
// truth scores 1.
MetricsSummary scores(const ConfusionCounts& c);
MetricsSummary summarize(std::span<const ConfusionCounts> per_image, Pooling pooling);

MetricsReport metrics(const torch::Tensor& pred, const torch::Tensor& truth,
                      Pooling pooling = Pooling::Pixel);

// Global report plus one sub-report per tag; samples without a tag go to
// "untagged".
MetricsReport stratify(std::span<const ConfusionCounts> per_image,
                       std::span<const std::string> tags, Pooling pooling);

// Maps a batch of images to logits.
using Predictor = std::function<torch::Tensor(const torch::Tensor& images)>;
Predictor teacher_predictor(SegmentationNet net);
Predictor student_predictor(StudentNet student, SegmentationNet teacher);

struct Evaluation {
  MetricsReport report;
  std::vector<ConfusionCounts> per_image;
};

Evaluation evaluate(const Predictor& predict, const Dataset& data, Domain labels,
                    int in_channels, const EvalConfig& config);

// Student checkpoints need their teacher.
MetricsReport stratified_eval(const Checkpoint& ckpt, const Checkpoint* teacher,
                              const Dataset& data, Domain labels, const EvalConfig& config);

}  // namespace c2f
