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

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

namespace c2f {

enum class GateMode { PerChannel, Shared };

// Which attentive feature injection components run in the student.
struct InjectionComponents {
  bool gated_fusion = true;
  bool cbam = true;
  bool diffusion_refinement = true;

  bool any() const { return gated_fusion || cbam || diffusion_refinement; }
  bool operator==(const InjectionComponents&) const = default;
};

struct ModelConfig {
  int in_channels = 6;
  int base_channels = 16;
  int depth = 4;
  int fpn_channels = 32;
  int cbam_reduction = 8;
  int cbam_spatial_kernel = 7;
  int diffusion_steps = 3;
  InjectionComponents components;
  GateMode gate_mode = GateMode::PerChannel;
  // 1-based encoder stages that receive injected teacher features; empty
  // means every stage.
  std::vector<int> inject_stages;

  void validate() const;
  int stage_channels(int stage) const { return base_channels << (stage - 1); }
  bool injects_at(int stage) const;
  // Teacher and student backbones/decoders must agree on these fields.
  bool backbone_compatible(const ModelConfig& other) const;

  nlohmann::json to_json() const;
  static ModelConfig from_json(const nlohmann::json& j);
  bool operator==(const ModelConfig&) const = default;
};

// A (batch, channels, height, width) tensor tagged with its pipeline position.
struct FeatureMap {
  torch::Tensor data;
  std::string stage;
};

// --- building blocks ----------------------------------------------------------

// Strided convolutional encoder; stage s (1-based) has base_channels * 2^(s-1)
// channels at 1/2^s of the input resolution.
class EncoderImpl : public torch::nn::Module {
 public:
  explicit EncoderImpl(const ModelConfig& config);
  std::vector<FeatureMap> forward(const torch::Tensor& image);

  int depth() const { return static_cast<int>(stages_->size()); }

 private:
  torch::nn::ModuleList stages_{nullptr};
};
TORCH_MODULE(Encoder);

// g = sigmoid(conv1x1([coarse, fine])), out = g * coarse + (1 - g) * fine.
class GatedFusionImpl : public torch::nn::Module {
 public:
  GatedFusionImpl(int channels, GateMode mode);
  FeatureMap forward(const FeatureMap& coarse, const FeatureMap& fine);
  torch::Tensor gate(const torch::Tensor& coarse, const torch::Tensor& fine);

  torch::nn::Conv2d conv{nullptr};
};
TORCH_MODULE(GatedFusion);

struct AttentionMaps {
  torch::Tensor channel;  // (B, C, 1, 1)
  torch::Tensor spatial;  // (B, 1, H, W)
};

// Channel attention (shared bottleneck over avg- and max-pooled descriptors)
// followed by spatial attention (k x k conv over channel mean/max maps).
class CbamImpl : public torch::nn::Module {
 public:
  CbamImpl(int channels, int reduction, int spatial_kernel);
  torch::Tensor forward(const torch::Tensor& x, AttentionMaps* maps = nullptr);

  torch::nn::Conv2d fc1{nullptr};
  torch::nn::Conv2d fc2{nullptr};
  torch::nn::Conv2d spatial{nullptr};
};
TORCH_MODULE(Cbam);

struct RefineStep {
  torch::Tensor input;      // F_{t-1}
  torch::Tensor conv;       // Conv3x3(F_{t-1})
  torch::Tensor attention;  // CBAM(conv)
  torch::Tensor output;     // attention + F_{t-1}
};

// Residual refinement: F_t = CBAM_t(Conv3x3_t(F_{t-1})) + F_{t-1}.
class DiffusionRefineImpl : public torch::nn::Module {
 public:
  DiffusionRefineImpl(int channels, int steps, int reduction, int spatial_kernel);
  torch::Tensor forward(const torch::Tensor& x, std::vector<RefineStep>* trace = nullptr);
  // One block of the recurrence (0-based).
  torch::Tensor step(int t, const torch::Tensor& x);

  int steps() const { return static_cast<int>(convs->size()); }

  torch::nn::ModuleList convs{nullptr};
  torch::nn::ModuleList attentions{nullptr};
};
TORCH_MODULE(DiffusionRefine);

// Per-stage GF -> CBAM -> DR stack; absent components are skipped.
class InjectionStageImpl : public torch::nn::Module {
 public:
  InjectionStageImpl(const ModelConfig& config, int stage);
  FeatureMap forward(const FeatureMap& coarse, const FeatureMap& fine);

  GatedFusion fusion{nullptr};
  Cbam cbam{nullptr};
  DiffusionRefine refine{nullptr};
};
TORCH_MODULE(InjectionStage);

// Lateral 1x1 projections, nearest-neighbour top-down merge, 3x3 smoothing of
// the finest level and a 1x1 logit head upsampled to the input size.
class FpnDecoderImpl : public torch::nn::Module {
 public:
  explicit FpnDecoderImpl(const ModelConfig& config);
  torch::Tensor forward(const std::vector<FeatureMap>& features, int64_t out_h, int64_t out_w);

  torch::nn::ModuleList laterals{nullptr};
  torch::nn::Conv2d smooth{nullptr};
  torch::nn::Conv2d head{nullptr};
};
TORCH_MODULE(FpnDecoder);

// --- networks -----------------------------------------------------------------

// Single-backbone segmentation network (the teacher, or a plain baseline).
class SegmentationNetImpl : public torch::nn::Module {
 public:
  explicit SegmentationNetImpl(const ModelConfig& config);
  torch::Tensor forward(const torch::Tensor& image);

  const ModelConfig& config() const { return config_; }

  Encoder encoder{nullptr};
  FpnDecoder decoder{nullptr};

 private:
  ModelConfig config_;
};
TORCH_MODULE(SegmentationNet);

// Student with its own backbone plus the injection stack that consumes the
// frozen teacher backbone's features.
class StudentNetImpl : public torch::nn::Module {
 public:
  explicit StudentNetImpl(const ModelConfig& config);
  // teacher_features may be null only when no injection component is enabled.
  torch::Tensor forward(const torch::Tensor& image,
                        const std::vector<FeatureMap>* teacher_features);

  bool uses_teacher_features() const;
  const ModelConfig& config() const { return config_; }

  Encoder encoder{nullptr};
  torch::nn::ModuleList injections{nullptr};
  FpnDecoder decoder{nullptr};

 private:
  ModelConfig config_;
  std::vector<int> injection_index_;  // stage -> index into injections, or -1
};
TORCH_MODULE(StudentNet);

// --- operations -----------------------------------------------------------------

std::vector<FeatureMap> backbone_encode(const torch::Tensor& image, Encoder& encoder);
FeatureMap gated_fusion(const FeatureMap& coarse, const FeatureMap& fine, GatedFusion& module);
FeatureMap cbam(const FeatureMap& f, Cbam& module);
FeatureMap diffusion_refine(const FeatureMap& f, int steps, DiffusionRefine& module);

torch::Tensor teacher_forward(const torch::Tensor& image, SegmentationNet& teacher);

struct StudentOutputs {
  torch::Tensor student_logits;
  torch::Tensor teacher_logits;
};

// Runs the frozen teacher once (no autograd) and the student on the same input.
StudentOutputs student_forward(const torch::Tensor& image, StudentNet& student,
                               SegmentationNet& teacher);

// Copies backbone and decoder weights from the teacher (warm start).
void init_student_from_teacher(StudentNet& student, SegmentationNet& teacher);

// Marks every teacher parameter as non-trainable and switches it to eval mode.
void freeze(torch::nn::Module& module);

}  // namespace c2f
