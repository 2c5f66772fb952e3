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

#include "c2f/model.hpp"

#include <algorithm>

#include "c2f/error.hpp"

namespace F = torch::nn::functional;
using nlohmann::json;

namespace c2f {

// --- ModelConfig ----------------------------------------------------------------

void ModelConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid model config: " + what); };
  if (in_channels < 1) fail("model.in_channels must be >= 1");
  if (base_channels < 1) fail("model.base_channels must be >= 1");
  if (depth < 1) fail("model.depth must be >= 1");
  if (fpn_channels < 1) fail("model.fpn_channels must be >= 1");
  if (cbam_reduction < 1) fail("model.cbam_reduction must be >= 1");
  if (cbam_spatial_kernel < 1 || cbam_spatial_kernel % 2 == 0)
    fail("model.cbam_spatial_kernel must be a positive odd integer");
  if (diffusion_steps < 0) fail("model.diffusion_steps must be >= 0");
  for (int s : inject_stages)
    if (s < 1 || s > depth) fail("model.inject_stages entries must lie in [1, depth]");
  if (components.cbam || components.diffusion_refinement) {
    for (int s = 1; s <= depth; ++s)
      if (injects_at(s) && stage_channels(s) % cbam_reduction != 0)
        fail("stage " + std::to_string(s) + " has " + std::to_string(stage_channels(s)) +
             " channels, not divisible by model.cbam_reduction=" + std::to_string(cbam_reduction));
  }
}

bool ModelConfig::injects_at(int stage) const {
  if (inject_stages.empty()) return true;
  return std::find(inject_stages.begin(), inject_stages.end(), stage) != inject_stages.end();
}

bool ModelConfig::backbone_compatible(const ModelConfig& o) const {
  return in_channels == o.in_channels && base_channels == o.base_channels && depth == o.depth &&
         fpn_channels == o.fpn_channels;
}

json ModelConfig::to_json() const {
  return {
      {"in_channels", in_channels},
      {"base_channels", base_channels},
      {"depth", depth},
      {"fpn_channels", fpn_channels},
      {"cbam_reduction", cbam_reduction},
      {"cbam_spatial_kernel", cbam_spatial_kernel},
      {"diffusion_steps", diffusion_steps},
      {"gated_fusion", components.gated_fusion},
      {"cbam", components.cbam},
      {"diffusion_refinement", components.diffusion_refinement},
      {"gate_mode", gate_mode == GateMode::PerChannel ? "per_channel" : "shared"},
      {"inject_stages", inject_stages},
  };
}

ModelConfig ModelConfig::from_json(const json& j) {
  ModelConfig c;
  try {
    c.in_channels = j.at("in_channels").get<int>();
    c.base_channels = j.at("base_channels").get<int>();
    c.depth = j.at("depth").get<int>();
    c.fpn_channels = j.at("fpn_channels").get<int>();
    c.cbam_reduction = j.at("cbam_reduction").get<int>();
    c.cbam_spatial_kernel = j.at("cbam_spatial_kernel").get<int>();
    c.diffusion_steps = j.at("diffusion_steps").get<int>();
    c.components.gated_fusion = j.at("gated_fusion").get<bool>();
    c.components.cbam = j.at("cbam").get<bool>();
    c.components.diffusion_refinement = j.at("diffusion_refinement").get<bool>();
    const auto mode = j.at("gate_mode").get<std::string>();
    if (mode != "per_channel" && mode != "shared")
      throw ConfigError("unknown gate_mode '" + mode + "'");
    c.gate_mode = mode == "shared" ? GateMode::Shared : GateMode::PerChannel;
    c.inject_stages = j.at("inject_stages").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed model config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

torch::nn::Conv2d conv(int in, int out, int k, int stride = 1) {
  return torch::nn::Conv2d(
      torch::nn::Conv2dOptions(in, out, k).stride(stride).padding(k / 2).bias(true));
}

void relu_init(torch::nn::Conv2d& c) {
  torch::NoGradGuard guard;
  torch::nn::init::kaiming_normal_(c->weight, 0.0, torch::kFanIn, torch::kReLU);
  c->bias.zero_();
}

}  // namespace

// --- Encoder ----------------------------------------------------------------------

EncoderImpl::EncoderImpl(const ModelConfig& config) {
  config.validate();
  stages_ = register_module("stages", torch::nn::ModuleList());
  int in = config.in_channels;
  for (int s = 1; s <= config.depth; ++s) {
    const int out = config.stage_channels(s);
    auto down = conv(in, out, 3, 2);
    auto same = conv(out, out, 3, 1);
    relu_init(down);
    relu_init(same);
    stages_->push_back(torch::nn::Sequential(down, torch::nn::ReLU(), same, torch::nn::ReLU()));
    in = out;
  }
}

std::vector<FeatureMap> EncoderImpl::forward(const torch::Tensor& image) {
  if (image.dim() != 4)
    throw ShapeError("encoder stage 1: expected a (B, C, H, W) input, got " +
                     std::to_string(image.dim()) + " dims");
  std::vector<FeatureMap> out;
  torch::Tensor x = image;
  int s = 1;
  for (const auto& stage : *stages_) {
    const auto h = x.size(2), w = x.size(3);
    if (h % 2 != 0 || w % 2 != 0)
      throw ShapeError("encoder stage " + std::to_string(s) + ": spatial size " +
                       std::to_string(h) + "x" + std::to_string(w) +
                       " is not divisible by 2 (input must be divisible by 2^depth)");
    const auto& first = stage->as<torch::nn::Sequential>()->ptr(0)->as<torch::nn::Conv2d>();
    if (x.size(1) != first->options.in_channels())
      throw ShapeError("encoder stage " + std::to_string(s) + ": expected " +
                       std::to_string(first->options.in_channels()) + " channels, got " +
                       std::to_string(x.size(1)));
    x = stage->as<torch::nn::Sequential>()->forward(x);
    out.push_back({x, "encoder.s" + std::to_string(s)});
    ++s;
  }
  return out;
}

// --- Gated fusion -------------------------------------------------------------------

GatedFusionImpl::GatedFusionImpl(int channels, GateMode mode) {
  const int gates = mode == GateMode::PerChannel ? channels : 1;
  conv = register_module("gate", torch::nn::Conv2d(torch::nn::Conv2dOptions(2 * channels, gates, 1)));
  // Start from an even blend of both streams.
  torch::NoGradGuard guard;
  conv->weight.zero_();
  conv->bias.zero_();
}

torch::Tensor GatedFusionImpl::gate(const torch::Tensor& coarse, const torch::Tensor& fine) {
  return torch::sigmoid(conv->forward(torch::cat({coarse, fine}, 1)));
}

FeatureMap GatedFusionImpl::forward(const FeatureMap& coarse, const FeatureMap& fine) {
  if (!coarse.data.sizes().equals(fine.data.sizes()))
    throw ShapeError("gated fusion: coarse " + coarse.stage + " and fine " + fine.stage +
                     " feature maps differ in shape");
  auto g = gate(coarse.data, fine.data);
  return {g * coarse.data + (1 - g) * fine.data, "fused"};
}

// --- CBAM ---------------------------------------------------------------------------

CbamImpl::CbamImpl(int channels, int reduction, int spatial_kernel) {
  if (reduction < 1 || channels % reduction != 0)
    throw ConfigError("cbam: channels (" + std::to_string(channels) +
                      ") must be divisible by reduction (" + std::to_string(reduction) + ")");
  if (spatial_kernel % 2 == 0) throw ConfigError("cbam: spatial kernel must be odd");
  const int hidden = channels / reduction;
  fc1 = register_module("fc1", torch::nn::Conv2d(torch::nn::Conv2dOptions(channels, hidden, 1)));
  fc2 = register_module("fc2", torch::nn::Conv2d(torch::nn::Conv2dOptions(hidden, channels, 1)));
  spatial = register_module(
      "spatial", torch::nn::Conv2d(
                     torch::nn::Conv2dOptions(2, 1, spatial_kernel).padding(spatial_kernel / 2)));
}

torch::Tensor CbamImpl::forward(const torch::Tensor& x, AttentionMaps* maps) {
  if (x.size(1) != fc1->options.in_channels())
    throw ShapeError("cbam: expected " + std::to_string(fc1->options.in_channels()) +
                     " channels, got " + std::to_string(x.size(1)));
  auto mlp = [this](const torch::Tensor& d) { return fc2->forward(torch::relu(fc1->forward(d))); };
  auto avg = x.mean({2, 3}, /*keepdim=*/true);
  auto mx = x.amax({2, 3}, /*keepdim=*/true);
  auto channel = torch::sigmoid(mlp(avg) + mlp(mx));
  auto y = x * channel;
  auto desc = torch::cat({y.mean(1, true), y.amax(1, true)}, 1);
  auto spatial_map = torch::sigmoid(spatial->forward(desc));
  if (maps) *maps = {channel, spatial_map};
  return y * spatial_map;
}

// --- Diffusion refinement ----------------------------------------------------------

DiffusionRefineImpl::DiffusionRefineImpl(int channels, int steps, int reduction,
                                         int spatial_kernel) {
  convs = register_module("convs", torch::nn::ModuleList());
  attentions = register_module("attentions", torch::nn::ModuleList());
  for (int t = 0; t < steps; ++t) {
    convs->push_back(conv(channels, channels, 3));
    attentions->push_back(Cbam(channels, reduction, spatial_kernel));
  }
}

torch::Tensor DiffusionRefineImpl::step(int t, const torch::Tensor& x) {
  auto c = convs[t]->as<torch::nn::Conv2d>()->forward(x);
  return attentions[t]->as<Cbam>()->forward(c) + x;
}

torch::Tensor DiffusionRefineImpl::forward(const torch::Tensor& x, std::vector<RefineStep>* trace) {
  torch::Tensor f = x;
  for (int t = 0; t < steps(); ++t) {
    auto c = convs[t]->as<torch::nn::Conv2d>()->forward(f);
    auto a = attentions[t]->as<Cbam>()->forward(c);
    auto next = a + f;
    if (trace) trace->push_back({f, c, a, next});
    f = next;
  }
  return f;
}

// --- Injection stage ------------------------------------------------------------------

InjectionStageImpl::InjectionStageImpl(const ModelConfig& config, int stage) {
  const int ch = config.stage_channels(stage);
  if (config.components.gated_fusion)
    fusion = register_module("gf", GatedFusion(ch, config.gate_mode));
  if (config.components.cbam)
    cbam = register_module("cbam", Cbam(ch, config.cbam_reduction, config.cbam_spatial_kernel));
  if (config.components.diffusion_refinement)
    refine = register_module("dr", DiffusionRefine(ch, config.diffusion_steps, config.cbam_reduction,
                                                   config.cbam_spatial_kernel));
}

FeatureMap InjectionStageImpl::forward(const FeatureMap& coarse, const FeatureMap& fine) {
  FeatureMap x = fusion ? fusion->forward(coarse, fine) : fine;
  if (cbam) x = {cbam->forward(x.data), "attended"};
  if (refine) x = {refine->forward(x.data), "refined"};
  return x;
}

// --- Decoder --------------------------------------------------------------------------

FpnDecoderImpl::FpnDecoderImpl(const ModelConfig& config) {
  laterals = register_module("laterals", torch::nn::ModuleList());
  for (int s = 1; s <= config.depth; ++s)
    laterals->push_back(torch::nn::Conv2d(
        torch::nn::Conv2dOptions(config.stage_channels(s), config.fpn_channels, 1)));
  smooth = register_module("smooth", conv(config.fpn_channels, config.fpn_channels, 3));
  relu_init(smooth);
  head = register_module("head", torch::nn::Conv2d(torch::nn::Conv2dOptions(config.fpn_channels, 1, 1)));
}

torch::Tensor FpnDecoderImpl::forward(const std::vector<FeatureMap>& features, int64_t out_h,
                                      int64_t out_w) {
  const auto n = static_cast<int>(features.size());
  if (n != static_cast<int>(laterals->size()))
    throw ShapeError("decoder: expected " + std::to_string(laterals->size()) +
                     " feature levels, got " + std::to_string(n));
  auto p = laterals[n - 1]->as<torch::nn::Conv2d>()->forward(features[n - 1].data);
  for (int s = n - 2; s >= 0; --s) {
    const auto& f = features[s].data;
    auto up = F::interpolate(p, F::InterpolateFuncOptions()
                                    .size(std::vector<int64_t>{f.size(2), f.size(3)})
                                    .mode(torch::kNearest));
    p = laterals[s]->as<torch::nn::Conv2d>()->forward(f) + up;
  }
  auto logits = head->forward(torch::relu(smooth->forward(p)));
  return F::interpolate(logits, F::InterpolateFuncOptions()
                                    .size(std::vector<int64_t>{out_h, out_w})
                                    .mode(torch::kBilinear)
                                    .align_corners(false));
}

// --- Networks -----------------------------------------------------------------------

SegmentationNetImpl::SegmentationNetImpl(const ModelConfig& config) : config_(config) {
  config.validate();
  encoder = register_module("encoder", Encoder(config));
  decoder = register_module("decoder", FpnDecoder(config));
}

torch::Tensor SegmentationNetImpl::forward(const torch::Tensor& image) {
  return decoder->forward(encoder->forward(image), image.size(2), image.size(3));
}

StudentNetImpl::StudentNetImpl(const ModelConfig& config) : config_(config) {
  config.validate();
  encoder = register_module("encoder", Encoder(config));
  injections = register_module("injections", torch::nn::ModuleList());
  injection_index_.assign(config.depth + 1, -1);
  if (config.components.any()) {
    for (int s = 1; s <= config.depth; ++s) {
      if (!config.injects_at(s)) continue;
      injection_index_[s] = static_cast<int>(injections->size());
      injections->push_back(InjectionStage(config, s));
    }
  }
  decoder = register_module("decoder", FpnDecoder(config));
}

bool StudentNetImpl::uses_teacher_features() const {
  return config_.components.gated_fusion && !injections->is_empty();
}

torch::Tensor StudentNetImpl::forward(const torch::Tensor& image,
                                      const std::vector<FeatureMap>* teacher_features) {
  auto fine = encoder->forward(image);
  if (uses_teacher_features()) {
    if (!teacher_features)
      throw ShapeError("student forward: gated fusion needs teacher backbone features");
    if (teacher_features->size() != fine.size())
      throw ShapeError("student forward: teacher provides " +
                       std::to_string(teacher_features->size()) + " stages, student has " +
                       std::to_string(fine.size()));
  }
  std::vector<FeatureMap> fused;
  fused.reserve(fine.size());
  for (int s = 1; s <= static_cast<int>(fine.size()); ++s) {
    const int idx = injection_index_[s];
    if (idx < 0) {
      fused.push_back(fine[s - 1]);
      continue;
    }
    static const FeatureMap kNone{};
    const FeatureMap& coarse = teacher_features ? (*teacher_features)[s - 1] : kNone;
    fused.push_back(injections[idx]->as<InjectionStage>()->forward(coarse, fine[s - 1]));
  }
  return decoder->forward(fused, image.size(2), image.size(3));
}

// --- Operations -----------------------------------------------------------------------

std::vector<FeatureMap> backbone_encode(const torch::Tensor& image, Encoder& encoder) {
  return encoder->forward(image);
}

FeatureMap gated_fusion(const FeatureMap& coarse, const FeatureMap& fine, GatedFusion& module) {
  return module->forward(coarse, fine);
}

FeatureMap cbam(const FeatureMap& f, Cbam& module) { return {module->forward(f.data), "attended"}; }

FeatureMap diffusion_refine(const FeatureMap& f, int steps, DiffusionRefine& module) {
  if (steps < 0) throw ConfigError("diffusion_refine: steps must be >= 0");
  if (steps > module->steps())
    throw ConfigError("diffusion_refine: module has " + std::to_string(module->steps()) +
                      " blocks, asked for " + std::to_string(steps));
  torch::Tensor x = f.data;
  for (int t = 0; t < steps; ++t) x = module->step(t, x);
  return {x, "refined"};
}

torch::Tensor teacher_forward(const torch::Tensor& image, SegmentationNet& teacher) {
  return teacher->forward(image);
}

StudentOutputs student_forward(const torch::Tensor& image, StudentNet& student,
                               SegmentationNet& teacher) {
  if (!student->config().backbone_compatible(teacher->config()))
    throw ConfigError("student and teacher architectures differ");
  std::vector<FeatureMap> coarse;
  torch::Tensor teacher_logits;
  {
    torch::NoGradGuard guard;
    coarse = teacher->encoder->forward(image);
    teacher_logits = teacher->decoder->forward(coarse, image.size(2), image.size(3));
  }
  auto logits = student->forward(image, &coarse);
  return {logits, teacher_logits};
}

void init_student_from_teacher(StudentNet& student, SegmentationNet& teacher) {
  if (!student->config().backbone_compatible(teacher->config()))
    throw ConfigError("cannot warm-start: student and teacher architectures differ");
  torch::NoGradGuard guard;
  auto copy = [](torch::nn::Module& dst, torch::nn::Module& src) {
    auto src_params = src.named_parameters();
    for (auto& item : dst.named_parameters()) item.value().copy_(src_params[item.key()]);
  };
  copy(*student->encoder, *teacher->encoder);
  copy(*student->decoder, *teacher->decoder);
}

void freeze(torch::nn::Module& module) {
  for (auto& p : module.parameters()) p.set_requires_grad(false);
  module.eval();
}

}  // namespace c2f
