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

#include "c2f/losses.hpp"

#include "c2f/error.hpp"

namespace F = torch::nn::functional;
using nlohmann::json;

namespace c2f {

namespace {

constexpr int kSsimWindow = 11;
constexpr double kSsimC1 = 1e-4;
constexpr double kSsimC2 = 9e-4;

void check_same(const torch::Tensor& a, const torch::Tensor& b, const char* what) {
  if (!a.sizes().equals(b.sizes()))
    throw ShapeError(std::string(what) + ": shape mismatch " + c10::str(a.sizes()) + " vs " +
                     c10::str(b.sizes()));
}

torch::Tensor clip_probs(const torch::Tensor& p) { return p.clamp(kProbClip, 1.0 - kProbClip); }

// Sobel pair stacked as two output channels: G_x then G_y.
torch::Tensor sobel_kernels(const torch::TensorOptions& opts) {
  auto kx = torch::tensor({-1.0, 0.0, 1.0, -2.0, 0.0, 2.0, -1.0, 0.0, 1.0}, opts).view({1, 1, 3, 3});
  return torch::cat({kx, kx.transpose(2, 3)}, 0);
}

}  // namespace

std::string_view strategy_name(Strategy s) {
  switch (s) {
    case Strategy::None: return "none";
    case Strategy::Standard: return "standard";
    case Strategy::Image: return "image";
    case Strategy::Pixel: return "pixel";
    case Strategy::Hybrid: return "hybrid";
  }
  return "none";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::None, Strategy::Standard, Strategy::Image, Strategy::Pixel,
                 Strategy::Hybrid})
    if (strategy_name(s) == name) return s;
  throw ConfigError("unknown distillation strategy '" + std::string(name) +
                    "' (expected none, standard, image, pixel or hybrid)");
}

void DistillConfig::validate() const {
  if (!(temperature > 0.0)) throw ConfigError("distill.temperature must be > 0");
  if (!(epsilon > 0.0)) throw ConfigError("distill.epsilon must be > 0");
}

json LossBreakdown::to_json() const {
  return {{"bce", bce},         {"dice", dice},       {"ssim", ssim}, {"boundary", boundary},
          {"student", student}, {"distill", distill}, {"total", total}};
}

torch::Tensor as_nchw(const torch::Tensor& t) {
  switch (t.dim()) {
    case 2: return t.unsqueeze(0).unsqueeze(0);
    case 3: return t.unsqueeze(1);
    case 4:
      if (t.size(1) != 1) throw ShapeError("expected a single-channel map, got " + c10::str(t.sizes()));
      return t;
    default: throw ShapeError("expected a 2-, 3- or 4-dimensional map, got " + c10::str(t.sizes()));
  }
}

torch::Tensor bce_map(const torch::Tensor& probs, const torch::Tensor& target) {
  check_same(probs, target, "bce");
  auto p = clip_probs(probs);
  auto y = target.to(p.scalar_type());
  return -(y * torch::log(p) + (1 - y) * torch::log(1 - p));
}

torch::Tensor bce_loss(const torch::Tensor& probs, const torch::Tensor& target) {
  return bce_map(probs, target).mean();
}

torch::Tensor dice_loss(const torch::Tensor& probs, const torch::Tensor& target) {
  check_same(probs, target, "dice");
  auto y = target.to(probs.scalar_type());
  return 1 - (2 * (probs * y).sum() + 1) / (probs.sum() + y.sum() + 1);
}

torch::Tensor ssim_loss(const torch::Tensor& probs, const torch::Tensor& target) {
  check_same(probs, target, "ssim");
  auto x = as_nchw(probs);
  auto y = as_nchw(target).to(x.scalar_type());
  if (x.size(2) < kSsimWindow || x.size(3) < kSsimWindow)
    throw ShapeError("ssim: maps of " + std::to_string(x.size(2)) + "x" + std::to_string(x.size(3)) +
                     " are smaller than the 11x11 window");
  auto pool = [](const torch::Tensor& t) {
    return F::avg_pool2d(t, F::AvgPool2dFuncOptions(kSsimWindow).stride(1));
  };
  auto mx = pool(x), my = pool(y);
  auto vx = pool(x * x) - mx * mx;
  auto vy = pool(y * y) - my * my;
  auto cxy = pool(x * y) - mx * my;
  auto ssim = ((2 * mx * my + kSsimC1) * (2 * cxy + kSsimC2)) /
              ((mx * mx + my * my + kSsimC1) * (vx + vy + kSsimC2));
  return 1 - ssim.mean();
}

BoundaryMap boundary_importance(const torch::Tensor& target) {
  auto y = as_nchw(target);
  if (!y.is_floating_point()) y = y.to(torch::kFloat32);
  auto padded = F::pad(y, F::PadFuncOptions({1, 1, 1, 1}).mode(torch::kReplicate));
  auto g = F::conv2d(padded, sobel_kernels(y.options()));
  BoundaryMap m;
  m.gx = g.slice(1, 0, 1);
  m.gy = g.slice(1, 1, 2);
  m.w_raw = g.pow(2).sum(1, true).sqrt();
  auto flat = m.w_raw.flatten(1);
  auto lo = std::get<0>(flat.min(1)).view({-1, 1, 1, 1});
  auto range = std::get<0>(flat.max(1)).view({-1, 1, 1, 1}) - lo;
  m.w_hat = torch::where(range > 0, (m.w_raw - lo) / range.clamp_min(1e-30),
                         torch::zeros_like(m.w_raw));
  m.k = y.size(2) * y.size(3);
  return m;
}

torch::Tensor weighted_bce(const torch::Tensor& probs, const torch::Tensor& target,
                           const torch::Tensor& weights) {
  auto p = as_nchw(probs);
  auto w = as_nchw(weights).to(p.scalar_type());
  check_same(p, w, "weighted_bce");
  return (w * bce_map(p, as_nchw(target))).mean();
}

torch::Tensor boundary_loss(const torch::Tensor& probs, const torch::Tensor& target) {
  check_same(probs, target, "boundary");
  return weighted_bce(probs, target, boundary_importance(target.detach()).w_hat);
}

torch::Tensor softened_kl(const torch::Tensor& teacher_logits, const torch::Tensor& student_logits,
                          double temperature, KlFamily family) {
  check_same(teacher_logits, student_logits, "softened_kl");
  if (!(temperature > 0.0)) throw ConfigError("softened_kl: temperature must be > 0");
  if (family == KlFamily::Bernoulli) {
    auto p = clip_probs(torch::sigmoid(teacher_logits / temperature));
    auto q = clip_probs(torch::sigmoid(student_logits / temperature));
    return p * torch::log(p / q) + (1 - p) * torch::log((1 - p) / (1 - q));
  }
  // Two-class softmax over logits (0, z).
  auto two = [temperature](const torch::Tensor& z) {
    return clip_probs(torch::softmax(torch::stack({torch::zeros_like(z), z}, -1) / temperature, -1));
  };
  auto p = two(teacher_logits), q = two(student_logits);
  return (p * torch::log(p / q)).sum(-1);
}

torch::Tensor pixel_selection(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                              const torch::Tensor& student_logits) {
  torch::NoGradGuard guard;
  auto y = as_nchw(target).to(torch::kFloat64);
  auto zt = as_nchw(teacher_logits).detach().to(torch::kFloat64);
  auto zs = as_nchw(student_logits).detach().to(torch::kFloat64);
  check_same(y, zt, "pixel_selection");
  check_same(y, zs, "pixel_selection");
  return (bce_map(torch::sigmoid(zt), y) < bce_map(torch::sigmoid(zs), y)).to(torch::kFloat32);
}

torch::Tensor image_selection(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                              const torch::Tensor& student_logits) {
  torch::NoGradGuard guard;
  auto y = as_nchw(target).to(torch::kFloat64);
  auto zt = as_nchw(teacher_logits).detach().to(torch::kFloat64);
  auto zs = as_nchw(student_logits).detach().to(torch::kFloat64);
  check_same(y, zt, "image_selection");
  check_same(y, zs, "image_selection");
  auto lt = bce_map(torch::sigmoid(zt), y).mean({1, 2, 3});
  auto ls = bce_map(torch::sigmoid(zs), y).mean({1, 2, 3});
  return (lt < ls).to(torch::kFloat32);
}

SelectionMasks selection_masks(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                               const torch::Tensor& student_logits) {
  SelectionMasks m;
  m.img = image_selection(target, teacher_logits, student_logits);
  m.pxl = pixel_selection(target, teacher_logits, student_logits);
  m.hybrid = m.img.view({-1, 1, 1, 1}) * m.pxl;
  return m;
}

torch::Tensor strategy_mask(Strategy s, const SelectionMasks& masks, const torch::Tensor& like) {
  switch (s) {
    case Strategy::None: return torch::zeros_like(like);
    case Strategy::Standard: return torch::ones_like(like);
    case Strategy::Image:
      return (masks.img.view({-1, 1, 1, 1}) * torch::ones_like(like)).to(like.scalar_type());
    case Strategy::Pixel: return masks.pxl.to(like.scalar_type());
    case Strategy::Hybrid: return masks.hybrid.to(like.scalar_type());
  }
  return torch::zeros_like(like);
}

torch::Tensor distill_loss(const torch::Tensor& mask, const torch::Tensor& kl, double temperature,
                           double epsilon) {
  check_same(mask, kl, "distill_loss");
  auto m = mask.to(kl.scalar_type());
  return (m * temperature * temperature * kl).sum() / (m.sum() + epsilon);
}

torch::Tensor distill_loss_per_image(const torch::Tensor& img, const torch::Tensor& kl,
                                     double temperature) {
  auto k = as_nchw(kl);
  if (img.dim() != 1 || img.size(0) != k.size(0))
    throw ShapeError("distill_loss_per_image: indicator length does not match batch");
  auto per_image = k.mean({1, 2, 3});
  return temperature * temperature * (img.to(k.scalar_type()) * per_image).sum() / k.size(0);
}

StudentLossTerms student_loss(const torch::Tensor& probs, const torch::Tensor& target,
                              const LossTerms& terms) {
  auto p = as_nchw(probs);
  auto y = as_nchw(target).to(p.scalar_type());
  check_same(p, y, "student_loss");
  auto zero = torch::zeros({}, p.options());
  StudentLossTerms out;
  out.bce = terms.bce ? bce_loss(p, y) : zero;
  out.dice = terms.dice ? dice_loss(p, y) : zero;
  out.ssim = terms.ssim ? ssim_loss(p, y) : zero;
  out.boundary = terms.boundary ? boundary_loss(p, y) : zero;
  out.student = out.bce + out.dice + out.ssim + out.boundary;
  return out;
}

LossResult compute_loss(const torch::Tensor& student_logits, const torch::Tensor& teacher_logits,
                        const torch::Tensor& target, const DistillConfig& distill,
                        const LossTerms& terms, const SelectionMasks* frozen) {
  distill.validate();
  auto zs = as_nchw(student_logits);
  auto y = as_nchw(target).to(zs.scalar_type());
  auto s = student_loss(torch::sigmoid(zs), y, terms);

  LossResult r;
  torch::Tensor d = torch::zeros({}, zs.options());
  if (distill.strategy != Strategy::None) {
    if (!teacher_logits.defined())
      throw ConfigError("distillation strategy '" + std::string(strategy_name(distill.strategy)) +
                        "' needs teacher logits");
    auto zt = as_nchw(teacher_logits).detach();
    auto kl = softened_kl(zt, zs, distill.temperature, distill.family);
    SelectionMasks masks;
    if (frozen) masks = *frozen;
    else if (distill.strategy != Strategy::Standard) masks = selection_masks(y, zt, zs);
    if (distill.strategy == Strategy::Image && distill.image_norm == ImageNorm::PerImage) {
      d = distill_loss_per_image(masks.img, kl, distill.temperature);
      r.selected_fraction = masks.img.mean().item<double>();
    } else {
      auto mask = strategy_mask(distill.strategy, masks, zs);
      d = distill_loss(mask, kl, distill.temperature, distill.epsilon);
      r.selected_fraction = mask.mean().item<double>();
    }
  }
  r.total = s.student + d;

  auto& b = r.breakdown;
  b.bce = s.bce.item<double>();
  b.dice = s.dice.item<double>();
  b.ssim = s.ssim.item<double>();
  b.boundary = s.boundary.item<double>();
  b.student = b.bce + b.dice + b.ssim + b.boundary;
  b.distill = d.item<double>();
  b.total = total_loss(b);
  return r;
}

double total_loss(const LossBreakdown& b) { return b.student + b.distill; }

}  // namespace c2f
