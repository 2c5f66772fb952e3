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

#include <string_view>

#include <nlohmann/json.hpp>

namespace c2f {

// Every log() in this module sees probabilities clipped to [kProbClip, 1 - kProbClip].
inline constexpr double kProbClip = 1e-7;

// Tensors passed to the losses are (B, 1, H, W); (H, W) and (B, H, W) are
// promoted. Reductions are plain torch sums/means over the whole tensor.

enum class Strategy { None, Standard, Image, Pixel, Hybrid };
std::string_view strategy_name(Strategy s);
Strategy parse_strategy(std::string_view name);

// Distribution family used to soften logits before the KL.
enum class KlFamily { Bernoulli, Softmax2 };

// How the image-level strategy is normalized: by selected pixel count like
// every other strategy, or as the per-image mean KL averaged over the batch.
enum class ImageNorm { Masked, PerImage };

struct DistillConfig {
  double temperature = 2.0;
  double epsilon = 1e-8;
  Strategy strategy = Strategy::Hybrid;
  KlFamily family = KlFamily::Bernoulli;
  ImageNorm image_norm = ImageNorm::Masked;

  void validate() const;
};

// Which student-loss components are active (the student-loss ablation drops
// them cumulatively from the end).
struct LossTerms {
  bool bce = true;
  bool dice = true;
  bool ssim = true;
  bool boundary = true;
};

struct SelectionMasks {
  torch::Tensor img;     // (B) in {0, 1}
  torch::Tensor pxl;     // (B, 1, H, W) in {0, 1}
  torch::Tensor hybrid;  // img broadcast times pxl
};

struct LossBreakdown {
  double bce = 0.0;
  double dice = 0.0;
  double ssim = 0.0;
  double boundary = 0.0;
  double student = 0.0;
  double distill = 0.0;
  double total = 0.0;

  nlohmann::json to_json() const;
};

struct BoundaryMap {
  torch::Tensor gx;
  torch::Tensor gy;
  torch::Tensor w_raw;
  torch::Tensor w_hat;  // per-image min-max normalized; zero for constant masks
  int64_t k = 0;        // pixels per image
};

torch::Tensor as_nchw(const torch::Tensor& t);

torch::Tensor bce_map(const torch::Tensor& probs, const torch::Tensor& target);
torch::Tensor bce_loss(const torch::Tensor& probs, const torch::Tensor& target);
// 1 - (2 sum(p y) + 1) / (sum p + sum y + 1) over the whole batch.
torch::Tensor dice_loss(const torch::Tensor& probs, const torch::Tensor& target);
// 1 - mean SSIM over every valid 11x11 uniform window.
torch::Tensor ssim_loss(const torch::Tensor& probs, const torch::Tensor& target);
BoundaryMap boundary_importance(const torch::Tensor& target);
// mean(weights * per-pixel BCE); the boundary loss uses weights = w_hat.
torch::Tensor weighted_bce(const torch::Tensor& probs, const torch::Tensor& target,
                           const torch::Tensor& weights);
torch::Tensor boundary_loss(const torch::Tensor& probs, const torch::Tensor& target);

// Per-pixel KL(teacher || student) of the temperature-softened distributions.
torch::Tensor softened_kl(const torch::Tensor& teacher_logits, const torch::Tensor& student_logits,
                          double temperature, KlFamily family = KlFamily::Bernoulli);

// Indicators compare unsoftened (T = 1) BCE against the fine labels; a site
// is selected only when the teacher is strictly better.
torch::Tensor image_selection(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                              const torch::Tensor& student_logits);
torch::Tensor pixel_selection(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                              const torch::Tensor& student_logits);
SelectionMasks selection_masks(const torch::Tensor& target, const torch::Tensor& teacher_logits,
                               const torch::Tensor& student_logits);

// Pixel mask for a strategy, shaped like the logits. None gives all zeros,
// Standard all ones.
torch::Tensor strategy_mask(Strategy s, const SelectionMasks& masks,
                            const torch::Tensor& like);

// sum(mask * T^2 * kl) / (sum(mask) + eps)
torch::Tensor distill_loss(const torch::Tensor& mask, const torch::Tensor& kl, double temperature,
                           double epsilon);
// (T^2 / B) * sum_i img_i * mean_j kl_ij
torch::Tensor distill_loss_per_image(const torch::Tensor& img, const torch::Tensor& kl,
                                     double temperature);

struct StudentLossTerms {
  torch::Tensor bce, dice, ssim, boundary, student;
};

StudentLossTerms student_loss(const torch::Tensor& probs, const torch::Tensor& target,
                              const LossTerms& terms = {});

struct LossResult {
  torch::Tensor total;  // differentiable objective
  LossBreakdown breakdown;
  double selected_fraction = 0.0;  // mean of the active strategy's mask
};

// Full objective. teacher_logits may be undefined when strategy is None.
// Selection masks are computed without autograd unless `frozen` supplies them.
LossResult compute_loss(const torch::Tensor& student_logits, const torch::Tensor& teacher_logits,
                        const torch::Tensor& target, const DistillConfig& distill,
                        const LossTerms& terms = {}, const SelectionMasks* frozen = nullptr);

double total_loss(const LossBreakdown& b);

}  // namespace c2f
