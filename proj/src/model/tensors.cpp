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

#include "c2f/tensors.hpp"

#include <cstring>

#include "c2f/error.hpp"

namespace c2f {

const Mask& labels_of(const SampleRecord& s, Domain labels) {
  return labels == Domain::Fine ? s.mask_fine : s.mask_coarse;
}

torch::Tensor images_tensor(std::span<const SampleRecord* const> samples, int in_channels) {
  if (samples.empty()) throw ShapeError("images_tensor: no samples");
  const auto& first = samples.front()->image;
  if (in_channels < 1 || in_channels > first.bands)
    throw ShapeError("images_tensor: in_channels " + std::to_string(in_channels) +
                     " but samples carry " + std::to_string(first.bands) + " bands");
  const int64_t n = static_cast<int64_t>(samples.size());
  auto out = torch::empty({n, in_channels, first.height, first.width}, torch::kFloat32);
  const std::size_t plane = static_cast<std::size_t>(first.height) * first.width;
  float* dst = out.data_ptr<float>();
  for (int64_t i = 0; i < n; ++i) {
    const auto& img = samples[i]->image;
    if (img.height != first.height || img.width != first.width || img.bands != first.bands)
      throw ShapeError("images_tensor: sample " + samples[i]->id + " has a different shape");
    std::memcpy(dst + i * in_channels * plane, img.data.data(), in_channels * plane * sizeof(float));
  }
  return out;
}

torch::Tensor masks_tensor(std::span<const SampleRecord* const> samples, Domain labels) {
  if (samples.empty()) throw ShapeError("masks_tensor: no samples");
  const auto& first = labels_of(*samples.front(), labels);
  const int64_t n = static_cast<int64_t>(samples.size());
  auto out = torch::empty({n, 1, first.height, first.width}, torch::kFloat32);
  float* dst = out.data_ptr<float>();
  const std::size_t plane = first.size();
  for (int64_t i = 0; i < n; ++i) {
    const auto& m = labels_of(*samples[i], labels);
    if (m.height != first.height || m.width != first.width)
      throw ShapeError("masks_tensor: sample " + samples[i]->id + " has a different shape");
    if (m.data.empty())
      throw ShapeError("masks_tensor: sample " + samples[i]->id + " has no " +
                       std::string(domain_name(labels)) + " mask");
    for (std::size_t k = 0; k < plane; ++k) dst[i * plane + k] = m.data[k] ? 1.0f : 0.0f;
  }
  return out;
}

}  // namespace c2f
