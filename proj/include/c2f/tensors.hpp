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

#include <span>

#include "c2f/checkpoint.hpp"
#include "c2f/datagen.hpp"

namespace c2f {

// (N, in_channels, H, W) float32 from the first in_channels bands of each sample.
torch::Tensor images_tensor(std::span<const SampleRecord* const> samples, int in_channels);
// (N, 1, H, W) float32 in {0, 1}.
torch::Tensor masks_tensor(std::span<const SampleRecord* const> samples, Domain labels);

const Mask& labels_of(const SampleRecord& s, Domain labels);

}  // namespace c2f
