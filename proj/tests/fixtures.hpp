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

// Small datasets and configs shared by the training, eval and config tests.
#pragma once

#include "c2f/datagen.hpp"
#include "c2f/training.hpp"

namespace fixture {

inline c2f::DataConfig tiny_data(int n_train, int n_val, int n_test, int size = 64,
                                 std::uint64_t seed = 5) {
  c2f::DataConfig cfg;
  cfg.seed = seed;
  cfg.n_train = n_train;
  cfg.n_val = n_val;
  cfg.n_test = n_test;
  cfg.scene.height = cfg.scene.width = size;
  cfg.scene.coarsen_dilate_radius = size / 10;
  cfg.scene.coarsen_simplify = size / 20;
  return cfg;
}

inline c2f::TrainConfig tiny_train(int epochs = 2) {
  c2f::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.warmup_epochs = epochs > 1 ? 1 : 0;
  cfg.batch_size = 4;
  cfg.model.base_channels = 8;
  cfg.model.depth = 3;
  cfg.model.fpn_channels = 16;
  cfg.model.diffusion_steps = 2;
  return cfg;
}

}  // namespace fixture
