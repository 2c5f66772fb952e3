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

#include <cstddef>
#include <functional>

namespace c2f {

// Worker cap: C2F_THREADS if set to a positive integer, otherwise the
// hardware concurrency (at least 1).
int worker_threads();

// Applies torch's intra-op thread count from worker_threads(). Idempotent.
void configure_torch_threads();

// Runs fn(i) for i in [0, n) on up to worker_threads() threads. Each index is
// processed exactly once; the first exception is rethrown after all workers
// join.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn);

}  // namespace c2f
