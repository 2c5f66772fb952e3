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

#include <cstdint>
#include <limits>
#include <vector>

#include "c2f/datagen.hpp"

namespace c2f {

namespace {

constexpr double kFar = 1e20;

// 1-D squared distance transform of a sampled function (lower envelope of
// parabolas), Felzenszwalb & Huttenlocher.
void edt_1d(const double* f, double* d, int n, std::vector<int>& v, std::vector<double>& z) {
  v.assign(n, 0);
  z.assign(n + 1, 0.0);
  int k = 0;
  v[0] = 0;
  z[0] = -std::numeric_limits<double>::infinity();
  z[1] = std::numeric_limits<double>::infinity();
  for (int q = 1; q < n; ++q) {
    double s;
    while (true) {
      const int p = v[k];
      s = ((f[q] + double(q) * q) - (f[p] + double(p) * p)) / (2.0 * q - 2.0 * p);
      if (s <= z[k] && k > 0) {
        --k;
        continue;
      }
      break;
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = std::numeric_limits<double>::infinity();
  }
  k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const double dq = q - v[k];
    d[q] = dq * dq + f[v[k]];
  }
}

// Squared Euclidean distance from every pixel to the nearest pixel whose
// value equals `target`. Pixels outside the image never count as targets.
std::vector<double> squared_distance_to(const Mask& m, std::uint8_t target) {
  const int h = m.height, w = m.width;
  std::vector<double> grid(static_cast<std::size_t>(h) * w);
  for (std::size_t i = 0; i < grid.size(); ++i) grid[i] = m.data[i] == target ? 0.0 : kFar;

  std::vector<int> v;
  std::vector<double> z;
  std::vector<double> f(std::max(h, w)), d(std::max(h, w));
  for (int c = 0; c < w; ++c) {
    for (int r = 0; r < h; ++r) f[r] = grid[static_cast<std::size_t>(r) * w + c];
    edt_1d(f.data(), d.data(), h, v, z);
    for (int r = 0; r < h; ++r) grid[static_cast<std::size_t>(r) * w + c] = d[r];
  }
  for (int r = 0; r < h; ++r) {
    double* row = grid.data() + static_cast<std::size_t>(r) * w;
    std::copy(row, row + w, f.begin());
    edt_1d(f.data(), d.data(), w, v, z);
    std::copy(d.begin(), d.begin() + w, row);
  }
  return grid;
}

}  // namespace

Mask dilate_disk(const Mask& m, int radius) {
  if (radius <= 0) return m;
  const auto dist = squared_distance_to(m, 1);
  const double r2 = double(radius) * radius;
  Mask out(m.height, m.width);
  for (std::size_t i = 0; i < dist.size(); ++i) out.data[i] = dist[i] <= r2 ? 1 : 0;
  return out;
}

Mask erode_disk(const Mask& m, int radius) {
  if (radius <= 0) return m;
  const auto dist = squared_distance_to(m, 0);
  const double r2 = double(radius) * radius;
  Mask out(m.height, m.width);
  for (std::size_t i = 0; i < dist.size(); ++i) out.data[i] = (m.data[i] && dist[i] > r2) ? 1 : 0;
  return out;
}

Mask close_disk(const Mask& m, int radius) { return erode_disk(dilate_disk(m, radius), radius); }

}  // namespace c2f
