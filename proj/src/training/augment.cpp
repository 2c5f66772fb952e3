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

#include <cmath>
#include <numbers>

#include "c2f/error.hpp"
#include "c2f/training.hpp"

namespace c2f {

void AugmentConfig::validate() const {
  for (double p : {p_hflip, p_vflip, p_rot90, p_ssr})
    if (!(p >= 0.0 && p <= 1.0)) throw ConfigError("augmentation probabilities must lie in [0, 1]");
  if (!(scale_limit >= 0.0 && scale_limit < 1.0))
    throw ConfigError("train.augment.scale_limit must lie in [0, 1)");
  if (!(rotate_limit >= 0.0 && rotate_limit <= 180.0))
    throw ConfigError("train.augment.rotate_limit must lie in [0, 180]");
  if (!(shift_limit >= 0.0 && shift_limit <= 1.0))
    throw ConfigError("train.augment.shift_limit must lie in [0, 1]");
}

namespace {

// dst(r, c) = src(map(r, c)) for one plane of h x w values.
template <typename T, typename Map>
void remap_plane(T* plane, int h, int w, int out_h, int out_w, Map map) {
  std::vector<T> src(plane, plane + static_cast<std::size_t>(h) * w);
  for (int r = 0; r < out_h; ++r)
    for (int c = 0; c < out_w; ++c) {
      auto [sr, sc] = map(r, c);
      plane[static_cast<std::size_t>(r) * out_w + c] = src[static_cast<std::size_t>(sr) * w + sc];
    }
}

template <typename Map>
void remap_sample(SampleRecord& s, int out_h, int out_w, Map map) {
  auto& img = s.image;
  const int h = img.height, w = img.width;
  const std::size_t plane = static_cast<std::size_t>(h) * w;
  for (int b = 0; b < img.bands; ++b) remap_plane(img.data.data() + b * plane, h, w, out_h, out_w, map);
  img.height = out_h;
  img.width = out_w;
  for (Mask* m : {&s.mask_fine, &s.mask_coarse}) {
    if (m->data.empty()) continue;
    remap_plane(m->data.data(), h, w, out_h, out_w, map);
    m->height = out_h;
    m->width = out_w;
  }
}

int reflect101(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i = std::abs(i) % period;
  return i >= n ? period - i : i;
}

}  // namespace

void hflip(SampleRecord& s) {
  const int w = s.image.width;
  remap_sample(s, s.image.height, w, [w](int r, int c) { return std::pair{r, w - 1 - c}; });
}

void vflip(SampleRecord& s) {
  const int h = s.image.height;
  remap_sample(s, h, s.image.width, [h](int r, int c) { return std::pair{h - 1 - r, c}; });
}

void rot90(SampleRecord& s, int k) {
  k = ((k % 4) + 4) % 4;
  const int h = s.image.height, w = s.image.width;
  if (k % 2 == 1 && h != w)
    throw ShapeError("rot90 by an odd number of quarter turns needs a square sample");
  switch (k) {
    case 1: remap_sample(s, h, w, [w](int r, int c) { return std::pair{c, w - 1 - r}; }); break;
    case 2: remap_sample(s, h, w, [h, w](int r, int c) { return std::pair{h - 1 - r, w - 1 - c}; }); break;
    case 3: remap_sample(s, h, w, [h](int r, int c) { return std::pair{h - 1 - c, r}; }); break;
    default: break;
  }
}

void shift_scale_rotate(SampleRecord& s, const SsrParams& p) {
  if (!(p.scale > 0.0)) throw ConfigError("shift_scale_rotate: scale must be positive");
  auto& img = s.image;
  const int h = img.height, w = img.width;
  const double cy = (h - 1) / 2.0, cx = (w - 1) / 2.0;
  const double th = p.angle_deg * std::numbers::pi / 180.0;
  const double ct = std::cos(th) / p.scale, st = std::sin(th) / p.scale;
  const double dx = p.shift_x * w, dy = p.shift_y * h;

  // Source coordinates and bilinear taps per output pixel, shared by all planes.
  struct Tap {
    int i00, i01, i10, i11;
    float w00, w01, w10, w11;
  };
  std::vector<Tap> taps(static_cast<std::size_t>(h) * w);
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      const double u = c - cx - dx, v = r - cy - dy;
      const double sx = ct * u + st * v + cx;
      const double sy = -st * u + ct * v + cy;
      const double fx0 = std::floor(sx), fy0 = std::floor(sy);
      const float fx = static_cast<float>(sx - fx0), fy = static_cast<float>(sy - fy0);
      const int x0 = reflect101(static_cast<int>(fx0), w), x1 = reflect101(static_cast<int>(fx0) + 1, w);
      const int y0 = reflect101(static_cast<int>(fy0), h), y1 = reflect101(static_cast<int>(fy0) + 1, h);
      taps[static_cast<std::size_t>(r) * w + c] = {y0 * w + x0, y0 * w + x1, y1 * w + x0, y1 * w + x1,
                                                    (1 - fy) * (1 - fx), (1 - fy) * fx, fy * (1 - fx), fy * fx};
    }

  auto sample = [&](auto* plane, auto convert) {
    using T = std::remove_reference_t<decltype(*plane)>;
    std::vector<T> src(plane, plane + taps.size());
    for (std::size_t k = 0; k < taps.size(); ++k) {
      const Tap& t = taps[k];
      const float v = t.w00 * src[t.i00] + t.w01 * src[t.i01] + t.w10 * src[t.i10] + t.w11 * src[t.i11];
      plane[k] = convert(v);
    }
  };
  const std::size_t plane = taps.size();
  for (int b = 0; b < img.bands; ++b)
    sample(img.data.data() + b * plane, [](float v) { return v; });
  for (Mask* m : {&s.mask_fine, &s.mask_coarse})
    if (!m->data.empty())
      sample(m->data.data(), [](float v) { return static_cast<std::uint8_t>(v >= 0.5f ? 1 : 0); });
}

SampleRecord augment(const SampleRecord& sample, Rng& rng, const AugmentConfig& config) {
  SampleRecord out = sample;
  if (!config.enabled) return out;
  if (bernoulli(rng, config.p_hflip)) hflip(out);
  if (bernoulli(rng, config.p_vflip)) vflip(out);
  if (bernoulli(rng, config.p_rot90)) {
    const int k = 1 + static_cast<int>(rng() % 3);
    rot90(out, out.image.height == out.image.width ? k : 2);
  }
  if (bernoulli(rng, config.p_ssr)) {
    SsrParams p;
    p.scale = uniform(rng, 1.0 - config.scale_limit, 1.0 + config.scale_limit);
    p.angle_deg = uniform(rng, -config.rotate_limit, config.rotate_limit);
    p.shift_x = uniform(rng, -config.shift_limit, config.shift_limit);
    p.shift_y = uniform(rng, -config.shift_limit, config.shift_limit);
    shift_scale_rotate(out, p);
  }
  return out;
}

}  // namespace c2f
