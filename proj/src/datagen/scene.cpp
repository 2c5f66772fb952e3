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

#include <algorithm>
#include <cstdio>
#include <cmath>
#include <numbers>
#include <sstream>

#include "c2f/datagen.hpp"
#include "c2f/error.hpp"
#include "c2f/rng.hpp"

namespace c2f {

namespace {

constexpr int kPolygonVertices = 256;
constexpr int kRadiusOctaves = 6;
constexpr double kBaseRadiusAmplitude = 0.32;
constexpr double kOctavePersistence = 0.55;

// Background reflectance per terrain regime, bands R, G, B, NIR, SWIR1, SWIR2.
constexpr std::array<std::array<double, kNumBands>, 3> kBackground = {{
    {0.34, 0.30, 0.26, 0.38, 0.44, 0.38},  // arid
    {0.08, 0.12, 0.07, 0.42, 0.24, 0.14},  // vegetated
    {0.20, 0.21, 0.17, 0.40, 0.34, 0.26},  // mixed
}};

std::size_t terrain_index(Terrain t) { return static_cast<std::size_t>(t); }

// Star-shaped polygon whose radius is modulated by a sum of sinusoidal
// octaves; the result is scaled so the polygon has exactly `area` px^2.
std::vector<std::array<double, 2>> irregular_blob(Rng& rng, double cy, double cx,
                                                  double area) {
  std::array<double, kRadiusOctaves> amp{};
  std::array<double, kRadiusOctaves> phase{};
  std::array<double, kRadiusOctaves> freq{};
  for (int o = 0; o < kRadiusOctaves; ++o) {
    amp[o] = kBaseRadiusAmplitude * std::pow(kOctavePersistence, o) * uniform(rng, 0.6, 1.4);
    phase[o] = uniform(rng, 0.0, 2.0 * std::numbers::pi);
    freq[o] = std::ldexp(1.0, o + 1) + std::floor(uniform(rng, 0.0, 2.0));
  }
  std::vector<double> radius(kPolygonVertices);
  for (int k = 0; k < kPolygonVertices; ++k) {
    double theta = 2.0 * std::numbers::pi * k / kPolygonVertices;
    double s = 0.0;
    for (int o = 0; o < kRadiusOctaves; ++o) s += amp[o] * std::sin(freq[o] * theta + phase[o]);
    radius[k] = std::exp(s);
  }
  // Shoelace area of the unit-scale polygon.
  double unit_area = 0.0;
  const double dtheta = 2.0 * std::numbers::pi / kPolygonVertices;
  for (int k = 0; k < kPolygonVertices; ++k)
    unit_area += 0.5 * radius[k] * radius[(k + 1) % kPolygonVertices] * std::sin(dtheta);
  const double scale = std::sqrt(area / unit_area);
  std::vector<std::array<double, 2>> poly(kPolygonVertices);
  for (int k = 0; k < kPolygonVertices; ++k) {
    double theta = dtheta * k;
    poly[k] = {cy + scale * radius[k] * std::sin(theta), cx + scale * radius[k] * std::cos(theta)};
  }
  return poly;
}

Mask draw_fine_mask(const SceneSpec& spec, Rng& rng) {
  Mask mask(spec.height, spec.width);
  const double pixels = static_cast<double>(spec.height) * spec.width;
  double coverage = spec.coverage_median *
                    std::exp(spec.coverage_log_sigma * normal(rng, 0.0, 1.0));
  coverage = std::clamp(coverage, 0.015, 0.45);

  std::vector<double> weights(spec.n_blobs);
  double total = 0.0;
  for (auto& w : weights) total += (w = uniform(rng, 0.4, 1.6));

  for (int b = 0; b < spec.n_blobs; ++b) {
    double area = coverage * pixels * weights[b] / total;
    double r_eq = std::sqrt(area / std::numbers::pi);
    double margin_y = std::min(0.7 * r_eq, 0.45 * spec.height);
    double margin_x = std::min(0.7 * r_eq, 0.45 * spec.width);
    double cy = uniform(rng, margin_y, spec.height - margin_y);
    double cx = uniform(rng, margin_x, spec.width - margin_x);
    auto poly = irregular_blob(rng, cy, cx, area);
    fill_polygon(mask, poly);
  }
  return mask;
}

// Sum of two bilinearly interpolated lattice-noise octaves, roughly in [-1, 1].
std::vector<double> smooth_field(Rng& rng, int h, int w) {
  std::vector<double> field(static_cast<std::size_t>(h) * w, 0.0);
  constexpr std::array<int, 2> kCells = {6, 20};
  constexpr std::array<double, 2> kWeights = {0.65, 0.35};
  for (std::size_t o = 0; o < kCells.size(); ++o) {
    const int gy = kCells[o] + 1;
    const int gx = kCells[o] + 1;
    std::vector<double> lattice(static_cast<std::size_t>(gy) * gx);
    for (auto& v : lattice) v = uniform(rng, -1.0, 1.0);
    for (int r = 0; r < h; ++r) {
      double fy = (r + 0.5) / h * kCells[o];
      int y0 = std::min(static_cast<int>(fy), kCells[o] - 1);
      double ty = fy - y0;
      for (int c = 0; c < w; ++c) {
        double fx = (c + 0.5) / w * kCells[o];
        int x0 = std::min(static_cast<int>(fx), kCells[o] - 1);
        double tx = fx - x0;
        double v00 = lattice[y0 * gx + x0], v01 = lattice[y0 * gx + x0 + 1];
        double v10 = lattice[(y0 + 1) * gx + x0], v11 = lattice[(y0 + 1) * gx + x0 + 1];
        double v = (1 - ty) * ((1 - tx) * v00 + tx * v01) + ty * ((1 - tx) * v10 + tx * v11);
        field[static_cast<std::size_t>(r) * w + c] += kWeights[o] * v;
      }
    }
  }
  return field;
}

}  // namespace

std::string_view terrain_name(Terrain t) {
  switch (t) {
    case Terrain::Arid: return "arid";
    case Terrain::Vegetated: return "vegetated";
    case Terrain::Mixed: return "mixed";
  }
  return "mixed";
}

std::size_t Mask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

void SceneSpec::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError("invalid scene spec: " + what); };
  if (height < 64 || width < 64) fail("height and width must be >= 64");
  if (n_blobs < 0) fail("n_blobs must be >= 0");
  if (n_blobs == 0 && !allow_empty) fail("n_blobs must be >= 1 unless allow_empty is set");
  if (!(coverage_median > 0.0 && coverage_median < 1.0)) fail("coverage_median must be in (0, 1)");
  if (coverage_log_sigma < 0.0) fail("coverage_log_sigma must be >= 0");
  if (fine_roughness_target.lo > fine_roughness_target.hi) fail("fine_roughness_target is empty");
  if (max_attempts < 1) fail("max_attempts must be >= 1");
  if (coarsen_dilate_radius < 0 || coarsen_simplify < 0) fail("coarsening radii must be >= 0");
  if (noise_sigma < 0.0 || texture_amplitude < 0.0 || confounder_strength < 0.0)
    fail("noise, texture and confounder amplitudes must be >= 0");
  const auto& bc = band_contrasts;
  for (double c : bc)
    if (!std::isfinite(c) || c < 0.0) fail("band contrasts must be finite and >= 0");
  double visible = std::max({bc[0], bc[1], bc[2]});
  if (bc[3] < visible) fail("NIR contrast must be >= every visible contrast");
  if (std::min(bc[4], bc[5]) < bc[3]) fail("SWIR contrasts must be >= NIR contrast");
}

Mask generate_fine_mask(const SceneSpec& spec) {
  spec.validate();
  if (spec.n_blobs == 0) return Mask(spec.height, spec.width);
  for (int attempt = 0; attempt < spec.max_attempts; ++attempt) {
    Rng rng = make_rng(spec.seed, {0x6d61736bULL, static_cast<std::uint64_t>(attempt)});
    Mask mask = draw_fine_mask(spec, rng);
    MaskStats stats = mask_statistics(mask);
    if (stats.area > 0 && spec.fine_roughness_target.contains(stats.roughness)) return mask;
  }
  std::ostringstream msg;
  msg << "generation failed: no fine mask within roughness target [" << spec.fine_roughness_target.lo
      << ", " << spec.fine_roughness_target.hi << "] after " << spec.max_attempts
      << " attempts (seed=" << spec.seed << ")";
  throw GenerationError(msg.str());
}

Mask coarsen_mask(const Mask& fine, const SceneSpec& spec) {
  for (auto v : fine.data)
    if (v > 1) throw ShapeError("coarsen_mask: input mask is not binary");
  if (spec.coarsen_dilate_radius < 0 || spec.coarsen_simplify < 0)
    throw ConfigError("coarsen_mask: radii must be >= 0");
  return close_disk(dilate_disk(fine, spec.coarsen_dilate_radius), spec.coarsen_simplify);
}

MultibandImage render_multispectral(const Mask& fine, const SceneSpec& spec) {
  if (fine.height != spec.height || fine.width != spec.width)
    throw ShapeError("render_multispectral: mask shape does not match scene spec");
  const int h = spec.height, w = spec.width;
  Rng rng = make_rng(spec.seed, {0x72656e64ULL});
  const auto& base = kBackground[terrain_index(spec.terrain)];

  std::vector<double> texture(static_cast<std::size_t>(h) * w, 0.0);
  if (spec.texture_amplitude > 0.0) texture = smooth_field(rng, h, w);

  // Decoys: a few soft bright patches visible in R, G, B (weaker in NIR).
  std::vector<double> decoy(static_cast<std::size_t>(h) * w, 0.0);
  if (spec.confounder_strength > 0.0) {
    const int n = 1 + static_cast<int>(uniform(rng, 0.0, 3.0));
    for (int k = 0; k < n; ++k) {
      double cy = uniform(rng, 0.0, h), cx = uniform(rng, 0.0, w);
      double sy = uniform(rng, 0.04, 0.12) * h, sx = uniform(rng, 0.04, 0.12) * w;
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          double dy = (r + 0.5 - cy) / sy, dx = (c + 0.5 - cx) / sx;
          decoy[static_cast<std::size_t>(r) * w + c] += std::exp(-0.5 * (dy * dy + dx * dx));
        }
    }
  }
  constexpr std::array<double, kNumBands> kDecoyResponse = {1.0, 1.0, 1.0, 0.5, 0.0, 0.0};

  MultibandImage img(kNumBands, h, w);
  std::normal_distribution<double> noise(0.0, 1.0);
  for (int b = 0; b < kNumBands; ++b) {
    for (int r = 0; r < h; ++r) {
      for (int c = 0; c < w; ++c) {
        const std::size_t i = static_cast<std::size_t>(r) * w + c;
        double v = base[b] + spec.band_contrasts[b] * fine.data[i] +
                   spec.texture_amplitude * texture[i] +
                   spec.confounder_strength * kDecoyResponse[b] * std::min(decoy[i], 1.0);
        if (spec.noise_sigma > 0.0) v += spec.noise_sigma * noise(rng);
        img.at(b, r, c) = static_cast<float>(std::clamp(v, 0.0, 1.0));
      }
    }
  }
  return img;
}

void DataConfig::validate() const {
  if (n_train < 0 || n_val < 0 || n_test < 0) throw ConfigError("split counts must be >= 0");
  if (n_blobs_min < 1 || n_blobs_max < n_blobs_min)
    throw ConfigError("need 1 <= data.n_blobs_min <= data.n_blobs_max");
  SceneSpec probe = scene;
  probe.n_blobs = n_blobs_min;
  probe.validate();
}

SceneSpec DataConfig::scene_for(std::size_t index) const {
  SceneSpec s = scene;
  s.seed = derive_seed(seed, {0x73636e65ULL, index});
  Rng rng = make_rng(s.seed, {0x6d657461ULL});
  s.n_blobs = n_blobs_min + static_cast<int>(rng() % static_cast<std::uint64_t>(n_blobs_max - n_blobs_min + 1));
  s.terrain = static_cast<Terrain>(rng() % 3);
  return s;
}

SampleRecord generate_sample(const DataConfig& config, std::size_t index) {
  SceneSpec spec = config.scene_for(index);
  SampleRecord rec;
  char id[16];
  std::snprintf(id, sizeof id, "s%06zu", index);
  rec.id = id;
  rec.mask_fine = generate_fine_mask(spec);
  rec.mask_coarse = coarsen_mask(rec.mask_fine, spec);
  rec.image = render_multispectral(rec.mask_fine, spec);
  rec.meta["terrain"] = std::string(terrain_name(spec.terrain));
  rec.meta["n_blobs"] = std::to_string(spec.n_blobs);
  rec.meta["scene_seed"] = std::to_string(spec.seed);
  return rec;
}

void fill_polygon(Mask& mask, std::span<const std::array<double, 2>> vertices) {
  const std::size_t n = vertices.size();
  if (n < 3) return;
  std::vector<double> xs;
  for (int r = 0; r < mask.height; ++r) {
    const double y = r + 0.5;
    xs.clear();
    for (std::size_t k = 0; k < n; ++k) {
      const auto& a = vertices[k];
      const auto& b = vertices[(k + 1) % n];
      // Half-open rule on y avoids double-counting shared vertices.
      if ((a[0] <= y && b[0] > y) || (b[0] <= y && a[0] > y)) {
        double t = (y - a[0]) / (b[0] - a[0]);
        xs.push_back(a[1] + t * (b[1] - a[1]));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      // Pixel c is inside when its center c + 0.5 lies in [xs[k], xs[k+1]).
      int c0 = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      int c1 = std::min(mask.width - 1, static_cast<int>(std::ceil(xs[k + 1] - 0.5)) - 1);
      for (int c = c0; c <= c1; ++c) mask.at(r, c) = 1;
    }
  }
}

}  // namespace c2f
