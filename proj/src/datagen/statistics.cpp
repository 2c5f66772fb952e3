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
#include <cmath>
#include <numbers>
#include <numeric>

#include "c2f/datagen.hpp"
#include "c2f/error.hpp"

namespace c2f {

MaskStats mask_statistics(const Mask& mask) {
  MaskStats s;
  s.pixels = static_cast<std::int64_t>(mask.height) * mask.width;
  const int h = mask.height, w = mask.width;
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      if (!mask.at(r, c)) continue;
      ++s.area;
      // Each side facing a negative pixel or the image border is one unit edge.
      s.perimeter += (r == 0 || !mask.at(r - 1, c));
      s.perimeter += (r == h - 1 || !mask.at(r + 1, c));
      s.perimeter += (c == 0 || !mask.at(r, c - 1));
      s.perimeter += (c == w - 1 || !mask.at(r, c + 1));
    }
  }
  if (s.pixels > 0) s.coverage = static_cast<double>(s.area) / static_cast<double>(s.pixels);
  if (s.area > 0) {
    const double p = static_cast<double>(s.perimeter);
    s.roughness = p * p / (4.0 * std::numbers::pi * static_cast<double>(s.area));
  }
  return s;
}

namespace {

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return 0.0;
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double t = pos - static_cast<double>(lo);
  return sorted[lo] * (1.0 - t) + sorted[hi] * t;
}

}  // namespace

double silverman_bandwidth(std::span<const double> values) {
  const std::size_t n = values.size();
  if (n == 0) return 1.0;
  const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(n);
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  const double sd = n > 1 ? std::sqrt(var / static_cast<double>(n - 1)) : 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  double spread = sd;
  if (iqr > 0.0) spread = std::min(sd, iqr / 1.34);
  if (spread > 0.0) return 0.9 * spread * std::pow(static_cast<double>(n), -0.2);
  // Degenerate sample (single value or all equal): a narrow bump at the value.
  return 0.01 * std::max(1.0, std::abs(mean));
}

Distribution describe(std::vector<double> values, double hist_lo, double hist_hi, int bins,
                      int kde_points) {
  Distribution d;
  d.values = values;
  if (values.empty()) return d;
  const auto n = static_cast<double>(values.size());
  d.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  d.median = quantile_sorted(sorted, 0.5);

  if (hist_hi <= hist_lo) hist_hi = hist_lo + 1.0;
  d.histogram.edges.resize(bins + 1);
  for (int b = 0; b <= bins; ++b)
    d.histogram.edges[b] = hist_lo + (hist_hi - hist_lo) * b / bins;
  d.histogram.counts.assign(bins, 0);
  for (double v : values) {
    int b = static_cast<int>(std::floor((v - hist_lo) / (hist_hi - hist_lo) * bins));
    d.histogram.counts[std::clamp(b, 0, bins - 1)]++;
  }

  const double bw = silverman_bandwidth(values);
  d.kde.bandwidth = bw;
  const double lo = sorted.front() - 3.0 * bw;
  const double hi = sorted.back() + 3.0 * bw;
  d.kde.x.resize(kde_points);
  d.kde.density.resize(kde_points);
  const double norm = 1.0 / (n * bw * std::sqrt(2.0 * std::numbers::pi));
  std::size_t best = 0;
  for (int i = 0; i < kde_points; ++i) {
    const double x = lo + (hi - lo) * i / (kde_points - 1);
    double acc = 0.0;
    for (double v : values) {
      const double u = (x - v) / bw;
      acc += std::exp(-0.5 * u * u);
    }
    d.kde.x[i] = x;
    d.kde.density[i] = acc * norm;
    if (d.kde.density[i] > d.kde.density[best]) best = static_cast<std::size_t>(i);
  }
  d.mode = d.kde.x[best];
  return d;
}

namespace {

DomainShiftReport statistics_of(const std::vector<const SampleRecord*>& samples) {
  if (samples.empty()) throw ConfigError("dataset_statistics: dataset is empty");
  std::vector<double> cov_f, cov_c, rough_f, rough_c;
  for (const auto* s : samples) {
    const MaskStats f = mask_statistics(s->mask_fine);
    const MaskStats c = mask_statistics(s->mask_coarse);
    cov_f.push_back(f.coverage);
    cov_c.push_back(c.coverage);
    rough_f.push_back(f.roughness);
    rough_c.push_back(c.roughness);
  }
  double rough_hi = 1.0;
  for (double v : rough_f) rough_hi = std::max(rough_hi, v);
  for (double v : rough_c) rough_hi = std::max(rough_hi, v);
  rough_hi = std::ceil(rough_hi);

  DomainShiftReport r;
  r.n_samples = samples.size();
  r.coverage_fine = describe(std::move(cov_f), 0.0, 1.0);
  r.coverage_coarse = describe(std::move(cov_c), 0.0, 1.0);
  r.roughness_fine = describe(std::move(rough_f), 0.0, rough_hi);
  r.roughness_coarse = describe(std::move(rough_c), 0.0, rough_hi);
  return r;
}

}  // namespace

DomainShiftReport dataset_statistics(std::span<const SampleRecord> samples) {
  std::vector<const SampleRecord*> ptrs;
  for (const auto& s : samples) ptrs.push_back(&s);
  return statistics_of(ptrs);
}

DomainShiftReport dataset_statistics(const DatasetSplits& splits) {
  std::vector<const SampleRecord*> ptrs;
  for (Split s : {Split::Train, Split::Val, Split::Test})
    for (const auto& rec : splits.get(s).samples) ptrs.push_back(&rec);
  return statistics_of(ptrs);
}

namespace {

nlohmann::json distribution_json(const Distribution& d) {
  return {
      {"n", d.values.size()},
      {"values", d.values},
      {"mean", d.mean},
      {"median", d.median},
      {"mode", d.mode},
      {"histogram", {{"edges", d.histogram.edges}, {"counts", d.histogram.counts}}},
      {"kde", {{"bandwidth", d.kde.bandwidth}, {"x", d.kde.x}, {"density", d.kde.density}}},
  };
}

}  // namespace

nlohmann::json DomainShiftReport::to_json() const {
  return {
      {"n_samples", n_samples},
      {"coverage_fine", distribution_json(coverage_fine)},
      {"coverage_coarse", distribution_json(coverage_coarse)},
      {"roughness_fine", distribution_json(roughness_fine)},
      {"roughness_coarse", distribution_json(roughness_coarse)},
  };
}

}  // namespace c2f
