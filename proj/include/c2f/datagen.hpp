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

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

namespace c2f {

inline constexpr int kNumBands = 6;
inline constexpr std::array<std::string_view, kNumBands> kBandNames = {
    "R", "G", "B", "NIR", "SWIR1", "SWIR2"};

// Row-major binary mask; every element is 0 or 1.
struct Mask {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> data;

  Mask() = default;
  Mask(int h, int w) : height(h), width(w), data(static_cast<std::size_t>(h) * w, 0) {}

  std::uint8_t& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
  std::uint8_t at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }
  std::size_t size() const { return data.size(); }
  std::size_t count() const;
  bool operator==(const Mask&) const = default;
};

// Band-major (band, row, col) float image with values in [0, 1].
struct MultibandImage {
  int bands = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;

  MultibandImage() = default;
  MultibandImage(int b, int h, int w)
      : bands(b), height(h), width(w), data(static_cast<std::size_t>(b) * h * w, 0.0f) {}

  float& at(int b, int r, int c) {
    return data[(static_cast<std::size_t>(b) * height + r) * width + c];
  }
  float at(int b, int r, int c) const {
    return data[(static_cast<std::size_t>(b) * height + r) * width + c];
  }
  bool operator==(const MultibandImage&) const = default;
};

struct Range {
  double lo = 0.0;
  double hi = 0.0;
  bool contains(double v) const { return v >= lo && v <= hi; }
};

// Background appearance family; also the stratification tag of a sample.
enum class Terrain { Arid, Vegetated, Mixed };

std::string_view terrain_name(Terrain t);

struct SceneSpec {
  std::uint64_t seed = 0;
  int height = 256;
  int width = 256;
  int n_blobs = 3;
  // n_blobs == 0 is only accepted together with this flag.
  bool allow_empty = false;

  // Per-scene fine coverage is drawn from a log-normal with this median.
  double coverage_median = 0.12;
  double coverage_log_sigma = 0.45;
  Range fine_roughness_target{1.0, 80.0};
  int max_attempts = 32;

  int coarsen_dilate_radius = 30;
  int coarsen_simplify = 12;

  // Foreground/background separation per band: R, G, B, NIR, SWIR1, SWIR2.
  std::array<double, kNumBands> band_contrasts{0.05, 0.05, 0.05, 0.08, 0.12, 0.12};
  double noise_sigma = 0.06;
  // Amplitude of the smooth background texture shared by all bands.
  double texture_amplitude = 0.05;
  // Bare-soil decoys that brighten the visible bands only.
  double confounder_strength = 0.05;
  Terrain terrain = Terrain::Mixed;

  void validate() const;
};

struct SampleRecord {
  std::string id;
  MultibandImage image;
  Mask mask_fine;
  Mask mask_coarse;
  std::map<std::string, std::string> meta;
};

enum class Split { Train, Val, Test };

std::string_view split_name(Split s);
Split parse_split(std::string_view name);

struct Dataset {
  Split split = Split::Train;
  std::vector<SampleRecord> samples;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

// All three splits of one generated (or loaded) dataset root.
struct DatasetSplits {
  std::uint64_t seed = 0;
  Dataset train{Split::Train, {}};
  Dataset val{Split::Val, {}};
  Dataset test{Split::Test, {}};

  const Dataset& get(Split s) const;
  Dataset& get(Split s);
  std::size_t total() const { return train.size() + val.size() + test.size(); }
};

struct MaskStats {
  double coverage = 0.0;
  std::int64_t perimeter = 0;
  std::int64_t area = 0;
  double roughness = 0.0;
  std::int64_t pixels = 0;
};

// Configuration of a generated dataset; per-sample scene specs are derived
// from `scene` by varying seed, blob count and terrain.
struct DataConfig {
  std::uint64_t seed = 0;
  int n_train = 128;
  int n_val = 16;
  int n_test = 32;
  int n_blobs_min = 1;
  int n_blobs_max = 4;
  SceneSpec scene;

  void validate() const;
  SceneSpec scene_for(std::size_t index) const;
};

// --- generation -------------------------------------------------------------

Mask generate_fine_mask(const SceneSpec& spec);
Mask coarsen_mask(const Mask& fine, const SceneSpec& spec);
MultibandImage render_multispectral(const Mask& fine, const SceneSpec& spec);
SampleRecord generate_sample(const DataConfig& config, std::size_t index);

// Rasterizes a closed polygon with (y, x) vertices into mask, sampling pixel
// centers with the even-odd rule.
void fill_polygon(Mask& mask, std::span<const std::array<double, 2>> vertices);

// Binary morphology with a Euclidean disk of the given radius.
Mask dilate_disk(const Mask& m, int radius);
Mask erode_disk(const Mask& m, int radius);
Mask close_disk(const Mask& m, int radius);

// --- statistics -------------------------------------------------------------

MaskStats mask_statistics(const Mask& mask);

struct Histogram {
  std::vector<double> edges;
  std::vector<std::int64_t> counts;
};

struct Kde {
  double bandwidth = 0.0;
  std::vector<double> x;
  std::vector<double> density;
};

struct Distribution {
  std::vector<double> values;
  double mean = 0.0;
  double median = 0.0;
  // Location of the KDE maximum.
  double mode = 0.0;
  Histogram histogram;
  Kde kde;
};

Distribution describe(std::vector<double> values, double hist_lo, double hist_hi,
                      int bins = 50, int kde_points = 256);
double silverman_bandwidth(std::span<const double> values);

struct DomainShiftReport {
  std::size_t n_samples = 0;
  Distribution coverage_fine;
  Distribution coverage_coarse;
  Distribution roughness_fine;
  Distribution roughness_coarse;

  nlohmann::json to_json() const;
};

DomainShiftReport dataset_statistics(std::span<const SampleRecord> samples);
DomainShiftReport dataset_statistics(const DatasetSplits& splits);

// --- on-disk layout ---------------------------------------------------------

DatasetSplits generate_dataset(const DataConfig& config);
DatasetSplits build_dataset(const DataConfig& config, const std::filesystem::path& root,
                            bool force);
void write_dataset(const DatasetSplits& splits, const std::filesystem::path& root, bool force);
DatasetSplits load_dataset(const std::filesystem::path& root);

void write_pgm(const Mask& mask, const std::filesystem::path& path);
Mask read_pgm(const std::filesystem::path& path);

}  // namespace c2f
