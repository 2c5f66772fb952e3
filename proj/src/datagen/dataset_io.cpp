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

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "c2f/datagen.hpp"
#include "c2f/error.hpp"
#include "c2f/io_util.hpp"
#include "c2f/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace c2f {

std::string_view split_name(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(std::string_view name) {
  if (name == "train") return Split::Train;
  if (name == "val") return Split::Val;
  if (name == "test") return Split::Test;
  throw ConfigError("unknown split '" + std::string(name) + "' (expected train, val or test)");
}

const Dataset& DatasetSplits::get(Split s) const {
  switch (s) {
    case Split::Train: return train;
    case Split::Val: return val;
    case Split::Test: return test;
  }
  return train;
}

Dataset& DatasetSplits::get(Split s) {
  return const_cast<Dataset&>(std::as_const(*this).get(s));
}

void write_pgm(const Mask& mask, const fs::path& path) {
  std::ostringstream out;
  out << "P5\n" << mask.width << " " << mask.height << "\n255\n";
  std::string bytes(mask.data.size(), '\0');
  for (std::size_t i = 0; i < mask.data.size(); ++i) bytes[i] = mask.data[i] ? char(255) : char(0);
  out << bytes;
  write_file(path, out.str());
}

Mask read_pgm(const fs::path& path) {
  const std::string buf = read_file(path);
  std::istringstream in(buf);
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P5" || w <= 0 || h <= 0 || maxval != 255)
    throw IoError("not a binary 8-bit PGM: " + path.string());
  in.get();  // single whitespace after maxval
  const auto offset = static_cast<std::size_t>(in.tellg());
  if (buf.size() < offset + static_cast<std::size_t>(w) * h)
    throw IoError("truncated PGM: " + path.string());
  Mask m(h, w);
  for (std::size_t i = 0; i < m.data.size(); ++i) {
    const auto v = static_cast<unsigned char>(buf[offset + i]);
    if (v != 0 && v != 255) throw IoError("PGM mask is not binary: " + path.string());
    m.data[i] = v ? 1 : 0;
  }
  return m;
}

namespace {

void write_sample(const SampleRecord& rec, const fs::path& dir) {
  fs::create_directories(dir);
  write_file(dir / "image.bin", encode_f32le(rec.image.data));
  json band_names = json::array();
  for (auto n : kBandNames) band_names.push_back(std::string(n));
  json info = {{"height", rec.image.height},
               {"width", rec.image.width},
               {"bands", rec.image.bands},
               {"band_names", band_names},
               {"dtype", "f32le"}};
  write_file(dir / "image.json", info.dump(2) + "\n");
  write_pgm(rec.mask_fine, dir / "mask_fine.pgm");
  write_pgm(rec.mask_coarse, dir / "mask_coarse.pgm");
  write_file(dir / "meta.json", json(rec.meta).dump(2) + "\n");
}

SampleRecord read_sample(const std::string& id, const fs::path& dir) {
  SampleRecord rec;
  rec.id = id;
  const json info = json::parse(read_file(dir / "image.json"));
  const int h = info.at("height").get<int>();
  const int w = info.at("width").get<int>();
  const int b = info.at("bands").get<int>();
  if (info.at("dtype").get<std::string>() != "f32le")
    throw IoError("unsupported image dtype in " + (dir / "image.json").string());
  rec.image = MultibandImage(b, h, w);
  rec.image.data = decode_f32le(read_file(dir / "image.bin"));
  if (rec.image.data.size() != static_cast<std::size_t>(b) * h * w)
    throw IoError("image.bin size does not match image.json in " + dir.string());
  rec.mask_fine = read_pgm(dir / "mask_fine.pgm");
  rec.mask_coarse = read_pgm(dir / "mask_coarse.pgm");
  if (rec.mask_fine.height != h || rec.mask_fine.width != w || rec.mask_coarse.height != h ||
      rec.mask_coarse.width != w)
    throw IoError("mask shape does not match image in " + dir.string());
  if (fs::exists(dir / "meta.json"))
    rec.meta = json::parse(read_file(dir / "meta.json")).get<std::map<std::string, std::string>>();
  return rec;
}

}  // namespace

void write_dataset(const DatasetSplits& splits, const fs::path& root, bool force) {
  if (!force && !is_empty_or_missing(root))
    throw ExistsError("dataset root exists and is not empty: " + root.string() +
                      " (pass --force to overwrite)");
  // Stage everything next to the destination and swap it in at the end.
  fs::path staging = root;
  staging += ".partial-" + std::to_string(::getpid());
  fs::remove_all(staging);
  fs::create_directories(staging / "samples");

  json manifest;
  manifest["version"] = 1;
  manifest["seed"] = splits.seed;
  json split_ids = json::object();
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    json ids = json::array();
    for (const auto& rec : splits.get(s).samples) {
      ids.push_back(rec.id);
      write_sample(rec, staging / "samples" / rec.id);
    }
    split_ids[std::string(split_name(s))] = ids;
  }
  manifest["splits"] = split_ids;
  write_file(staging / "manifest.json", manifest.dump(2) + "\n");

  fs::remove_all(root);
  if (root.has_parent_path()) fs::create_directories(root.parent_path());
  fs::rename(staging, root);
}

DatasetSplits load_dataset(const fs::path& root) {
  const fs::path manifest_path = root / "manifest.json";
  if (!fs::exists(manifest_path)) throw IoError("no manifest.json under " + root.string());
  json manifest;
  try {
    manifest = json::parse(read_file(manifest_path));
  } catch (const json::exception& e) {
    throw IoError("cannot parse " + manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("version", 0) != 1)
    throw IoError("unsupported dataset manifest version in " + manifest_path.string());
  DatasetSplits out;
  out.seed = manifest.at("seed").get<std::uint64_t>();
  for (Split s : {Split::Train, Split::Val, Split::Test}) {
    const auto& ids = manifest.at("splits").at(std::string(split_name(s)));
    auto& ds = out.get(s);
    ds.samples.resize(ids.size());
    parallel_for(ids.size(), [&](std::size_t i) {
      const auto id = ids[i].get<std::string>();
      ds.samples[i] = read_sample(id, root / "samples" / id);
    });
  }
  return out;
}

DatasetSplits generate_dataset(const DataConfig& config) {
  config.validate();
  DatasetSplits out;
  out.seed = config.seed;
  const std::size_t n_train = config.n_train, n_val = config.n_val, n_test = config.n_test;
  std::vector<SampleRecord> all(n_train + n_val + n_test);
  parallel_for(all.size(), [&](std::size_t i) { all[i] = generate_sample(config, i); });
  for (std::size_t i = 0; i < all.size(); ++i) {
    Split s = i < n_train ? Split::Train : (i < n_train + n_val ? Split::Val : Split::Test);
    out.get(s).samples.push_back(std::move(all[i]));
  }
  return out;
}

DatasetSplits build_dataset(const DataConfig& config, const fs::path& root, bool force) {
  if (!force && !is_empty_or_missing(root))
    throw ExistsError("dataset root exists and is not empty: " + root.string() +
                      " (pass --force to overwrite)");
  DatasetSplits splits = generate_dataset(config);
  write_dataset(splits, root, force);
  return splits;
}

}  // namespace c2f
