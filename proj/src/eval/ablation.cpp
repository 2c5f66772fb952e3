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

#include "c2f/ablation.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "c2f/config.hpp"
#include "c2f/error.hpp"
#include "c2f/io_util.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace c2f {

std::string_view ablation_name(AblationKind k) {
  switch (k) {
    case AblationKind::Injection: return "injection";
    case AblationKind::Distill: return "distill";
    case AblationKind::Bands: return "bands";
    case AblationKind::Loss: return "loss";
  }
  return "injection";
}

AblationKind parse_ablation(std::string_view name) {
  for (auto k : {AblationKind::Injection, AblationKind::Distill, AblationKind::Bands, AblationKind::Loss})
    if (ablation_name(k) == name) return k;
  throw ConfigError("unknown ablation '" + std::string(name) +
                    "' (valid: injection, distill, bands, loss)");
}

std::vector<AblationVariant> ablation_variants(AblationKind kind, const TrainConfig& base) {
  std::vector<AblationVariant> out;
  auto add = [&](std::string method, std::string slug, auto edit) {
    AblationVariant v{std::move(method), std::move(slug), base};
    v.train.task = Task::Student;
    edit(v.train);
    out.push_back(std::move(v));
  };
  switch (kind) {
    case AblationKind::Injection:
      add("None", "inject_none", [](TrainConfig& c) { c.model.components = {false, false, false}; });
      add("GF", "inject_gf", [](TrainConfig& c) { c.model.components = {true, false, false}; });
      add("GF+CBAM", "inject_gf_cbam", [](TrainConfig& c) { c.model.components = {true, true, false}; });
      add("GF+CBAM+DR", "inject_gf_cbam_dr",
          [](TrainConfig& c) { c.model.components = {true, true, true}; });
      break;
    case AblationKind::Distill: {
      const std::pair<const char*, Strategy> rows[] = {{"None", Strategy::None},
                                                       {"Standard KD", Strategy::Standard},
                                                       {"Image-level Sel.", Strategy::Image},
                                                       {"Pixel-level Sel.", Strategy::Pixel},
                                                       {"Hybrid Sel.", Strategy::Hybrid}};
      for (const auto& [name, s] : rows)
        add(name, "distill_" + std::string(strategy_name(s)), [s](TrainConfig& c) {
          c.model.components = {true, true, true};
          c.distill.strategy = s;
        });
      break;
    }
    case AblationKind::Bands:
      add("RGB", "bands_3", [](TrainConfig& c) { c.model.in_channels = 3; });
      add("RGB+NIR", "bands_4", [](TrainConfig& c) { c.model.in_channels = 4; });
      add("RGB+NIR+SWIR", "bands_6", [](TrainConfig& c) { c.model.in_channels = 6; });
      break;
    case AblationKind::Loss:
      add("BCE", "loss_bce", [](TrainConfig& c) { c.loss_terms = {true, false, false, false}; });
      add("+Dice", "loss_dice", [](TrainConfig& c) { c.loss_terms = {true, true, false, false}; });
      add("+SSIM", "loss_ssim", [](TrainConfig& c) { c.loss_terms = {true, true, true, false}; });
      add("+Boundary", "loss_boundary", [](TrainConfig& c) { c.loss_terms = {true, true, true, true}; });
      break;
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::nan("");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

namespace {

json train_config_json(const TrainConfig& train) {
  RunConfig rc;
  rc.train = train;
  json j = rc.to_json();
  for (auto it = j.begin(); it != j.end();)
    it = (it.key().starts_with("data.") || it.key().starts_with("ablate.")) ? j.erase(it) : std::next(it);
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport r;
  static_cast<MetricsSummary&>(r) = MetricsSummary::from_json(j);
  if (j.contains("per_stratum"))
    for (const auto& [tag, s] : j.at("per_stratum").items()) r.per_stratum[tag] = MetricsSummary::from_json(s);
  return r;
}

// A run dir counts as finished once report.json exists; anything else left
// behind by an interrupted attempt is discarded.
bool finished(const fs::path& dir) { return fs::exists(dir / "report.json"); }

void start_run(const fs::path& dir, const std::string& command, std::uint64_t seed,
               const TrainConfig& train) {
  if (fs::exists(dir)) fs::remove_all(dir);
  RunManifest m;
  m.command = command;
  m.run_dir = dir.string();
  m.seed = seed;
  m.tool_version = "0.1.0";
  create_run_dir(dir, m, train_config_json(train));
}

void say(const AblationOptions& o, const std::string& msg) {
  if (o.progress) o.progress(msg);
}

}  // namespace

Checkpoint ensure_teacher(const TrainConfig& base, std::uint64_t seed, const DatasetSplits& data,
                          const fs::path& dir, const AblationOptions& options) {
  if (finished(dir) && fs::exists(dir / "best.ckpt")) {
    say(options, "reuse teacher " + dir.string());
    return load_checkpoint(dir / "best.ckpt");
  }
  TrainConfig cfg = base;
  cfg.task = Task::Teacher;
  cfg.seed = seed;
  say(options, "train teacher " + dir.string());
  start_run(dir, "ablate:teacher", seed, cfg);
  TrainOptions topt;
  topt.log_path = dir / "log.jsonl";
  auto res = train_teacher(data, cfg, topt);
  save_checkpoint(res.checkpoint, dir / "best.ckpt");
  write_file(dir / "report.json", json{{"role", "teacher"}, {"log", res.log.to_json()}}.dump(2) + "\n");
  return res.checkpoint;
}

SeedResult run_variant(const AblationVariant& variant, const Checkpoint& teacher, std::uint64_t seed,
                       const DatasetSplits& data, const fs::path& dir,
                       const AblationOptions& options) {
  SeedResult out;
  out.seed = seed;
  out.run_dir = dir;
  if (finished(dir)) {
    const json j = json::parse(read_file(dir / "report.json"));
    out.test = report_from_json(j.at("test"));
    say(options, "reuse " + dir.string());
    return out;
  }
  TrainConfig cfg = variant.train;
  cfg.seed = seed;
  say(options, "train " + variant.method + " seed " + std::to_string(seed));
  start_run(dir, "ablate:" + variant.slug, seed, cfg);
  TrainOptions topt;
  topt.log_path = dir / "log.jsonl";
  auto res = train_student(data, teacher, cfg, topt);
  save_checkpoint(res.checkpoint, dir / "best.ckpt");
  out.test = stratified_eval(res.checkpoint, &teacher, data.test, Domain::Fine, options.eval);
  json report = {{"role", "student"},
                 {"method", variant.method},
                 {"seed", seed},
                 {"test", out.test->to_json()},
                 {"log", res.log.to_json()},
                 {"teacher_checksum_before", res.teacher_checksum_before},
                 {"teacher_checksum_after", res.teacher_checksum_after}};
  write_file(dir / "report.json", report.dump(2) + "\n");
  return out;
}

AblationTable run_ablation(AblationKind kind, const TrainConfig& base,
                           std::span<const std::uint64_t> seeds, const DatasetSplits& data,
                           const fs::path& out_dir, const AblationOptions& options) {
  if (seeds.empty()) throw ConfigError("ablation needs at least one seed");
  AblationTable table;
  table.kind = kind;
  const auto variants = ablation_variants(kind, base);
  fs::create_directories(out_dir);

  for (const auto& v : variants) {
    AblationRow row;
    row.method = v.method;
    for (auto seed : seeds) {
      SeedResult r;
      r.seed = seed;
      try {
        const fs::path tdir = out_dir / ("teacher_c" + std::to_string(v.train.model.in_channels) +
                                         "_s" + std::to_string(seed));
        const Checkpoint teacher = ensure_teacher(v.train, seed, data, tdir, options);
        r = run_variant(v, teacher, seed, data, out_dir / (v.slug + "_s" + std::to_string(seed)), options);
      } catch (const std::exception& e) {
        r.error = e.what();
        say(options, v.method + " seed " + std::to_string(seed) + " failed: " + r.error);
      }
      row.seeds.push_back(std::move(r));
    }
    std::vector<double> acc, f1, iou;
    for (const auto& s : row.seeds)
      if (s.test) {
        acc.push_back(s.test->accuracy);
        f1.push_back(s.test->mean_f1);
        iou.push_back(s.test->mean_iou);
      }
    if (!iou.empty()) {
      MetricsSummary m;
      m.accuracy = median(acc);
      m.mean_f1 = median(f1);
      m.mean_iou = median(iou);
      m.n_images = static_cast<std::int64_t>(data.test.size());
      row.median = m;
    }
    table.rows.push_back(std::move(row));
  }
  const auto& first = table.rows.front();
  for (std::size_t i = 1; i < table.rows.size(); ++i)
    if (first.median && table.rows[i].median)
      table.rows[i].delta_miou = table.rows[i].median->mean_iou - first.median->mean_iou;
  return table;
}

AblationTable ablate_feature_injection(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                       const DatasetSplits& data, const fs::path& out_dir,
                                       const AblationOptions& options) {
  return run_ablation(AblationKind::Injection, base, seeds, data, out_dir, options);
}

AblationTable ablate_distillation(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                  const DatasetSplits& data, const fs::path& out_dir,
                                  const AblationOptions& options) {
  return run_ablation(AblationKind::Distill, base, seeds, data, out_dir, options);
}

AblationTable ablate_bands(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                           const DatasetSplits& data, const fs::path& out_dir,
                           const AblationOptions& options) {
  return run_ablation(AblationKind::Bands, base, seeds, data, out_dir, options);
}

AblationTable ablate_student_loss(const TrainConfig& base, std::span<const std::uint64_t> seeds,
                                  const DatasetSplits& data, const fs::path& out_dir,
                                  const AblationOptions& options) {
  return run_ablation(AblationKind::Loss, base, seeds, data, out_dir, options);
}

std::string AblationTable::to_csv() const {
  std::ostringstream s;
  s << "Method,Acc.,mF1,mIoU,\xCE\x94mIoU\n";
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    s << r.method << ',';
    if (r.median)
      s << format_double(r.median->accuracy) << ',' << format_double(r.median->mean_f1) << ','
        << format_double(r.median->mean_iou) << ',';
    else
      s << "NA,NA,NA,";
    if (i == 0) s << "\xE2\x80\x94";
    else if (r.delta_miou) s << format_double(*r.delta_miou);
    else s << "NA";
    s << '\n';
  }
  return s.str();
}

json AblationTable::to_json() const {
  json rs = json::array();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    json seeds = json::array();
    for (const auto& sr : r.seeds) {
      json e = {{"seed", sr.seed}, {"run_dir", sr.run_dir.string()}};
      if (sr.test) e["test"] = sr.test->to_json();
      if (!sr.error.empty()) e["error"] = sr.error;
      seeds.push_back(e);
    }
    json row = {{"method", r.method}, {"seeds", seeds}};
    if (r.median) {
      row["accuracy"] = r.median->accuracy;
      row["mean_f1"] = r.median->mean_f1;
      row["mean_iou"] = r.median->mean_iou;
    }
    row["delta_miou"] = r.delta_miou ? json(*r.delta_miou) : json(nullptr);
    rs.push_back(row);
  }
  return {{"which", std::string(ablation_name(kind))}, {"rows", rs}};
}

}  // namespace c2f
