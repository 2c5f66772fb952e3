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

#include "c2f/c2f.h"

#include <cstring>
#include <filesystem>
#include <sstream>
#include <string>

#include "c2f/ablation.hpp"
#include "c2f/checkpoint.hpp"
#include "c2f/config.hpp"
#include "c2f/datagen.hpp"
#include "c2f/error.hpp"
#include "c2f/eval.hpp"
#include "c2f/io_util.hpp"
#include "c2f/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

struct c2f_config {
  c2f::RunConfig value;
};

struct c2f_dataset {
  c2f::DatasetSplits value;
  std::string root;
};

struct c2f_checkpoint {
  c2f::Checkpoint value;
  std::string path;
};

namespace {

constexpr const char* kVersion = "0.1.0";

thread_local std::string last_error;

c2f_status fail(c2f_status s, const std::string& msg) {
  last_error = msg;
  return s;
}

// Runs fn, translating exceptions into status codes.
template <typename Fn>
c2f_status guarded(Fn&& fn) {
  last_error.clear();
  try {
    fn();
    return C2F_OK;
  } catch (const c2f::ConfigError& e) {
    return fail(C2F_ERR_CONFIG, e.what());
  } catch (const c2f::ShapeError& e) {
    return fail(C2F_ERR_CONFIG, e.what());
  } catch (const c2f::ExistsError& e) {
    return fail(C2F_ERR_EXISTS, e.what());
  } catch (const std::exception& e) {
    return fail(C2F_ERR_RUNTIME, e.what());
  } catch (...) {
    return fail(C2F_ERR_RUNTIME, "unknown error");
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void put(char** out, const json& j) {
  if (out) *out = dup(j.dump(2));
}

void need(const void* p, const char* what) {
  if (!p) throw c2f::ConfigError(std::string(what) + " must not be null");
}

json manifest_from(const char* manifest_json, const fs::path& run_dir, std::uint64_t seed) {
  json m = json::object();
  if (manifest_json && *manifest_json) {
    try {
      m = json::parse(manifest_json);
    } catch (const json::exception& e) {
      throw c2f::ConfigError(std::string("manifest is not valid JSON: ") + e.what());
    }
  }
  c2f::RunManifest r;
  r.command = m.value("command", std::string());
  r.config_path = m.value("config_path", std::string());
  r.dataset_root = m.value("dataset_root", std::string());
  r.run_dir = run_dir.string();
  r.seed = seed;
  r.tool_version = kVersion;
  r.started_at = m.value("started_at", std::string());
  return r.to_json();
}

void prepare(const fs::path& dir, const json& manifest, const c2f::RunConfig& cfg) {
  if (!c2f::is_empty_or_missing(dir))
    throw c2f::ExistsError("run directory exists and is not empty: " + dir.string());
  fs::create_directories(dir);
  c2f::write_file(dir / "manifest.json", manifest.dump(2) + "\n");
  c2f::write_file(dir / "config.json", cfg.to_json().dump(2) + "\n");
}

c2f::TrainOptions options_for(const fs::path& dir, c2f_progress_fn progress, void* user) {
  c2f::TrainOptions o;
  o.log_path = dir / "log.jsonl";
  if (progress)
    o.on_epoch = [progress, user](const c2f::EpochRecord& r) {
      std::ostringstream s;
      s << "epoch " << r.epoch << " lr=" << r.lr << " loss=" << r.train.total
        << " distill=" << r.train.distill << " val_miou=" << r.val.mean_iou << " (" << r.seconds
        << " s)";
      progress(s.str().c_str(), user);
    };
  return o;
}

json run_report(const c2f::TrainResult& res, c2f::Role role) {
  json j = {{"role", std::string(c2f::role_name(role))},
            {"best_epoch", res.log.best_epoch},
            {"best_val_miou", res.log.best_val_miou},
            {"epochs_run", res.log.epochs.size()},
            {"wall_time", res.log.wall_time},
            {"checkpoint", "best.ckpt"},
            {"log", res.log.to_json()}};
  if (role == c2f::Role::Student) {
    j["teacher_checksum_before"] = res.teacher_checksum_before;
    j["teacher_checksum_after"] = res.teacher_checksum_after;
  }
  return j;
}

json stats_summary(const c2f::DomainShiftReport& r) {
  json j = {{"n_samples", r.n_samples}};
  auto one = [](const c2f::Distribution& d) {
    return json{{"mean", d.mean}, {"median", d.median}, {"mode", d.mode}};
  };
  j["coverage_fine"] = one(r.coverage_fine);
  j["coverage_coarse"] = one(r.coverage_coarse);
  j["roughness_fine"] = one(r.roughness_fine);
  j["roughness_coarse"] = one(r.roughness_coarse);
  return j;
}

}  // namespace

extern "C" {

const char* c2f_version(void) { return kVersion; }

const char* c2f_last_error(void) { return last_error.c_str(); }

void c2f_string_free(char* s) { std::free(s); }

c2f_status c2f_config_load(const char* path, c2f_config** out) {
  return guarded([&] {
    need(out, "out");
    auto cfg = std::make_unique<c2f_config>();
    if (path) cfg->value = c2f::load_config(path);
    *out = cfg.release();
  });
}

c2f_status c2f_config_parse(const char* text, c2f_config** out) {
  return guarded([&] {
    need(text, "json");
    need(out, "out");
    json j;
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw c2f::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    auto cfg = std::make_unique<c2f_config>();
    cfg->value = c2f::RunConfig::from_json(j);
    *out = cfg.release();
  });
}

c2f_status c2f_config_to_json(const c2f_config* cfg, char** out) {
  return guarded([&] {
    need(cfg, "config");
    need(out, "out");
    put(out, cfg->value.to_json());
  });
}

c2f_status c2f_config_set_seed(c2f_config* cfg, unsigned long long seed) {
  return guarded([&] {
    need(cfg, "config");
    cfg->value.train.seed = seed;
  });
}

void c2f_config_free(c2f_config* cfg) { delete cfg; }

c2f_status c2f_dataset_generate(const c2f_config* cfg, const char* root, int force, char** summary) {
  return guarded([&] {
    need(cfg, "config");
    need(root, "root");
    auto splits = c2f::build_dataset(cfg->value.data, root, force != 0);
    json j = {{"root", root},
              {"seed", splits.seed},
              {"train", splits.train.size()},
              {"val", splits.val.size()},
              {"test", splits.test.size()},
              {"height", cfg->value.data.scene.height},
              {"width", cfg->value.data.scene.width},
              {"manifest", (fs::path(root) / "manifest.json").string()}};
    put(summary, j);
  });
}

c2f_status c2f_dataset_load(const char* root, c2f_dataset** out) {
  return guarded([&] {
    need(root, "root");
    need(out, "out");
    if (!fs::exists(fs::path(root) / "manifest.json"))
      throw c2f::ConfigError(std::string("not a dataset root (no manifest.json): ") + root);
    auto ds = std::make_unique<c2f_dataset>();
    ds->value = c2f::load_dataset(root);
    ds->root = root;
    *out = ds.release();
  });
}

c2f_status c2f_dataset_size(const c2f_dataset* ds, const char* split, size_t* n) {
  return guarded([&] {
    need(ds, "dataset");
    need(split, "split");
    need(n, "n");
    *n = ds->value.get(c2f::parse_split(split)).size();
  });
}

c2f_status c2f_dataset_stats(const c2f_dataset* ds, const char* split, char** report) {
  return guarded([&] {
    need(ds, "dataset");
    need(report, "report");
    c2f::DomainShiftReport r;
    if (!split || std::string(split) == "all") {
      r = c2f::dataset_statistics(ds->value);
    } else {
      const auto& d = ds->value.get(c2f::parse_split(split));
      r = c2f::dataset_statistics(std::span<const c2f::SampleRecord>(d.samples));
    }
    json j = r.to_json();
    j["dataset_root"] = ds->root;
    j["split"] = split ? split : "all";
    put(report, j);
  });
}

void c2f_dataset_free(c2f_dataset* ds) { delete ds; }

c2f_status c2f_checkpoint_load(const char* path, c2f_checkpoint** out) {
  return guarded([&] {
    need(path, "path");
    need(out, "out");
    if (!fs::exists(path)) throw c2f::ConfigError(std::string("checkpoint not found: ") + path);
    auto c = std::make_unique<c2f_checkpoint>();
    c->value = c2f::load_checkpoint(path);
    c->path = path;
    *out = c.release();
  });
}

c2f_status c2f_checkpoint_info(const c2f_checkpoint* ckpt, char** out) {
  return guarded([&] {
    need(ckpt, "checkpoint");
    const auto& c = ckpt->value;
    put(out, json{{"role", std::string(c2f::role_name(c.role))},
                  {"trained_on", std::string(c2f::domain_name(c.trained_on))},
                  {"frozen", c.frozen},
                  {"tensors", c.parameters.size()},
                  {"config", c.config.to_json()},
                  {"info", c.info}});
  });
}

void c2f_checkpoint_free(c2f_checkpoint* ckpt) { delete ckpt; }

c2f_status c2f_train_teacher(const c2f_config* cfg, const c2f_dataset* ds, const char* run_dir,
                             const char* manifest_json, c2f_progress_fn progress, void* user,
                             char** report) {
  return guarded([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(run_dir, "run_dir");
    c2f::RunConfig rc = cfg->value;
    rc.train.task = c2f::Task::Teacher;
    rc.validate();
    const fs::path dir(run_dir);
    prepare(dir, manifest_from(manifest_json, dir, rc.train.seed), rc);
    auto res = c2f::train_teacher(ds->value, rc.train, options_for(dir, progress, user));
    res.checkpoint.info["dataset_root"] = ds->root;
    c2f::save_checkpoint(res.checkpoint, dir / "best.ckpt");
    json j = run_report(res, c2f::Role::Teacher);
    c2f::write_file(dir / "report.json", j.dump(2) + "\n");
    j.erase("log");
    put(report, j);
  });
}

c2f_status c2f_train_student(const c2f_config* cfg, const c2f_dataset* ds,
                             const c2f_checkpoint* teacher, const char* run_dir,
                             const char* manifest_json, c2f_progress_fn progress, void* user,
                             char** report) {
  return guarded([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(run_dir, "run_dir");
    if (!teacher) throw c2f::ConfigError("student training needs a teacher checkpoint");
    c2f::RunConfig rc = cfg->value;
    rc.train.task = c2f::Task::Student;
    rc.validate();
    if (teacher->value.role != c2f::Role::Teacher)
      throw c2f::ConfigError("checkpoint " + teacher->path + " holds a student, not a teacher");
    if (!rc.train.model.backbone_compatible(teacher->value.config))
      throw c2f::ConfigError("config model.* does not match the teacher checkpoint " + teacher->path +
                             " (in_channels, base_channels, depth and fpn_channels must agree)");
    const fs::path dir(run_dir);
    json manifest = manifest_from(manifest_json, dir, rc.train.seed);
    manifest["teacher_checkpoint"] = teacher->path;
    prepare(dir, manifest, rc);
    auto res = c2f::train_student(ds->value, teacher->value, rc.train, options_for(dir, progress, user));
    res.checkpoint.info["dataset_root"] = ds->root;
    res.checkpoint.info["teacher_checkpoint"] = teacher->path;
    c2f::save_checkpoint(res.checkpoint, dir / "best.ckpt");
    json j = run_report(res, c2f::Role::Student);
    c2f::write_file(dir / "report.json", j.dump(2) + "\n");
    j.erase("log");
    put(report, j);
  });
}

c2f_status c2f_evaluate(const c2f_checkpoint* ckpt, const c2f_checkpoint* teacher,
                        const c2f_dataset* ds, const char* split, const char* labels,
                        const c2f_config* cfg, char** report) {
  return guarded([&] {
    need(ckpt, "checkpoint");
    need(ds, "dataset");
    need(report, "report");
    const c2f::Split s = c2f::parse_split(split ? split : "test");
    const c2f::Domain d = c2f::parse_domain(labels ? labels : "fine");
    const c2f::EvalConfig ecfg = cfg ? cfg->value.eval : c2f::EvalConfig{};
    const auto& data = ds->value.get(s);
    if (data.empty())
      throw c2f::ConfigError("split '" + std::string(c2f::split_name(s)) + "' of " + ds->root +
                             " is empty");
    auto r = c2f::stratified_eval(ckpt->value, teacher ? &teacher->value : nullptr, data, d, ecfg);
    json j = r.to_json();
    j["split"] = std::string(c2f::split_name(s));
    j["labels"] = std::string(c2f::domain_name(d));
    j["pooling"] = std::string(c2f::pooling_name(ecfg.pooling));
    j["checkpoint"] = ckpt->path;
    j["role"] = std::string(c2f::role_name(ckpt->value.role));
    j["domain_shift"] =
        stats_summary(c2f::dataset_statistics(std::span<const c2f::SampleRecord>(data.samples)));
    put(report, j);
  });
}

c2f_status c2f_ablate(const c2f_config* cfg, const c2f_dataset* ds, const char* which,
                      const char* out_dir, c2f_progress_fn progress, void* user, char** table) {
  return guarded([&] {
    need(cfg, "config");
    need(ds, "dataset");
    need(out_dir, "out_dir");
    const auto kind = c2f::parse_ablation(which ? which : "");
    c2f::AblationOptions o;
    o.eval = cfg->value.eval;
    if (progress) o.progress = [progress, user](const std::string& s) { progress(s.c_str(), user); };
    const fs::path dir(out_dir);
    auto t = c2f::run_ablation(kind, cfg->value.train, cfg->value.ablate.seeds, ds->value, dir, o);
    c2f::write_file(dir / "table.csv", t.to_csv());
    c2f::write_file(dir / "table.json", t.to_json().dump(2) + "\n");
    put(table, t.to_json());
  });
}

}  // extern "C"
