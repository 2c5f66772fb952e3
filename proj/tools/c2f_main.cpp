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

// c2f command-line entry point. Talks to the library only through c2f.h.
#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include "c2f/c2f.h"

namespace fs = std::filesystem;

namespace {

constexpr int kUsage = 1;

struct Failed {
  int code;
};

void check(c2f_status s) {
  if (s != C2F_OK) {
    std::cerr << "c2f: " << c2f_last_error() << "\n";
    throw Failed{static_cast<int>(s)};
  }
}

[[noreturn]] void usage(const std::string& msg) {
  std::cerr << "c2f: " << msg << "\n";
  throw Failed{kUsage};
}

// Owning wrappers around the C handles.
using Config = std::unique_ptr<c2f_config, decltype(&c2f_config_free)>;
using DatasetH = std::unique_ptr<c2f_dataset, decltype(&c2f_dataset_free)>;
using CkptH = std::unique_ptr<c2f_checkpoint, decltype(&c2f_checkpoint_free)>;

std::string take(char* s) {
  std::string out = s ? s : "";
  c2f_string_free(s);
  return out;
}

Config load_config(const std::string& path) {
  c2f_config* c = nullptr;
  check(c2f_config_load(path.c_str(), &c));
  return Config(c, c2f_config_free);
}

DatasetH load_dataset(const std::string& root) {
  c2f_dataset* d = nullptr;
  check(c2f_dataset_load(root.c_str(), &d));
  return DatasetH(d, c2f_dataset_free);
}

CkptH load_ckpt(const std::string& path) {
  c2f_checkpoint* c = nullptr;
  check(c2f_checkpoint_load(path.c_str(), &c));
  return CkptH(c, c2f_checkpoint_free);
}

void write_out(const std::string& path, const std::string& text) {
  const fs::path p(path);
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  const fs::path tmp = p.string() + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary);
    f << text << "\n";
    if (!f) {
      std::cerr << "c2f: cannot write " << path << "\n";
      throw Failed{C2F_ERR_RUNTIME};
    }
  }
  fs::rename(tmp, p);
}

std::string now_utc() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&t));
  return buf;
}

std::string quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out += '\\';
    out += c;
  }
  return out + "\"";
}

std::string manifest(const std::string& command, const std::string& config, const std::string& data) {
  std::error_code ec;
  const auto abs = [&](const std::string& p) { return p.empty() ? p : fs::absolute(p, ec).string(); };
  return "{\"command\": " + quote(command) + ", \"config_path\": " + quote(abs(config)) +
         ", \"dataset_root\": " + quote(abs(data)) + ", \"started_at\": " + quote(now_utc()) + "}";
}

bool quiet = false;

void progress(const char* line, void*) {
  if (!quiet) std::cerr << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Coarse-to-fine footprint segmentation: data generation, training, evaluation, ablations."};
  app.set_version_flag("--version", c2f_version());
  app.require_subcommand(1);
  app.fallthrough();
  app.add_flag("-q,--quiet", quiet, "Suppress progress output on stderr");
  app.footer("Exit codes: 0 ok, 1 usage or config error, 2 refusal to overwrite, 3 runtime failure.\n"
             "C2F_THREADS caps the number of worker threads.");

  std::string config, out, data, run, teacher, ckpt, split = "test", labels = "fine", which, stats_split = "all";
  bool force = false;
  long long seed = -1;

  auto* gen = app.add_subcommand("gen-data", "Generate a synthetic coarse/fine dataset");
  gen->add_option("--config", config, "Config file (flat JSON, data.* keys)")->required();
  gen->add_option("--out", out, "Dataset root to create")->required();
  gen->add_flag("--force", force, "Overwrite a non-empty dataset root");

  auto* stats = app.add_subcommand("stats", "Coverage and roughness distributions of a dataset");
  stats->add_option("--data", data, "Dataset root")->required();
  stats->add_option("--out", out, "Report path (JSON)")->required();
  stats->add_option("--split", stats_split, "train, val, test or all")->capture_default_str();

  auto* tt = app.add_subcommand("train-teacher", "Task 1: train the teacher on coarse labels");
  auto* ts = app.add_subcommand("train-student", "Task 2: train the student on fine labels with distillation");
  for (auto* sc : {tt, ts}) {
    sc->add_option("--config", config, "Config file (flat JSON)")->required();
    sc->add_option("--data", data, "Dataset root")->required();
    sc->add_option("--run", run, "Run directory to create (must be empty or missing)")->required();
    sc->add_option("--seed", seed, "Override train.seed");
  }
  ts->add_option("--teacher", teacher, "Teacher checkpoint (best.ckpt of a train-teacher run)");

  auto* ev = app.add_subcommand("eval", "Evaluate a checkpoint on one split");
  ev->add_option("--ckpt", ckpt, "Checkpoint to evaluate")->required();
  ev->add_option("--data", data, "Dataset root")->required();
  ev->add_option("--split", split, "train, val or test")->capture_default_str();
  ev->add_option("--teacher", teacher, "Teacher checkpoint (required for student checkpoints)");
  ev->add_option("--labels", labels, "Ground truth to score against: fine or coarse")->capture_default_str();
  ev->add_option("--config", config, "Config file supplying eval.* settings");
  ev->add_option("--out", out, "Report path (JSON)")->required();

  auto* ab = app.add_subcommand("ablate", "Run one ablation table");
  ab->add_option("--which", which, "injection, distill, bands or loss")->required();
  ab->add_option("--config", config, "Base config file (flat JSON)")->required();
  ab->add_option("--data", data, "Dataset root")->required();
  ab->add_option("--out", out, "Output directory; finished rows inside are reused")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (gen->parsed()) {
      auto cfg = load_config(config);
      char* summary = nullptr;
      check(c2f_dataset_generate(cfg.get(), out.c_str(), force ? 1 : 0, &summary));
      std::cout << take(summary) << "\n";
    } else if (stats->parsed()) {
      auto ds = load_dataset(data);
      char* report = nullptr;
      check(c2f_dataset_stats(ds.get(), stats_split.c_str(), &report));
      write_out(out, take(report));
      std::cout << "wrote " << out << "\n";
    } else if (tt->parsed() || ts->parsed()) {
      const bool student = ts->parsed();
      if (student && teacher.empty())
        usage("train-student requires --teacher CKPT (the best.ckpt written by train-teacher)");
      auto cfg = load_config(config);
      if (seed >= 0) check(c2f_config_set_seed(cfg.get(), static_cast<unsigned long long>(seed)));
      CkptH t(nullptr, c2f_checkpoint_free);
      if (student) t = load_ckpt(teacher);
      auto ds = load_dataset(data);
      const std::string m = manifest(student ? "train-student" : "train-teacher", config, data);
      char* report = nullptr;
      if (student)
        check(c2f_train_student(cfg.get(), ds.get(), t.get(), run.c_str(), m.c_str(), progress, nullptr, &report));
      else
        check(c2f_train_teacher(cfg.get(), ds.get(), run.c_str(), m.c_str(), progress, nullptr, &report));
      std::cout << take(report) << "\n";
    } else if (ev->parsed()) {
      Config cfg(nullptr, c2f_config_free);
      if (!config.empty()) cfg = load_config(config);
      auto c = load_ckpt(ckpt);
      CkptH t(nullptr, c2f_checkpoint_free);
      if (!teacher.empty()) t = load_ckpt(teacher);
      auto ds = load_dataset(data);
      char* report = nullptr;
      check(c2f_evaluate(c.get(), t.get(), ds.get(), split.c_str(), labels.c_str(), cfg.get(), &report));
      write_out(out, take(report));
      std::cout << "wrote " << out << "\n";
    } else if (ab->parsed()) {
      auto cfg = load_config(config);
      auto ds = load_dataset(data);
      char* table = nullptr;
      check(c2f_ablate(cfg.get(), ds.get(), which.c_str(), out.c_str(), progress, nullptr, &table));
      c2f_string_free(table);
      std::ifstream csv(fs::path(out) / "table.csv");
      std::cout << csv.rdbuf();
    }
  } catch (const Failed& f) {
    return f.code;
  } catch (const std::exception& e) {
    std::cerr << "c2f: " << e.what() << "\n";
    return C2F_ERR_RUNTIME;
  }
  return 0;
}
