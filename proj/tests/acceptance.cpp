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

// Acceptance checks 1-11. Prints one PASS/FAIL line per criterion and exits
// non-zero if any selected criterion fails.
//
//   acceptance [--only 1,2,...] [--skip 9] [--cli PATH] [--workdir DIR]
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "c2f/ablation.hpp"
#include "c2f/checkpoint.hpp"
#include "c2f/datagen.hpp"
#include "c2f/eval.hpp"
#include "c2f/io_util.hpp"
#include "c2f/losses.hpp"
#include "c2f/model.hpp"
#include "c2f/parallel.hpp"
#include "c2f/training.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace c2f;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string g_cli = C2F_CLI_PATH;
fs::path g_work;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 6) {
  std::ostringstream s;
  s << std::setprecision(prec) << v;
  return s.str();
}

torch::Tensor t64(const oracle::Img& img) {
  return torch::tensor(img.v, torch::kFloat64).view({img.b, 1, img.h, img.w});
}

double scalar(const torch::Tensor& t) { return t.item<double>(); }

oracle::Img from_tensor(const torch::Tensor& t) {
  auto c = t.to(torch::kFloat64).contiguous();
  oracle::Img out(static_cast<int>(c.size(0)), static_cast<int>(c.size(2)), static_cast<int>(c.size(3)));
  std::copy(c.data_ptr<double>(), c.data_ptr<double>() + c.numel(), out.v.begin());
  return out;
}

// --- 1 ----------------------------------------------------------------------------

Outcome loss_oracles() {
  const auto t0 = std::chrono::steady_clock::now();
  c10::InferenceMode guard;
  double worst = 0.0, worst_ssim = 0.0;
  long cases = 0;

  // Exhaustive 2x2: every mask against every probability pattern on a
  // 5-level grid that includes the clipped extremes.
  const double grid[] = {0.0, 0.25, 0.5, 0.75, 1.0};
  for (int mask = 0; mask < 16; ++mask) {
    oracle::Img y(1, 2, 2);
    for (int k = 0; k < 4; ++k) y.v[k] = (mask >> k) & 1;
    const auto yt = t64(y);
    for (int code = 0; code < 625; ++code) {
      oracle::Img p(1, 2, 2);
      int c = code;
      for (int k = 0; k < 4; ++k, c /= 5) p.v[k] = grid[c % 5];
      const auto pt = t64(p);
      worst = std::max(worst, std::abs(scalar(bce_loss(pt, yt)) - oracle::bce(p, y)));
      worst = std::max(worst, std::abs(scalar(dice_loss(pt, yt)) - oracle::dice(p, y)));
      worst = std::max(worst, std::abs(scalar(boundary_loss(pt, yt)) - oracle::boundary(p, y)));
      ++cases;
    }
  }
  // KL on every pair of a logit grid, three temperatures.
  std::vector<double> zs;
  for (int i = -8; i <= 8; ++i) zs.push_back(i * 1.5);
  const auto n = static_cast<int64_t>(zs.size());
  auto za = torch::tensor(zs, torch::kFloat64).repeat_interleave(n);
  auto zb = torch::tensor(zs, torch::kFloat64).repeat({n});
  for (double temp : {0.5, 1.0, 2.0}) {
    auto kl = softened_kl(za.view({1, 1, n, n}), zb.view({1, 1, n, n}), temp).contiguous();
    const double* kp = kl.data_ptr<double>();
    for (int64_t i = 0; i < n * n; ++i)
      worst = std::max(worst, std::abs(kp[i] - oracle::kl(zs[i / n], zs[i % n], temp)));
    cases += n * n;
  }
  // Random 16x16 batches.
  std::mt19937_64 rng(101);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nz(0.0, 3.0);
  for (int trial = 0; trial < 200; ++trial) {
    oracle::Img p(2, 16, 16), y(2, 16, 16), a(2, 16, 16), b(2, 16, 16);
    for (std::size_t i = 0; i < p.size(); ++i) {
      p.v[i] = u(rng);
      y.v[i] = static_cast<double>(rng() % 2);
      a.v[i] = nz(rng);
      b.v[i] = nz(rng);
    }
    const auto pt = t64(p), yt = t64(y);
    worst = std::max(worst, std::abs(scalar(bce_loss(pt, yt)) - oracle::bce(p, y)));
    worst = std::max(worst, std::abs(scalar(dice_loss(pt, yt)) - oracle::dice(p, y)));
    worst = std::max(worst, std::abs(scalar(boundary_loss(pt, yt)) - oracle::boundary(p, y)));
    worst_ssim = std::max(worst_ssim, std::abs(scalar(ssim_loss(pt, yt)) - oracle::ssim(p, y)));
    auto kl = softened_kl(t64(a), t64(b), 2.0).contiguous();
    for (std::size_t i = 0; i < a.size(); ++i)
      worst = std::max(worst, std::abs(kl.data_ptr<double>()[i] - oracle::kl(a.v[i], b.v[i], 2.0)));
    ++cases;
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-9 && worst_ssim < 1e-6 && secs < 10.0,
          std::to_string(cases) + " cases, max err " + fmt(worst, 3) + ", ssim " + fmt(worst_ssim, 3) +
              ", " + fmt(secs, 3) + " s"};
}

// --- 2 ----------------------------------------------------------------------------

Outcome selection_masks_exact() {
  std::mt19937_64 rng(202);
  std::normal_distribution<double> nz(0.0, 2.0);
  int mismatches = 0, product_failures = 0;
  for (int batch = 0; batch < 200; ++batch) {
    const int b = 1 + static_cast<int>(rng() % 4), h = 2 + static_cast<int>(rng() % 12),
              w = 2 + static_cast<int>(rng() % 12);
    oracle::Img y(b, h, w), zt(b, h, w), zs(b, h, w);
    for (std::size_t i = 0; i < y.size(); ++i) {
      y.v[i] = static_cast<double>(rng() % 2);
      // Quantized logits force ties now and then.
      zt.v[i] = std::round(nz(rng) * 2) / 2;
      zs.v[i] = rng() % 5 == 0 ? zt.v[i] : std::round(nz(rng) * 2) / 2;
    }
    auto m = selection_masks(t64(y).to(torch::kFloat32), t64(zt).to(torch::kFloat32),
                             t64(zs).to(torch::kFloat32));
    const auto img = oracle::image_selection(y, zt, zs);
    const auto pxl = oracle::pixel_selection(y, zt, zs);
    for (int i = 0; i < b; ++i)
      if (m.img[i].item<double>() != img[i]) ++mismatches;
    const auto pl = from_tensor(m.pxl), hy = from_tensor(m.hybrid);
    for (int i = 0; i < b; ++i)
      for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) {
          if (pl.at(i, r, c) != pxl.at(i, r, c)) ++mismatches;
          if (hy.at(i, r, c) != img[i] * pxl.at(i, r, c)) ++mismatches;
        }
    if (!torch::equal(m.hybrid, m.img.view({-1, 1, 1, 1}) * m.pxl)) ++product_failures;
  }
  return {mismatches == 0 && product_failures == 0,
          "200 batches, " + std::to_string(mismatches) + " mismatches, " +
              std::to_string(product_failures) + " product failures"};
}

// --- 3 ----------------------------------------------------------------------------

Outcome distill_degenerate() {
  const double t = 2.0, eps = 1e-8;
  auto zeros = torch::zeros({1, 1, 2, 2}, torch::kFloat64);
  auto kl = softened_kl(torch::randn({1, 1, 2, 2}, torch::kFloat64),
                        torch::randn({1, 1, 2, 2}, torch::kFloat64), t);
  const double empty = scalar(distill_loss(zeros, kl, t, eps));

  auto z = torch::tensor({0.7}, torch::kFloat64).view({1, 1, 1, 1});
  auto one = torch::ones({1, 1, 1, 1}, torch::kFloat64);
  const double tied = scalar(distill_loss(one, softened_kl(z, z, t), t, eps));

  auto zt = torch::tensor({2.0, -1.0, 0.5}, torch::kFloat64).view({1, 1, 1, 3});
  auto zs = torch::tensor({0.0, 1.0, 3.0}, torch::kFloat64).view({1, 1, 1, 3});
  auto mask = torch::tensor({1.0, 1.0, 0.0}, torch::kFloat64).view({1, 1, 1, 3});
  const double two = scalar(distill_loss(mask, softened_kl(zt, zs, t), t, eps));
  const double expect = t * t * (oracle::kl(2.0, 0.0, t) + oracle::kl(-1.0, 1.0, t)) / (2.0 + eps);
  const bool ok = empty == 0.0 && tied == 0.0 && std::abs(two - expect) < 1e-9;
  return {ok, "empty " + fmt(empty) + ", tied " + fmt(tied) + ", two-pixel " + fmt(two, 12) +
                  " vs " + fmt(expect, 12)};
}

// --- 4 ----------------------------------------------------------------------------

Outcome gradient_check() {
  const auto t0 = std::chrono::steady_clock::now();
  torch::manual_seed(404);
  ModelConfig cfg;
  cfg.base_channels = 8;
  cfg.depth = 2;
  cfg.fpn_channels = 8;
  cfg.diffusion_steps = 2;
  SegmentationNet teacher(cfg);
  StudentNet student(cfg);
  teacher->to(torch::kFloat64);
  student->to(torch::kFloat64);
  freeze(*teacher);
  {
    torch::NoGradGuard g;
    for (auto& p : student->parameters()) p.add_(0.05 * torch::randn_like(p));
  }
  auto x = torch::rand({2, 6, 16, 16}, torch::kFloat64);
  auto y = (torch::rand({2, 1, 16, 16}, torch::kFloat64) > 0.6).to(torch::kFloat64);
  DistillConfig d;
  d.strategy = Strategy::Hybrid;
  SelectionMasks frozen;
  {
    torch::NoGradGuard g;
    auto out = student_forward(x, student, teacher);
    frozen = selection_masks(y, out.teacher_logits, out.student_logits);
  }
  auto loss = [&] {
    auto out = student_forward(x, student, teacher);
    return compute_loss(out.student_logits, out.teacher_logits, y, d, {}, &frozen).total;
  };
  student->zero_grad();
  loss().backward();
  auto params = student->parameters();
  std::mt19937_64 rng(405);
  const double h = 1e-6;
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    auto& p = params[rng() % params.size()];
    const auto idx = static_cast<int64_t>(rng() % static_cast<std::uint64_t>(p.numel()));
    auto flat = p.view(-1);
    const double analytic = p.grad().view(-1)[idx].item<double>();
    double plus, minus;
    {
      torch::NoGradGuard g;
      const double v = flat[idx].item<double>();
      flat[idx] = v + h;
      plus = loss().item<double>();
      flat[idx] = v - h;
      minus = loss().item<double>();
      flat[idx] = v;
    }
    const double numeric = (plus - minus) / (2 * h);
    worst = std::max(worst, std::abs(analytic - numeric) /
                                std::max({std::abs(analytic), std::abs(numeric), 1e-6}));
  }
  const double secs = seconds_since(t0);
  return {worst < 1e-3 && secs < 120.0,
          "20 parameters, max rel err " + fmt(worst, 3) + ", " + fmt(secs, 3) + " s"};
}

// --- 5 ----------------------------------------------------------------------------

Outcome recurrence() {
  torch::manual_seed(505);
  torch::NoGradGuard g;
  DiffusionRefine dr(16, 3, 8, 7);
  FeatureMap f{torch::randn({2, 16, 8, 8}), "encoder.s1"};
  const bool identity = torch::equal(diffusion_refine(f, 0, dr).data, f.data);

  auto looped = dr->forward(f.data);
  auto unrolled = f.data;
  for (int t = 0; t < dr->steps(); ++t) unrolled = dr->step(t, unrolled);
  const bool same = torch::equal(looped, unrolled) &&
                    torch::equal(diffusion_refine(f, 3, dr).data, looped);

  for (auto& p : dr->convs->parameters()) p.zero_();
  const bool zero_identity = torch::equal(dr->forward(f.data), f.data);
  return {identity && same && zero_identity,
          std::string("T=0 identity ") + (identity ? "yes" : "no") + ", zero blocks identity " +
              (zero_identity ? "yes" : "no") + ", unrolled==looped " + (same ? "yes" : "no")};
}

// --- 6 ----------------------------------------------------------------------------

Outcome frozen_teacher() {
  auto data = generate_dataset(fixture::tiny_data(8, 2, 0));
  auto cfg = fixture::tiny_train(3);
  cfg.early_stop_patience = 100;
  auto teacher = train_teacher(data, cfg).checkpoint;
  const auto before = parameter_checksum(*make_teacher(teacher));
  auto res = train_student(data, teacher, cfg);
  const auto after = parameter_checksum(*make_teacher(teacher));
  const bool ok = res.teacher_checksum_before == before && res.teacher_checksum_after == before &&
                  after == before && res.log.epochs.size() == 3;
  std::ostringstream s;
  s << "checksum " << std::hex << before << " before, " << res.teacher_checksum_after
    << " after a " << std::dec << res.log.epochs.size() << "-epoch student run";
  return {ok, s.str()};
}

// --- 7 ----------------------------------------------------------------------------

Outcome domain_shift() {
  DataConfig cfg;
  cfg.n_train = 200;
  cfg.n_val = cfg.n_test = 0;
  auto data = generate_dataset(cfg);
  auto r = dataset_statistics(data);
  Mask sq(100, 100);
  for (int i = 25; i < 75; ++i)
    for (int j = 25; j < 75; ++j) sq.at(i, j) = 1;
  const double square = mask_statistics(sq).roughness;
  const bool rough = r.roughness_fine.mean > 2.0 * r.roughness_coarse.mean;
  const bool cover = r.coverage_coarse.mean > r.coverage_fine.mean;
  const bool exact = std::abs(square - 4.0 / M_PI) < 1e-12;
  return {rough && cover && exact,
          "roughness fine " + fmt(r.roughness_fine.mean, 4) + " vs coarse " +
              fmt(r.roughness_coarse.mean, 4) + ", coverage coarse " + fmt(r.coverage_coarse.mean, 4) +
              " vs fine " + fmt(r.coverage_fine.mean, 4) + ", square " + fmt(square, 15)};
}

// --- 8 ----------------------------------------------------------------------------

Outcome metric_oracle() {
  const int n = 512;
  auto masks = torch::zeros({n, 3, 3}, torch::kUInt8);
  auto* mp = masks.data_ptr<std::uint8_t>();
  for (int b = 0; b < n; ++b)
    for (int k = 0; k < 9; ++k) mp[b * 9 + k] = (b >> k) & 1;
  auto pred = masks.repeat_interleave(n, 0);
  auto truth = masks.repeat({n, 1, 1});
  auto counts = confusion_per_image(pred, truth);
  long bad = 0;
  for (int a = 0; a < n; ++a) {
    std::vector<int> pa(9), tb(9);
    for (int k = 0; k < 9; ++k) pa[k] = (a >> k) & 1;
    for (int b = 0; b < n; ++b) {
      for (int k = 0; k < 9; ++k) tb[k] = (b >> k) & 1;
      const auto o = oracle::count(pa, tb);
      const auto& c = counts[static_cast<std::size_t>(a) * n + b];
      const auto s = scores(c);
      const auto os = oracle::scores(o);
      if (c.tn != o.tn || c.fp != o.fp || c.fn != o.fn || c.tp != o.tp || s.accuracy != os.accuracy ||
          s.mean_f1 != os.mean_f1 || s.mean_iou != os.mean_iou)
        ++bad;
    }
  }
  const double hand = scores(ConfusionCounts{10, 1, 2, 3}).mean_iou;
  return {bad == 0 && std::abs(hand - 0.634615) < 1e-6,
          std::to_string(n * n) + " pairs, " + std::to_string(bad) + " mismatches, hand case mIoU " +
              fmt(hand, 9)};
}

// --- 9 ----------------------------------------------------------------------------

Outcome directional_ablation() {
  const auto t0 = std::chrono::steady_clock::now();
  const int cores = std::max(1, worker_threads());
  const double budget_min = 45.0 * 4.0 / std::min(cores, 4);
  const fs::path dir = g_work / "ablation";
  fs::remove_all(dir);

  DataConfig dcfg;  // 128 / 16 / 32 at 256 x 256
  auto data = generate_dataset(dcfg);
  TrainConfig base;  // desk profile: 30 epochs
  const auto inj = ablation_variants(AblationKind::Injection, base);
  const auto dis = ablation_variants(AblationKind::Distill, base);
  const AblationVariant& none_inj = inj.front();
  const AblationVariant& full = inj.back();  // GF+CBAM+DR with hybrid distillation
  const AblationVariant& no_distill = dis.front();

  AblationOptions opt;
  opt.progress = [&](const std::string& s) {
    std::cerr << "  [" << fmt(seconds_since(t0) / 60.0, 3) << " min] " << s << std::endl;
  };
  std::vector<double> m_full, m_none_inj, m_no_distill;
  std::ostringstream per_seed;
  for (std::uint64_t seed : {0, 1, 2}) {
    auto teacher = ensure_teacher(base, seed, data, dir / ("teacher_s" + std::to_string(seed)), opt);
    auto run = [&](const AblationVariant& v) {
      auto r = run_variant(v, teacher, seed, data, dir / (v.slug + "_s" + std::to_string(seed)), opt);
      return r.test->mean_iou;
    };
    m_full.push_back(run(full));
    m_none_inj.push_back(run(none_inj));
    m_no_distill.push_back(run(no_distill));
    per_seed << " seed " << seed << ": full " << fmt(m_full.back(), 4) << ", no-injection "
             << fmt(m_none_inj.back(), 4) << ", no-distill " << fmt(m_no_distill.back(), 4) << ";";
  }
  const double full_med = median(m_full), none_med = median(m_none_inj), nod_med = median(m_no_distill);
  const double minutes = seconds_since(t0) / 60.0;
  const bool distill_ok = full_med >= nod_med;
  const bool inject_ok = full_med >= none_med;
  const bool time_ok = minutes < budget_min;
  std::ostringstream s;
  s << "median test mIoU hybrid " << fmt(full_med, 4) << " vs none " << fmt(nod_med, 4)
    << (distill_ok ? " ok" : " FAIL") << "; full injection " << fmt(full_med, 4) << " vs none "
    << fmt(none_med, 4) << (inject_ok ? " ok" : " FAIL") << "; runtime " << fmt(minutes, 4)
    << " min vs budget " << fmt(budget_min, 4) << " min on " << cores << " core(s)"
    << (time_ok ? "" : " FAIL") << ";" << per_seed.str();
  return {distill_ok && inject_ok && time_ok, s.str()};
}

// --- CLI helpers --------------------------------------------------------------------

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = "\"" + g_cli + "\" " + args + " >>\"" + log.string() + "\" 2>&1";
  const int st = std::system(cmd.c_str());
  return WIFEXITED(st) ? WEXITSTATUS(st) : -1;
}

json read_json(const fs::path& p) { return json::parse(read_file(p)); }

void write_tiny_config(const fs::path& p) {
  json j = {{"data.n_train", 8},          {"data.n_val", 2},        {"data.n_test", 2},
            {"data.height", 64},          {"data.width", 64},       {"data.coarsen_dilate_radius", 6},
            {"data.coarsen_simplify", 3}, {"train.epochs", 2},      {"train.warmup_epochs", 1},
            {"train.batch_size", 4},      {"model.base_channels", 8}, {"model.depth", 3},
            {"model.fpn_channels", 16},   {"model.diffusion_steps", 2}, {"ablate.seeds", {0}}};
  write_file(p, j.dump(2));
}

std::vector<std::string> loss_columns(const fs::path& log) {
  std::vector<std::string> out;
  std::istringstream in(read_file(log));
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto j = json::parse(line);
    j.erase("seconds");
    out.push_back(j.dump());
  }
  return out;
}

std::map<std::string, std::string> tree_bytes(const fs::path& root) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) out[fs::relative(e.path(), root).string()] = read_file(e.path());
  return out;
}

// --- 10 ---------------------------------------------------------------------------

Outcome reproducibility() {
  const fs::path w = g_work / "repro";
  fs::remove_all(w);
  fs::create_directories(w);
  const fs::path log = w / "cli.log";
  write_tiny_config(w / "cfg.json");
  const std::string cfg = (w / "cfg.json").string();
  int rc = 0;
  rc |= run_cli("gen-data --config " + cfg + " --out " + (w / "d1").string(), log);
  rc |= run_cli("gen-data --config " + cfg + " --out " + (w / "d2").string(), log);
  const bool bytes = rc == 0 && tree_bytes(w / "d1") == tree_bytes(w / "d2");
  const std::size_t files = rc == 0 ? tree_bytes(w / "d1").size() : 0;
  const auto d = (w / "d1").string();
  for (const char* r : {"t1", "t2"})
    rc |= run_cli("train-teacher -q --config " + cfg + " --data " + d + " --run " + (w / r).string(), log);
  for (const char* r : {"s1", "s2"})
    rc |= run_cli("train-student -q --config " + cfg + " --data " + d + " --teacher " +
                      (w / "t1" / "best.ckpt").string() + " --run " + (w / r).string(),
                  log);
  bool logs = rc == 0;
  if (logs) {
    logs = loss_columns(w / "t1" / "log.jsonl") == loss_columns(w / "t2" / "log.jsonl") &&
           loss_columns(w / "s1" / "log.jsonl") == loss_columns(w / "s2" / "log.jsonl") &&
           !loss_columns(w / "s1" / "log.jsonl").empty();
  }
  return {bytes && logs, "gen-data " + std::to_string(files) + " files byte-identical: " +
                             (bytes ? "yes" : "no") + "; teacher/student log.jsonl identical: " +
                             (logs ? "yes" : "no") + (rc ? " (a command failed, see " + log.string() + ")" : "")};
}

// --- 11 ---------------------------------------------------------------------------

Outcome cli_contract() {
  const fs::path w = g_work / "cli";
  fs::remove_all(w);
  fs::create_directories(w);
  const fs::path log = w / "cli.log";
  write_tiny_config(w / "cfg.json");
  const std::string cfg = (w / "cfg.json").string(), d = (w / "data").string();
  std::vector<std::string> problems;
  auto expect = [&](bool ok, const std::string& what) {
    if (!ok) problems.push_back(what);
  };
  auto is_frac = [](const json& v) { return v.is_number() && v.get<double>() >= 0 && v.get<double>() <= 1; };

  // --help documents every flag.
  const std::map<std::string, std::vector<std::string>> flags = {
      {"gen-data", {"--config", "--out", "--force"}},
      {"stats", {"--data", "--out", "--split"}},
      {"train-teacher", {"--config", "--data", "--run", "--seed"}},
      {"train-student", {"--config", "--data", "--run", "--seed", "--teacher"}},
      {"eval", {"--ckpt", "--data", "--split", "--teacher", "--labels", "--config", "--out"}},
      {"ablate", {"--which", "--config", "--data", "--out"}}};
  for (const auto& [cmd, fl] : flags) {
    const fs::path h = w / ("help_" + cmd + ".txt");
    expect(run_cli(cmd + " --help", h) == 0, cmd + " --help exit code");
    const std::string text = read_file(h);
    for (const auto& f : fl) expect(text.find(f) != std::string::npos, cmd + " --help lacks " + f);
  }

  expect(run_cli("gen-data --config " + (w / "missing.json").string() + " --out " + d, log) == 1,
         "missing config exit 1");
  expect(run_cli("gen-data --config " + cfg + " --out " + d, log) == 0, "gen-data exit 0");
  expect(fs::exists(w / "data" / "manifest.json"), "dataset manifest.json");
  expect(run_cli("gen-data --config " + cfg + " --out " + d, log) == 2, "gen-data overwrite exit 2");

  expect(run_cli("stats --data " + d + " --out " + (w / "stats.json").string(), log) == 0, "stats exit 0");
  if (fs::exists(w / "stats.json")) {
    auto s = read_json(w / "stats.json");
    for (const char* k : {"coverage_fine", "coverage_coarse", "roughness_fine", "roughness_coarse"})
      expect(s.contains(k) && s[k].contains("mean") && s[k].contains("kde"), std::string("stats key ") + k);
  }

  const std::string teacher = (w / "t" / "best.ckpt").string();
  expect(run_cli("train-teacher -q --config " + cfg + " --data " + d + " --run " + (w / "t").string(), log) == 0,
         "train-teacher exit 0");
  expect(run_cli("train-student -q --config " + cfg + " --data " + d + " --run " + (w / "s0").string(), log) == 1,
         "train-student without --teacher exit 1");
  expect(run_cli("train-student -q --config " + cfg + " --data " + d + " --teacher " + teacher + " --run " +
                     (w / "s").string(), log) == 0,
         "train-student exit 0");
  for (const char* r : {"t", "s"}) {
    for (const char* f : {"config.json", "manifest.json", "log.jsonl", "best.ckpt", "report.json"})
      expect(fs::exists(w / r / f), std::string(r) + "/" + f);
    if (!fs::exists(w / r / "log.jsonl")) continue;
    auto lines = read_log(w / r / "log.jsonl");
    expect(lines.size() == 2, std::string(r) + " log has 2 epochs");
    for (const auto& e : lines) expect(std::abs(e.train.total - e.train.student - e.train.distill) < 1e-9,
                                       std::string(r) + " log accounting");
    auto rep = read_json(w / r / "report.json");
    expect(rep.contains("best_epoch") && rep.contains("best_val_miou"), std::string(r) + " report keys");
  }
  if (fs::exists(w / "s" / "report.json")) {
    auto rep = read_json(w / "s" / "report.json");
    expect(rep.value("teacher_checksum_before", 0ull) == rep.value("teacher_checksum_after", 1ull),
           "student report teacher checksum");
  }

  expect(run_cli("eval --ckpt " + (w / "s" / "best.ckpt").string() + " --teacher " + teacher + " --data " + d +
                     " --split test --out " + (w / "eval.json").string(), log) == 0,
         "eval exit 0");
  expect(run_cli("eval --ckpt " + teacher + " --data " + d + " --labels coarse --out " +
                     (w / "eval_coarse.json").string(), log) == 0,
         "eval teacher coarse exit 0");
  for (const char* f : {"eval.json", "eval_coarse.json"}) {
    if (!fs::exists(w / f)) continue;
    auto e = read_json(w / f);
    for (const char* k : {"accuracy", "mean_f1", "mean_iou"}) expect(e.contains(k) && is_frac(e[k]), std::string(f) + " " + k);
    expect(e.contains("confusion") && e["confusion"].contains("tp") && e["confusion"].contains("tn"),
           std::string(f) + " confusion");
  }

  expect(run_cli("ablate --which bogus --config " + cfg + " --data " + d + " --out " + (w / "ab_x").string(), log) == 1,
         "unknown --which exit 1");
  const std::pair<const char*, std::size_t> tables[] = {{"injection", 4}, {"distill", 5}, {"bands", 3}, {"loss", 4}};
  std::ostringstream rows;
  for (const auto& [which, n] : tables) {
    const fs::path out = w / (std::string("ab_") + which);
    expect(run_cli(std::string("ablate -q --which ") + which + " --config " + cfg + " --data " + d + " --out " +
                       out.string(), log) == 0,
           std::string("ablate ") + which + " exit 0");
    if (!fs::exists(out / "table.csv")) continue;
    std::istringstream in(read_file(out / "table.csv"));
    std::string line;
    std::getline(in, line);
    expect(line == "Method,Acc.,mF1,mIoU,\xCE\x94mIoU", std::string(which) + " CSV header");
    std::vector<std::vector<std::string>> cells;
    while (std::getline(in, line)) {
      std::vector<std::string> c;
      std::stringstream ls(line);
      std::string cell;
      while (std::getline(ls, cell, ',')) c.push_back(cell);
      cells.push_back(c);
    }
    rows << which << "=" << cells.size() << " ";
    expect(cells.size() == n, std::string(which) + " row count");
    if (cells.empty() || cells[0].size() != 5) continue;
    expect(cells[0][4] == "\xE2\x80\x94", std::string(which) + " row 1 delta sentinel");
    const double base = std::stod(cells[0][3]);
    for (std::size_t i = 1; i < cells.size(); ++i)
      expect(cells[i].size() == 5 && std::abs(std::stod(cells[i][4]) - (std::stod(cells[i][3]) - base)) < 1e-9,
             std::string(which) + " delta row " + std::to_string(i + 1));
  }
  std::string detail = "rows " + rows.str();
  if (problems.empty()) detail += "; all commands exit as documented, reports schema-valid";
  else {
    detail += "; problems:";
    for (const auto& p : problems) detail += " [" + p + "]";
    detail += " (log " + log.string() + ")";
  }
  return {problems.empty(), detail};
}

std::set<int> parse_list(const std::string& s) {
  std::set<int> out;
  std::stringstream in(s);
  std::string tok;
  while (std::getline(in, tok, ',')) out.insert(std::stoi(tok));
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::set<int> only, skip;
  g_work = fs::temp_directory_path() / ("c2f_acceptance_" + std::to_string(::getpid()));
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    auto next = [&]() -> std::string {
      if (i + 1 >= argc) {
        std::cerr << "missing value for " << a << "\n";
        std::exit(2);
      }
      return argv[++i];
    };
    if (a == "--only") only = parse_list(next());
    else if (a == "--skip") skip = parse_list(next());
    else if (a == "--cli") g_cli = next();
    else if (a == "--workdir") g_work = next();
    else {
      std::cerr << "usage: acceptance [--only 1,2] [--skip 9] [--cli PATH] [--workdir DIR]\n";
      return 2;
    }
  }
  fs::create_directories(g_work);
  configure_torch_threads();

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"loss oracle suite", loss_oracles},
      {"selection-mask equivalence", selection_masks_exact},
      {"distillation degenerate cases", distill_degenerate},
      {"gradient check", gradient_check},
      {"refinement recurrence", recurrence},
      {"frozen teacher", frozen_teacher},
      {"domain shift", domain_shift},
      {"metric oracle", metric_oracle},
      {"directional ablation", directional_ablation},
      {"reproducibility", reproducibility},
      {"CLI contract", cli_contract},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if ((!only.empty() && !only.count(id)) || skip.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::cout << "criterion " << id << " " << (o.pass ? "PASS" : "FAIL") << " " << criteria[i].first << ": "
              << o.detail << " [" << fmt(seconds_since(t0), 3) << " s]" << std::endl;
  }
  if (failed == 0) fs::remove_all(g_work);
  else std::cout << "artifacts kept in " << g_work.string() << std::endl;
  return failed == 0 ? 0 : 1;
}
