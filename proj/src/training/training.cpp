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

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "c2f/error.hpp"
#include "c2f/io_util.hpp"
#include "c2f/parallel.hpp"
#include "c2f/tensors.hpp"
#include "c2f/training.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace c2f {

std::string_view task_name(Task t) { return t == Task::Teacher ? "teacher" : "student"; }

void TrainConfig::validate() const {
  auto positive = [](bool ok, const char* key) {
    if (!ok) throw ConfigError(std::string(key) + " must be positive");
  };
  positive(epochs > 0, "train.epochs");
  positive(batch_size > 0, "train.batch_size");
  positive(lr > 0, "train.lr");
  positive(plateau_patience > 0, "train.plateau_patience");
  positive(early_stop_patience > 0, "train.early_stop_patience");
  positive(lr_floor > 0, "train.lr_floor");
  if (!(weight_decay >= 0)) throw ConfigError("train.weight_decay must be non-negative");
  if (!(plateau_factor > 0 && plateau_factor < 1))
    throw ConfigError("train.plateau_factor must lie in (0, 1)");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    throw ConfigError("train.warmup_epochs must be non-negative and below train.epochs");
  if (!(grad_clip >= 0)) throw ConfigError("train.grad_clip must be non-negative");
  augment.validate();
  distill.validate();
  model.validate();
}

// --- schedule -----------------------------------------------------------------------

double lr_at(int epoch, const TrainConfig& config, const PlateauState& state) {
  if (epoch < config.warmup_epochs)
    return config.lr * static_cast<double>(epoch + 1) / config.warmup_epochs;
  return std::max(config.lr * std::pow(config.plateau_factor, state.reductions), config.lr_floor);
}

void update_plateau(PlateauState& state, int epoch, double metric, const TrainConfig& config) {
  if (metric > state.best) {
    state.best = metric;
    state.bad_epochs = 0;
    return;
  }
  if (epoch < config.warmup_epochs) return;
  if (++state.bad_epochs >= config.plateau_patience) {
    ++state.reductions;
    state.bad_epochs = 0;
  }
}

bool EarlyStopping::observe(double metric) {
  if (metric > best_) {
    best_ = metric;
    bad_ = 0;
    return false;
  }
  return ++bad_ >= patience_;
}

// --- logging ------------------------------------------------------------------------

json EpochRecord::to_json() const {
  return {{"epoch", epoch},
          {"lr", lr},
          {"steps", steps},
          {"train", train.to_json()},
          {"selected_pixel_fraction", selected_pixel_fraction},
          {"val", val.to_json()},
          {"seconds", seconds}};
}

EpochRecord EpochRecord::from_json(const json& j) {
  EpochRecord r;
  r.epoch = j.at("epoch").get<int>();
  r.lr = j.at("lr").get<double>();
  r.steps = j.value("steps", 0);
  const auto& t = j.at("train");
  r.train.bce = t.at("bce").get<double>();
  r.train.dice = t.at("dice").get<double>();
  r.train.ssim = t.at("ssim").get<double>();
  r.train.boundary = t.at("boundary").get<double>();
  r.train.student = t.at("student").get<double>();
  r.train.distill = t.at("distill").get<double>();
  r.train.total = t.at("total").get<double>();
  r.selected_pixel_fraction = j.at("selected_pixel_fraction").get<double>();
  r.val = MetricsSummary::from_json(j.at("val"));
  r.seconds = j.value("seconds", 0.0);
  return r;
}

json RunLog::to_json() const {
  json e = json::array();
  for (const auto& r : epochs) e.push_back(r.to_json());
  return {{"epochs", e}, {"best_epoch", best_epoch}, {"best_val_miou", best_val_miou},
          {"wall_time", wall_time}};
}

std::vector<EpochRecord> read_log(const fs::path& path) {
  std::istringstream in(read_file(path));
  std::vector<EpochRecord> out;
  std::string line;
  int n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    try {
      out.push_back(EpochRecord::from_json(json::parse(line)));
    } catch (const json::exception& e) {
      throw IoError(path.string() + ":" + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

json RunManifest::to_json() const {
  return {{"command", command},         {"config_path", config_path}, {"dataset_root", dataset_root},
          {"run_dir", run_dir},         {"seed", seed},               {"tool_version", tool_version},
          {"started_at", started_at}};
}

void create_run_dir(const fs::path& dir, const RunManifest& manifest, const json& config) {
  if (!is_empty_or_missing(dir))
    throw ExistsError("run directory exists and is not empty: " + dir.string());
  fs::create_directories(dir);
  write_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
  write_file(dir / "config.json", config.dump(2) + "\n");
}

// --- loop ---------------------------------------------------------------------------

namespace {

constexpr std::uint64_t kInitKey = 0x696e6974;
constexpr std::uint64_t kShuffleKey = 0x73687566;
constexpr std::uint64_t kAugmentKey = 0x61756720;

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, int epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng = make_rng(seed, {kShuffleKey, static_cast<std::uint64_t>(epoch)});
  for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  return order;
}

struct StepOut {
  LossResult loss;
  double selected_fraction = 0.0;
};

using StepFn = std::function<StepOut(const torch::Tensor& x, const torch::Tensor& y, int epoch,
                                     int step)>;

std::string describe(const LossBreakdown& b) {
  std::ostringstream s;
  s << "bce=" << b.bce << " dice=" << b.dice << " ssim=" << b.ssim << " boundary=" << b.boundary
    << " distill=" << b.distill;
  return s.str();
}

TrainResult run_loop(const DatasetSplits& data, const TrainConfig& cfg, Domain labels,
                     torch::nn::Module& net, const StepFn& step, const Predictor& predict,
                     const std::function<Checkpoint()>& snapshot, const TrainOptions& options) {
  const Dataset& train = data.train;
  if (train.empty()) throw TrainingError("training split is empty");
  if (data.val.empty()) throw TrainingError("validation split is empty");

  std::vector<torch::Tensor> params;
  for (auto& p : net.parameters())
    if (p.requires_grad()) params.push_back(p);
  torch::optim::AdamW opt(params, torch::optim::AdamWOptions(cfg.lr)
                                      .betas({0.9, 0.999})
                                      .weight_decay(cfg.weight_decay));

  EvalConfig ecfg;
  ecfg.batch_size = cfg.batch_size;
  ecfg.strata_key.clear();

  TrainResult result;
  PlateauState plateau;
  EarlyStopping stopper(cfg.early_stop_patience);
  const auto t0 = std::chrono::steady_clock::now();
  const std::size_t bs = static_cast<std::size_t>(cfg.batch_size);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto te = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr_at(epoch, cfg, plateau);
    for (auto& group : opt.param_groups())
      static_cast<torch::optim::AdamWOptions&>(group.options()).lr(rec.lr);

    net.train();
    const auto order = epoch_order(train.size(), cfg.seed, epoch);
    LossBreakdown sum;
    double frac = 0.0;
    int steps = 0;
    for (std::size_t start = 0; start < order.size(); start += bs, ++steps) {
      const std::size_t n = std::min(bs, order.size() - start);
      std::vector<SampleRecord> batch(n);
      parallel_for(n, [&](std::size_t i) {
        const std::size_t idx = order[start + i];
        Rng rng = make_rng(cfg.seed, {kAugmentKey, static_cast<std::uint64_t>(epoch), idx});
        batch[i] = augment(train.samples[idx], rng, cfg.augment);
      });
      std::vector<const SampleRecord*> ptrs;
      for (const auto& s : batch) ptrs.push_back(&s);
      auto x = images_tensor(ptrs, cfg.model.in_channels);
      auto y = masks_tensor(ptrs, labels);

      opt.zero_grad();
      StepOut out = step(x, y, epoch, steps);
      const auto& b = out.loss.breakdown;
      if (!std::isfinite(b.total))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + " step " +
                            std::to_string(steps) + " (" + describe(b) + ")");
      out.loss.total.backward();
      if (cfg.grad_clip > 0) torch::nn::utils::clip_grad_norm_(params, cfg.grad_clip);
      opt.step();

      sum.bce += b.bce;
      sum.dice += b.dice;
      sum.ssim += b.ssim;
      sum.boundary += b.boundary;
      sum.student += b.student;
      sum.distill += b.distill;
      frac += out.selected_fraction;
    }
    rec.steps = steps;
    rec.train.bce = sum.bce / steps;
    rec.train.dice = sum.dice / steps;
    rec.train.ssim = sum.ssim / steps;
    rec.train.boundary = sum.boundary / steps;
    rec.train.student = sum.student / steps;
    rec.train.distill = sum.distill / steps;
    rec.train.total = total_loss(rec.train);
    rec.selected_pixel_fraction = frac / steps;

    net.eval();
    rec.val = evaluate(predict, data.val, labels, cfg.model.in_channels, ecfg).report;
    const double metric = rec.val.mean_iou;
    if (result.log.best_epoch < 0 || metric > result.log.best_val_miou) {
      result.log.best_epoch = epoch;
      result.log.best_val_miou = metric;
      result.checkpoint = snapshot();
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - te).count();
    result.log.epochs.push_back(rec);
    if (options.log_path) append_line(*options.log_path, rec.to_json().dump());
    if (options.on_epoch) options.on_epoch(rec);

    update_plateau(plateau, epoch, metric, cfg);
    if (stopper.observe(metric)) break;
  }
  result.log.wall_time = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  result.checkpoint.info = {{"best_epoch", result.log.best_epoch},
                            {"best_val_miou", result.log.best_val_miou},
                            {"seed", cfg.seed},
                            {"epochs_run", result.log.epochs.size()}};
  return result;
}

}  // namespace

TrainResult train_teacher(const DatasetSplits& data, const TrainConfig& config,
                          const TrainOptions& options) {
  config.validate();
  configure_torch_threads();
  torch::manual_seed(derive_seed(config.seed, {kInitKey, 0}));
  SegmentationNet net(config.model);

  StepFn step = [&](const torch::Tensor& x, const torch::Tensor& y, int, int) {
    auto logits = net->forward(x);
    auto probs = torch::sigmoid(logits);
    LossResult r;
    r.total = bce_loss(probs, y);
    r.breakdown.bce = r.total.item<double>();
    r.breakdown.student = r.breakdown.bce;
    r.breakdown.total = total_loss(r.breakdown);
    return StepOut{r, 0.0};
  };
  auto snapshot = [&] { return capture(*net, config.model, Role::Teacher, Domain::Coarse, false); };
  return run_loop(data, config, Domain::Coarse, *net, step, teacher_predictor(net), snapshot, options);
}

TrainResult train_student(const DatasetSplits& data, const Checkpoint& teacher_ckpt,
                          const TrainConfig& config, const TrainOptions& options) {
  config.validate();
  if (teacher_ckpt.role != Role::Teacher)
    throw ConfigError("train_student needs a teacher checkpoint, got a " +
                      std::string(role_name(teacher_ckpt.role)));
  if (!config.model.backbone_compatible(teacher_ckpt.config))
    throw ConfigError(
        "student model config does not match the teacher checkpoint architecture "
        "(in_channels, base_channels, depth and fpn_channels must agree)");
  configure_torch_threads();
  auto teacher = make_teacher(teacher_ckpt);
  freeze(*teacher);

  torch::manual_seed(derive_seed(config.seed, {kInitKey, 1}));
  StudentNet student(config.model);
  if (config.warm_start) init_student_from_teacher(student, teacher);

  TrainResult result;
  result.teacher_checksum_before = parameter_checksum(*teacher);

  StepFn step = [&](const torch::Tensor& x, const torch::Tensor& y, int epoch, int s) {
    auto outs = student_forward(x, student, teacher);
    StepOut out;
    out.loss = compute_loss(outs.student_logits, outs.teacher_logits, y, config.distill,
                            config.loss_terms);
    SelectionMasks masks;
    {
      torch::NoGradGuard guard;
      masks = selection_masks(y, outs.teacher_logits, outs.student_logits.detach());
      out.selected_fraction = masks.hybrid.mean().item<double>();
    }
    if (options.on_step) options.on_step(epoch, s, masks, out.loss.breakdown);
    return out;
  };
  auto snapshot = [&] { return capture(*student, config.model, Role::Student, Domain::Fine, false); };
  TrainResult loop = run_loop(data, config, Domain::Fine, *student, step,
                              student_predictor(student, teacher), snapshot, options);
  result.checkpoint = std::move(loop.checkpoint);
  result.log = std::move(loop.log);
  result.teacher_checksum_after = parameter_checksum(*teacher);
  if (result.teacher_checksum_after != result.teacher_checksum_before)
    throw TrainingError("teacher parameters changed during student training");
  result.checkpoint.info["warm_start"] = config.warm_start;
  result.checkpoint.info["strategy"] = std::string(strategy_name(config.distill.strategy));
  result.checkpoint.info["teacher_checksum"] = result.teacher_checksum_before;
  return result;
}

}  // namespace c2f
