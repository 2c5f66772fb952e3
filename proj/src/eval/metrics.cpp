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

#include "c2f/error.hpp"
#include "c2f/eval.hpp"
#include "c2f/tensors.hpp"

using nlohmann::json;

namespace c2f {

std::array<double, 4> ConfusionCounts::as_percent() const {
  const double t = static_cast<double>(total());
  if (t == 0) return {0, 0, 0, 0};
  return {100.0 * tn / t, 100.0 * fp / t, 100.0 * fn / t, 100.0 * tp / t};
}

ConfusionCounts& ConfusionCounts::operator+=(const ConfusionCounts& o) {
  tn += o.tn;
  fp += o.fp;
  fn += o.fn;
  tp += o.tp;
  return *this;
}

json ConfusionCounts::to_json() const {
  const auto pct = as_percent();
  return {{"tn", tn}, {"fp", fp}, {"fn", fn}, {"tp", tp},
          {"percent", {{"tn", pct[0]}, {"fp", pct[1]}, {"fn", pct[2]}, {"tp", pct[3]}}}};
}

ConfusionCounts ConfusionCounts::from_json(const json& j) {
  return {j.at("tn").get<std::int64_t>(), j.at("fp").get<std::int64_t>(),
          j.at("fn").get<std::int64_t>(), j.at("tp").get<std::int64_t>()};
}

json MetricsSummary::to_json() const {
  return {{"accuracy", accuracy}, {"mean_f1", mean_f1},     {"mean_iou", mean_iou},
          {"confusion", confusion.to_json()}, {"n_images", n_images}};
}

MetricsSummary MetricsSummary::from_json(const json& j) {
  MetricsSummary s;
  s.accuracy = j.at("accuracy").get<double>();
  s.mean_f1 = j.at("mean_f1").get<double>();
  s.mean_iou = j.at("mean_iou").get<double>();
  s.confusion = ConfusionCounts::from_json(j.at("confusion"));
  s.n_images = j.value("n_images", std::int64_t{0});
  return s;
}

json MetricsReport::to_json() const {
  json j = MetricsSummary::to_json();
  json strata = json::object();
  for (const auto& [tag, s] : per_stratum) strata[tag] = s.to_json();
  j["per_stratum"] = strata;
  return j;
}

std::string_view pooling_name(Pooling p) { return p == Pooling::Pixel ? "pixel" : "image"; }

Pooling parse_pooling(std::string_view name) {
  if (name == "pixel") return Pooling::Pixel;
  if (name == "image") return Pooling::Image;
  throw ConfigError("unknown pooling '" + std::string(name) + "' (expected pixel or image)");
}

void EvalConfig::validate() const {
  if (batch_size < 1) throw ConfigError("eval.batch_size must be positive");
}

torch::Tensor binarize(const torch::Tensor& logits) {
  return torch::sigmoid(logits).ge(0.5).to(torch::kUInt8);
}

namespace {

void check_pair(const torch::Tensor& pred, const torch::Tensor& truth) {
  if (pred.sizes() != truth.sizes())
    throw ShapeError("metrics: prediction shape " + c10::str(pred.sizes()) +
                     " does not match truth " + c10::str(truth.sizes()));
}

}  // namespace

std::vector<ConfusionCounts> confusion_per_image(const torch::Tensor& pred,
                                                 const torch::Tensor& truth) {
  check_pair(pred, truth);
  if (pred.dim() == 0) throw ShapeError("metrics: scalar input");
  const int64_t n = pred.size(0);
  auto p = pred.reshape({n, -1}).ne(0);
  auto t = truth.reshape({n, -1}).ne(0);
  auto tp = (p & t).sum(1).contiguous();
  auto fp = (p & ~t).sum(1).contiguous();
  auto fn = (~p & t).sum(1).contiguous();
  const int64_t k = p.size(1);
  std::vector<ConfusionCounts> out(n);
  const auto* tpp = tp.data_ptr<int64_t>();
  const auto* fpp = fp.data_ptr<int64_t>();
  const auto* fnp = fn.data_ptr<int64_t>();
  for (int64_t i = 0; i < n; ++i)
    out[i] = {k - tpp[i] - fpp[i] - fnp[i], fpp[i], fnp[i], tpp[i]};
  return out;
}

ConfusionCounts confusion(const torch::Tensor& pred, const torch::Tensor& truth) {
  check_pair(pred, truth);
  auto one = pred.dim() == 0 ? pred.reshape({1, 1}) : pred.reshape({1, -1});
  auto two = truth.dim() == 0 ? truth.reshape({1, 1}) : truth.reshape({1, -1});
  return confusion_per_image(one, two).front();
}

MetricsSummary scores(const ConfusionCounts& c) {
  auto iou = [](double hit, double a, double b) { return hit + a + b == 0 ? 1.0 : hit / (hit + a + b); };
  auto f1 = [](double hit, double a, double b) {
    return 2 * hit + a + b == 0 ? 1.0 : 2 * hit / (2 * hit + a + b);
  };
  MetricsSummary s;
  s.confusion = c;
  const double tp = c.tp, tn = c.tn, fp = c.fp, fn = c.fn;
  const double total = tp + tn + fp + fn;
  s.accuracy = total == 0 ? 1.0 : (tp + tn) / total;
  s.mean_f1 = 0.5 * (f1(tp, fp, fn) + f1(tn, fn, fp));
  s.mean_iou = 0.5 * (iou(tp, fp, fn) + iou(tn, fn, fp));
  return s;
}

MetricsSummary summarize(std::span<const ConfusionCounts> per_image, Pooling pooling) {
  ConfusionCounts sum;
  for (const auto& c : per_image) sum += c;
  MetricsSummary s = scores(sum);
  if (pooling == Pooling::Image && !per_image.empty()) {
    double a = 0, f = 0, m = 0;
    for (const auto& c : per_image) {
      const auto one = scores(c);
      a += one.accuracy;
      f += one.mean_f1;
      m += one.mean_iou;
    }
    const double n = static_cast<double>(per_image.size());
    s.accuracy = a / n;
    s.mean_f1 = f / n;
    s.mean_iou = m / n;
  }
  s.n_images = static_cast<std::int64_t>(per_image.size());
  return s;
}

MetricsReport metrics(const torch::Tensor& pred, const torch::Tensor& truth, Pooling pooling) {
  auto per_image = confusion_per_image(pred, truth);
  MetricsReport r;
  static_cast<MetricsSummary&>(r) = summarize(per_image, pooling);
  return r;
}

MetricsReport stratify(std::span<const ConfusionCounts> per_image,
                       std::span<const std::string> tags, Pooling pooling) {
  if (tags.size() != per_image.size())
    throw ShapeError("stratify: " + std::to_string(tags.size()) + " tags for " +
                     std::to_string(per_image.size()) + " images");
  MetricsReport r;
  static_cast<MetricsSummary&>(r) = summarize(per_image, pooling);
  std::map<std::string, std::vector<ConfusionCounts>> groups;
  for (std::size_t i = 0; i < tags.size(); ++i)
    groups[tags[i].empty() ? "untagged" : tags[i]].push_back(per_image[i]);
  for (const auto& [tag, counts] : groups) r.per_stratum[tag] = summarize(counts, pooling);
  return r;
}

Predictor teacher_predictor(SegmentationNet net) {
  return [net](const torch::Tensor& x) mutable { return teacher_forward(x, net); };
}

Predictor student_predictor(StudentNet student, SegmentationNet teacher) {
  return [student, teacher](const torch::Tensor& x) mutable {
    return student_forward(x, student, teacher).student_logits;
  };
}

Evaluation evaluate(const Predictor& predict, const Dataset& data, Domain labels, int in_channels,
                    const EvalConfig& config) {
  config.validate();
  if (data.empty())
    throw TrainingError("cannot evaluate an empty " + std::string(split_name(data.split)) +
                        " split");
  torch::NoGradGuard no_grad;
  Evaluation out;
  std::vector<std::string> tags;
  const std::size_t bs = static_cast<std::size_t>(config.batch_size);
  for (std::size_t start = 0; start < data.size(); start += bs) {
    std::vector<const SampleRecord*> batch;
    for (std::size_t i = start; i < std::min(data.size(), start + bs); ++i) {
      batch.push_back(&data.samples[i]);
      auto it = data.samples[i].meta.find(config.strata_key);
      tags.push_back(it == data.samples[i].meta.end() ? std::string() : it->second);
    }
    auto logits = predict(images_tensor(batch, in_channels));
    auto counts = confusion_per_image(binarize(logits), masks_tensor(batch, labels));
    out.per_image.insert(out.per_image.end(), counts.begin(), counts.end());
  }
  if (config.strata_key.empty()) {
    static_cast<MetricsSummary&>(out.report) = summarize(out.per_image, config.pooling);
  } else {
    out.report = stratify(out.per_image, tags, config.pooling);
  }
  return out;
}

MetricsReport stratified_eval(const Checkpoint& ckpt, const Checkpoint* teacher,
                              const Dataset& data, Domain labels, const EvalConfig& config) {
  if (ckpt.role == Role::Teacher) {
    auto net = make_teacher(ckpt);
    net->eval();
    return evaluate(teacher_predictor(net), data, labels, ckpt.config.in_channels, config).report;
  }
  if (!teacher) throw ConfigError("evaluating a student checkpoint needs its teacher checkpoint");
  if (teacher->role != Role::Teacher)
    throw ConfigError("the --teacher checkpoint holds a student, not a teacher");
  if (!ckpt.config.backbone_compatible(teacher->config))
    throw ConfigError("student and teacher checkpoints have incompatible architectures");
  auto t = make_teacher(*teacher);
  freeze(*t);
  auto s = make_student(ckpt);
  s->eval();
  return evaluate(student_predictor(s, t), data, labels, ckpt.config.in_channels, config).report;
}

}  // namespace c2f
