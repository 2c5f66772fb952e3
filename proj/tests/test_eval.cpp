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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "c2f/ablation.hpp"
#include "c2f/error.hpp"
#include "c2f/eval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace c2f;

namespace {

torch::Tensor mask_from_bits(int bits, int n = 9) {
  auto t = torch::zeros({1, 3, 3}, torch::kUInt8);
  auto* p = t.data_ptr<std::uint8_t>();
  for (int i = 0; i < n; ++i) p[i] = (bits >> i) & 1;
  return t;
}

std::vector<int> bits_vec(int bits) {
  std::vector<int> v(9);
  for (int i = 0; i < 9; ++i) v[i] = (bits >> i) & 1;
  return v;
}

}  // namespace

TEST(Binarize, BoundaryConvention) {
  auto out = binarize(torch::tensor({0.0f, -50.0f, 50.0f, -1e-3f}));
  auto* p = out.data_ptr<std::uint8_t>();
  EXPECT_EQ(p[0], 1);
  EXPECT_EQ(p[1], 0);
  EXPECT_EQ(p[2], 1);
  EXPECT_EQ(p[3], 0);
}

TEST(Binarize, MatchesProbabilityThreshold) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 4.0);
  std::vector<float> z(1000);
  for (auto& v : z) v = static_cast<float>(n(rng));
  auto out = binarize(torch::tensor(z));
  for (std::size_t i = 0; i < z.size(); ++i)
    EXPECT_EQ(out[i].item<int>(), oracle::sigmoid(z[i]) >= 0.5 ? 1 : 0) << z[i];
}

TEST(Metrics, HandCase) {
  // tp=3, fp=1, fn=2, tn=10
  std::vector<std::uint8_t> pred(16, 0), truth(16, 0);
  for (int i = 0; i < 3; ++i) pred[i] = truth[i] = 1;
  pred[3] = 1;
  truth[4] = truth[5] = 1;
  auto p = torch::tensor(pred).reshape({1, 4, 4});
  auto t = torch::tensor(truth).reshape({1, 4, 4});
  auto r = metrics(p, t);
  EXPECT_EQ(r.confusion, (ConfusionCounts{10, 1, 2, 3}));
  EXPECT_NEAR(r.mean_iou, 0.5 * (0.5 + 10.0 / 13.0), 1e-12);
  EXPECT_NEAR(r.mean_iou, 0.634615, 1e-6);
  EXPECT_NEAR(r.accuracy, 13.0 / 16.0, 1e-15);
  const double f1_pos = 6.0 / 9.0, f1_neg = 20.0 / 23.0;
  EXPECT_NEAR(r.mean_f1, 0.5 * (f1_pos + f1_neg), 1e-15);
}

TEST(Metrics, PerfectAndInverted) {
  auto t = mask_from_bits(0b101010101);
  auto r = metrics(t, t);
  EXPECT_EQ(r.accuracy, 1.0);
  EXPECT_EQ(r.mean_f1, 1.0);
  EXPECT_EQ(r.mean_iou, 1.0);

  auto balanced = torch::tensor(std::vector<std::uint8_t>{1, 0, 1, 0}).reshape({1, 2, 2});
  auto inv = metrics(1 - balanced, balanced);
  EXPECT_EQ(inv.accuracy, 0.0);
  EXPECT_EQ(inv.mean_iou, 0.0);
  EXPECT_EQ(inv.mean_f1, 0.0);
}

TEST(Metrics, AbsentClassScoresOne) {
  auto z = torch::zeros({1, 3, 3}, torch::kUInt8);
  auto r = metrics(z, z);
  EXPECT_EQ(r.mean_iou, 1.0);
  EXPECT_EQ(r.mean_f1, 1.0);
  auto o = torch::ones({1, 3, 3}, torch::kUInt8);
  EXPECT_EQ(metrics(o, o).mean_iou, 1.0);
}

TEST(Metrics, ExhaustiveThreeByThreePairs) {
  // Every (pred, truth) pair of 3x3 masks, 512 * 512 images in one batch.
  const int n = 512;
  auto masks = torch::zeros({n, 3, 3}, torch::kUInt8);
  for (int b = 0; b < n; ++b) masks[b] = mask_from_bits(b)[0];
  auto pred = masks.repeat_interleave(n, 0);
  auto truth = masks.repeat({n, 1, 1});
  auto counts = confusion_per_image(pred, truth);
  ASSERT_EQ(counts.size(), static_cast<std::size_t>(n) * n);
  ConfusionCounts total;
  for (int a = 0; a < n; ++a) {
    const auto pa = bits_vec(a);
    for (int b = 0; b < n; ++b) {
      const auto& c = counts[static_cast<std::size_t>(a) * n + b];
      const auto o = oracle::count(pa, bits_vec(b));
      ASSERT_EQ(c, (ConfusionCounts{o.tn, o.fp, o.fn, o.tp})) << a << " " << b;
      const auto s = scores(c);
      const auto os = oracle::scores(o);
      ASSERT_EQ(s.accuracy, os.accuracy);
      ASSERT_EQ(s.mean_f1, os.mean_f1);
      ASSERT_EQ(s.mean_iou, os.mean_iou);
      total += c;
    }
  }
  EXPECT_EQ(total.total(), static_cast<std::int64_t>(n) * n * 9);
  EXPECT_EQ(metrics(pred, truth).confusion, total);
}

TEST(Metrics, RandomPredictionsPerTruth) {
  std::mt19937 rng(11);
  for (int t = 0; t < 512; ++t)
    for (int k = 0; k < 10; ++k) {
      const int p = static_cast<int>(rng() % 512);
      auto r = metrics(mask_from_bits(p), mask_from_bits(t));
      const auto o = oracle::scores(oracle::count(bits_vec(p), bits_vec(t)));
      ASSERT_EQ(r.mean_iou, o.mean_iou);
      ASSERT_EQ(r.mean_f1, o.mean_f1);
      ASSERT_EQ(r.accuracy, o.accuracy);
    }
}

TEST(Metrics, ClassSwapSymmetry) {
  std::mt19937 rng(5);
  for (int i = 0; i < 200; ++i) {
    auto p = torch::randint(0, 2, {2, 8, 8}, torch::kUInt8);
    auto t = torch::randint(0, 2, {2, 8, 8}, torch::kUInt8);
    auto a = metrics(p, t);
    auto b = metrics(1 - p, 1 - t);
    EXPECT_EQ(b.confusion, a.confusion.swapped());
    EXPECT_NEAR(a.mean_iou, b.mean_iou, 1e-15);
    EXPECT_NEAR(a.mean_f1, b.mean_f1, 1e-15);
  }
}

TEST(Metrics, ShapeMismatch) {
  EXPECT_THROW(metrics(torch::zeros({1, 3, 3}), torch::zeros({1, 3, 4})), ShapeError);
}

TEST(Metrics, PercentSumsToHundred) {
  ConfusionCounts c{10, 1, 2, 3};
  auto p = c.as_percent();
  EXPECT_NEAR(p[0] + p[1] + p[2] + p[3], 100.0, 1e-12);
  EXPECT_NEAR(p[3], 100.0 * 3 / 16, 1e-12);
}

TEST(Metrics, ImageAveragedPooling) {
  std::vector<ConfusionCounts> per{{10, 1, 2, 3}, {0, 0, 0, 16}};
  auto img = summarize(per, Pooling::Image);
  auto pix = summarize(per, Pooling::Pixel);
  EXPECT_NEAR(img.mean_iou, 0.5 * (scores(per[0]).mean_iou + 1.0), 1e-15);
  EXPECT_EQ(pix.mean_iou, scores(ConfusionCounts{10, 1, 2, 19}).mean_iou);
  EXPECT_EQ(img.confusion, pix.confusion);
  EXPECT_EQ(img.n_images, 2);
}

TEST(Strata, AdditivityAndUntagged) {
  std::mt19937 rng(9);
  std::vector<ConfusionCounts> per;
  std::vector<std::string> tags;
  const char* names[] = {"arid", "vegetated", ""};
  for (int i = 0; i < 60; ++i) {
    per.push_back({static_cast<std::int64_t>(rng() % 50), static_cast<std::int64_t>(rng() % 9),
                   static_cast<std::int64_t>(rng() % 9), static_cast<std::int64_t>(rng() % 30)});
    tags.push_back(names[rng() % 3]);
  }
  auto r = stratify(per, tags, Pooling::Pixel);
  ASSERT_EQ(r.per_stratum.size(), 3u);
  EXPECT_TRUE(r.per_stratum.count("untagged"));
  ConfusionCounts sum;
  std::int64_t n = 0;
  for (const auto& [_, s] : r.per_stratum) {
    sum += s.confusion;
    n += s.n_images;
  }
  EXPECT_EQ(sum, r.confusion);
  EXPECT_EQ(n, 60);
}

TEST(Strata, SingleStratumEqualsGlobal) {
  std::vector<ConfusionCounts> per{{4, 1, 0, 2}, {3, 0, 2, 5}};
  std::vector<std::string> tags{"mixed", "mixed"};
  auto r = stratify(per, tags, Pooling::Pixel);
  ASSERT_EQ(r.per_stratum.size(), 1u);
  const auto& s = r.per_stratum.at("mixed");
  EXPECT_EQ(s.confusion, r.confusion);
  EXPECT_EQ(s.mean_iou, r.mean_iou);
  EXPECT_EQ(s.accuracy, r.accuracy);
}

TEST(Evaluate, ConstantPredictorCountsLabels) {
  auto data = generate_dataset(fixture::tiny_data(0, 0, 4));
  data.test.samples[1].meta.erase("terrain");
  Predictor all_fg = [](const torch::Tensor& x) {
    return torch::full({x.size(0), 1, x.size(2), x.size(3)}, 3.0f);
  };
  EvalConfig cfg;
  cfg.batch_size = 3;
  auto ev = evaluate(all_fg, data.test, Domain::Fine, 6, cfg);
  ASSERT_EQ(ev.per_image.size(), 4u);
  for (std::size_t i = 0; i < 4; ++i) {
    const auto& s = data.test.samples[i];
    const auto fg = static_cast<std::int64_t>(s.mask_fine.count());
    EXPECT_EQ(ev.per_image[i], (ConfusionCounts{0, static_cast<std::int64_t>(s.mask_fine.size()) - fg, 0, fg}));
  }
  EXPECT_TRUE(ev.report.per_stratum.count("untagged"));
  auto coarse = evaluate(all_fg, data.test, Domain::Coarse, 6, cfg);
  EXPECT_NE(coarse.report.confusion, ev.report.confusion);
}

TEST(Evaluate, EmptySplitIsAnError) {
  Dataset empty;
  Predictor p = [](const torch::Tensor& x) { return x; };
  EXPECT_THROW(evaluate(p, empty, Domain::Fine, 6, EvalConfig{}), TrainingError);
}

TEST(Ablation, VariantShapes) {
  TrainConfig base;
  EXPECT_EQ(ablation_variants(AblationKind::Injection, base).size(), 4u);
  EXPECT_EQ(ablation_variants(AblationKind::Distill, base).size(), 5u);
  auto bands = ablation_variants(AblationKind::Bands, base);
  ASSERT_EQ(bands.size(), 3u);
  EXPECT_EQ(bands[0].train.model.in_channels, 3);
  EXPECT_EQ(bands[1].train.model.in_channels, 4);
  EXPECT_EQ(bands[2].train.model.in_channels, 6);
  auto loss = ablation_variants(AblationKind::Loss, base);
  ASSERT_EQ(loss.size(), 4u);
  EXPECT_TRUE(loss[0].train.loss_terms.bce);
  EXPECT_FALSE(loss[0].train.loss_terms.dice || loss[0].train.loss_terms.ssim ||
               loss[0].train.loss_terms.boundary);
  auto inj = ablation_variants(AblationKind::Injection, base);
  EXPECT_FALSE(inj[0].train.model.components.any());
  EXPECT_EQ(inj[3].train.model.components, (InjectionComponents{true, true, true}));
  for (const auto& v : ablation_variants(AblationKind::Distill, base))
    EXPECT_EQ(v.train.model.components, (InjectionComponents{true, true, true}));
  EXPECT_EQ(ablation_variants(AblationKind::Distill, base)[0].train.distill.strategy, Strategy::None);
}

TEST(Ablation, ParseListsValidOptions) {
  EXPECT_EQ(parse_ablation("bands"), AblationKind::Bands);
  try {
    parse_ablation("nope");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("injection, distill, bands, loss"), std::string::npos);
  }
}

TEST(Ablation, CsvDeltaColumn) {
  AblationTable t;
  t.kind = AblationKind::Loss;
  const double m[] = {0.61, 0.6333333333333333, 0.59, 0.7};
  for (int i = 0; i < 4; ++i) {
    AblationRow r;
    r.method = "row" + std::to_string(i);
    MetricsSummary s;
    s.accuracy = 0.9;
    s.mean_f1 = 0.8;
    s.mean_iou = m[i];
    r.median = s;
    if (i) r.delta_miou = m[i] - m[0];
    t.rows.push_back(r);
  }
  const std::string csv = t.to_csv();
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "Method,Acc.,mF1,mIoU,\xCE\x94mIoU");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  ASSERT_EQ(rows.size(), 4u);
  EXPECT_EQ(rows[0][4], "\xE2\x80\x94");
  const double base = std::stod(rows[0][3]);
  for (int i = 1; i < 4; ++i)
    EXPECT_NEAR(std::stod(rows[i][4]), std::stod(rows[i][3]) - base, 1e-9);
}

TEST(Ablation, Median) {
  EXPECT_EQ(median({3, 1, 2}), 2);
  EXPECT_EQ(median({4, 1, 2, 3}), 2.5);
  EXPECT_TRUE(std::isnan(median({})));
}
