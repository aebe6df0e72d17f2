/*
 * Copyright 2026 The gldet Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gldet/checkpoint.hpp"
#include "gldet/detector.hpp"
#include "gldet/error.hpp"

namespace gldet {
namespace {

using testing::RandomImage;
using testing::TempDir;

DetectorConfig LiteConfig() {
  DetectorConfig cfg;
  cfg.backbone.architecture = kResNetLite;
  return cfg;
}

TEST(Detector, ScoreAndSixProposals) {
  const DetectorModel model(LiteConfig(), 1);
  for (ImageSize s : {ImageSize{224, 224}, ImageSize{300, 200}, ImageSize{64, 500}}) {
    const Detection d = model.Forward(RandomImage(s.width, s.height, s.width));
    EXPECT_GT(d.score, 0.0);
    EXPECT_LT(d.score, 1.0);
    EXPECT_NEAR(d.score, Sigmoid(d.logit), 1e-15);
    ASSERT_EQ(d.proposals.size(), 6u);
    for (const auto& p : d.proposals) {
      EXPECT_GE(p.crop_rect.x, 0);
      EXPECT_LE(p.crop_rect.x + p.crop_rect.w, s.width);
      EXPECT_LE(p.crop_rect.y + p.crop_rect.h, s.height);
    }
  }
}

TEST(Detector, Deterministic) {
  const DetectorModel model(LiteConfig(), 2);
  const Image img = RandomImage(256, 256, 3);
  EXPECT_EQ(model.Forward(img).score, model.Forward(img).score);
  EXPECT_TRUE(DetectorModel(LiteConfig(), 2) == model);
}

TEST(Detector, MatchesManualComposition) {
  const DetectorModel model(LiteConfig(), 3);
  for (ImageSize s : {ImageSize{224, 224}, ImageSize{400, 320}}) {
    const Image img = RandomImage(s.width, s.height, 40 + s.width);
    const Image resized = ResizeBilinear(img, {224, 224});
    const BackboneOutput global = model.global_backbone().Extract(resized, EmbeddingKind::kGlobal);
    const PatchSelection sel = SelectPatches(global.feature_map, img, model.config().psm_specs,
                                             model.config().iou_threshold);
    EmbeddingSet set;
    set.global = global.embedding;
    for (const Image& p : sel.patches) {
      set.patches.push_back(model.local_backbone().Extract(p, EmbeddingKind::kPatch).embedding);
    }
    const double want = FuseAndClassify(set, model.fusion());
    const Detection got = model.Forward(img);
    EXPECT_NEAR(got.score, want, 1e-5);
    for (int i = 0; i < 6; ++i) EXPECT_EQ(got.proposals[i].crop_rect, sel.proposals[i].crop_rect);
  }
}

TEST(Detector, IdenticalCropsShareOneLocalPass) {
  const DetectorModel model(LiteConfig(), 4);
  DetectorTrace trace;
  model.Forward(RandomImage(224, 224, 5), &trace);
  // At 224 px every 224 px crop is the whole image.
  EXPECT_LE(trace.unique_patches, 4);
  ASSERT_EQ(trace.patch_source.size(), 6u);
  EXPECT_EQ(trace.patch_source[0], trace.patch_source[1]);
  EXPECT_EQ(trace.patch_source[1], trace.patch_source[2]);
}

TEST(Detector, GradientsReachEveryComponent) {
  const DetectorModel model(LiteConfig(), 5);
  DetectorTrace trace;
  model.Forward(RandomImage(320, 320, 6), &trace);
  DetectorGradients g = model.ZeroGradients();
  model.Backward(trace, 1.0, g);
  auto norm = [](const auto& v) {
    double s = 0.0;
    for (auto x : v) s += static_cast<double>(x) * x;
    return s;
  };
  EXPECT_GT(norm(g.global), 0.0);
  EXPECT_GT(norm(g.local), 0.0);
  EXPECT_GT(norm(g.fusion), 0.0);
}

// Directional finite differences through the whole detector for the fusion
// parameters (double precision) and the two embedding heads (float).
TEST(Detector, GradientMatchesFiniteDifferences) {
  DetectorModel model(LiteConfig(), 6);
  const Image img = RandomImage(224, 224, 7);
  DetectorTrace trace;
  model.Forward(img, &trace);
  DetectorGradients g = model.ZeroGradients();
  model.Backward(trace, 1.0, g);
  std::mt19937_64 rng(8);
  std::normal_distribution<double> normal;

  auto& fp = model.fusion().parameters();
  for (const auto& e : fp.entries()) {
    std::vector<double> dir(e.size);
    for (double& v : dir) v = normal(rng);
    double analytic = 0.0;
    for (std::size_t i = 0; i < e.size; ++i) analytic += g.fusion[e.offset + i] * dir[i];
    const double h = 1e-5;
    for (std::size_t i = 0; i < e.size; ++i) fp.data()[e.offset + i] += h * dir[i];
    const double plus = model.Forward(img).logit;
    for (std::size_t i = 0; i < e.size; ++i) fp.data()[e.offset + i] -= 2 * h * dir[i];
    const double minus = model.Forward(img).logit;
    for (std::size_t i = 0; i < e.size; ++i) fp.data()[e.offset + i] += h * dir[i];
    const double fd = (plus - minus) / (2 * h);
    EXPECT_NEAR(analytic, fd, 1e-4 * std::max(1.0, std::abs(fd))) << e.name;
  }

  for (bool local : {false, true}) {
    auto& params = local ? model.local_backbone().parameters() : model.global_backbone().parameters();
    const std::vector<float>& grad = local ? g.local : g.global;
    for (const char* name : {"head.weight", "head.bias"}) {
      const auto* e = params.Find(name);
      std::vector<float> dir(e->size);
      for (float& v : dir) v = static_cast<float>(normal(rng));
      double analytic = 0.0;
      for (std::size_t i = 0; i < e->size; ++i) analytic += static_cast<double>(grad[e->offset + i]) * dir[i];
      const float h = 1e-3f;
      for (std::size_t i = 0; i < e->size; ++i) params.data()[e->offset + i] += h * dir[i];
      const double plus = model.Forward(img).logit;
      for (std::size_t i = 0; i < e->size; ++i) params.data()[e->offset + i] -= 2 * h * dir[i];
      const double minus = model.Forward(img).logit;
      for (std::size_t i = 0; i < e->size; ++i) params.data()[e->offset + i] += h * dir[i];
      const double fd = (plus - minus) / (2 * h);
      EXPECT_NEAR(analytic, fd, 2e-2 * std::max(1.0, std::abs(fd)))
          << (local ? "local " : "global ") << name;
    }
  }
}

TEST(Detector, SharedWeightsUseOneBackbone) {
  DetectorConfig cfg = LiteConfig();
  cfg.backbone.shared_local_weights = true;
  const DetectorModel model(cfg, 9);
  EXPECT_TRUE(model.shares_weights());
  EXPECT_EQ(&model.local_backbone(), &model.global_backbone());
  DetectorTrace trace;
  model.Forward(RandomImage(300, 300, 1), &trace);
  DetectorGradients g = model.ZeroGradients();
  model.Backward(trace, 1.0, g);
  EXPECT_TRUE(g.local.empty());
}

TEST(Detector, ConfigValidationAndJson) {
  DetectorConfig cfg = LiteConfig();
  EXPECT_EQ(cfg.patch_count(), 6);
  EXPECT_EQ(DetectorConfig::FromJson(cfg.ToJson()), cfg);
  cfg.psm_specs.pop_back();
  EXPECT_THROW(cfg.Validate(), ArgumentError);
  cfg = LiteConfig();
  cfg.fusion.tokens = 8;
  EXPECT_THROW(cfg.Validate(), ArgumentError);
  cfg = LiteConfig();
  cfg.fusion.pooling = FusionPooling::kMean;
  cfg.fusion.residual_norm = true;
  EXPECT_EQ(DetectorConfig::FromJson(cfg.ToJson()), cfg);
}

TEST(Checkpoint, RoundTripReproducesModel) {
  TempDir dir("det");
  DetectorConfig cfg = LiteConfig();
  cfg.fusion.residual_norm = true;
  const DetectorModel model(cfg, 10);
  model.Save(dir / "m.ckpt");
  const DetectorModel back = DetectorModel::Load(dir / "m.ckpt");
  EXPECT_TRUE(back == model);
  EXPECT_EQ(back.config(), model.config());
  for (int i = 0; i < 10; ++i) {
    const Image img = RandomImage(200 + 10 * i, 240, 100 + i);
    EXPECT_NEAR(back.Forward(img).score, model.Forward(img).score, 1e-6);
  }
}

TEST(Checkpoint, SharedWeightRoundTrip) {
  TempDir dir("det");
  DetectorConfig cfg = LiteConfig();
  cfg.backbone.shared_local_weights = true;
  const DetectorModel model(cfg, 11);
  model.Save(dir / "m.ckpt");
  EXPECT_TRUE(DetectorModel::Load(dir / "m.ckpt") == model);
}

TEST(Checkpoint, MismatchedTokenCountIsFormatError) {
  TempDir dir("det");
  const DetectorModel model(LiteConfig(), 12);
  model.Save(dir / "m.ckpt");
  TensorArchive a = ReadArchive(dir / "m.ckpt");
  a.meta["token_count"] = 9;
  WriteArchive(dir / "bad.ckpt", a);
  EXPECT_THROW(DetectorModel::Load(dir / "bad.ckpt"), FormatError);

  a = ReadArchive(dir / "m.ckpt");
  a.meta["format_version"] = 99;
  WriteArchive(dir / "ver.ckpt", a);
  EXPECT_THROW(DetectorModel::Load(dir / "ver.ckpt"), FormatError);

  a = ReadArchive(dir / "m.ckpt");
  a.tensors.pop_back();
  WriteArchive(dir / "short.ckpt", a);
  EXPECT_THROW(DetectorModel::Load(dir / "short.ckpt"), FormatError);

  a = ReadArchive(dir / "m.ckpt");
  a.meta["format"] = "something-else";
  WriteArchive(dir / "fmt.ckpt", a);
  EXPECT_THROW(DetectorModel::Load(dir / "fmt.ckpt"), FormatError);
}

}  // namespace
}  // namespace gldet
