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

#include <algorithm>
#include <cmath>
#include <random>

#include "fixtures.hpp"
#include "gldet/dataset.hpp"
#include "gldet/error.hpp"
#include "gldet/evaluator.hpp"
#include "oracles.hpp"

namespace gldet {
namespace {

namespace fs = std::filesystem;
using testing::TempDir;

double Ap(std::vector<double> s, std::vector<int> y) { return AveragePrecision(s, y); }

TEST(AveragePrecision, HandExamples) {
  EXPECT_DOUBLE_EQ(Ap({0.9, 0.8, 0.7}, {1, 1, 0}), 1.0);
  EXPECT_NEAR(Ap({0.9, 0.8, 0.7}, {0, 1, 1}), (1.0 / 2 + 2.0 / 3) / 2, 1e-15);
}

TEST(AveragePrecision, TiesKeepInputOrder) {
  EXPECT_DOUBLE_EQ(Ap({0.5, 0.5}, {1, 0}), 1.0);
  EXPECT_DOUBLE_EQ(Ap({0.5, 0.5}, {0, 1}), 0.5);
}

TEST(AveragePrecision, SingleClassIsUndefined) {
  EXPECT_THROW(Ap({0.1, 0.2}, {1, 1}), UndefinedMetricError);
  EXPECT_THROW(Ap({0.1, 0.2}, {0, 0}), UndefinedMetricError);
  EXPECT_THROW(Ap({}, {}), UndefinedMetricError);
  EXPECT_THROW(Ap({0.1}, {0, 1}), ArgumentError);
}

TEST(AveragePrecision, MatchesRankWalkOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 60);
    std::vector<double> s(n);
    std::vector<int> y(n);
    // Coarse scores so ties are common.
    for (int i = 0; i < n; ++i) {
      s[i] = static_cast<double>(rng() % 10) / 10.0;
      y[i] = static_cast<int>(rng() % 2);
    }
    y[0] = 1;
    y[1] = 0;
    ASSERT_NEAR(AveragePrecision(s, y), oracle::RankWalkAp(s, y), 1e-12) << trial;
  }
}

TEST(AveragePrecision, InvariantUnderMonotoneTransforms) {
  std::mt19937_64 rng(12);
  std::normal_distribution<double> normal;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> s(40), t(40), u(40);
    std::vector<int> y(40);
    for (int i = 0; i < 40; ++i) {
      s[i] = normal(rng);
      t[i] = 1.0 / (1.0 + std::exp(-3.0 * s[i]));
      u[i] = std::pow(s[i], 3) + 7.0;
      y[i] = i % 3 == 0;
    }
    const double base = AveragePrecision(s, y);
    EXPECT_DOUBLE_EQ(AveragePrecision(t, y), base);
    EXPECT_DOUBLE_EQ(AveragePrecision(u, y), base);
  }
}

TEST(AveragePrecision, ReversedPerfectRankingHitsAnalyticMinimum) {
  for (int n : {2, 5, 10, 37}) {
    for (int p = 1; p < n; ++p) {
      std::vector<double> s(n);
      std::vector<int> y(n);
      for (int i = 0; i < n; ++i) {
        s[i] = static_cast<double>(n - i);
        y[i] = i >= n - p;
      }
      double want = 0.0;
      for (int k = 1; k <= p; ++k) want += static_cast<double>(k) / (n - p + k);
      want /= p;
      EXPECT_NEAR(AveragePrecision(s, y), want, 1e-12);
      EXPECT_NEAR(oracle::RankWalkAp(s, y), want, 1e-12);
    }
  }
}

ScoredImage Scored(std::string family, std::string model, int label, double score) {
  ScoredImage s;
  s.path = model + std::to_string(score);
  s.label = label ? Label::kFake : Label::kReal;
  s.family = std::move(family);
  s.model = std::move(model);
  s.score = score;
  return s;
}

TEST(BuildReport, SingleFamilySingleModel) {
  const std::vector<ScoredImage> scored = {Scored("GAN", "ProGAN", 0, 0.9),
                                           Scored("GAN", "ProGAN", 1, 0.8),
                                           Scored("GAN", "ProGAN", 1, 0.7)};
  const EvalReport r = BuildReport(scored);
  EXPECT_DOUBLE_EQ(r.per_model_ap.at("ProGAN"), r.global_ap);
  EXPECT_DOUBLE_EQ(r.per_family_map.at("GAN"), r.global_ap);
  ASSERT_TRUE(r.total_map.has_value());
  EXPECT_DOUBLE_EQ(*r.total_map, r.global_ap);
  EXPECT_EQ(r.n_images, 3);
  EXPECT_TRUE(r.warnings.empty());
}

TEST(BuildReport, TotalMapIsUnweightedOverFamilies) {
  std::vector<ScoredImage> scored;
  // Family A: AP 1.0 with many images.
  for (int i = 0; i < 20; ++i) scored.push_back(Scored("A", "a1", i < 10, 1.0 - i * 0.01));
  // Family B: AP 0.5 with two images.
  scored.push_back(Scored("B", "b1", 0, 0.9));
  scored.push_back(Scored("B", "b1", 1, 0.1));
  const EvalReport r = BuildReport(scored);
  EXPECT_DOUBLE_EQ(r.per_family_map.at("A"), 1.0);
  EXPECT_DOUBLE_EQ(r.per_family_map.at("B"), 0.5);
  EXPECT_DOUBLE_EQ(*r.total_map, 0.75);
}

TEST(BuildReport, FamilyMapAveragesModels) {
  std::vector<ScoredImage> scored = {
      Scored("F", "m1", 1, 0.9), Scored("F", "m1", 0, 0.1),   // AP 1
      Scored("F", "m2", 0, 0.9), Scored("F", "m2", 1, 0.1),   // AP 0.5
      Scored("G", "m3", 1, 0.9), Scored("G", "m3", 0, 0.1)};  // AP 1
  const EvalReport r = BuildReport(scored);
  EXPECT_DOUBLE_EQ(r.per_family_map.at("F"), 0.75);
  EXPECT_DOUBLE_EQ(*r.total_map, (0.75 + 1.0) / 2);
}

TEST(BuildReport, UndefinedFamilyIsExcludedWithWarning) {
  const std::vector<ScoredImage> scored = {Scored("A", "a", 1, 0.9), Scored("A", "a", 0, 0.1),
                                           Scored("B", "b", 1, 0.5), Scored("B", "b", 1, 0.4)};
  const EvalReport r = BuildReport(scored);
  EXPECT_EQ(r.undefined_models, std::vector<std::string>{"b"});
  EXPECT_EQ(r.undefined_families, std::vector<std::string>{"B"});
  EXPECT_EQ(r.per_family_map.count("B"), 0u);
  EXPECT_DOUBLE_EQ(*r.total_map, 1.0);
  EXPECT_FALSE(r.warnings.empty());
  const auto j = r.ToJson();
  EXPECT_TRUE(j.contains("warnings"));
}

TEST(BuildReport, ModelInTwoFamiliesIsRejected) {
  const std::vector<ScoredImage> scored = {Scored("A", "m", 1, 0.9), Scored("B", "m", 0, 0.1)};
  EXPECT_THROW(BuildReport(scored), ValidationError);
}

TEST(ScoreDump, RoundTripReproducesGlobalApExactly) {
  TempDir dir("ev");
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<ScoredImage> scored;
  for (int i = 0; i < 200; ++i) scored.push_back(Scored("F", "m", i % 2, u(rng)));
  WriteScoreDump(dir / "scores.jsonl", scored);
  const auto back = ReadScoreDump(dir / "scores.jsonl");
  ASSERT_EQ(back.size(), scored.size());
  for (std::size_t i = 0; i < back.size(); ++i) EXPECT_EQ(back[i].score, scored[i].score);
  EXPECT_EQ(GlobalAp(back), BuildReport(scored).global_ap);
}

class ToyEval : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("ev");
    ToyGenConfig toy;
    toy.image_size = 64;
    toy.n_real = 6;
    toy.n_fake = 6;
    toy.seed = 9;
    manifest_ = GenerateToyDataset(toy, dir_->path() / "toy");
    DetectorConfig cfg;
    cfg.backbone.architecture = kResNetLite;
    model_ = new DetectorModel(cfg, 14);
  }
  static void TearDownTestSuite() {
    delete model_;
    delete dir_;
  }
  static TempDir* dir_;
  static fs::path manifest_;
  static DetectorModel* model_;
};
TempDir* ToyEval::dir_ = nullptr;
fs::path ToyEval::manifest_;
DetectorModel* ToyEval::model_ = nullptr;

TEST_F(ToyEval, ScoresFollowManifestOrderAndIgnoreWorkers) {
  const auto entries = ReadManifest(manifest_);
  const auto one = ScoreManifest(*model_, manifest_, 1);
  const auto three = ScoreManifest(*model_, manifest_, 3);
  ASSERT_EQ(one.size(), entries.size());
  for (std::size_t i = 0; i < one.size(); ++i) {
    EXPECT_EQ(one[i].path, entries[i].path);
    EXPECT_EQ(one[i].score, three[i].score);
    EXPECT_EQ(one[i].proposals.size(), 6u);
  }
}

TEST_F(ToyEval, SigmaZeroEqualsUnperturbedExactly) {
  RobustnessSweepConfig cfg;
  cfg.blur_sigmas = {0};
  cfg.jpeg_qualities = {100};
  const RobustnessCurves c = RobustnessSweep(*model_, manifest_, cfg, 2);
  ASSERT_EQ(c.blur.size(), 1u);
  EXPECT_EQ(c.blur[0].global_ap, c.unperturbed_global_ap);
  EXPECT_EQ(c.unperturbed_global_ap, GlobalAp(ScoreManifest(*model_, manifest_, 1)));
  ASSERT_EQ(c.jpeg.size(), 1u);
  EXPECT_GE(c.jpeg[0].global_ap, 0.0);
  EXPECT_LE(c.jpeg[0].global_ap, 1.0);
}

TEST(RobustnessSweepConfig, Validation) {
  RobustnessSweepConfig cfg;
  EXPECT_NO_THROW(cfg.Validate());
  cfg.blur_sigmas = {-1};
  EXPECT_THROW(cfg.Validate(), ArgumentError);
  cfg = RobustnessSweepConfig{};
  cfg.jpeg_qualities = {0};
  EXPECT_THROW(cfg.Validate(), ArgumentError);
}

TEST(CurveCsv, WritesHeaderAndRows) {
  TempDir dir("ev");
  WriteCurveCsv(dir / "c.csv", "sigma", {{0, 0.5}, {1, 0.25}});
  const std::string text = testing::ReadText(dir / "c.csv");
  EXPECT_EQ(text.substr(0, text.find('\n')), "sigma,global_ap");
  EXPECT_NE(text.find("1,0.25"), std::string::npos);
}

}  // namespace
}  // namespace gldet
