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

#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "gldet/error.hpp"
#include "gldet/psm.hpp"
#include "oracles.hpp"

namespace gldet {
namespace {

using testing::RandomImage;

ActivationMap MakeMap(int h, int w, std::vector<double> values) {
  ActivationMap m;
  m.height = h;
  m.width = w;
  m.data = std::move(values);
  return m;
}

ActivationMap RandomMap(int h, int w, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(h) * w);
  for (double& x : v) x = u(rng);
  return MakeMap(h, w, std::move(v));
}

FeatureMap MapAsFeatures(const ActivationMap& a) {
  FeatureMap f;
  f.channels = 1;
  f.height = a.height;
  f.width = a.width;
  for (double v : a.data) f.data.push_back(static_cast<float>(v));
  return f;
}

TEST(ActivationMap, ChannelSum) {
  FeatureMap f;
  f.channels = 2;
  f.height = 2;
  f.width = 2;
  f.data = {1, 2, 3, 4, 5, 6, 7, 8};
  const ActivationMap a = ComputeActivationMap(f);
  EXPECT_EQ(a.data, (std::vector<double>{6, 8, 10, 12}));
}

TEST(ActivationMap, ZeroAndSingleChannel) {
  FeatureMap f;
  f.channels = 1;
  f.height = 2;
  f.width = 3;
  f.data = {0, 0, 0, 0, 0, 0};
  for (double v : ComputeActivationMap(f).data) EXPECT_EQ(v, 0.0);
  f.data = {1.5f, -2, 3, 4, 5, 6};
  const ActivationMap a = ComputeActivationMap(f);
  for (std::size_t i = 0; i < f.data.size(); ++i) EXPECT_EQ(a.data[i], f.data[i]);
}

TEST(WindowScores, SingleWindowMean) {
  const auto s = WindowScores(MakeMap(2, 2, {6, 8, 10, 12}), {2, 2, 1, 1, 1});
  ASSERT_EQ(s.size(), 1u);
  EXPECT_EQ(s[0].score, 9.0);
}

TEST(WindowScores, ConstantMap) {
  const auto s = WindowScores(MakeMap(5, 4, std::vector<double>(20, 0.3)), {3, 2, 1, 1, 1});
  EXPECT_EQ(s.size(), 9u);
  for (const auto& w : s) EXPECT_NEAR(w.score, 0.3, 1e-12);
}

TEST(WindowScores, RowMajorOrderAndCount) {
  std::mt19937_64 rng(1);
  const auto s = WindowScores(RandomMap(5, 5, rng), {3, 3, 1, 3, 224});
  ASSERT_EQ(s.size(), 9u);
  for (int i = 0; i < 9; ++i) {
    EXPECT_EQ(s[i].y, i / 3);
    EXPECT_EQ(s[i].x, i % 3);
  }
}

TEST(WindowScores, MatchesNestedLoopOracle) {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int h = std::uniform_int_distribution<int>(2, 9)(rng);
    const int w = std::uniform_int_distribution<int>(2, 9)(rng);
    WindowSpec spec;
    spec.height = std::uniform_int_distribution<int>(1, h)(rng);
    spec.width = std::uniform_int_distribution<int>(1, w)(rng);
    spec.stride = std::uniform_int_distribution<int>(1, 2)(rng);
    const ActivationMap map = RandomMap(h, w, rng);
    const auto got = WindowScores(map, spec);
    const auto want = oracle::WindowMeans(map, spec);
    ASSERT_EQ(got.size(), want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].x, want[i].x);
      ASSERT_EQ(got[i].y, want[i].y);
      ASSERT_NEAR(got[i].score, want[i].score, 1e-9);
    }
  }
}

TEST(WindowScores, OversizedWindowRejected) {
  EXPECT_THROW(WindowScores(MakeMap(2, 2, {1, 2, 3, 4}), {3, 2, 1, 1, 1}), ArgumentError);
  EXPECT_THROW(WindowScores(MakeMap(2, 2, {1, 2, 3, 4}), {2, 2, 0, 1, 1}), ArgumentError);
}

PatchProposal Prop(int x, int y, int size, double score) {
  return {x, y, WindowSpec{size, size, 1, 3, 224}, score, {}};
}

TEST(Nms, DisjointWindowsBothKept) {
  const auto kept = NonMaxSuppression({Prop(0, 0, 2, 1.0), Prop(4, 4, 2, 2.0)}, 0.25, 2);
  ASSERT_EQ(kept.size(), 2u);
  EXPECT_EQ(kept[0].score, 2.0);
}

TEST(Nms, IdenticalWindowsKeepHigherScore) {
  const auto kept = NonMaxSuppression({Prop(1, 1, 3, 3.0), Prop(1, 1, 3, 5.0)}, 0.25, 2);
  ASSERT_EQ(kept.size(), 1u);
  EXPECT_EQ(kept[0].score, 5.0);
}

TEST(Nms, TiesBrokenRowMajor) {
  const auto kept =
      NonMaxSuppression({Prop(3, 2, 2, 1.0), Prop(1, 2, 2, 1.0), Prop(5, 0, 2, 1.0)}, 0.0, 3);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[0].window_y, 0);
  EXPECT_EQ(kept[1].window_x, 1);
  EXPECT_EQ(kept[2].window_x, 3);
}

TEST(Nms, IouOfWindows) {
  EXPECT_DOUBLE_EQ(WindowIou(Prop(0, 0, 2, 0), Prop(1, 0, 2, 0)), 2.0 / 6.0);
  EXPECT_DOUBLE_EQ(WindowIou(Prop(0, 0, 3, 0), Prop(0, 0, 3, 0)), 1.0);
  EXPECT_DOUBLE_EQ(WindowIou(Prop(0, 0, 2, 0), Prop(2, 2, 2, 0)), 0.0);
}

bool SameProposal(const PatchProposal& a, const PatchProposal& b) {
  return a.window_x == b.window_x && a.window_y == b.window_y &&
         a.spec.height == b.spec.height && a.spec.width == b.spec.width && a.score == b.score;
}

TEST(Nms, MatchesExhaustiveGreedyOracle) {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<PatchProposal> props;
    for (int i = 0; i < 20; ++i) {
      const int size = std::uniform_int_distribution<int>(1, 3)(rng);
      PatchProposal p;
      p.spec = {size, size, 1, 3, 224};
      p.window_x = std::uniform_int_distribution<int>(0, 7 - size)(rng);
      p.window_y = std::uniform_int_distribution<int>(0, 7 - size)(rng);
      // Coarse scores force ties.
      p.score = std::uniform_int_distribution<int>(0, 5)(rng);
      props.push_back(p);
    }
    const double thr = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
    const int n = std::uniform_int_distribution<int>(1, 8)(rng);
    const auto got = NonMaxSuppression(props, thr, n);
    const auto want = oracle::GreedyNms(props, thr, n);
    ASSERT_EQ(got.size(), want.size()) << "trial " << trial;
    for (std::size_t i = 0; i < got.size(); ++i) ASSERT_TRUE(SameProposal(got[i], want[i]));
  }
}

TEST(Nms, ScoresNonIncreasingAndPairwiseIouBounded) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 200; ++trial) {
    const ActivationMap map = RandomMap(7, 7, rng);
    for (const WindowSpec& spec : DefaultWindowSpecs()) {
      std::vector<PatchProposal> props;
      for (const auto& s : WindowScores(map, spec)) props.push_back({s.x, s.y, spec, s.score, {}});
      const double thr = std::uniform_real_distribution<double>(0.0, 0.6)(rng);
      const auto kept = NonMaxSuppression(props, thr, 5);
      for (std::size_t i = 0; i < kept.size(); ++i) {
        if (i > 0) EXPECT_LE(kept[i].score, kept[i - 1].score);
        for (std::size_t j = i + 1; j < kept.size(); ++j) {
          EXPECT_LE(oracle::CellIou(kept[i], kept[j]), thr);
        }
      }
    }
  }
}

TEST(MapToImage, FullImageClamp) {
  const auto p = MapToImage(Prop(0, 0, 3, 1.0), {224, 224}, {7, 7});
  EXPECT_EQ(p.crop_rect, (Rect{0, 0, 224, 224}));
}

TEST(MapToImage, CentredCropOnLargerImage) {
  PatchProposal p = Prop(2, 2, 3, 1.0);
  p.spec.patch_px = 224;
  EXPECT_EQ(MapToImage(p, {448, 448}, {7, 7}).crop_rect, (Rect{112, 112, 224, 224}));
}

TEST(MapToImage, SmallWindowNearCorner) {
  PatchProposal p = Prop(0, 0, 2, 1.0);
  p.spec.patch_px = 112;
  EXPECT_EQ(MapToImage(p, {448, 448}, {7, 7}).crop_rect, (Rect{8, 8, 112, 112}));
}

TEST(MapToImage, TranslatesInsteadOfShrinking) {
  PatchProposal p = Prop(5, 5, 2, 1.0);
  p.spec.patch_px = 112;
  // Centre (6,6) maps to (384,384); a 112 px crop already fits.
  EXPECT_EQ(MapToImage(p, {448, 448}, {7, 7}).crop_rect, (Rect{328, 328, 112, 112}));
  // A 200 px crop would end at 484 and slides back to end at 448.
  p.spec.patch_px = 200;
  EXPECT_EQ(MapToImage(p, {448, 448}, {7, 7}).crop_rect, (Rect{248, 248, 200, 200}));
  p.spec.patch_px = 300;
  EXPECT_EQ(MapToImage(p, {500, 200}, {7, 7}).crop_rect, (Rect{200, 0, 300, 200}));
}

TEST(SelectProposals, CropRectsAlwaysInBounds) {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 300; ++trial) {
    const ImageSize orig{std::uniform_int_distribution<int>(16, 900)(rng),
                         std::uniform_int_distribution<int>(16, 900)(rng)};
    const auto props = SelectProposals(RandomMap(7, 7, rng), orig, DefaultWindowSpecs(), 0.25);
    ASSERT_EQ(props.size(), 6u);
    for (const auto& p : props) {
      const Rect& r = p.crop_rect;
      EXPECT_GE(r.x, 0);
      EXPECT_GE(r.y, 0);
      EXPECT_GT(r.w, 0);
      EXPECT_GT(r.h, 0);
      EXPECT_LE(r.x + r.w, orig.width);
      EXPECT_LE(r.y + r.h, orig.height);
    }
  }
}

std::vector<PatchProposal> Select(const ActivationMap& map) {
  return SelectProposals(map, {448, 448}, DefaultWindowSpecs(), 0.25);
}

TEST(SelectProposals, InvariantToPositiveScalingAndShift) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 200; ++trial) {
    const ActivationMap map = RandomMap(7, 7, rng);
    const double c = std::uniform_real_distribution<double>(0.01, 100.0)(rng);
    const double k = std::uniform_real_distribution<double>(-50.0, 50.0)(rng);
    ActivationMap scaled = map;
    ActivationMap shifted = map;
    for (double& v : scaled.data) v *= c;
    for (double& v : shifted.data) v += k;
    const auto base = Select(map);
    for (const auto& other : {Select(scaled), Select(shifted)}) {
      ASSERT_EQ(other.size(), base.size());
      for (std::size_t i = 0; i < base.size(); ++i) {
        EXPECT_EQ(other[i].window_x, base[i].window_x);
        EXPECT_EQ(other[i].window_y, base[i].window_y);
        EXPECT_EQ(other[i].crop_rect, base[i].crop_rect);
      }
    }
  }
}

TEST(SelectProposals, PadsWithBestSurvivor) {
  // A 3x3 window on a 3x3 map has one placement; n_select asks for three.
  std::mt19937_64 rng(1);
  const auto props =
      SelectProposals(RandomMap(3, 3, rng), {100, 100}, {{3, 3, 1, 3, 50}}, 0.25);
  ASSERT_EQ(props.size(), 3u);
  for (const auto& p : props) EXPECT_TRUE(SameProposal(p, props[0]));
}

TEST(SelectPatches, DefaultSpecsGiveSixPatches) {
  std::mt19937_64 rng(11);
  const Image img = RandomImage(300, 260, 3);
  const PatchSelection sel =
      SelectPatches(MapAsFeatures(RandomMap(7, 7, rng)), img, DefaultWindowSpecs(), 0.25);
  ASSERT_EQ(sel.patches.size(), 6u);
  ASSERT_EQ(sel.proposals.size(), 6u);
  for (const Image& p : sel.patches) EXPECT_EQ(p.size(), (ImageSize{224, 224}));
  // Spec order: three 3x3 proposals, then three 2x2.
  for (int i = 0; i < 6; ++i) EXPECT_EQ(sel.proposals[i].spec.height, i < 3 ? 3 : 2);
}

TEST(SelectPatches, PatchIsResizedCrop) {
  std::mt19937_64 rng(12);
  const Image img = RandomImage(448, 448, 4);
  const PatchSelection sel =
      SelectPatches(MapAsFeatures(RandomMap(7, 7, rng)), img, DefaultWindowSpecs(), 0.25);
  for (int i = 0; i < 6; ++i) {
    const Image want = ResizeBilinear(Crop(img, sel.proposals[i].crop_rect), {224, 224});
    EXPECT_TRUE(sel.patches[i] == want);
  }
}

TEST(SelectPatches, HotspotCoveredByTopProposals) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    ActivationMap map = RandomMap(7, 7, rng);
    const int hx = std::uniform_int_distribution<int>(0, 6)(rng);
    const int hy = std::uniform_int_distribution<int>(0, 6)(rng);
    map.data[hy * 7 + hx] = 100.0;
    const PatchSelection sel =
        SelectPatches(MapAsFeatures(map), RandomImage(448, 448, trial), DefaultWindowSpecs(), 0.25);
    for (int first : {0, 3}) {
      const PatchProposal& p = sel.proposals[first];
      EXPECT_TRUE(hx >= p.window_x && hx < p.window_x + p.spec.width && hy >= p.window_y &&
                  hy < p.window_y + p.spec.height);
      double best = -1e300;
      for (const auto& s : oracle::WindowMeans(map, p.spec)) best = std::max(best, s.score);
      EXPECT_NEAR(p.score, best, 1e-6);
    }
  }
}

TEST(ProposalRecord, OneJsonLine) {
  std::ostringstream out;
  WriteProposalRecord(out, "a.png", {MapToImage(Prop(0, 0, 3, 2.5), {224, 224}, {7, 7})});
  const std::string line = out.str();
  ASSERT_FALSE(line.empty());
  EXPECT_EQ(line.back(), '\n');
  EXPECT_EQ(std::count(line.begin(), line.end(), '\n'), 1);
  const auto j = nlohmann::json::parse(line);
  EXPECT_EQ(j["path"], "a.png");
  ASSERT_EQ(j["proposals"].size(), 1u);
  EXPECT_EQ(j["proposals"][0]["w"], 224);
  EXPECT_EQ(j["proposals"][0]["score"], 2.5);
}

}  // namespace
}  // namespace gldet
