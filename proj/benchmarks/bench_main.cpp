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

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "gldet/affm.hpp"
#include "gldet/augment.hpp"
#include "gldet/backbone.hpp"
#include "gldet/detector.hpp"
#include "gldet/evaluator.hpp"
#include "gldet/nn.hpp"
#include "gldet/psm.hpp"

namespace gldet {
namespace {

Image RandomImage(int w, int h, unsigned seed) {
  Image img(w, h);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (float& v : img.mutable_data()) v = u(rng);
  return img;
}

void BM_Conv3x3(benchmark::State& state) {
  const int c = static_cast<int>(state.range(0));
  const int hw = static_cast<int>(state.range(1));
  nn::Activation in(c, 1, hw, hw);
  std::mt19937_64 rng(1);
  std::normal_distribution<float> n;
  for (float& v : in.data) v = n(rng);
  const nn::ConvGeometry g{c, c, 3, 1, 1};
  std::vector<float> w(static_cast<std::size_t>(c) * c * 9);
  for (float& v : w) v = n(rng);
  nn::Activation out;
  for (auto _ : state) {
    nn::Conv2dForward(in, g, w.data(), out);
    benchmark::DoNotOptimize(out.data.data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * c * c * 9 * hw * hw);
}
BENCHMARK(BM_Conv3x3)->Args({16, 56})->Args({64, 56})->Args({256, 14})->Unit(benchmark::kMillisecond);

void BM_BackboneForward(benchmark::State& state) {
  BackboneConfig cfg;
  cfg.architecture = state.range(0) == 0 ? kResNetLite : kResNet50;
  const Backbone bb(cfg, 1);
  const Image img = RandomImage(224, 224, 2);
  for (auto _ : state) benchmark::DoNotOptimize(bb.Extract(img).embedding.values.data());
}
BENCHMARK(BM_BackboneForward)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

void BM_DetectorForwardBackward(benchmark::State& state) {
  DetectorConfig cfg;
  cfg.backbone.architecture = kResNetLite;
  const DetectorModel model(cfg, 3);
  const Image img = RandomImage(320, 320, 4);
  DetectorGradients grads = model.ZeroGradients();
  for (auto _ : state) {
    DetectorTrace trace;
    const Detection d = model.Forward(img, &trace);
    model.Backward(trace, d.score - 1.0, grads);
  }
}
BENCHMARK(BM_DetectorForwardBackward)->Unit(benchmark::kMillisecond);

void BM_SelectProposals(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  ActivationMap map;
  map.height = map.width = side;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u;
  for (int i = 0; i < side * side; ++i) map.data.push_back(u(rng));
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        SelectProposals(map, {32 * side, 32 * side}, DefaultWindowSpecs(), 0.25).data());
  }
}
BENCHMARK(BM_SelectProposals)->Arg(7)->Arg(32);

void BM_FusionLogit(benchmark::State& state) {
  const FusionStack stack(FusionConfig{}, 6);
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n;
  Matrix tokens(7, 128);
  for (int r = 0; r < 7; ++r) {
    for (int c = 0; c < 128; ++c) tokens(r, c) = n(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(stack.Logit(tokens));
}
BENCHMARK(BM_FusionLogit);

void BM_AveragePrecision(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u;
  std::vector<double> s(n);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    s[i] = u(rng);
    y[i] = static_cast<int>(i % 2);
  }
  for (auto _ : state) benchmark::DoNotOptimize(AveragePrecision(s, y));
}
BENCHMARK(BM_AveragePrecision)->Arg(1000)->Arg(100000);

void BM_GaussianBlur(benchmark::State& state) {
  const Image img = RandomImage(224, 224, 9);
  const double sigma = static_cast<double>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(GaussianBlur(img, sigma).data().data());
}
BENCHMARK(BM_GaussianBlur)->Arg(1)->Arg(3)->Unit(benchmark::kMillisecond);

void BM_JpegRoundTrip(benchmark::State& state) {
  const Image img = RandomImage(224, 224, 10);
  for (auto _ : state) benchmark::DoNotOptimize(JpegCompress(img, 70).data().data());
}
BENCHMARK(BM_JpegRoundTrip)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace gldet

BENCHMARK_MAIN();
