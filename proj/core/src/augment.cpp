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

#include "gldet/augment.hpp"

#include <cmath>
#include <vector>

#include "gldet/error.hpp"

namespace gldet {

void AugmentationConfig::Validate() const {
  if (!(apply_fraction >= 0.0 && apply_fraction <= 1.0)) {
    throw ArgumentError("augmentation apply_fraction must be in [0, 1]");
  }
  if (!(blur_sigma_max >= 0.0)) {
    throw ArgumentError("augmentation blur_sigma_max must be >= 0");
  }
  if (jpeg_quality_min < 1 || jpeg_quality_min > jpeg_quality_max ||
      jpeg_quality_max > 100) {
    throw ArgumentError("augmentation jpeg quality range must satisfy "
                        "1 <= min <= max <= 100");
  }
}

int GaussianRadius(double sigma) {
  return static_cast<int>(std::ceil(4.0 * sigma));
}

namespace {

int Mirror(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * n;
  int m = i % period;
  if (m < 0) m += period;
  return m < n ? m : period - 1 - m;
}

std::vector<double> Kernel(double sigma, int radius) {
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

}  // namespace

Image GaussianBlur(const Image& image, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw ArgumentError("blur sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return image;
  const int radius = GaussianRadius(sigma);
  const std::vector<double> k = Kernel(sigma, radius);
  const int w = image.width();
  const int h = image.height();

  // Mirror-padded line buffer keeps the inner loops branch free.
  std::vector<double> line(static_cast<size_t>(std::max(w, h) + 2 * radius));
  std::vector<double> tmp(static_cast<size_t>(w) * h);
  Image out = image;
  for (int c = 0; c < Image::kChannels; ++c) {
    const float* src = image.channel(c).data();
    float* dst = out.mutable_data().data() + static_cast<size_t>(c) * w * h;
    for (int y = 0; y < h; ++y) {
      const float* row = src + static_cast<size_t>(y) * w;
      for (int i = 0; i < w + 2 * radius; ++i) line[i] = row[Mirror(i - radius, w)];
      for (int x = 0; x < w; ++x) {
        double acc = 0.0;
        for (int t = 0; t <= 2 * radius; ++t) acc += k[t] * line[x + t];
        tmp[static_cast<size_t>(y) * w + x] = acc;
      }
    }
    std::vector<double> acc(static_cast<size_t>(w));
    for (int y = 0; y < h; ++y) {
      std::fill(acc.begin(), acc.end(), 0.0);
      for (int t = -radius; t <= radius; ++t) {
        const double kt = k[t + radius];
        const double* r = tmp.data() + static_cast<size_t>(Mirror(y + t, h)) * w;
        for (int x = 0; x < w; ++x) acc[x] += kt * r[x];
      }
      for (int x = 0; x < w; ++x) {
        dst[static_cast<size_t>(y) * w + x] = static_cast<float>(std::clamp(acc[x], 0.0, 1.0));
      }
    }
  }
  return out;
}

Image JpegCompress(const Image& image, int quality) {
  const std::vector<std::uint8_t> bytes = EncodeJpeg(image, quality);
  Image out = DecodeImage(bytes, image.source_path());
  out.set_original_size(image.original_size());
  return out;
}

AugmentPlan DrawAugmentPlan(const AugmentationConfig& cfg, Rng& rng) {
  AugmentPlan plan;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  plan.apply = unit(rng) < cfg.apply_fraction;
  if (plan.apply) {
    plan.sigma = std::uniform_real_distribution<double>(0.0, cfg.blur_sigma_max)(rng);
    plan.quality = std::uniform_int_distribution<int>(cfg.jpeg_quality_min,
                                                      cfg.jpeg_quality_max)(rng);
  }
  return plan;
}

Image ApplyAugmentPlan(const Image& image, const AugmentPlan& plan) {
  if (!plan.apply) return image;
  return JpegCompress(GaussianBlur(image, plan.sigma), plan.quality);
}

Image Augment(const Image& image, const AugmentationConfig& cfg, Rng& rng) {
  cfg.Validate();
  return ApplyAugmentPlan(image, DrawAugmentPlan(cfg, rng));
}

}  // namespace gldet
