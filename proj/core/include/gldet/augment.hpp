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

#ifndef GLDET_AUGMENT_HPP_
#define GLDET_AUGMENT_HPP_

#include "gldet/image.hpp"
#include "gldet/rng.hpp"

namespace gldet {

struct AugmentationConfig {
  double apply_fraction = 0.10;
  double blur_sigma_max = 3.0;
  int jpeg_quality_min = 30;
  int jpeg_quality_max = 100;

  void Validate() const;
};

// Kernel half-width used for a given sigma: ceil(4 * sigma).
int GaussianRadius(double sigma);

// Separable Gaussian blur with mirrored borders (d c b a | a b c d).
Image GaussianBlur(const Image& image, double sigma);

// In-memory JPEG encode followed by decode.
Image JpegCompress(const Image& image, int quality);

struct AugmentPlan {
  bool apply = false;
  double sigma = 0.0;
  int quality = 100;
};

// Draws one augmentation decision. Always consumes one draw for the
// decision and, when applied, two more for sigma and quality.
AugmentPlan DrawAugmentPlan(const AugmentationConfig& cfg, Rng& rng);
Image ApplyAugmentPlan(const Image& image, const AugmentPlan& plan);

// Blur then JPEG on a random `apply_fraction` of calls.
Image Augment(const Image& image, const AugmentationConfig& cfg, Rng& rng);

}  // namespace gldet

#endif  // GLDET_AUGMENT_HPP_
