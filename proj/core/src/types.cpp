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

#include "gldet/types.hpp"

#include <cmath>

#include "gldet/error.hpp"

namespace gldet {

void FeatureMap::Validate() const {
  if (channels < 1 || height < 2 || width < 2) {
    throw ValidationError("feature map must have C >= 1, H >= 2, W >= 2");
  }
  if (data.size() != static_cast<size_t>(channels) * height * width) {
    throw ValidationError("feature map data size mismatch");
  }
  for (float v : data) {
    if (!std::isfinite(v)) throw ValidationError("feature map is not finite");
  }
}

void Embedding::Validate() const {
  if (values.size() != static_cast<size_t>(kEmbeddingDim)) {
    throw ValidationError("embedding length must be " +
                          std::to_string(kEmbeddingDim));
  }
  for (float v : values) {
    if (!std::isfinite(v)) throw ValidationError("embedding is not finite");
  }
}

}  // namespace gldet
