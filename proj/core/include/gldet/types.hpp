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

#ifndef GLDET_TYPES_HPP_
#define GLDET_TYPES_HPP_

#include <string>
#include <vector>

namespace gldet {

enum class Label : int { kReal = 0, kFake = 1 };

inline constexpr int kEmbeddingDim = 128;

// Final-stage backbone activations for one image, C x H x W.
struct FeatureMap {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> data;
  std::string source;

  float at(int c, int y, int x) const {
    return data[(static_cast<size_t>(c) * height + y) * width + x];
  }
  // Throws ValidationError when the map is too small or not finite.
  void Validate() const;
};

enum class EmbeddingKind { kGlobal, kPatch };

struct Embedding {
  std::vector<float> values;
  EmbeddingKind kind = EmbeddingKind::kGlobal;

  void Validate() const;
};

// Global embedding first, then patch embeddings in selection order.
struct EmbeddingSet {
  Embedding global;
  std::vector<Embedding> patches;
};

}  // namespace gldet

#endif  // GLDET_TYPES_HPP_
