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

#ifndef GLDET_BACKBONE_HPP_
#define GLDET_BACKBONE_HPP_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gldet/image.hpp"
#include "gldet/nn.hpp"
#include "gldet/parameters.hpp"
#include "gldet/rng.hpp"
#include "gldet/types.hpp"

namespace gldet {

// Bottleneck ResNet-50 layout. Weights start from a seeded random init.
inline constexpr const char* kResNet50 = "resnet50";
// Reduced-depth residual network with the same 32x downsampling: a 4x4/4
// stem and three basic blocks (16, 32, 32 channels).
inline constexpr const char* kResNetLite = "resnet-lite";

struct BackboneConfig {
  std::string architecture = kResNet50;
  int embedding_dim = kEmbeddingDim;
  // When set, the detector runs patches through the global branch weights.
  bool shared_local_weights = false;

  void Validate() const;
  friend bool operator==(const BackboneConfig&, const BackboneConfig&) = default;
};

struct BackboneOutput {
  FeatureMap feature_map;
  Embedding embedding;
};

// Intermediate activations recorded by Backbone::Forward for Backward.
struct BackboneTrace {
  struct Unit {
    nn::Activation conv_out;
    nn::Activation out;
  };
  struct Block {
    std::vector<Unit> main;
    std::optional<Unit> shortcut;
    nn::Activation out;
  };
  nn::Activation input;
  Unit stem;
  nn::Activation pooled_stem;
  std::vector<int> pool_argmax;
  std::vector<Block> blocks;
  std::vector<float> pooled;  // [C, N]
};

class Backbone {
 public:
  static constexpr int kInputSize = 224;

  Backbone(BackboneConfig config, std::uint64_t seed);

  const BackboneConfig& config() const { return config_; }
  int feature_channels() const { return feature_channels_; }
  int downsampling() const { return downsampling_; }
  // Name of the layer whose output is the feature map handed to patch
  // selection: the last residual block of the final stage.
  std::string feature_layer() const;

  // Input must be 3 x 224 x 224.
  BackboneOutput Extract(const Image& image,
                         EmbeddingKind kind = EmbeddingKind::kGlobal) const;
  // Runs the whole list as one batch; all inputs must be 3 x 224 x 224.
  std::vector<BackboneOutput> ExtractBatch(
      std::span<const Image> images,
      EmbeddingKind kind = EmbeddingKind::kGlobal) const;

  std::vector<BackboneOutput> Forward(std::span<const Image* const> images,
                                      EmbeddingKind kind,
                                      BackboneTrace* trace) const;

  // d_embeddings is [N, embedding_dim]. Parameter gradients are accumulated
  // into `grad` (laid out like parameters()). When d_inputs is non-null it
  // receives one 3 x 224 x 224 gradient per image w.r.t. pixel values.
  void Backward(const BackboneTrace& trace, std::span<const float> d_embeddings,
                std::span<float> grad,
                std::vector<std::vector<float>>* d_inputs = nullptr) const;

  ParameterSet<float>& parameters() { return params_; }
  const ParameterSet<float>& parameters() const { return params_; }

 private:
  struct Unit {
    std::string name;
    nn::ConvGeometry geom;
    std::size_t weight = 0;
    std::size_t scale = 0;
    std::size_t shift = 0;
    bool relu = true;
  };
  struct Block {
    std::vector<Unit> main;
    std::optional<Unit> shortcut;
  };

  Unit AddUnit(const std::string& name, nn::ConvGeometry geom, bool relu,
               float scale_init, Rng& rng);
  void RunUnit(const Unit& u, const nn::Activation& in,
               BackboneTrace::Unit& t) const;
  void UnitBackward(const Unit& u, const nn::Activation& in,
                    const BackboneTrace::Unit& t, const nn::Activation& d_out,
                    std::span<float> grad, nn::Activation* d_in) const;

  BackboneConfig config_;
  ParameterSet<float> params_;
  Unit stem_;
  bool stem_pool_ = false;
  std::vector<Block> blocks_;
  std::vector<std::string> block_names_;
  std::size_t head_weight_ = 0;
  std::size_t head_bias_ = 0;
  int feature_channels_ = 0;
  int downsampling_ = 1;
};

}  // namespace gldet

#endif  // GLDET_BACKBONE_HPP_
