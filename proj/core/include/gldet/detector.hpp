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

#ifndef GLDET_DETECTOR_HPP_
#define GLDET_DETECTOR_HPP_

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "gldet/affm.hpp"
#include "gldet/backbone.hpp"
#include "gldet/image.hpp"
#include "gldet/psm.hpp"

namespace gldet {

struct DetectorConfig {
  BackboneConfig backbone;
  std::vector<WindowSpec> psm_specs = DefaultWindowSpecs();
  double iou_threshold = kDefaultIouThreshold;
  FusionConfig fusion;

  int patch_count() const;
  // Requires six patches in total and a seven-token fusion stack.
  void Validate() const;
  nlohmann::json ToJson() const;
  static DetectorConfig FromJson(const nlohmann::json& j);
  friend bool operator==(const DetectorConfig&, const DetectorConfig&) = default;
};

struct Detection {
  double score = 0.0;  // fake probability
  double logit = 0.0;
  std::vector<PatchProposal> proposals;
};

struct DetectorGradients {
  std::vector<float> global;
  std::vector<float> local;
  std::vector<double> fusion;

  void SetZero();
  void Add(const DetectorGradients& other);
};

// Everything Backward needs from one Forward call.
struct DetectorTrace {
  BackboneTrace global;
  BackboneTrace local;
  FusionTrace fusion;
  // Patch k was computed as unique local input patch_source[k]; patches with
  // identical crop rectangles share one backbone pass.
  std::vector<int> patch_source;
  int unique_patches = 0;
};

class DetectorModel {
 public:
  static constexpr std::uint32_t kFormatVersion = 1;

  DetectorModel(DetectorConfig config, std::uint64_t seed);

  const DetectorConfig& config() const { return config_; }
  const Backbone& global_backbone() const { return global_; }
  const Backbone& local_backbone() const { return local_ ? *local_ : global_; }
  const FusionStack& fusion() const { return fusion_; }
  Backbone& global_backbone() { return global_; }
  Backbone& local_backbone() { return local_ ? *local_ : global_; }
  FusionStack& fusion() { return fusion_; }
  bool shares_weights() const { return !local_.has_value(); }

  // Resize to 224 -> global branch -> patch selection on the original image
  // -> local branch -> fusion -> classifier.
  Detection Forward(const Image& image, DetectorTrace* trace = nullptr) const;

  // Backpropagates d(loss)/d(logit). Patch coordinates are treated as
  // constants; pixel values of the patches carry gradient to the local branch.
  void Backward(const DetectorTrace& trace, double d_logit,
                DetectorGradients& grads) const;

  DetectorGradients ZeroGradients() const;

  void Save(const std::filesystem::path& path) const;
  static DetectorModel Load(const std::filesystem::path& path);

  friend bool operator==(const DetectorModel& a, const DetectorModel& b);

 private:
  DetectorConfig config_;
  Backbone global_;
  std::optional<Backbone> local_;
  FusionStack fusion_;
};

}  // namespace gldet

#endif  // GLDET_DETECTOR_HPP_
