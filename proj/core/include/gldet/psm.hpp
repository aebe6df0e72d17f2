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

#ifndef GLDET_PSM_HPP_
#define GLDET_PSM_HPP_

#include <ostream>
#include <string>
#include <vector>

#include "gldet/image.hpp"
#include "gldet/types.hpp"

namespace gldet {

// Sliding window over the activation map, in feature-map cells.
struct WindowSpec {
  int height = 3;
  int width = 3;
  int stride = 1;
  int n_select = 3;
  int patch_px = 224;  // side of the square crop in original-image pixels

  void Validate() const;
  friend bool operator==(const WindowSpec&, const WindowSpec&) = default;
};

// 3x3 windows -> three 224 px patches, 2x2 windows -> three 112 px patches.
std::vector<WindowSpec> DefaultWindowSpecs();

inline constexpr double kDefaultIouThreshold = 0.25;

struct ActivationMap {
  int height = 0;
  int width = 0;
  std::vector<double> data;  // row-major H x W

  double at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }
};

struct WindowScore {
  int x = 0;
  int y = 0;
  double score = 0.0;
};

struct PatchProposal {
  int window_x = 0;
  int window_y = 0;
  WindowSpec spec;
  double score = 0.0;
  Rect crop_rect;  // original-image pixels; set by MapToImage
};

// Channel sum of the feature map.
ActivationMap ComputeActivationMap(const FeatureMap& features);

// Mean activation of every window placement, row-major by (y, x).
std::vector<WindowScore> WindowScores(const ActivationMap& map, const WindowSpec& spec);

// IoU of the two windows' cell rectangles.
double WindowIou(const PatchProposal& a, const PatchProposal& b);

// Greedy NMS: repeatedly keeps the best remaining proposal (higher score,
// then smaller window_y, then smaller window_x) and drops proposals whose
// IoU with it exceeds `iou_threshold`, until n_select are kept.
std::vector<PatchProposal> NonMaxSuppression(std::vector<PatchProposal> proposals,
                                             double iou_threshold, int n_select);

// Scales the window centre from map cells to image pixels and places a
// patch_px square there, shifted (not shrunk) to fit inside the image.
PatchProposal MapToImage(PatchProposal proposal, ImageSize original, ImageSize map_size);

// Scores, suppresses and maps windows for each spec in order. A spec that
// yields fewer than n_select survivors is padded with copies of its best one.
std::vector<PatchProposal> SelectProposals(const ActivationMap& map,
                                           ImageSize original,
                                           const std::vector<WindowSpec>& specs,
                                           double iou_threshold);

struct PatchSelection {
  std::vector<Image> patches;  // each resized to patch_input x patch_input
  std::vector<PatchProposal> proposals;
};

PatchSelection SelectPatches(const FeatureMap& features, const Image& original,
                             const std::vector<WindowSpec>& specs,
                             double iou_threshold, int patch_input = 224);

// One JSON line: {"path", "proposals": [{window_x, window_y, window_h,
// window_w, score, x, y, w, h}, ...]}.
void WriteProposalRecord(std::ostream& out, const std::string& path,
                         const std::vector<PatchProposal>& proposals);

}  // namespace gldet

#endif  // GLDET_PSM_HPP_
