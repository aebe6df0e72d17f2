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

#include "gldet/psm.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "gldet/error.hpp"

namespace gldet {

void WindowSpec::Validate() const {
  if (height < 1 || width < 1 || stride < 1 || n_select < 1 || patch_px < 1) {
    throw ArgumentError("window spec fields must be positive");
  }
}

std::vector<WindowSpec> DefaultWindowSpecs() {
  return {{3, 3, 1, 3, 224}, {2, 2, 1, 3, 112}};
}

ActivationMap ComputeActivationMap(const FeatureMap& features) {
  ActivationMap a;
  a.height = features.height;
  a.width = features.width;
  const std::size_t plane = static_cast<std::size_t>(a.height) * a.width;
  a.data.assign(plane, 0.0);
  for (int c = 0; c < features.channels; ++c) {
    const float* src = features.data.data() + c * plane;
    for (std::size_t p = 0; p < plane; ++p) a.data[p] += src[p];
  }
  return a;
}

std::vector<WindowScore> WindowScores(const ActivationMap& map, const WindowSpec& spec) {
  spec.Validate();
  if (spec.height > map.height || spec.width > map.width) {
    throw ArgumentError("window " + std::to_string(spec.height) + "x" +
                        std::to_string(spec.width) + " does not fit a " +
                        std::to_string(map.height) + "x" +
                        std::to_string(map.width) + " activation map");
  }
  // Summed-area table with a zero first row and column.
  const int w1 = map.width + 1;
  std::vector<double> sat(static_cast<std::size_t>(map.height + 1) * w1, 0.0);
  for (int y = 0; y < map.height; ++y) {
    double row = 0.0;
    for (int x = 0; x < map.width; ++x) {
      row += map.at(y, x);
      sat[(y + 1) * w1 + x + 1] = sat[y * w1 + x + 1] + row;
    }
  }
  const double area = static_cast<double>(spec.height) * spec.width;
  std::vector<WindowScore> out;
  for (int y = 0; y + spec.height <= map.height; y += spec.stride) {
    for (int x = 0; x + spec.width <= map.width; x += spec.stride) {
      const int y1 = y + spec.height;
      const int x1 = x + spec.width;
      const double sum = sat[y1 * w1 + x1] - sat[y * w1 + x1] - sat[y1 * w1 + x] + sat[y * w1 + x];
      out.push_back({x, y, sum / area});
    }
  }
  return out;
}

double WindowIou(const PatchProposal& a, const PatchProposal& b) {
  const int ix = std::max(0, std::min(a.window_x + a.spec.width, b.window_x + b.spec.width) -
                                 std::max(a.window_x, b.window_x));
  const int iy = std::max(0, std::min(a.window_y + a.spec.height, b.window_y + b.spec.height) -
                                 std::max(a.window_y, b.window_y));
  const double inter = static_cast<double>(ix) * iy;
  const double uni = static_cast<double>(a.spec.width) * a.spec.height +
                     static_cast<double>(b.spec.width) * b.spec.height - inter;
  return uni > 0.0 ? inter / uni : 0.0;
}

std::vector<PatchProposal> NonMaxSuppression(std::vector<PatchProposal> proposals,
                                             double iou_threshold, int n_select) {
  std::stable_sort(proposals.begin(), proposals.end(),
                   [](const PatchProposal& a, const PatchProposal& b) {
                     if (a.score != b.score) return a.score > b.score;
                     if (a.window_y != b.window_y) return a.window_y < b.window_y;
                     return a.window_x < b.window_x;
                   });
  std::vector<PatchProposal> kept;
  std::vector<bool> removed(proposals.size(), false);
  for (std::size_t i = 0; i < proposals.size() && static_cast<int>(kept.size()) < n_select; ++i) {
    if (removed[i]) continue;
    kept.push_back(proposals[i]);
    for (std::size_t j = i + 1; j < proposals.size(); ++j) {
      if (!removed[j] && WindowIou(proposals[i], proposals[j]) > iou_threshold) {
        removed[j] = true;
      }
    }
  }
  return kept;
}

namespace {

// Places a `size`-long span centred at `centre` inside [0, limit).
std::pair<int, int> FitSpan(double centre, int size, int limit) {
  if (size >= limit) return {0, limit};
  const int start = static_cast<int>(std::lround(centre - size / 2.0));
  return {std::clamp(start, 0, limit - size), size};
}

}  // namespace

PatchProposal MapToImage(PatchProposal p, ImageSize original, ImageSize map_size) {
  const double cx = p.window_x + p.spec.width / 2.0;
  const double cy = p.window_y + p.spec.height / 2.0;
  const double px = cx * original.width / map_size.width;
  const double py = cy * original.height / map_size.height;
  const auto [x, w] = FitSpan(px, p.spec.patch_px, original.width);
  const auto [y, h] = FitSpan(py, p.spec.patch_px, original.height);
  p.crop_rect = {x, y, w, h};
  return p;
}

std::vector<PatchProposal> SelectProposals(const ActivationMap& map, ImageSize original,
                                           const std::vector<WindowSpec>& specs,
                                           double iou_threshold) {
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ArgumentError("iou threshold must be in [0, 1]");
  }
  std::vector<PatchProposal> out;
  for (const WindowSpec& spec : specs) {
    std::vector<PatchProposal> candidates;
    for (const WindowScore& s : WindowScores(map, spec)) {
      candidates.push_back({s.x, s.y, spec, s.score, {}});
    }
    std::vector<PatchProposal> kept =
        NonMaxSuppression(std::move(candidates), iou_threshold, spec.n_select);
    const PatchProposal best = kept.front();
    while (static_cast<int>(kept.size()) < spec.n_select) kept.push_back(best);
    for (PatchProposal& p : kept) {
      out.push_back(MapToImage(p, original, {map.width, map.height}));
    }
  }
  return out;
}

PatchSelection SelectPatches(const FeatureMap& features, const Image& original,
                             const std::vector<WindowSpec>& specs,
                             double iou_threshold, int patch_input) {
  features.Validate();
  PatchSelection sel;
  sel.proposals = SelectProposals(ComputeActivationMap(features), original.size(),
                                  specs, iou_threshold);
  sel.patches.reserve(sel.proposals.size());
  for (const PatchProposal& p : sel.proposals) {
    sel.patches.push_back(
        ResizeBilinear(Crop(original, p.crop_rect), {patch_input, patch_input}));
  }
  return sel;
}

void WriteProposalRecord(std::ostream& out, const std::string& path,
                         const std::vector<PatchProposal>& proposals) {
  nlohmann::json rec;
  rec["path"] = path;
  rec["proposals"] = nlohmann::json::array();
  for (const PatchProposal& p : proposals) {
    rec["proposals"].push_back({{"window_x", p.window_x},
                                {"window_y", p.window_y},
                                {"window_h", p.spec.height},
                                {"window_w", p.spec.width},
                                {"score", p.score},
                                {"x", p.crop_rect.x},
                                {"y", p.crop_rect.y},
                                {"w", p.crop_rect.w},
                                {"h", p.crop_rect.h}});
  }
  out << rec.dump() << '\n';
}

}  // namespace gldet
