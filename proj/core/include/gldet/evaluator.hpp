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

#ifndef GLDET_EVALUATOR_HPP_
#define GLDET_EVALUATOR_HPP_

#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "gldet/dataset.hpp"
#include "gldet/detector.hpp"

namespace gldet {

// Non-interpolated average precision: rank by descending score (ties keep
// input order) and average the precision at the rank of every positive.
// Labels are 0 or 1; both classes must be present.
double AveragePrecision(std::span<const double> scores, std::span<const int> labels);

struct ScoredImage {
  std::string path;
  Label label = Label::kReal;
  std::string family;
  std::string model;
  double score = 0.0;
  std::vector<PatchProposal> proposals;
};

using ImageTransform = std::function<Image(const Image&)>;

// Scores every manifest entry in manifest order. `transform` (optional) is
// applied to each decoded image before the detector sees it.
std::vector<ScoredImage> ScoreManifest(const DetectorModel& model,
                                       const std::filesystem::path& manifest,
                                       int workers,
                                       const ImageTransform& transform = {});

double GlobalAp(const std::vector<ScoredImage>& scored);

struct RobustnessSweepConfig {
  std::vector<double> blur_sigmas = {0, 1, 2, 3};
  std::vector<int> jpeg_qualities = {100, 90, 70, 50, 30};
  void Validate() const;
};

struct CurvePoint {
  double parameter = 0.0;
  double global_ap = 0.0;
};

struct RobustnessCurves {
  double unperturbed_global_ap = 0.0;
  std::vector<CurvePoint> blur;
  std::vector<CurvePoint> jpeg;
};

struct EvalReport {
  std::map<std::string, double> per_model_ap;
  std::map<std::string, double> per_family_map;
  std::vector<std::string> undefined_models;
  std::vector<std::string> undefined_families;
  std::optional<double> total_map;
  double global_ap = 0.0;
  std::optional<RobustnessCurves> robustness;
  int n_images = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<std::string> warnings;

  nlohmann::json ToJson() const;
};

// Per-model AP over the entries sharing a `model` value, family mAP as the
// unweighted mean of its models, total mAP as the unweighted mean over
// families, and global AP over everything. Groups lacking a class are
// reported as undefined and left out of the means.
EvalReport BuildReport(const std::vector<ScoredImage>& scored);

EvalReport Evaluate(const DetectorModel& model, const std::filesystem::path& manifest,
                    int workers);

RobustnessCurves RobustnessSweep(const DetectorModel& model,
                                 const std::filesystem::path& manifest,
                                 const RobustnessSweepConfig& cfg, int workers);

// JSON Lines with path, label, family, model and score (round-trip exact).
void WriteScoreDump(const std::filesystem::path& path,
                    const std::vector<ScoredImage>& scored);
std::vector<ScoredImage> ReadScoreDump(const std::filesystem::path& path);

void WriteReport(const std::filesystem::path& path, const EvalReport& report);

// Two-column CSV files (parameter,global_ap) for external plotting.
void WriteCurveCsv(const std::filesystem::path& path, const char* parameter_name,
                   const std::vector<CurvePoint>& curve);

}  // namespace gldet

#endif  // GLDET_EVALUATOR_HPP_
