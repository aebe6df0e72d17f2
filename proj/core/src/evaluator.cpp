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

#include "gldet/evaluator.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <set>

#include "gldet/augment.hpp"
#include "gldet/error.hpp"
#include "gldet/parallel.hpp"

namespace gldet {

namespace fs = std::filesystem;
using json = nlohmann::json;

double AveragePrecision(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw ArgumentError("scores and labels differ in length");
  }
  std::size_t positives = 0;
  for (int l : labels) {
    if (l != 0 && l != 1) throw ArgumentError("labels must be 0 or 1");
    positives += static_cast<std::size_t>(l);
  }
  if (positives == 0 || positives == labels.size()) {
    throw UndefinedMetricError("average precision needs both positive and negative labels");
  }
  std::vector<std::size_t> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  double sum = 0.0;
  std::size_t hits = 0;
  for (std::size_t rank = 0; rank < order.size(); ++rank) {
    if (labels[order[rank]] == 1) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(rank + 1);
    }
  }
  return sum / static_cast<double>(positives);
}

std::vector<ScoredImage> ScoreManifest(const DetectorModel& model,
                                       const fs::path& manifest, int workers,
                                       const ImageTransform& transform) {
  const std::vector<ManifestEntry> entries = ReadManifest(manifest);
  std::vector<ScoredImage> out(entries.size());
  ParallelFor(entries.size(), workers, [&](int, std::size_t i) {
    const ManifestEntry& e = entries[i];
    Image img = LoadImage(ResolveEntryPath(manifest, e));
    if (transform) img = transform(img);
    Detection d = model.Forward(img);
    out[i] = {e.path, e.label, e.family, e.model, d.score, std::move(d.proposals)};
  });
  return out;
}

namespace {

double ApOf(const std::vector<const ScoredImage*>& group) {
  std::vector<double> s;
  std::vector<int> l;
  for (const ScoredImage* x : group) {
    s.push_back(x->score);
    l.push_back(static_cast<int>(x->label));
  }
  return AveragePrecision(s, l);
}

}  // namespace

double GlobalAp(const std::vector<ScoredImage>& scored) {
  std::vector<const ScoredImage*> all;
  for (const ScoredImage& s : scored) all.push_back(&s);
  return ApOf(all);
}

void RobustnessSweepConfig::Validate() const {
  for (double s : blur_sigmas) {
    if (!(s >= 0.0)) throw ArgumentError("blur sigmas must be >= 0");
  }
  for (int q : jpeg_qualities) {
    if (q < 1 || q > 100) throw ArgumentError("jpeg qualities must be in [1, 100]");
  }
}

EvalReport BuildReport(const std::vector<ScoredImage>& scored) {
  EvalReport r;
  r.n_images = static_cast<int>(scored.size());

  std::map<std::string, std::string> model_family;
  std::map<std::string, std::vector<const ScoredImage*>> by_model;
  for (const ScoredImage& s : scored) {
    auto [it, inserted] = model_family.emplace(s.model, s.family);
    if (!inserted && it->second != s.family) {
      throw ValidationError("model '" + s.model + "' appears in families '" +
                            it->second + "' and '" + s.family + "'");
    }
    by_model[s.model].push_back(&s);
  }

  std::map<std::string, std::vector<double>> family_aps;
  std::set<std::string> families;
  for (const auto& [model, group] : by_model) {
    const std::string& family = model_family[model];
    families.insert(family);
    try {
      const double ap = ApOf(group);
      r.per_model_ap[model] = ap;
      family_aps[family].push_back(ap);
    } catch (const UndefinedMetricError&) {
      r.undefined_models.push_back(model);
      r.warnings.push_back("model '" + model + "' lacks positives or negatives; AP undefined");
    }
  }
  std::vector<double> maps;
  for (const std::string& family : families) {
    auto it = family_aps.find(family);
    if (it == family_aps.end()) {
      r.undefined_families.push_back(family);
      r.warnings.push_back("family '" + family +
                           "' has no model with a defined AP; excluded from total mAP");
      continue;
    }
    const double m = std::accumulate(it->second.begin(), it->second.end(), 0.0) /
                     static_cast<double>(it->second.size());
    r.per_family_map[family] = m;
    maps.push_back(m);
  }
  if (!maps.empty()) {
    r.total_map = std::accumulate(maps.begin(), maps.end(), 0.0) / static_cast<double>(maps.size());
  }
  r.global_ap = GlobalAp(scored);
  return r;
}

EvalReport Evaluate(const DetectorModel& model, const fs::path& manifest, int workers) {
  EvalReport r = BuildReport(ScoreManifest(model, manifest, workers));
  r.config = {{"manifest", manifest.string()}, {"model", model.config().ToJson()}};
  return r;
}

RobustnessCurves RobustnessSweep(const DetectorModel& model, const fs::path& manifest,
                                 const RobustnessSweepConfig& cfg, int workers) {
  cfg.Validate();
  RobustnessCurves curves;
  curves.unperturbed_global_ap = GlobalAp(ScoreManifest(model, manifest, workers));
  for (double sigma : cfg.blur_sigmas) {
    curves.blur.push_back(
        {sigma, GlobalAp(ScoreManifest(model, manifest, workers, [sigma](const Image& img) {
           return GaussianBlur(img, sigma);
         }))});
  }
  for (int q : cfg.jpeg_qualities) {
    curves.jpeg.push_back(
        {static_cast<double>(q),
         GlobalAp(ScoreManifest(model, manifest, workers,
                                [q](const Image& img) { return JpegCompress(img, q); }))});
  }
  return curves;
}

json EvalReport::ToJson() const {
  json j;
  j["n_images"] = n_images;
  j["per_model_ap"] = per_model_ap;
  j["per_family_map"] = per_family_map;
  j["undefined_models"] = undefined_models;
  j["undefined_families"] = undefined_families;
  j["total_map"] = total_map ? json(*total_map) : json(nullptr);
  j["global_ap"] = global_ap;
  if (robustness) {
    auto curve = [](const std::vector<CurvePoint>& c) {
      json a = json::array();
      for (const CurvePoint& p : c) a.push_back({p.parameter, p.global_ap});
      return a;
    };
    j["robustness_curves"] = {{"unperturbed_global_ap", robustness->unperturbed_global_ap},
                              {"blur_sigma", curve(robustness->blur)},
                              {"jpeg_quality", curve(robustness->jpeg)}};
  }
  j["config"] = config;
  j["warnings"] = warnings;
  return j;
}

void WriteScoreDump(const fs::path& path, const std::vector<ScoredImage>& scored) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  for (const ScoredImage& s : scored) {
    out << json{{"path", s.path},
                {"label", static_cast<int>(s.label)},
                {"family", s.family},
                {"model", s.model},
                {"score", s.score}}
               .dump()
        << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

std::vector<ScoredImage> ReadScoreDump(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::vector<ScoredImage> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      ScoredImage s;
      s.path = j.at("path").get<std::string>();
      s.label = static_cast<Label>(j.at("label").get<int>());
      s.family = j.at("family").get<std::string>();
      s.model = j.at("model").get<std::string>();
      s.score = j.at("score").get<double>();
      out.push_back(std::move(s));
    } catch (const json::exception& e) {
      throw SchemaError("score dump '" + path.string() + "': " + e.what());
    }
  }
  return out;
}

void WriteReport(const fs::path& path, const EvalReport& report) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << report.ToJson().dump(2) << '\n';
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

void WriteCurveCsv(const fs::path& path, const char* parameter_name,
                   const std::vector<CurvePoint>& curve) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out.precision(17);
  out << parameter_name << ",global_ap\n";
  for (const CurvePoint& p : curve) out << p.parameter << ',' << p.global_ap << '\n';
}

}  // namespace gldet
