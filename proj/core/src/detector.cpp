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

#include "gldet/detector.hpp"

#include <algorithm>

#include "gldet/checkpoint.hpp"
#include "gldet/error.hpp"

namespace gldet {

using json = nlohmann::json;

int DetectorConfig::patch_count() const {
  int n = 0;
  for (const WindowSpec& s : psm_specs) n += s.n_select;
  return n;
}

void DetectorConfig::Validate() const {
  backbone.Validate();
  fusion.Validate();
  for (const WindowSpec& s : psm_specs) s.Validate();
  if (patch_count() != 6) {
    throw ArgumentError("patch selection must yield exactly 6 patches, got " +
                        std::to_string(patch_count()));
  }
  if (fusion.tokens != 1 + patch_count()) {
    throw ArgumentError("fusion token count must be 1 + number of patches");
  }
  if (fusion.d_model != backbone.embedding_dim) {
    throw ArgumentError("fusion d_model must equal the embedding dimension");
  }
  if (!(iou_threshold >= 0.0 && iou_threshold <= 1.0)) {
    throw ArgumentError("iou threshold must be in [0, 1]");
  }
}

json DetectorConfig::ToJson() const {
  json specs = json::array();
  for (const WindowSpec& s : psm_specs) {
    specs.push_back({{"height", s.height},
                     {"width", s.width},
                     {"stride", s.stride},
                     {"n_select", s.n_select},
                     {"patch_px", s.patch_px}});
  }
  return {{"backbone",
           {{"architecture", backbone.architecture},
            {"embedding_dim", backbone.embedding_dim},
            {"shared_local_weights", backbone.shared_local_weights}}},
          {"psm_specs", specs},
          {"iou_threshold", iou_threshold},
          {"fusion",
           {{"d_model", fusion.d_model},
            {"heads", fusion.heads},
            {"layers", fusion.layers},
            {"tokens", fusion.tokens},
            {"pooling", ToString(fusion.pooling)},
            {"residual_norm", fusion.residual_norm},
            {"scale_by_head_dim", fusion.scale_by_head_dim}}}};
}

DetectorConfig DetectorConfig::FromJson(const json& j) {
  DetectorConfig c;
  const json& b = j.at("backbone");
  c.backbone.architecture = b.at("architecture").get<std::string>();
  c.backbone.embedding_dim = b.at("embedding_dim").get<int>();
  c.backbone.shared_local_weights = b.at("shared_local_weights").get<bool>();
  c.psm_specs.clear();
  for (const json& s : j.at("psm_specs")) {
    c.psm_specs.push_back({s.at("height").get<int>(), s.at("width").get<int>(),
                           s.at("stride").get<int>(), s.at("n_select").get<int>(),
                           s.at("patch_px").get<int>()});
  }
  c.iou_threshold = j.at("iou_threshold").get<double>();
  const json& f = j.at("fusion");
  c.fusion.d_model = f.at("d_model").get<int>();
  c.fusion.heads = f.at("heads").get<int>();
  c.fusion.layers = f.at("layers").get<int>();
  c.fusion.tokens = f.at("tokens").get<int>();
  c.fusion.pooling = ParseFusionPooling(f.at("pooling").get<std::string>());
  c.fusion.residual_norm = f.at("residual_norm").get<bool>();
  c.fusion.scale_by_head_dim = f.at("scale_by_head_dim").get<bool>();
  return c;
}

void DetectorGradients::SetZero() {
  std::fill(global.begin(), global.end(), 0.0f);
  std::fill(local.begin(), local.end(), 0.0f);
  std::fill(fusion.begin(), fusion.end(), 0.0);
}

void DetectorGradients::Add(const DetectorGradients& o) {
  for (std::size_t i = 0; i < global.size(); ++i) global[i] += o.global[i];
  for (std::size_t i = 0; i < local.size(); ++i) local[i] += o.local[i];
  for (std::size_t i = 0; i < fusion.size(); ++i) fusion[i] += o.fusion[i];
}

namespace {

DetectorConfig Validated(DetectorConfig c) {
  c.Validate();
  return c;
}

}  // namespace

DetectorModel::DetectorModel(DetectorConfig config, std::uint64_t seed)
    : config_(Validated(std::move(config))),
      global_(config_.backbone, DeriveSeed(seed, {1})),
      fusion_(config_.fusion, DeriveSeed(seed, {3})) {
  if (!config_.backbone.shared_local_weights) {
    local_.emplace(config_.backbone, DeriveSeed(seed, {2}));
  }
}

DetectorGradients DetectorModel::ZeroGradients() const {
  DetectorGradients g;
  g.global.assign(global_.parameters().size(), 0.0f);
  if (local_) g.local.assign(local_->parameters().size(), 0.0f);
  g.fusion.assign(fusion_.parameters().size(), 0.0);
  return g;
}

Detection DetectorModel::Forward(const Image& image, DetectorTrace* trace) const {
  image.Validate();
  const int n = Backbone::kInputSize;
  const Image resized = ResizeBilinear(image, {n, n});
  const Image* global_in = &resized;
  const BackboneOutput global =
      std::move(global_.Forward(std::span<const Image* const>(&global_in, 1),
                                EmbeddingKind::kGlobal,
                                trace != nullptr ? &trace->global : nullptr)
                    .front());

  PatchSelection sel = SelectPatches(global.feature_map, image, config_.psm_specs,
                                     config_.iou_threshold, n);

  std::vector<int> source(sel.proposals.size());
  std::vector<const Image*> unique;
  std::vector<Rect> unique_rects;
  for (std::size_t k = 0; k < sel.proposals.size(); ++k) {
    const Rect& r = sel.proposals[k].crop_rect;
    auto it = std::find(unique_rects.begin(), unique_rects.end(), r);
    if (it == unique_rects.end()) {
      source[k] = static_cast<int>(unique.size());
      unique.push_back(&sel.patches[k]);
      unique_rects.push_back(r);
    } else {
      source[k] = static_cast<int>(it - unique_rects.begin());
    }
  }
  const std::vector<BackboneOutput> local = local_backbone().Forward(
      unique, EmbeddingKind::kPatch, trace != nullptr ? &trace->local : nullptr);

  EmbeddingSet set;
  set.global = global.embedding;
  for (int s : source) set.patches.push_back(local[s].embedding);
  if (1 + static_cast<int>(set.patches.size()) != config_.fusion.tokens) {
    throw ArgumentError("patch selection produced the wrong number of patches");
  }

  Detection d;
  d.logit = fusion_.Logit(TokensFromEmbeddings(set),
                          trace != nullptr ? &trace->fusion : nullptr);
  d.score = Sigmoid(d.logit);
  d.proposals = std::move(sel.proposals);
  if (trace != nullptr) {
    trace->patch_source = std::move(source);
    trace->unique_patches = static_cast<int>(unique.size());
  }
  return d;
}

void DetectorModel::Backward(const DetectorTrace& trace, double d_logit,
                             DetectorGradients& grads) const {
  Matrix d_tokens;
  fusion_.Backward(trace.fusion, d_logit, grads.fusion, &d_tokens);
  const int e = config_.backbone.embedding_dim;

  std::vector<float> d_global(e);
  for (int c = 0; c < e; ++c) d_global[c] = static_cast<float>(d_tokens(0, c));
  std::vector<float> d_local(static_cast<std::size_t>(trace.unique_patches) * e, 0.0f);
  for (std::size_t k = 0; k < trace.patch_source.size(); ++k) {
    float* dst = d_local.data() + static_cast<std::size_t>(trace.patch_source[k]) * e;
    for (int c = 0; c < e; ++c) dst[c] += static_cast<float>(d_tokens(1 + k, c));
  }

  global_.Backward(trace.global, d_global, grads.global);
  std::span<float> local_grad = local_ ? std::span<float>(grads.local)
                                       : std::span<float>(grads.global);
  local_backbone().Backward(trace.local, d_local, local_grad);
}

void DetectorModel::Save(const std::filesystem::path& path) const {
  TensorArchive archive;
  archive.meta = {{"format", "gldet-detector"},
                  {"format_version", kFormatVersion},
                  {"token_count", config_.fusion.tokens},
                  {"config", config_.ToJson()}};
  archive.AddParameters("global.", global_.parameters());
  if (local_) archive.AddParameters("local.", local_->parameters());
  archive.AddParameters("fusion.", fusion_.parameters());
  WriteArchive(path, archive);
}

DetectorModel DetectorModel::Load(const std::filesystem::path& path) {
  const TensorArchive archive = ReadArchive(path);
  const std::string where = " in '" + path.string() + "'";
  DetectorConfig config;
  try {
    if (archive.meta.at("format").get<std::string>() != "gldet-detector") {
      throw FormatError("not a detector checkpoint" + where);
    }
    const auto version = archive.meta.at("format_version").get<std::uint32_t>();
    if (version != kFormatVersion) {
      throw FormatError("unsupported detector format version " +
                        std::to_string(version) + where);
    }
    config = DetectorConfig::FromJson(archive.meta.at("config"));
    const int tokens = archive.meta.at("token_count").get<int>();
    if (tokens != config.fusion.tokens || tokens != 1 + config.patch_count()) {
      throw FormatError("token count " + std::to_string(tokens) +
                        " does not match the patch configuration" + where);
    }
    config.Validate();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed detector metadata: ") + e.what() + where);
  } catch (const ArgumentError& e) {
    throw FormatError(std::string("incompatible detector config: ") + e.what() + where);
  }

  DetectorModel model(config, 0);
  std::size_t expected = model.global_.parameters().entries().size() +
                         model.fusion_.parameters().entries().size();
  if (model.local_) expected += model.local_->parameters().entries().size();
  if (archive.tensors.size() != expected) {
    throw FormatError("checkpoint has " + std::to_string(archive.tensors.size()) +
                      " tensors, expected " + std::to_string(expected) + where);
  }
  archive.LoadParameters("global.", model.global_.parameters());
  if (model.local_) archive.LoadParameters("local.", model.local_->parameters());
  archive.LoadParameters("fusion.", model.fusion_.parameters());
  return model;
}

bool operator==(const DetectorModel& a, const DetectorModel& b) {
  if (!(a.config_ == b.config_)) return false;
  if (!(a.global_.parameters() == b.global_.parameters())) return false;
  if (a.local_.has_value() != b.local_.has_value()) return false;
  if (a.local_ && !(a.local_->parameters() == b.local_->parameters())) return false;
  return a.fusion_.parameters() == b.fusion_.parameters();
}

}  // namespace gldet
