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

#ifndef GLDET_DATASET_HPP_
#define GLDET_DATASET_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "gldet/image.hpp"
#include "gldet/types.hpp"

namespace gldet {

// One line of a manifest. Reals carry the `model` of the fakes they are
// paired with so per-model AP has negatives.
struct ManifestEntry {
  std::string path;
  Label label = Label::kReal;
  std::string family;
  std::string model;
  friend bool operator==(const ManifestEntry&, const ManifestEntry&) = default;
};

// Manifests are JSON Lines: one object per line with the keys "path",
// "label" (0 or 1), "family" and "model". Blank lines are ignored. Relative
// paths are resolved against the manifest's directory.
std::vector<ManifestEntry> ReadManifest(const std::filesystem::path& path);
void WriteManifest(const std::filesystem::path& path,
                   const std::vector<ManifestEntry>& entries);

std::filesystem::path ResolveEntryPath(const std::filesystem::path& manifest,
                                       const ManifestEntry& entry);

struct ArtifactRecord {
  std::string path;
  Rect rect;
};

std::vector<ArtifactRecord> ReadArtifactSidecar(
    const std::filesystem::path& path);

struct ToyGenConfig {
  int image_size = 224;
  int artifact_size = 16;
  int n_real = 1000;
  int n_fake = 1000;
  std::uint64_t seed = 0;

  void Validate() const;
};

// File names written by GenerateToyDataset inside the output directory.
inline constexpr const char* kToyManifestName = "manifest.jsonl";
inline constexpr const char* kToySidecarName = "artifacts.jsonl";

// Writes real images (smooth random colour fields), fake images (the field
// with the same index plus a planted grey checkerboard of artifact_size
// pixels) and the manifest and artifact sidecar. Returns the manifest path.
std::filesystem::path GenerateToyDataset(const ToyGenConfig& cfg,
                                         const std::filesystem::path& out_dir);

// The image content used by the generator, exposed for tests.
Image ToyField(const ToyGenConfig& cfg, int index);
Rect ToyArtifactRect(const ToyGenConfig& cfg, int index);
void PlantCheckerboard(Image& image, const Rect& rect);

}  // namespace gldet

#endif  // GLDET_DATASET_HPP_
