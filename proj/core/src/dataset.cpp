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

#include "gldet/dataset.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include <nlohmann/json.hpp>

#include "gldet/error.hpp"
#include "gldet/rng.hpp"

namespace gldet {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

bool IsBlank(const std::string& line) {
  return line.find_first_not_of(" \t\r\n") == std::string::npos;
}

const json& RequireField(const json& rec, const char* key, size_t line_no) {
  auto it = rec.find(key);
  if (it == rec.end()) {
    throw SchemaError("line " + std::to_string(line_no) + ": missing field '" +
                      key + "'");
  }
  return *it;
}

std::string RequireString(const json& rec, const char* key, size_t line_no) {
  const json& v = RequireField(rec, key, line_no);
  if (!v.is_string()) {
    throw SchemaError("line " + std::to_string(line_no) + ": field '" + key +
                      "' must be a string");
  }
  return v.get<std::string>();
}

}  // namespace

std::vector<ManifestEntry> ReadManifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest '" + path.string() + "'");
  std::vector<ManifestEntry> entries;
  std::set<std::string> seen;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    json rec;
    try {
      rec = json::parse(line);
    } catch (const json::parse_error& e) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": not a JSON record: " + e.what());
    }
    if (!rec.is_object()) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": record must be an object");
    }
    ManifestEntry e;
    e.path = RequireString(rec, "path", line_no);
    const json& label = RequireField(rec, "label", line_no);
    if (!label.is_number_integer() || (label.get<int>() != 0 && label.get<int>() != 1)) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": label must be 0 or 1");
    }
    e.label = static_cast<Label>(label.get<int>());
    e.family = RequireString(rec, "family", line_no);
    e.model = RequireString(rec, "model", line_no);
    if (e.family.empty()) {
      throw SchemaError("line " + std::to_string(line_no) +
                        ": family must be nonempty");
    }
    if (!seen.insert(e.path).second) {
      throw ValidationError("line " + std::to_string(line_no) +
                            ": duplicate path '" + e.path + "'");
    }
    entries.push_back(std::move(e));
  }
  if (in.bad()) throw IoError("error reading manifest '" + path.string() + "'");
  return entries;
}

void WriteManifest(const fs::path& path,
                   const std::vector<ManifestEntry>& entries) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write manifest '" + path.string() + "'");
  for (const ManifestEntry& e : entries) {
    json rec = {{"path", e.path},
                {"label", static_cast<int>(e.label)},
                {"family", e.family},
                {"model", e.model}};
    out << rec.dump() << '\n';
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

fs::path ResolveEntryPath(const fs::path& manifest, const ManifestEntry& entry) {
  fs::path p(entry.path);
  if (p.is_absolute()) return p;
  return manifest.parent_path() / p;
}

std::vector<ArtifactRecord> ReadArtifactSidecar(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open sidecar '" + path.string() + "'");
  std::vector<ArtifactRecord> out;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (IsBlank(line)) continue;
    json rec;
    try {
      rec = json::parse(line);
      out.push_back({rec.at("path").get<std::string>(),
                     {rec.at("x").get<int>(), rec.at("y").get<int>(),
                      rec.at("w").get<int>(), rec.at("h").get<int>()}});
    } catch (const json::exception& e) {
      throw SchemaError("sidecar line " + std::to_string(line_no) + ": " +
                        e.what());
    }
  }
  return out;
}

void ToyGenConfig::Validate() const {
  if (image_size <= 0) throw ArgumentError("toy image_size must be positive");
  if (artifact_size <= 0 || artifact_size >= image_size) {
    throw ArgumentError("toy artifact_size must satisfy 0 < artifact_size < image_size");
  }
  if (n_real < 0 || n_fake < 0) {
    throw ArgumentError("toy image counts must be non-negative");
  }
}

namespace {

constexpr int kFieldGrid = 6;

double SmoothStep(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Image ToyField(const ToyGenConfig& cfg, int index) {
  Rng rng = MakeRng(cfg.seed, {static_cast<std::uint64_t>(index), 0});
  std::uniform_real_distribution<double> level(0.15, 0.85);
  const int g = kFieldGrid;
  std::vector<double> grid(static_cast<size_t>(Image::kChannels) * g * g);
  for (double& v : grid) v = level(rng);

  const int n = cfg.image_size;
  Image img(n, n);
  const double cell = static_cast<double>(n) / (g - 1);
  for (int c = 0; c < Image::kChannels; ++c) {
    const double* gc = grid.data() + static_cast<size_t>(c) * g * g;
    for (int y = 0; y < n; ++y) {
      const double fy = (y + 0.5) / cell;
      const int y0 = std::min(static_cast<int>(fy), g - 2);
      const double ty = SmoothStep(fy - y0);
      for (int x = 0; x < n; ++x) {
        const double fx = (x + 0.5) / cell;
        const int x0 = std::min(static_cast<int>(fx), g - 2);
        const double tx = SmoothStep(fx - x0);
        const double top = gc[y0 * g + x0] * (1 - tx) + gc[y0 * g + x0 + 1] * tx;
        const double bot =
            gc[(y0 + 1) * g + x0] * (1 - tx) + gc[(y0 + 1) * g + x0 + 1] * tx;
        img.at(c, y, x) = static_cast<float>(top * (1 - ty) + bot * ty);
      }
    }
  }
  return img;
}

Rect ToyArtifactRect(const ToyGenConfig& cfg, int index) {
  Rng rng = MakeRng(cfg.seed, {static_cast<std::uint64_t>(index), 1});
  std::uniform_int_distribution<int> pos(0, cfg.image_size - cfg.artifact_size);
  const int x = pos(rng);
  const int y = pos(rng);
  return {x, y, cfg.artifact_size, cfg.artifact_size};
}

void PlantCheckerboard(Image& image, const Rect& rect) {
  for (int y = rect.y; y < rect.y + rect.h; ++y) {
    for (int x = rect.x; x < rect.x + rect.w; ++x) {
      const float v = ((x + y) & 1) ? 0.8f : 0.2f;
      for (int c = 0; c < Image::kChannels; ++c) image.at(c, y, x) = v;
    }
  }
}

fs::path GenerateToyDataset(const ToyGenConfig& cfg, const fs::path& out_dir) {
  cfg.Validate();
  try {
    fs::create_directories(out_dir / "real");
    fs::create_directories(out_dir / "fake");
  } catch (const fs::filesystem_error& e) {
    throw IoError(std::string("cannot create toy dataset directory: ") + e.what());
  }

  std::vector<ManifestEntry> entries;
  entries.reserve(cfg.n_real + cfg.n_fake);
  char name[64];
  for (int i = 0; i < cfg.n_real; ++i) {
    std::snprintf(name, sizeof(name), "real/real_%05d.png", i);
    SavePng(ToyField(cfg, i), out_dir / name);
    entries.push_back({name, Label::kReal, "toy", "toy"});
  }

  const fs::path sidecar_path = out_dir / kToySidecarName;
  std::ofstream sidecar(sidecar_path, std::ios::trunc);
  if (!sidecar) throw IoError("cannot write '" + sidecar_path.string() + "'");
  for (int i = 0; i < cfg.n_fake; ++i) {
    std::snprintf(name, sizeof(name), "fake/fake_%05d.png", i);
    Image img = ToyField(cfg, i);
    const Rect r = ToyArtifactRect(cfg, i);
    PlantCheckerboard(img, r);
    SavePng(img, out_dir / name);
    entries.push_back({name, Label::kFake, "toy", "toy"});
    sidecar << json{{"path", name}, {"x", r.x}, {"y", r.y}, {"w", r.w}, {"h", r.h}}.dump()
            << '\n';
  }
  if (!sidecar) throw IoError("write failed for '" + sidecar_path.string() + "'");

  const fs::path manifest = out_dir / kToyManifestName;
  WriteManifest(manifest, entries);
  return manifest;
}

}  // namespace gldet
