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

#include "gldet/cli/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "gldet/affm.hpp"
#include "gldet/error.hpp"
#include "gldet/parallel.hpp"

namespace gldet::cli {

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = Trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T ParseNumber(const std::string& key, const std::string& text) {
  T value{};
  const char* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw ArgumentError("config key '" + key + "': cannot parse '" + text + "'");
  }
  return value;
}

}  // namespace

ConfigStore::ConfigStore() {
  values_ = {
      {"seed", "0"},
      {"workers", std::to_string(DefaultWorkers())},
      {"toy.image_size", "224"},
      {"toy.artifact_size", "16"},
      {"toy.n_real", "1000"},
      {"toy.n_fake", "1000"},
      {"model.architecture", "resnet50"},
      {"model.embedding_dim", "128"},
      {"model.shared_local_weights", "false"},
      {"model.heads", "4"},
      {"model.layers", "3"},
      {"model.pooling", "flatten"},
      {"model.residual_norm", "false"},
      {"model.scale_by_head_dim", "true"},
      {"psm.iou_threshold", "0.25"},
      {"train.batch_size", "64"},
      {"train.lr", "0.0001"},
      {"train.epochs", "1"},
      {"train.adam_beta1", "0.9"},
      {"train.adam_beta2", "0.999"},
      {"train.adam_epsilon", "1e-08"},
      {"aug.fraction", "0.1"},
      {"aug.blur_sigma_max", "3"},
      {"aug.jpeg_quality_min", "30"},
      {"aug.jpeg_quality_max", "100"},
      {"robustness.blur_sigmas", "0,1,2,3"},
      {"robustness.jpeg_qualities", "100,90,70,50,30"},
  };
}

void ConfigStore::LoadFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  LoadText(ss.str(), path.string());
}

void ConfigStore::LoadText(const std::string& text, const std::string& origin) {
  std::stringstream ss(text);
  std::string line;
  int lineno = 0;
  while (std::getline(ss, line)) {
    ++lineno;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ArgumentError(origin + ":" + std::to_string(lineno) + ": expected 'key = value'");
    }
    Set(Trim(t.substr(0, eq)), Trim(t.substr(eq + 1)));
  }
}

void ConfigStore::ApplyOverride(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) {
    throw ArgumentError("override '" + assignment + "' is not key=value");
  }
  Set(Trim(assignment.substr(0, eq)), Trim(assignment.substr(eq + 1)));
}

void ConfigStore::Set(const std::string& key, const std::string& value) {
  auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("unknown config key '" + key + "'");
  it->second = value;
}

bool ConfigStore::Has(const std::string& key) const { return values_.count(key) != 0; }

const std::string& ConfigStore::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ArgumentError("unknown config key '" + key + "'");
  return it->second;
}

std::int64_t ConfigStore::GetInt(const std::string& key) const {
  return ParseNumber<std::int64_t>(key, Get(key));
}

std::uint64_t ConfigStore::GetUint(const std::string& key) const {
  return ParseNumber<std::uint64_t>(key, Get(key));
}

double ConfigStore::GetDouble(const std::string& key) const {
  return ParseNumber<double>(key, Get(key));
}

bool ConfigStore::GetBool(const std::string& key) const {
  const std::string& v = Get(key);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ArgumentError("config key '" + key + "': expected true or false, got '" + v + "'");
}

std::vector<double> ConfigStore::GetDoubleList(const std::string& key) const {
  std::vector<double> out;
  for (const std::string& item : SplitList(Get(key))) {
    out.push_back(ParseNumber<double>(key, item));
  }
  return out;
}

std::vector<int> ConfigStore::GetIntList(const std::string& key) const {
  std::vector<int> out;
  for (const std::string& item : SplitList(Get(key))) {
    out.push_back(ParseNumber<int>(key, item));
  }
  return out;
}

std::string ConfigStore::ToText() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + " = " + v + "\n";
  return out;
}

void ConfigStore::WriteSnapshot(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  out << ToText();
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

ToyGenConfig MakeToyConfig(const ConfigStore& store) {
  ToyGenConfig cfg;
  cfg.image_size = static_cast<int>(store.GetInt("toy.image_size"));
  cfg.artifact_size = static_cast<int>(store.GetInt("toy.artifact_size"));
  cfg.n_real = static_cast<int>(store.GetInt("toy.n_real"));
  cfg.n_fake = static_cast<int>(store.GetInt("toy.n_fake"));
  cfg.seed = store.GetUint("seed");
  cfg.Validate();
  return cfg;
}

DetectorConfig MakeDetectorConfig(const ConfigStore& store) {
  DetectorConfig cfg;
  cfg.backbone.architecture = store.Get("model.architecture");
  cfg.backbone.embedding_dim = static_cast<int>(store.GetInt("model.embedding_dim"));
  cfg.backbone.shared_local_weights = store.GetBool("model.shared_local_weights");
  cfg.fusion.d_model = cfg.backbone.embedding_dim;
  cfg.fusion.heads = static_cast<int>(store.GetInt("model.heads"));
  cfg.fusion.layers = static_cast<int>(store.GetInt("model.layers"));
  cfg.fusion.pooling = ParseFusionPooling(store.Get("model.pooling"));
  cfg.fusion.residual_norm = store.GetBool("model.residual_norm");
  cfg.fusion.scale_by_head_dim = store.GetBool("model.scale_by_head_dim");
  cfg.iou_threshold = store.GetDouble("psm.iou_threshold");
  cfg.Validate();
  return cfg;
}

TrainConfig MakeTrainConfig(const ConfigStore& store) {
  TrainConfig cfg;
  cfg.batch_size = static_cast<int>(store.GetInt("train.batch_size"));
  cfg.base_lr = store.GetDouble("train.lr");
  cfg.epochs = static_cast<int>(store.GetInt("train.epochs"));
  cfg.seed = store.GetUint("seed");
  cfg.workers = static_cast<int>(store.GetInt("workers"));
  cfg.adam.beta1 = store.GetDouble("train.adam_beta1");
  cfg.adam.beta2 = store.GetDouble("train.adam_beta2");
  cfg.adam.epsilon = store.GetDouble("train.adam_epsilon");
  cfg.augmentation.apply_fraction = store.GetDouble("aug.fraction");
  cfg.augmentation.blur_sigma_max = store.GetDouble("aug.blur_sigma_max");
  cfg.augmentation.jpeg_quality_min = static_cast<int>(store.GetInt("aug.jpeg_quality_min"));
  cfg.augmentation.jpeg_quality_max = static_cast<int>(store.GetInt("aug.jpeg_quality_max"));
  cfg.Validate();
  return cfg;
}

RobustnessSweepConfig MakeRobustnessConfig(const ConfigStore& store) {
  RobustnessSweepConfig cfg;
  cfg.blur_sigmas = store.GetDoubleList("robustness.blur_sigmas");
  cfg.jpeg_qualities = store.GetIntList("robustness.jpeg_qualities");
  cfg.Validate();
  return cfg;
}

}  // namespace gldet::cli
