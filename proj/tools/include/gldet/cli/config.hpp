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

#ifndef GLDET_CLI_CONFIG_HPP_
#define GLDET_CLI_CONFIG_HPP_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "gldet/dataset.hpp"
#include "gldet/detector.hpp"
#include "gldet/evaluator.hpp"
#include "gldet/trainer.hpp"

namespace gldet::cli {

// Flat key = value settings. Every key has a default and unknown keys are
// rejected. Later sources win: defaults, then the config file, then
// --set overrides, then dedicated flags such as --seed.
class ConfigStore {
 public:
  ConfigStore();

  // Parses `key = value` lines. Blank lines and lines starting with '#' are
  // ignored.
  void LoadFile(const std::filesystem::path& path);
  void LoadText(const std::string& text, const std::string& origin);
  // Accepts "key=value".
  void ApplyOverride(const std::string& assignment);
  void Set(const std::string& key, const std::string& value);

  bool Has(const std::string& key) const;
  const std::string& Get(const std::string& key) const;
  std::int64_t GetInt(const std::string& key) const;
  std::uint64_t GetUint(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  bool GetBool(const std::string& key) const;
  std::vector<double> GetDoubleList(const std::string& key) const;
  std::vector<int> GetIntList(const std::string& key) const;

  // Sorted `key = value` lines, parseable by LoadText.
  std::string ToText() const;
  void WriteSnapshot(const std::filesystem::path& path) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

ToyGenConfig MakeToyConfig(const ConfigStore& store);
DetectorConfig MakeDetectorConfig(const ConfigStore& store);
TrainConfig MakeTrainConfig(const ConfigStore& store);
RobustnessSweepConfig MakeRobustnessConfig(const ConfigStore& store);

}  // namespace gldet::cli

#endif  // GLDET_CLI_CONFIG_HPP_
