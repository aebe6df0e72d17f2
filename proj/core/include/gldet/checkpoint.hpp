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

#ifndef GLDET_CHECKPOINT_HPP_
#define GLDET_CHECKPOINT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "gldet/parameters.hpp"

namespace gldet {

// Self-describing container of named float32/float64 tensors plus a JSON
// metadata document.
//
// Layout: 8-byte magic "GLDETCKP", uint32 container version, uint64 header
// length, UTF-8 JSON header, then the raw little-endian tensor payload. The
// header lists every tensor as {name, dtype, shape, offset, count}.
struct TensorArchive {
  struct Tensor {
    std::string name;
    std::vector<int> shape;
    std::variant<std::vector<float>, std::vector<double>> values;
  };

  nlohmann::json meta = nlohmann::json::object();
  std::vector<Tensor> tensors;

  const Tensor* Find(const std::string& name) const;

  template <typename T>
  void AddParameters(const std::string& prefix, const ParameterSet<T>& params) {
    for (const auto& e : params.entries()) {
      const T* begin = params.data() + e.offset;
      tensors.push_back({prefix + e.name, e.shape, std::vector<T>(begin, begin + e.size)});
    }
  }

  // Copies tensors named prefix + entry.name into `params`. Every entry must
  // be present with the same shape and dtype; otherwise FormatError is thrown
  // and `params` is left untouched.
  template <typename T>
  void LoadParameters(const std::string& prefix, ParameterSet<T>& params) const;
};

inline constexpr std::uint32_t kArchiveVersion = 1;

void WriteArchive(const std::filesystem::path& path, const TensorArchive& archive);
TensorArchive ReadArchive(const std::filesystem::path& path);

}  // namespace gldet

#endif  // GLDET_CHECKPOINT_HPP_
