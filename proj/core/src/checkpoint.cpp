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

#include "gldet/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "gldet/error.hpp"

namespace gldet {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

namespace {

constexpr char kMagic[8] = {'G', 'L', 'D', 'E', 'T', 'C', 'K', 'P'};

template <typename T>
const char* DtypeName();
template <>
const char* DtypeName<float>() { return "f32"; }
template <>
const char* DtypeName<double>() { return "f64"; }

}  // namespace

const TensorArchive::Tensor* TensorArchive::Find(const std::string& name) const {
  for (const Tensor& t : tensors) {
    if (t.name == name) return &t;
  }
  return nullptr;
}

template <typename T>
void TensorArchive::LoadParameters(const std::string& prefix,
                                   ParameterSet<T>& params) const {
  std::vector<const std::vector<T>*> sources;
  for (const auto& e : params.entries()) {
    const Tensor* t = Find(prefix + e.name);
    if (t == nullptr) throw FormatError("checkpoint lacks tensor '" + prefix + e.name + "'");
    if (t->shape != e.shape) {
      throw FormatError("checkpoint tensor '" + prefix + e.name + "' has the wrong shape");
    }
    const auto* v = std::get_if<std::vector<T>>(&t->values);
    if (v == nullptr) {
      throw FormatError("checkpoint tensor '" + prefix + e.name + "' has the wrong dtype");
    }
    sources.push_back(v);
  }
  for (std::size_t i = 0; i < sources.size(); ++i) {
    const auto& e = params.entries()[i];
    std::copy(sources[i]->begin(), sources[i]->end(), params.data() + e.offset);
  }
}

template void TensorArchive::LoadParameters<float>(const std::string&,
                                                   ParameterSet<float>&) const;
template void TensorArchive::LoadParameters<double>(const std::string&,
                                                    ParameterSet<double>&) const;

void WriteArchive(const std::filesystem::path& path, const TensorArchive& archive) {
  nlohmann::json header;
  header["meta"] = archive.meta;
  header["tensors"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& t : archive.tensors) {
    std::visit(
        [&](const auto& v) {
          using T = typename std::decay_t<decltype(v)>::value_type;
          header["tensors"].push_back({{"name", t.name},
                                       {"dtype", DtypeName<T>()},
                                       {"shape", t.shape},
                                       {"offset", offset},
                                       {"count", v.size()}});
          offset += v.size() * sizeof(T);
        },
        t.values);
  }
  const std::string text = header.dump();
  const std::uint64_t header_len = text.size();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&kArchiveVersion), sizeof(kArchiveVersion));
  out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : archive.tensors) {
    std::visit(
        [&](const auto& v) {
          out.write(reinterpret_cast<const char*>(v.data()),
                    static_cast<std::streamsize>(v.size() * sizeof(v[0])));
        },
        t.values);
  }
  if (!out) throw IoError("write failed for '" + path.string() + "'");
}

TensorArchive ReadArchive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                                std::istreambuf_iterator<char>());
  const std::string where = " in '" + path.string() + "'";
  constexpr std::size_t kPrefix = sizeof(kMagic) + sizeof(std::uint32_t) + sizeof(std::uint64_t);
  if (bytes.size() < kPrefix || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a gldet checkpoint" + where);
  }
  std::uint32_t version = 0;
  std::uint64_t header_len = 0;
  std::memcpy(&version, bytes.data() + sizeof(kMagic), sizeof(version));
  std::memcpy(&header_len, bytes.data() + sizeof(kMagic) + sizeof(version), sizeof(header_len));
  if (version != kArchiveVersion) {
    throw FormatError("unsupported checkpoint container version " +
                      std::to_string(version) + where);
  }
  if (header_len > bytes.size() - kPrefix) throw FormatError("truncated header" + where);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin() + kPrefix,
                                   bytes.begin() + kPrefix + static_cast<std::ptrdiff_t>(header_len));
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("corrupt header: ") + e.what() + where);
  }
  const std::size_t payload = kPrefix + header_len;
  const std::size_t payload_size = bytes.size() - payload;

  TensorArchive archive;
  try {
    archive.meta = header.at("meta");
    for (const auto& t : header.at("tensors")) {
      TensorArchive::Tensor tensor;
      tensor.name = t.at("name").get<std::string>();
      tensor.shape = t.at("shape").get<std::vector<int>>();
      const std::string dtype = t.at("dtype").get<std::string>();
      const auto offset = t.at("offset").get<std::uint64_t>();
      const auto count = t.at("count").get<std::uint64_t>();
      std::uint64_t expected = 1;
      for (int d : tensor.shape) {
        if (d < 0) throw FormatError("negative dimension" + where);
        expected *= static_cast<std::uint64_t>(d);
      }
      if (expected != count) throw FormatError("shape/count mismatch for '" + tensor.name + "'" + where);
      auto read = [&]<typename T>(std::vector<T> v) {
        if (offset > payload_size || count * sizeof(T) > payload_size - offset) {
          throw FormatError("tensor '" + tensor.name + "' exceeds payload" + where);
        }
        v.resize(count);
        std::memcpy(v.data(), bytes.data() + payload + offset, count * sizeof(T));
        tensor.values = std::move(v);
      };
      if (dtype == "f32") {
        read(std::vector<float>{});
      } else if (dtype == "f64") {
        read(std::vector<double>{});
      } else {
        throw FormatError("unknown dtype '" + dtype + "'" + where);
      }
      archive.tensors.push_back(std::move(tensor));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed header: ") + e.what() + where);
  }
  return archive;
}

}  // namespace gldet
