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

#ifndef GLDET_PARAMETERS_HPP_
#define GLDET_PARAMETERS_HPP_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gldet/error.hpp"

namespace gldet {

// Named tensors packed into one contiguous buffer so optimisers and
// gradient reductions can treat a whole model as a flat vector. Layers keep
// offsets, never pointers, because Add() may reallocate.
template <typename T>
class ParameterSet {
 public:
  struct Entry {
    std::string name;
    std::vector<int> shape;
    std::size_t offset = 0;
    std::size_t size = 0;
  };

  std::size_t Add(std::string name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    if (Find(name) != nullptr) {
      throw ArgumentError("duplicate parameter '" + name + "'");
    }
    Entry e{std::move(name), std::move(shape), values_.size(), n};
    values_.resize(values_.size() + n, T{0});
    entries_.push_back(std::move(e));
    return entries_.back().offset;
  }

  const Entry* Find(std::string_view name) const {
    for (const Entry& e : entries_) {
      if (e.name == name) return &e;
    }
    return nullptr;
  }

  std::span<T> Get(std::string_view name) {
    const Entry* e = Find(name);
    if (e == nullptr) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
    return std::span<T>(values_).subspan(e->offset, e->size);
  }
  std::span<const T> Get(std::string_view name) const {
    const Entry* e = Find(name);
    if (e == nullptr) throw ArgumentError("unknown parameter '" + std::string(name) + "'");
    return std::span<const T>(values_).subspan(e->offset, e->size);
  }

  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }
  std::size_t size() const { return values_.size(); }
  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  const std::vector<Entry>& entries() const { return entries_; }

  friend bool operator==(const ParameterSet& a, const ParameterSet& b) {
    if (a.values_ != b.values_ || a.entries_.size() != b.entries_.size()) return false;
    for (std::size_t i = 0; i < a.entries_.size(); ++i) {
      if (a.entries_[i].name != b.entries_[i].name ||
          a.entries_[i].shape != b.entries_[i].shape) {
        return false;
      }
    }
    return true;
  }

 private:
  std::vector<T> values_;
  std::vector<Entry> entries_;
};

}  // namespace gldet

#endif  // GLDET_PARAMETERS_HPP_
