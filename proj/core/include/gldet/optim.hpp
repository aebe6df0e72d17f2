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

#ifndef GLDET_OPTIM_HPP_
#define GLDET_OPTIM_HPP_

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "gldet/error.hpp"

namespace gldet {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over one flat parameter vector.
template <typename T>
class Adam {
 public:
  Adam(std::size_t size, AdamOptions options)
      : options_(options), m_(size, T{0}), v_(size, T{0}) {}

  void Step(std::span<T> params, std::span<const T> grad, double lr) {
    if (params.size() != m_.size() || grad.size() != m_.size()) {
      throw ArgumentError("optimizer state does not match parameter count");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(options_.beta1, t_);
    const double c2 = 1.0 - std::pow(options_.beta2, t_);
    for (std::size_t i = 0; i < params.size(); ++i) {
      const double g = grad[i];
      const double m = options_.beta1 * m_[i] + (1.0 - options_.beta1) * g;
      const double v = options_.beta2 * v_[i] + (1.0 - options_.beta2) * g * g;
      m_[i] = static_cast<T>(m);
      v_[i] = static_cast<T>(v);
      params[i] -= static_cast<T>(lr * (m / c1) / (std::sqrt(v / c2) + options_.epsilon));
    }
  }

  long steps() const { return t_; }

 private:
  AdamOptions options_;
  std::vector<T> m_;
  std::vector<T> v_;
  long t_ = 0;
};

}  // namespace gldet

#endif  // GLDET_OPTIM_HPP_
