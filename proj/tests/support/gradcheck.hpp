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

#ifndef GLDET_TESTS_GRADCHECK_HPP_
#define GLDET_TESTS_GRADCHECK_HPP_

#include <cstdint>
#include <string>

#include "gldet/affm.hpp"

namespace gldet::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // "<tensor>[<index>]" or "<tensor> direction"
  int checks = 0;
};

// Compares FusionStack::Backward against central finite differences of the
// sigmoid score for one random stack and token input drawn from `seed`.
// Covers sampled coordinates and one random direction of every parameter
// tensor and of the token matrix.
GradCheckResult CheckFusionGradients(const FusionConfig& config, std::uint64_t seed,
                                     double step = 1e-4, int coords_per_tensor = 24);

}  // namespace gldet::testing

#endif  // GLDET_TESTS_GRADCHECK_HPP_
