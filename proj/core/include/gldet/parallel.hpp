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

#ifndef GLDET_PARALLEL_HPP_
#define GLDET_PARALLEL_HPP_

#include <cstddef>
#include <functional>

namespace gldet {

// Number of workers to use when the caller passes 0.
int DefaultWorkers();

// Runs fn(worker, i) for i in [0, n) on `workers` threads. Worker w handles
// the indices i with i % workers == w in increasing order, so any per-worker
// accumulation is independent of scheduling. Exceptions are rethrown on the
// calling thread (first by index).
void ParallelFor(std::size_t n, int workers,
                 const std::function<void(int worker, std::size_t i)>& fn);

}  // namespace gldet

#endif  // GLDET_PARALLEL_HPP_
