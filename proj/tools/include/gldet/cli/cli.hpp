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

#ifndef GLDET_CLI_CLI_HPP_
#define GLDET_CLI_CLI_HPP_

#include <ostream>
#include <string>
#include <vector>

namespace gldet::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

inline constexpr const char* kSnapshotName = "effective_config.cfg";

// Runs one command line. `args` excludes the program name. Failures print
// a single `error: kind=<kind> message="<text>"` line on `err`.
int Run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int Run(int argc, const char* const* argv);

}  // namespace gldet::cli

#endif  // GLDET_CLI_CLI_HPP_
