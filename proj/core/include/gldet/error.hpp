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

#ifndef GLDET_ERROR_HPP_
#define GLDET_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace gldet {

// Base of every error raised by the library. `kind()` is a stable short tag
// used by the CLI when printing machine-parsable error lines.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

#define GLDET_DEFINE_ERROR(Name, tag)                          \
  class Name : public Error {                                  \
   public:                                                     \
    explicit Name(const std::string& what) : Error(what) {}    \
    const char* kind() const noexcept override { return tag; } \
  };

GLDET_DEFINE_ERROR(IoError, "io")
GLDET_DEFINE_ERROR(DecodeError, "decode")
GLDET_DEFINE_ERROR(ArgumentError, "argument")
GLDET_DEFINE_ERROR(SchemaError, "schema")
GLDET_DEFINE_ERROR(ValidationError, "validation")
GLDET_DEFINE_ERROR(FormatError, "format")
GLDET_DEFINE_ERROR(NumericError, "numeric")
GLDET_DEFINE_ERROR(UndefinedMetricError, "undefined_metric")

#undef GLDET_DEFINE_ERROR

}  // namespace gldet

#endif  // GLDET_ERROR_HPP_
