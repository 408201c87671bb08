// Copyright 2026 The RMFNL Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace rmfnl {

// Shape or length mismatch between operands.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Data violates a structural requirement (e.g. an empty row or column
// in the observation pattern, or duplicate indices).
class DataError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid configuration or parameter value.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-finite value or an internal consistency check failed at runtime.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, long iteration = -1)
      : std::runtime_error(what), iteration_(iteration) {}
  long iteration() const { return iteration_; }

 private:
  long iteration_;
};

// Failure to read or parse an input file.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, long line = -1)
      : std::runtime_error(what), line_(line) {}
  long line() const { return line_; }

 private:
  long line_;
};

}  // namespace rmfnl
