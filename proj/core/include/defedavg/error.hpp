/*
 * Copyright 2026 The defedavg-sim Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace defedavg {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Non-finite values, invalid numeric arguments.
class NumericError : public Error {
 public:
  using Error::Error;
};

// Malformed datasets, IDX files and partitions.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid algorithm/simulation inputs and stuck simulations.
class SimulationError : public Error {
 public:
  using Error::Error;
};

// The compact-recursion replay could not follow the recorded history.
class ReplayError : public Error {
 public:
  using Error::Error;
};

// Config file problems. `line` is 0 when the error is not tied to a line.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& message, std::size_t line = 0)
      : Error(line == 0 ? message : "line " + std::to_string(line) + ": " + message),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace defedavg
