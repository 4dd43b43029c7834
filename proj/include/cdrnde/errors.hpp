// Copyright 2026 The cdrnde Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef CDRNDE_ERRORS_HPP
#define CDRNDE_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace cdrnde {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A precondition on an argument's meaning (not its shape) is violated.
class ContractError : public Error {
 public:
  using Error::Error;
};

class RangeError : public Error {
 public:
  using Error::Error;
};

/// Integration failed. Carries where it happened so callers can report it.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, std::size_t step, double s)
      : Error(what + " (step " + std::to_string(step) + ", s = " +
              std::to_string(s) + ")"),
        step_(step),
        s_(s) {}

  std::size_t step() const { return step_; }
  double s() const { return s_; }

 private:
  std::size_t step_;
  double s_;
};

/// Malformed or inconsistent input data. `line` is 1-based, 0 when unknown.
class DataError : public Error {
 public:
  DataError(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what),
        line_(line) {}

  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// Non-finite loss or gradient during training.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace cdrnde

#endif  // CDRNDE_ERRORS_HPP
