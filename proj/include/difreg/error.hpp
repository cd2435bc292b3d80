/******************************************************************************
 * Copyright 2026 The difreg Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *	http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 *****************************************************************************/
#pragma once

#include <stdexcept>
#include <string>

namespace difreg {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes: configuration and format problems exit 1, numerical
// problems (divergence, degenerate inputs) exit 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SizeError : public Error { using Error::Error; };
class ShapeError : public Error { using Error::Error; };
class ContractError : public Error { using Error::Error; };
class EvaluationError : public Error { using Error::Error; };
class FormatError : public Error { using Error::Error; };
class ParameterError : public Error { using Error::Error; };
class ConfigError : public Error { using Error::Error; };
class InputError : public Error { using Error::Error; };
class DegenerateInputError : public Error { using Error::Error; };

class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long iteration)
      : Error(what), iteration_(iteration) {}
  long iteration() const noexcept { return iteration_; }

 private:
  long iteration_;
};

}  // namespace difreg
