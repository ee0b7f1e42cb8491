// Copyright 2025 The MLPrompt Authors
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

#ifndef MLPROMPT_ERRORS_HPP
#define MLPROMPT_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mlprompt {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Syntax error in a model file, bounds text, or expression. Carries the
/// byte offset of the first offending character.
class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// A symbol used in a domain or function does not resolve to any declared
/// set, parameter, variable, hyper-parameter, or bound index variable.
class ResolutionError : public Error {
 public:
  ResolutionError(const std::string& symbol, const std::string& context)
      : Error("unresolved symbol '" + symbol + "' in " + context),
        symbol_(symbol) {}
  const std::string& symbol() const { return symbol_; }

 private:
  std::string symbol_;
};

/// Bounds text does not have the required structure (missing key, wrong
/// arity, non-numeric entry where a number belongs).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// No usable JSON object could be extracted from raw model output.
class ExtractError : public Error {
 public:
  using Error::Error;
};

/// Bad or missing configuration (unknown strategy, absent credential, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Expression evaluation failure: missing symbol or division by zero.
class EvalError : public Error {
 public:
  using Error::Error;
};

/// Model structure the instance builder cannot expand (e.g. a product of
/// two decision variables).
class StructureError : public Error {
 public:
  using Error::Error;
};

}  // namespace mlprompt

#endif  // MLPROMPT_ERRORS_HPP
