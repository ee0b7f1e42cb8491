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

#ifndef MLPROMPT_DECIMAL_HPP
#define MLPROMPT_DECIMAL_HPP

#include <compare>
#include <cstdint>
#include <string>
#include <string_view>

#include <boost/multiprecision/cpp_int.hpp>

namespace mlprompt {

/// Exact decimal number: value = mantissa * 10^(-scale), scale >= 0.
///
/// Bound values coming out of an LLM are decimal literals; keeping them
/// exact means "ub - lb <= 15" and the integer/float classification are
/// decided on the digits the model actually wrote, not on the nearest
/// binary double. Always normalized: scale is minimal, -0 does not exist.
class Decimal {
 public:
  using Mantissa = boost::multiprecision::cpp_int;

  Decimal() : mantissa_(0), scale_(0) {}
  explicit Decimal(long long v) : mantissa_(v), scale_(0) {}
  Decimal(Mantissa mantissa, int scale);

  /// Parses a JSON-style numeric literal ("42", "-3.50", "1.2e-3").
  /// Throws ParseError on anything else.
  static Decimal parse(std::string_view token);

  /// True when the value has no fractional part (2, 2.0 and 200e-2 all
  /// classify as integer).
  bool is_integer() const { return scale_ == 0; }

  bool is_zero() const { return mantissa_ == 0; }

  const Mantissa& mantissa() const { return mantissa_; }
  int scale() const { return scale_; }

  Decimal operator-() const;
  Decimal operator+(const Decimal& rhs) const;
  Decimal operator-(const Decimal& rhs) const;

  bool operator==(const Decimal& rhs) const;
  std::strong_ordering operator<=>(const Decimal& rhs) const;

  /// Canonical form: minimal digits, no exponent ("-3.5", "100", "0.015").
  std::string to_string() const;

  /// Nearest double; fine for sampling, not for rule checks.
  double to_double() const;

  /// Exact integral value. Throws Error when the value has a fractional
  /// part or does not fit in 64 bits.
  long long to_int64() const;

 private:
  void normalize();

  Mantissa mantissa_;
  int scale_;
};

}  // namespace mlprompt

#endif  // MLPROMPT_DECIMAL_HPP
