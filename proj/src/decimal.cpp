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

#include "mlprompt/decimal.hpp"

#include <cctype>
#include <cstdlib>
#include <limits>

#include "mlprompt/errors.hpp"

namespace mlprompt {

namespace {

Decimal::Mantissa pow10(int n) {
  Decimal::Mantissa r = 1;
  for (int i = 0; i < n; ++i) r *= 10;
  return r;
}

}  // namespace

Decimal::Decimal(Mantissa mantissa, int scale)
    : mantissa_(std::move(mantissa)), scale_(scale) {
  if (scale_ < 0) {
    mantissa_ *= pow10(-scale_);
    scale_ = 0;
  }
  normalize();
}

void Decimal::normalize() {
  if (mantissa_ == 0) {
    scale_ = 0;
    return;
  }
  while (scale_ > 0 && mantissa_ % 10 == 0) {
    mantissa_ /= 10;
    --scale_;
  }
}

Decimal Decimal::parse(std::string_view token) {
  std::size_t pos = 0;
  auto fail = [&](const std::string& why) -> Decimal {
    throw ParseError("invalid numeric literal '" + std::string(token) +
                         "': " + why,
                     pos);
  };

  bool negative = false;
  if (pos < token.size() && (token[pos] == '-' || token[pos] == '+')) {
    negative = token[pos] == '-';
    ++pos;
  }

  Mantissa mant = 0;
  int frac_digits = 0;
  bool any_digit = false;
  while (pos < token.size() && std::isdigit(static_cast<unsigned char>(token[pos]))) {
    mant = mant * 10 + (token[pos] - '0');
    any_digit = true;
    ++pos;
  }
  if (pos < token.size() && token[pos] == '.') {
    ++pos;
    bool any_frac = false;
    while (pos < token.size() &&
           std::isdigit(static_cast<unsigned char>(token[pos]))) {
      mant = mant * 10 + (token[pos] - '0');
      ++frac_digits;
      any_frac = true;
      ++pos;
    }
    if (!any_frac) return fail("digits required after '.'");
  }
  if (!any_digit) return fail("digits required");

  long exponent = 0;
  if (pos < token.size() && (token[pos] == 'e' || token[pos] == 'E')) {
    ++pos;
    bool exp_neg = false;
    if (pos < token.size() && (token[pos] == '-' || token[pos] == '+')) {
      exp_neg = token[pos] == '-';
      ++pos;
    }
    bool any_exp = false;
    while (pos < token.size() &&
           std::isdigit(static_cast<unsigned char>(token[pos]))) {
      exponent = exponent * 10 + (token[pos] - '0');
      any_exp = true;
      if (exponent > 100000) return fail("exponent out of range");
      ++pos;
    }
    if (!any_exp) return fail("digits required in exponent");
    if (exp_neg) exponent = -exponent;
  }
  if (pos != token.size()) return fail("trailing characters");

  if (negative) mant = -mant;
  return Decimal(std::move(mant), frac_digits - static_cast<int>(exponent));
}

Decimal Decimal::operator-() const {
  Decimal r = *this;
  r.mantissa_ = -r.mantissa_;
  return r;
}

Decimal Decimal::operator+(const Decimal& rhs) const {
  int scale = std::max(scale_, rhs.scale_);
  Mantissa a = mantissa_ * pow10(scale - scale_);
  Mantissa b = rhs.mantissa_ * pow10(scale - rhs.scale_);
  return Decimal(a + b, scale);
}

Decimal Decimal::operator-(const Decimal& rhs) const { return *this + (-rhs); }

bool Decimal::operator==(const Decimal& rhs) const {
  return scale_ == rhs.scale_ && mantissa_ == rhs.mantissa_;
}

std::strong_ordering Decimal::operator<=>(const Decimal& rhs) const {
  int scale = std::max(scale_, rhs.scale_);
  Mantissa a = mantissa_ * pow10(scale - scale_);
  Mantissa b = rhs.mantissa_ * pow10(scale - rhs.scale_);
  if (a < b) return std::strong_ordering::less;
  if (a > b) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

std::string Decimal::to_string() const {
  Mantissa abs = mantissa_ < 0 ? Mantissa(-mantissa_) : mantissa_;
  std::string digits = abs.str();
  std::string out;
  if (mantissa_ < 0) out += '-';
  if (scale_ == 0) {
    out += digits;
    return out;
  }
  if (static_cast<int>(digits.size()) <= scale_) {
    out += "0.";
    out.append(scale_ - digits.size(), '0');
    out += digits;
  } else {
    out.append(digits, 0, digits.size() - scale_);
    out += '.';
    out.append(digits, digits.size() - scale_, std::string::npos);
  }
  return out;
}

double Decimal::to_double() const { return std::strtod(to_string().c_str(), nullptr); }

long long Decimal::to_int64() const {
  if (scale_ != 0)
    throw Error("decimal " + to_string() + " is not an integer");
  if (mantissa_ < std::numeric_limits<long long>::min() ||
      mantissa_ > std::numeric_limits<long long>::max())
    throw Error("decimal " + to_string() + " does not fit in 64 bits");
  return static_cast<long long>(mantissa_);
}

}  // namespace mlprompt
