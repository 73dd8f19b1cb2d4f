#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <compare>
#include <optional>
#include <string>
#include <string_view>

namespace atomchain {

using Rational = boost::multiprecision::cpp_rational;
using BigInt = boost::multiprecision::cpp_int;

/// Exact number with a display scale (count of printed fractional digits).
///
/// The value is an exact rational; the scale records how the number was
/// printed ("1.30" has scale 2) and drives display-precision comparisons.
/// Equality is structural (value and scale); use compare() for ordering by
/// value alone.
class Decimal {
 public:
  Decimal() = default;
  Decimal(Rational value, int scale);

  static Decimal from_int(long long v);

  /// Parses "[+-]digits[.digits]" with no other characters.
  static std::optional<Decimal> parse(std::string_view text);

  const Rational& value() const { return value_; }
  int scale() const { return scale_; }

  /// Rounds half away from zero to `places` fractional digits.
  Decimal rounded(int places) const;

  /// True when the value is exactly representable with `scale()` digits.
  bool exact_at_scale() const;

  /// Prints with scale() fractional digits (rounding if inexact).
  std::string to_string() const;
  std::string to_string(int places) const;

  double to_double() const;
  bool is_zero() const { return value_ == 0; }
  bool negative() const { return value_ < 0; }

  Decimal with_scale(int scale) const { return Decimal(value_, scale); }

  friend bool operator==(const Decimal& a, const Decimal& b) {
    return a.scale_ == b.scale_ && a.value_ == b.value_;
  }

 private:
  Rational value_{0};
  int scale_ = 0;
};

std::strong_ordering compare(const Decimal& a, const Decimal& b);

/// Rounds an exact rational half away from zero to `places` digits.
Rational round_half_away(const Rational& q, int places);

Rational pow10(int exponent);

}  // namespace atomchain
