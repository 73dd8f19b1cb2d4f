#include "atomchain/decimal.hpp"

#include <cctype>
#include <stdexcept>

namespace atomchain {

namespace mp = boost::multiprecision;

Rational pow10(int exponent) {
  BigInt p = 1;
  for (int i = 0; i < (exponent < 0 ? -exponent : exponent); ++i) p *= 10;
  return exponent < 0 ? Rational(BigInt(1), p) : Rational(p);
}

Rational round_half_away(const Rational& q, int places) {
  Rational scaled = q * pow10(places);
  BigInt num = mp::numerator(scaled);
  BigInt den = mp::denominator(scaled);
  bool neg = num < 0;
  if (neg) num = -num;
  // floor(num/den + 1/2) == (2*num + den) / (2*den)
  BigInt rounded = (2 * num + den) / (2 * den);
  if (neg) rounded = -rounded;
  return Rational(rounded) / pow10(places);
}

Decimal::Decimal(Rational value, int scale) : value_(std::move(value)), scale_(scale) {
  if (scale_ < 0) throw std::invalid_argument("Decimal scale must be >= 0");
}

Decimal Decimal::from_int(long long v) { return Decimal(Rational(v), 0); }

std::optional<Decimal> Decimal::parse(std::string_view text) {
  std::size_t i = 0;
  bool neg = false;
  if (i < text.size() && (text[i] == '+' || text[i] == '-')) {
    neg = text[i] == '-';
    ++i;
  }
  BigInt digits = 0;
  int int_digits = 0;
  int frac_digits = 0;
  for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i, ++int_digits)
    digits = digits * 10 + (text[i] - '0');
  if (i < text.size() && text[i] == '.') {
    ++i;
    for (; i < text.size() && std::isdigit(static_cast<unsigned char>(text[i])); ++i, ++frac_digits)
      digits = digits * 10 + (text[i] - '0');
    if (frac_digits == 0) return std::nullopt;
  }
  if (i != text.size() || int_digits + frac_digits == 0) return std::nullopt;
  Rational value = Rational(digits) / pow10(frac_digits);
  if (neg) value = -value;
  return Decimal(value, frac_digits);
}

Decimal Decimal::rounded(int places) const { return Decimal(round_half_away(value_, places), places); }

bool Decimal::exact_at_scale() const { return round_half_away(value_, scale_) == value_; }

std::string Decimal::to_string() const { return to_string(scale_); }

std::string Decimal::to_string(int places) const {
  Rational r = round_half_away(value_, places) * pow10(places);
  BigInt n = mp::numerator(r);
  bool neg = n < 0;
  if (neg) n = -n;
  std::string digits = n.str();
  if (places > 0) {
    if (static_cast<int>(digits.size()) <= places)
      digits.insert(0, static_cast<std::size_t>(places) - digits.size() + 1, '0');
    digits.insert(digits.size() - static_cast<std::size_t>(places), ".");
  }
  return (neg ? "-" : "") + digits;
}

double Decimal::to_double() const { return value_.convert_to<double>(); }

std::strong_ordering compare(const Decimal& a, const Decimal& b) {
  if (a.value() < b.value()) return std::strong_ordering::less;
  if (a.value() > b.value()) return std::strong_ordering::greater;
  return std::strong_ordering::equal;
}

}  // namespace atomchain
