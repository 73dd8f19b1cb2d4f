#include "atomchain/decimal.hpp"

#include <gtest/gtest.h>

using namespace atomchain;

TEST(Decimal, ParseKeepsPrintedScale) {
  auto d = Decimal::parse("1.30");
  ASSERT_TRUE(d);
  EXPECT_EQ(d->scale(), 2);
  EXPECT_EQ(d->value(), Rational(13, 10));
  EXPECT_EQ(d->to_string(), "1.30");
}

TEST(Decimal, ParseRejectsJunk) {
  for (const char* s : {"", "-", "1.", "1.2.3", "1e5", "12a", " 1"}) EXPECT_FALSE(Decimal::parse(s)) << s;
  EXPECT_TRUE(Decimal::parse("+4"));
  EXPECT_EQ(Decimal::parse(".5")->to_string(), "0.5");
  EXPECT_TRUE(Decimal::parse("-0.25"));
}

TEST(Decimal, StructuralEqualityVersusOrdering) {
  auto a = *Decimal::parse("1.3"), b = *Decimal::parse("1.30");
  EXPECT_NE(a, b);
  EXPECT_EQ(compare(a, b), std::strong_ordering::equal);
  EXPECT_EQ(compare(*Decimal::parse("2.8"), *Decimal::parse("1.3")), std::strong_ordering::greater);
}

TEST(Decimal, RoundsHalfAwayFromZero) {
  EXPECT_EQ(round_half_away(Rational(245, 100), 1), Rational(25, 10));
  EXPECT_EQ(round_half_away(Rational(-245, 100), 1), Rational(-25, 10));
  EXPECT_EQ(round_half_away(Rational(244, 100), 1), Rational(24, 10));
  EXPECT_EQ(round_half_away(Rational(5, 1), 0), Rational(5));
  EXPECT_EQ(Decimal(Rational(1, 3), 3).to_string(), "0.333");
  EXPECT_EQ(Decimal(Rational(-1, 2), 0).to_string(), "-1");
}

TEST(Decimal, ExactAtScale) {
  EXPECT_TRUE(Decimal(Rational(13, 10), 1).exact_at_scale());
  EXPECT_FALSE(Decimal(Rational(1, 3), 4).exact_at_scale());
  EXPECT_EQ(Decimal::from_int(-7).to_string(), "-7");
  EXPECT_EQ(pow10(-2), Rational(1, 100));
}
