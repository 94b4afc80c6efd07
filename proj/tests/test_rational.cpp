#include <gtest/gtest.h>

#include <vector>

#include "sones/error.hpp"
#include "sones/rational.hpp"

using sones::Rational;

TEST(Rational, NormalizesSignAndGcd) {
  const Rational r(6, -4);
  EXPECT_EQ(r.num(), -3);
  EXPECT_EQ(r.den(), 2);
  EXPECT_EQ(r.str(), "-3/2");
  EXPECT_TRUE(Rational(8, 4).is_integer());
}

TEST(Rational, Arithmetic) {
  EXPECT_EQ(Rational(1, 2) + Rational(1, 3), Rational(5, 6));
  EXPECT_EQ(Rational(1, 2) - Rational(1, 3), Rational(1, 6));
  EXPECT_EQ(Rational(2, 3) * Rational(9, 4), Rational(3, 2));
  EXPECT_EQ(Rational(2, 3) / Rational(4, 9), Rational(3, 2));
  EXPECT_LT(Rational(1, 3), Rational(1, 2));
  EXPECT_DOUBLE_EQ(Rational(1, 4).to_double(), 0.25);
}

TEST(Rational, ZeroDenominatorRejected) {
  EXPECT_THROW(Rational(1, 0), sones::InvalidArgument);
  EXPECT_THROW(Rational(1) / Rational(0), sones::InvalidArgument);
}

TEST(Rational, Parse) {
  EXPECT_EQ(Rational::parse("500"), Rational(500));
  EXPECT_EQ(Rational::parse("-7/14"), Rational(-1, 2));
  EXPECT_THROW(Rational::parse("1/"), sones::InvalidArgument);
  EXPECT_THROW(Rational::parse("abc"), sones::InvalidArgument);
}

TEST(Rational, LcmOfFractions) {
  const std::vector<Rational> inv{Rational(1, 500), Rational(1, 300)};
  EXPECT_EQ(sones::lcm_of(inv), Rational(1, 100));
  const std::vector<Rational> halves{Rational(1, 2), Rational(1, 3)};
  EXPECT_EQ(sones::lcm_of(halves), Rational(1));
  const std::vector<Rational> mixed{Rational(3, 4), Rational(5, 6)};
  EXPECT_EQ(sones::lcm_of(mixed), Rational(15, 2));
}
