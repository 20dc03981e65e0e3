#include <gtest/gtest.h>

#include <cmath>

#include "certpoly/cheb/interval.hpp"
#include "certpoly/cheb/jet.hpp"
#include "certpoly/common/error.hpp"
#include "certpoly/common/rng.hpp"

using namespace certpoly;

namespace {

Interval random_interval(Rng& rng, double scale = 10.0) {
  double a = uniform(rng, -scale, scale), b = uniform(rng, -scale, scale);
  if (a > b) std::swap(a, b);
  return {a, b};
}

double sample(const Interval& x, Rng& rng) { return uniform(rng, x.lo(), x.hi()); }

}  // namespace

TEST(Interval, RejectsInvertedBounds) { EXPECT_THROW(Interval(1.0, 0.0), NumericalError); }

TEST(Interval, ArithmeticEnclosesPointResults) {
  Rng rng(1);
  for (int t = 0; t < 2000; ++t) {
    const Interval a = random_interval(rng), b = random_interval(rng);
    const double x = sample(a, rng), y = sample(b, rng);
    EXPECT_TRUE((a + b).contains(x + y));
    EXPECT_TRUE((a - b).contains(x - y));
    EXPECT_TRUE((a * b).contains(x * y));
    if (!b.contains_zero()) EXPECT_TRUE((a / b).contains(x / y));
    EXPECT_TRUE(sqr(a).contains(x * x));
    EXPECT_TRUE(abs(a).contains(std::fabs(x)));
    EXPECT_TRUE(exp(a * Interval(0.1)).contains(std::exp(x * 0.1)));
    EXPECT_TRUE(tanh(a).contains(std::tanh(x)));
    EXPECT_TRUE(erfc(a).contains(std::erfc(x)));
    if (a.lo() >= 0.0) EXPECT_TRUE(sqrt(a).contains(std::sqrt(x)));
  }
}

TEST(Interval, ResultsAreWidenedOutward) {
  const Interval third = Interval(1.0) / Interval(3.0);
  EXPECT_LT(third.lo(), 1.0 / 3.0);
  EXPECT_GT(third.hi(), 1.0 / 3.0);
  const Interval s = Interval(0.1) + Interval(0.2);
  EXPECT_TRUE(s.contains(0.1 + 0.2));
  EXPECT_LT(s.lo(), s.hi());
}

TEST(Interval, ConstantsEncloseTrueValues) {
  EXPECT_TRUE(constants::pi().contains(M_PI));
  EXPECT_TRUE(constants::sqrt2().contains(std::sqrt(2.0)));
  EXPECT_TRUE(constants::inv_sqrt2().contains(1.0 / std::sqrt(2.0)));
  EXPECT_TRUE(constants::inv_sqrt_2pi().contains(1.0 / std::sqrt(2.0 * M_PI)));
}

TEST(Interval, HullIntersectAndDivisionByZero) {
  EXPECT_EQ(hull(Interval(0, 1), Interval(2, 3)), Interval(0, 3));
  EXPECT_EQ(intersect(Interval(0, 2), Interval(1, 3)), Interval(1, 2));
  EXPECT_THROW(intersect(Interval(0, 1), Interval(2, 3)), DomainError);
  EXPECT_FALSE(overlaps(Interval(0, 1), Interval(2, 3)));
  EXPECT_THROW(Interval(1.0) / Interval(-1.0, 1.0), NumericalError);
}

TEST(Jet, ExpSeriesEnclosesTaylorCoefficients) {
  const auto x = Jet<Interval>::variable(Interval(0.5), 8);
  const auto e = exp(x);
  double fact = 1.0;
  for (std::size_t k = 0; k < 8; ++k) {
    if (k > 0) fact *= static_cast<double>(k);
    EXPECT_TRUE(e[k].contains(std::exp(0.5) / fact)) << k;
  }
}

TEST(Jet, ReciprocalOfGeometricSeries) {
  const auto x = Jet<double>::variable(0.0, 6);
  const auto one_minus = Jet<double>::constant(1.0, 6) - x;
  const auto r = reciprocal(one_minus);
  for (std::size_t k = 0; k < 6; ++k) EXPECT_DOUBLE_EQ(r[k], 1.0);
}
