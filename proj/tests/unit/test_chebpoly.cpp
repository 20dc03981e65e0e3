#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "certpoly/cheb/chebpoly.hpp"
#include "certpoly/cheb/remez.hpp"
#include "certpoly/common/error.hpp"
#include "unit/helpers.hpp"

using namespace certpoly;
using namespace certpoly::testing;
using cheb::ChebPoly;

namespace {

ChebPoly random_poly(int degree, Rng& rng, double lo = -1.0, double hi = 1.0) {
  std::vector<double> c(degree + 1);
  for (int k = 0; k <= degree; ++k) c[k] = uniform(rng, -1, 1) / (1.0 + 0.2 * k);
  return ChebPoly(c, lo, hi);
}

double grid_max(const std::function<double(double)>& f, double lo, double hi, int n) {
  double m = -INFINITY;
  for (int i = 0; i <= n; ++i) m = std::max(m, f(lo + (hi - lo) * i / n));
  return m;
}

double grid_error(const std::function<double(double)>& f, const ChebPoly& p, int n = 100000) {
  return grid_max([&](double x) { return std::fabs(f(x) - p(x)); }, p.lo(), p.hi(), n);
}

}  // namespace

TEST(Clenshaw, ClosedForms) {
  EXPECT_EQ(ChebPoly({1.0}, -1, 1)(0.77), 1.0);
  EXPECT_DOUBLE_EQ(ChebPoly({0.0, 0.0, 1.0}, -1, 1)(0.5), -0.5);
  EXPECT_EQ(ChebPoly({0.0, 1.0}, 0, 2)(2.0), 1.0);
}

TEST(Clenshaw, AgreesWithDirectRecurrence) {
  Rng rng(1);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_poly(static_cast<int>(uniform(rng, 0, 40)), rng);
    const double x = uniform(rng, -1.2, 1.2);
    const double ref = cheb_direct(p.coeffs(), x);
    EXPECT_NEAR(p(x), ref, 1e-12 * (1.0 + std::fabs(ref)));
  }
}

TEST(ChebPoly, EmptyDomainRejected) { EXPECT_THROW(ChebPoly({1.0}, 1.0, 1.0), DomainError); }

TEST(Derivative, ClosedForms) {
  const auto d = ChebPoly({0.0, 0.0, 1.0}, -1, 1).derivative();
  ASSERT_GE(d.coeffs().size(), 2u);
  EXPECT_DOUBLE_EQ(d.coeffs()[1], 4.0);
  for (std::size_t k = 0; k < d.coeffs().size(); ++k)
    if (k != 1) EXPECT_EQ(d.coeffs()[k], 0.0);
  const auto z = ChebPoly({3.0}, -1, 1).derivative();
  for (double c : z.coeffs()) EXPECT_EQ(c, 0.0);
}

TEST(Derivative, MatchesFiniteDifferencesWithChainFactor) {
  Rng rng(2);
  const auto p = random_poly(15, rng, -3.0, 5.0);
  const auto d = p.derivative();
  for (int t = 0; t < 50; ++t) {
    const double x = uniform(rng, -2.9, 4.9), h = 1e-6;
    const double fd = (p(x + h) - p(x - h)) / (2 * h);
    EXPECT_LE(std::fabs(d(x) - fd), 1e-7 * std::max(1.0, std::fabs(fd)));
  }
}

TEST(Extrema, ChebyshevT3CriticalPoints) {
  const auto pts = cheb::extrema(ChebPoly({0, 0, 0, 1}, -1, 1), -1, 1);
  ASSERT_EQ(pts.size(), 4u);
  EXPECT_EQ(pts.front(), -1.0);
  EXPECT_NEAR(pts[1], -0.5, 1e-12);
  EXPECT_NEAR(pts[2], 0.5, 1e-12);
  EXPECT_EQ(pts.back(), 1.0);
}

TEST(Extrema, LinearHasEndpointsOnly) {
  const auto pts = cheb::extrema(ChebPoly({0.3, -2.0}, 0, 4), 1, 3);
  EXPECT_EQ(pts, (std::vector<double>{1.0, 3.0}));
}

TEST(Extrema, MaximumMatchesGridOnRandomPolynomials) {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const int deg = t < 10 ? 12 : static_cast<int>(uniform(rng, 2, 64));
    const auto p = random_poly(deg, rng);
    double ext = -INFINITY, ext_min = INFINITY;
    for (double x : cheb::extrema(p, -1, 1)) {
      ext = std::max(ext, p(x));
      ext_min = std::min(ext_min, p(x));
    }
    const int n = 100000;
    EXPECT_GE(ext, grid_max([&](double x) { return p(x); }, -1, 1, n) - 1e-9) << deg;
    EXPECT_LE(ext_min, -grid_max([&](double x) { return -p(x); }, -1, 1, n) + 1e-9) << deg;
  }
}

TEST(Extrema, SampledFallbackIsExplicit) {
  Rng rng(4);
  const auto r = cheb::extrema_or_sample(random_poly(9, rng), -1, 1);
  EXPECT_FALSE(r.sampled_fallback);
  EXPECT_TRUE(std::is_sorted(r.points.begin(), r.points.end()));
}

TEST(ColleagueRoots, RecoversKnownRoots) {
  auto roots = cheb::colleague_roots({0, 0, 0, 1});
  std::vector<double> re;
  for (const auto& z : roots) {
    EXPECT_LE(std::fabs(z.imag()), 1e-12);
    re.push_back(z.real());
  }
  std::sort(re.begin(), re.end());
  ASSERT_EQ(re.size(), 3u);
  EXPECT_NEAR(re[0], -std::sqrt(3.0) / 2, 1e-12);
  EXPECT_NEAR(re[1], 0.0, 1e-12);
  EXPECT_NEAR(re[2], std::sqrt(3.0) / 2, 1e-12);
}

TEST(Interpolate, ReproducesPolynomials) {
  Rng rng(5);
  const auto p = random_poly(7, rng, -2.0, 3.0);
  const auto q = cheb::interpolate([&](double x) { return p(x); }, 10, -2.0, 3.0);
  for (int k = 0; k <= 10; ++k) EXPECT_NEAR(q.coeffs()[k], k <= 7 ? p.coeffs()[k] : 0.0, 1e-10);
}

TEST(Interpolate, MatchesNodes) {
  const auto f = [](double x) { return std::sin(3 * x) + x * x; };
  const int n = 17;
  const auto p = cheb::interpolate(f, n, -1.5, 0.5);
  for (int j = 0; j <= n; ++j) {
    const double x = p.from_unit(std::cos(M_PI * j / n));
    EXPECT_NEAR(p(x), f(x), 1e-12);
  }
}

TEST(Interpolate, ExpDegreeTen) {
  const auto p = cheb::interpolate([](double x) { return std::exp(x); }, 10, -1, 1);
  EXPECT_LE(grid_error([](double x) { return std::exp(x); }, p), 1e-9);
}

TEST(Interpolate, AbsoluteValueErrorBoundedByGrid) {
  const auto f = [](double x) { return std::fabs(x); };
  const auto p = cheb::interpolate(f, 4, -1, 1);
  const double coarse = grid_error(f, p, 1000), fine = grid_error(f, p, 100000);
  EXPECT_LE(coarse, fine + 1e-15);
  EXPECT_GT(fine, 0.0);
}

TEST(Interpolate, NonFiniteSampleRejected) {
  EXPECT_THROW(cheb::interpolate([](double x) { return x > 0.5 ? std::nan("") : x; }, 4, -1, 1), NumericalError);
}

TEST(Remez, PolynomialInputIsReproduced) {
  const auto f = [](double x) { return 1.0 - 2.0 * x + 0.5 * x * x * x; };
  const auto r = cheb::remez(f, 4, -1, 1);
  EXPECT_LE(r.certificate.E, 1e-10);
  EXPECT_LE(grid_error(f, r.poly, 10000), 1e-10);
}

TEST(Remez, AbsoluteValueDegreeOne) {
  const auto r = cheb::remez([](double x) { return std::fabs(x); }, 1, -1, 1, {.kinks = {0.0}});
  EXPECT_NEAR(r.certificate.E, 0.5, 1e-6);
  EXPECT_NEAR(r.poly(0.3), 0.5, 1e-6);
  ASSERT_EQ(r.certificate.points.size(), 3u);
  EXPECT_NEAR(r.certificate.points[0], -1.0, 1e-9);
  EXPECT_NEAR(r.certificate.points[1], 0.0, 1e-6);
  EXPECT_NEAR(r.certificate.points[2], 1.0, 1e-9);
}

TEST(Remez, CertificateEquioscillates) {
  const auto f = [](double x) { return std::exp(x) * std::sin(2 * x); };
  const auto r = cheb::remez(f, 8, -1, 2);
  const auto& c = r.certificate;
  EXPECT_TRUE(c.converged);
  ASSERT_EQ(c.points.size(), 10u);
  for (std::size_t i = 0; i < c.points.size(); ++i) {
    EXPECT_GE(c.points[i], -1.0);
    EXPECT_LE(c.points[i], 2.0);
    if (i > 0) {
      EXPECT_GT(c.points[i], c.points[i - 1]);
      EXPECT_LT(c.errors[i] * c.errors[i - 1], 0.0);
    }
    EXPECT_NEAR(std::fabs(c.errors[i]), c.E, 1e-9 * std::max(1.0, c.E));
  }
}

TEST(Remez, BeatsInterpolationOnExp) {
  const auto f = [](double x) { return std::exp(x); };
  const auto r = cheb::remez(f, 5, -1, 1);
  const auto p = cheb::interpolate(f, 5, -1, 1);
  EXPECT_LT(r.certificate.E, grid_error(f, p));
}

TEST(Remez, NeverWorseThanInterpolationOnRandomSmoothFunctions) {
  Rng rng(6);
  for (int t = 0; t < 20; ++t) {
    const double a = uniform(rng, 0.5, 3), b = uniform(rng, -1, 1), c = uniform(rng, 0.2, 2);
    const auto f = [=](double x) { return std::sin(a * x + b) + c * std::exp(-x * x); };
    const int n = static_cast<int>(uniform(rng, 3, 12));
    const auto r = cheb::remez(f, n, -1.5, 1.0);
    const auto p = cheb::interpolate(f, n, -1.5, 1.0);
    EXPECT_LE(grid_error(f, r.poly), grid_error(f, p) * (1.0 + 1e-6)) << t;
  }
}

TEST(Remez, InvalidArgumentsRejected) {
  EXPECT_THROW(cheb::remez([](double x) { return x; }, -1, -1, 1), DomainError);
  EXPECT_THROW(cheb::remez([](double x) { return x; }, 2, 1, 1), DomainError);
}

TEST(RangeEnclosure, ClosedForms) {
  const auto c = cheb::range_enclosure(ChebPoly({2.5}, -1, 1), Interval(-1, 1));
  EXPECT_LE(c.lo(), 2.5);
  EXPECT_GE(c.hi(), 2.5);
  EXPECT_LE(c.width(), 1e-14);
  const auto t1 = cheb::range_enclosure(ChebPoly({0, 1}, -1, 1), Interval(-1, 1));
  EXPECT_TRUE(t1.contains(Interval(-1, 1)));
}

TEST(RangeEnclosure, ContainsGridAndRandomValues) {
  Rng rng(7);
  for (int t = 0; t < 100; ++t) {
    const auto p = random_poly(static_cast<int>(uniform(rng, 1, 30)), rng, -2, 2);
    double a = uniform(rng, -2, 2), b = uniform(rng, -2, 2);
    if (a > b) std::swap(a, b);
    const Interval e = cheb::range_enclosure(p, Interval(a, b));
    for (int i = 0; i <= 1000; ++i) ASSERT_TRUE(e.contains(p(a + (b - a) * i / 1000.0)));
    if (t < 10)
      for (int i = 0; i < 10000; ++i) ASSERT_TRUE(e.contains(p(uniform(rng, a, b))));
  }
}

TEST(ChebOps, RestrictAndAddLinear) {
  Rng rng(8);
  const auto p = random_poly(9, rng, -3, 3);
  const auto r = cheb::restrict_to(p, -1, 2);
  const auto q = cheb::add_linear(p, 0.5, -1.0);
  const auto d = p - q;
  for (int i = 0; i <= 50; ++i) {
    const double x = -1 + 3.0 * i / 50;
    EXPECT_NEAR(r(x), p(x), 1e-12);
    EXPECT_NEAR(q(x), p(x) + 0.5 * x - 1.0, 1e-12);
    EXPECT_NEAR(d(x), -(0.5 * x - 1.0), 1e-12);
  }
}
