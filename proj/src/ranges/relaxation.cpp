#include "certpoly/ranges/relaxation.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::ranges {

namespace {

const nn::Activation& gelu_act() {
  static const nn::Activation g = nn::Activation::gelu();
  return g;
}

double g(double x) { return gelu_act()(x); }
double dg(double x) { return gelu_act().derivative(x); }

nn::Line tangent(double t) { return {dg(t), g(t) - dg(t) * t}; }

nn::Line secant(double l, double u) {
  const double s = (g(u) - g(l)) / (u - l);
  return {s, g(l) - s * l};
}

// Boundary of {t : ok(t)} between a point where ok holds and one where it may not.
double bisect_boundary(const std::function<bool(double)>& ok, double good, double bad) {
  if (ok(bad)) return bad;
  for (int it = 0; it < 80 && good != bad; ++it) {
    const double m = 0.5 * (good + bad);
    if (m == good || m == bad) break;
    (ok(m) ? good : bad) = m;
  }
  return good;
}

// Tangent point for a lower tangent in the convex piece; valid set is [t_l, t_u].
double lower_tangent_point(double l, double u) {
  const double a = std::max(l, -std::numbers::sqrt2), b = std::min(u, std::numbers::sqrt2);
  const double mid = 0.5 * (l + u);
  auto below_at = [](double x) { return [x](double t) { return tangent(t)(x) <= g(x); }; };
  // The left endpoint condition holds for large t, the right one for small t.
  const double lo = below_at(l)(a) ? a : bisect_boundary(below_at(l), b, a);
  const double hi = below_at(u)(b) ? b : bisect_boundary(below_at(u), a, b);
  if (lo > hi) return std::clamp(mid, a, b);
  return std::clamp(mid, lo, hi);
}

// Upper tangent in the left concave piece: valid for t <= t*.
double upper_tangent_left(double l, double u) {
  const double b = std::min(u, -std::numbers::sqrt2);
  auto above_u = [u](double t) { return tangent(t)(u) >= g(u); };
  const double hi = above_u(b) ? b : bisect_boundary(above_u, l, b);
  return std::clamp(0.5 * (l + u), l, hi);
}

// Upper tangent in the right concave piece: valid for t >= t*.
double upper_tangent_right(double l, double u) {
  const double a = std::max(l, std::numbers::sqrt2);
  auto above_l = [l](double t) { return tangent(t)(l) >= g(l); };
  const double lo = above_l(a) ? a : bisect_boundary(above_l, u, a);
  return std::clamp(0.5 * (l + u), lo, u);
}

}  // namespace

std::string to_string(GeluCase c) {
  switch (c) {
    case GeluCase::Degenerate: return "degenerate";
    case GeluCase::ConcaveLeft: return "concave left";
    case GeluCase::ConvexMiddle: return "convex middle";
    case GeluCase::MiddleIncreasing: return "non-convex middle increasing";
    case GeluCase::MiddleDecreasingII: return "non-convex middle decreasing II";
    case GeluCase::MiddleDecreasingI: return "non-convex middle decreasing I";
    case GeluCase::ConcaveRight: return "concave right";
    case GeluCase::Outer: return "outer";
    case GeluCase::PositiveII: return "non-convex positive II";
    case GeluCase::PositiveI: return "non-convex positive I";
  }
  return "unknown";
}

LinearBounds gelu_relaxation(double l, double u) {
  if (!(l <= u)) throw DomainError("gelu_relaxation needs l <= u");
  LinearBounds r;
  if (l == u) {
    r.lower = r.upper = tangent(l);
    r.which = GeluCase::Degenerate;
  } else {
    const double r2 = std::numbers::sqrt2;
    const double s = (g(u) - g(l)) / (u - l);
    if (u <= -r2) {
      r = {secant(l, u), tangent(0.5 * (l + u)), GeluCase::ConcaveLeft};
    } else if (u <= r2) {
      if (l >= -r2) {
        r = {tangent(0.5 * (l + u)), secant(l, u), GeluCase::ConvexMiddle};
      } else if (dg(l) <= s) {
        r = {tangent(lower_tangent_point(l, u)), secant(l, u), GeluCase::MiddleIncreasing};
      } else if (dg(u) <= s) {
        r = {secant(l, u), tangent(upper_tangent_left(l, u)), GeluCase::MiddleDecreasingII};
      } else {
        r = {tangent(lower_tangent_point(l, u)), tangent(upper_tangent_left(l, u)), GeluCase::MiddleDecreasingI};
      }
    } else if (l >= r2) {
      r = {secant(l, u), tangent(0.5 * (l + u)), GeluCase::ConcaveRight};
    } else if (dg(u) >= s) {
      r = {tangent(lower_tangent_point(l, u)), secant(l, u), GeluCase::Outer};
    } else if (dg(l) >= s) {
      r = {secant(l, u), tangent(upper_tangent_right(l, u)), GeluCase::PositiveII};
    } else {
      r = {tangent(lower_tangent_point(l, u)), tangent(upper_tangent_right(l, u)), GeluCase::PositiveI};
    }
  }
  const Interval lo_off = nn::extremize_offset(gelu_act(), r.lower.slope, l, u);
  const Interval hi_off = nn::extremize_offset(gelu_act(), r.upper.slope, l, u);
  r.lower.intercept = std::min(r.lower.intercept, lo_off.lo());
  r.upper.intercept = std::max(r.upper.intercept, hi_off.hi());
  return r;
}

ParallelRelaxation parallel_relaxation(const nn::Activation& act, double l, double u) {
  if (!(l <= u)) throw DomainError("parallel_relaxation needs l <= u");
  double slope = 0.0;
  if (l == u) {
    slope = act.derivative(l);
  } else {
    switch (act.kind()) {
      case nn::ActivationKind::GELU: {
        const LinearBounds b = gelu_relaxation(l, u);
        slope = 0.5 * (b.lower.slope + b.upper.slope);
        break;
      }
      case nn::ActivationKind::Sigmoid:
      case nn::ActivationKind::Tanh:
        slope = std::min(act.derivative(l), act.derivative(u));
        break;
      default:
        slope = (act(u) - act(l)) / (u - l);
    }
  }
  if (!std::isfinite(slope)) slope = 0.0;
  const Interval off = nn::extremize_offset(act, slope, l, u);
  return {slope, off.lo(), off.hi()};
}

Interval poly_offset_range(const cheb::ChebPoly& p, double slope, double l, double u) {
  if (!(l <= u)) throw DomainError("poly_offset_range needs l <= u");
  auto v = [&](double x) { return p(x) - slope * x; };
  const double mass = p.abs_coeff_sum() + std::fabs(slope) * std::max(std::fabs(l), std::fabs(u));
  if (l == u) {
    const double s = 32.0 * std::numeric_limits<double>::epsilon() * mass;
    return {rounding::down(v(l) - s), rounding::up(v(l) + s)};
  }
  // Growth of the Chebyshev basis outside the domain inflates the evaluation error.
  const double tl = std::fabs(p.to_unit(l)), tu = std::fabs(p.to_unit(u));
  const double t = std::max({1.0, tl, tu});
  const double growth = t > 1.0 ? std::pow(t + std::sqrt(t * t - 1.0), p.degree()) : 1.0;
  const double slack = 32.0 * std::numeric_limits<double>::epsilon() * mass * growth;
  const cheb::ChebPoly d = cheb::restrict_to(cheb::add_linear(p, -slope, 0.0), l, u);
  const cheb::ExtremaResult ext = cheb::extrema_or_sample(d, l, u);
  if (ext.sampled_fallback) return cheb::range_enclosure(cheb::add_linear(p, -slope, 0.0), Interval(l, u));
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : ext.points) {
    const double y = v(x);
    lo = std::min(lo, y);
    hi = std::max(hi, y);
  }
  return {rounding::down(lo - slack), rounding::up(hi + slack)};
}

ParallelRelaxation parallel_relaxation(const cheb::ChebPoly& p, double l, double u) {
  const double slope = l == u ? p.derivative()(l) : (p(u) - p(l)) / (u - l);
  const Interval off = poly_offset_range(p, slope, l, u);
  return {slope, off.lo(), off.hi()};
}

}  // namespace certpoly::ranges
