#pragma once

#include <string>

#include "certpoly/cheb/chebpoly.hpp"
#include "certpoly/nn/activation.hpp"

namespace certpoly::ranges {

enum class GeluCase {
  Degenerate,
  ConcaveLeft,
  ConvexMiddle,
  MiddleIncreasing,
  MiddleDecreasingII,
  MiddleDecreasingI,
  ConcaveRight,
  Outer,
  PositiveII,
  PositiveI,
};

std::string to_string(GeluCase c);

struct LinearBounds {
  nn::Line lower;
  nn::Line upper;
  GeluCase which = GeluCase::Degenerate;
};

// Sound lower and upper lines for GELU on [l, u] (case tree on the convexity breakpoints
// +-sqrt(2), tangent points at the clamped midpoint). Each line's offset is re-checked
// against a rigorous extremum of gelu - slope * x and moved outward if needed.
LinearBounds gelu_relaxation(double l, double u);

// sigma(x) - slope * x lies in [offset_lo, offset_hi] on the interval.
struct ParallelRelaxation {
  double slope = 0.0;
  double offset_lo = 0.0;
  double offset_hi = 0.0;
};

ParallelRelaxation parallel_relaxation(const nn::Activation& act, double l, double u);

// Parallel relaxation of a polynomial on [l, u] (secant slope).
ParallelRelaxation parallel_relaxation(const cheb::ChebPoly& p, double l, double u);

// Bounds on min and max of p(x) - slope * x over [l, u].
Interval poly_offset_range(const cheb::ChebPoly& p, double slope, double l, double u);

}  // namespace certpoly::ranges
