#pragma once

#include <complex>
#include <functional>
#include <vector>

#include "certpoly/cheb/interval.hpp"
#include "certpoly/cheb/jet.hpp"

namespace certpoly::cheb {

// p(x) = sum_k c_k T_k(t), t = (2x - (lo + hi)) / (hi - lo).
class ChebPoly {
 public:
  ChebPoly() : coeffs_{0.0}, lo_(-1.0), hi_(1.0) {}
  ChebPoly(std::vector<double> coeffs, double lo, double hi);

  const std::vector<double>& coeffs() const { return coeffs_; }
  double lo() const { return lo_; }
  double hi() const { return hi_; }
  Interval domain() const { return {lo_, hi_}; }
  int degree() const { return static_cast<int>(coeffs_.size()) - 1; }

  double to_unit(double x) const { return (2.0 * x - (lo_ + hi_)) / (hi_ - lo_); }
  double from_unit(double t) const { return 0.5 * (hi_ - lo_) * t + 0.5 * (lo_ + hi_); }

  double operator()(double x) const;
  double eval_unit(double t) const;
  Interval enclose(const Interval& x) const;
  Jet<Interval> eval_jet(const Jet<Interval>& x) const;

  ChebPoly derivative() const;
  double abs_coeff_sum() const;

 private:
  std::vector<double> coeffs_;
  double lo_;
  double hi_;
};

double clenshaw(const std::vector<double>& c, double t);

ChebPoly operator-(const ChebPoly& a, const ChebPoly& b);
// p(x) + slope * x + intercept, same domain.
ChebPoly add_linear(const ChebPoly& p, double slope, double intercept);
// Re-expand p on [lo, hi] at the same degree.
ChebPoly restrict_to(const ChebPoly& p, double lo, double hi, int degree = -1);

// Roots in the unit variable of sum_k a_k T_k via the colleague matrix.
std::vector<std::complex<double>> colleague_roots(std::vector<double> a);

struct ExtremaResult {
  std::vector<double> points;  // critical points in [lo, hi] plus both endpoints, ascending
  bool sampled_fallback = false;
};

// Throws NumericalError if the eigenvalue solve does not converge.
std::vector<double> extrema(const ChebPoly& p, double lo, double hi);
// Same, but falls back to dense sampling on solver failure and flags it.
ExtremaResult extrema_or_sample(const ChebPoly& p, double lo, double hi);
// max |p| on [lo, hi] over the extremal candidates.
double max_abs_on(const ChebPoly& p, double lo, double hi);

// Interpolant of degree n at the n + 1 Chebyshev points of the second kind.
ChebPoly interpolate(const std::function<double(double)>& f, int n, double lo, double hi);

// Sound enclosure of {p(x) : x in x_range}.
Interval range_enclosure(const ChebPoly& p, const Interval& x_range);

}  // namespace certpoly::cheb
