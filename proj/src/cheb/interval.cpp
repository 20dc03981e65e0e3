#include "certpoly/cheb/interval.hpp"

#include <ostream>

#include "certpoly/common/error.hpp"

namespace certpoly {

namespace {
constexpr int kLibmUlps = 8;
}

Interval::Interval(double lo, double hi) : lo_(lo), hi_(hi) {
  if (std::isnan(lo) || std::isnan(hi) || lo > hi) throw NumericalError("invalid interval bounds");
}

double Interval::mid() const {
  if (std::isinf(lo_) && std::isinf(hi_)) return 0.0;
  if (std::isinf(lo_)) return -std::numeric_limits<double>::max();
  if (std::isinf(hi_)) return std::numeric_limits<double>::max();
  return lo_ + 0.5 * (hi_ - lo_);
}

double Interval::mig() const {
  if (contains_zero()) return 0.0;
  return std::min(std::fabs(lo_), std::fabs(hi_));
}

Interval& Interval::operator+=(const Interval& o) {
  lo_ = rounding::down(lo_ + o.lo_);
  hi_ = rounding::up(hi_ + o.hi_);
  return *this;
}

Interval& Interval::operator-=(const Interval& o) {
  const double l = rounding::down(lo_ - o.hi_);
  hi_ = rounding::up(hi_ - o.lo_);
  lo_ = l;
  return *this;
}

Interval& Interval::operator*=(const Interval& o) {
  if ((lo_ == 0.0 && hi_ == 0.0) || (o.lo_ == 0.0 && o.hi_ == 0.0)) {
    lo_ = hi_ = 0.0;
    return *this;
  }
  const double a = lo_ * o.lo_, b = lo_ * o.hi_, c = hi_ * o.lo_, d = hi_ * o.hi_;
  double l = std::min(std::min(a, b), std::min(c, d));
  double h = std::max(std::max(a, b), std::max(c, d));
  if (std::isnan(l) || std::isnan(h)) {
    l = -std::numeric_limits<double>::infinity();
    h = std::numeric_limits<double>::infinity();
  }
  lo_ = rounding::down(l);
  hi_ = rounding::up(h);
  return *this;
}

Interval& Interval::operator/=(const Interval& o) {
  if (o.contains_zero()) throw NumericalError("interval division by an interval containing zero");
  const double a = lo_ / o.lo_, b = lo_ / o.hi_, c = hi_ / o.lo_, d = hi_ / o.hi_;
  lo_ = rounding::down(std::min(std::min(a, b), std::min(c, d)));
  hi_ = rounding::up(std::max(std::max(a, b), std::max(c, d)));
  return *this;
}

Interval hull(const Interval& a, const Interval& b) {
  return {std::min(a.lo(), b.lo()), std::max(a.hi(), b.hi())};
}

bool overlaps(const Interval& a, const Interval& b) { return a.lo() <= b.hi() && b.lo() <= a.hi(); }

Interval intersect(const Interval& a, const Interval& b) {
  if (!overlaps(a, b)) throw DomainError("empty interval intersection");
  return {std::max(a.lo(), b.lo()), std::min(a.hi(), b.hi())};
}

Interval sqr(const Interval& x) {
  const double m = x.mig(), M = x.mag();
  return {std::max(0.0, rounding::down(m * m)), rounding::up(M * M)};
}

Interval sqrt(const Interval& x) {
  if (x.lo() < 0.0) throw NumericalError("interval sqrt of a negative interval");
  return {std::max(0.0, rounding::down(std::sqrt(x.lo()))), rounding::up(std::sqrt(x.hi()))};
}

Interval exp(const Interval& x) {
  const double l = std::max(0.0, rounding::down(std::exp(x.lo()), kLibmUlps));
  return {l, rounding::up(std::exp(x.hi()), kLibmUlps)};
}

Interval erfc(const Interval& x) {
  const double l = std::max(0.0, rounding::down(std::erfc(x.hi()), kLibmUlps));
  const double h = std::min(2.0, rounding::up(std::erfc(x.lo()), kLibmUlps));
  return {l, h};
}

Interval tanh(const Interval& x) {
  const double l = std::max(-1.0, rounding::down(std::tanh(x.lo()), kLibmUlps));
  const double h = std::min(1.0, rounding::up(std::tanh(x.hi()), kLibmUlps));
  return {l, h};
}

Interval abs(const Interval& x) { return {x.mig(), x.mag()}; }

namespace constants {
Interval pi() { return Interval::around(M_PI, 2); }
Interval sqrt2() { return Interval::around(M_SQRT2, 2); }
Interval inv_sqrt2() { return Interval::around(M_SQRT1_2, 2); }
Interval inv_sqrt_2pi() { return Interval::around(0.3989422804014327, 2); }
}  // namespace constants

std::ostream& operator<<(std::ostream& os, const Interval& x) {
  return os << '[' << x.lo() << ", " << x.hi() << ']';
}

}  // namespace certpoly
