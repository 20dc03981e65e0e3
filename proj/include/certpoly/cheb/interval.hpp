#pragma once

#include <algorithm>
#include <cmath>
#include <iosfwd>
#include <limits>

namespace certpoly {

namespace rounding {

// Push x outward by at least `ulps` units in the last place.
inline double down(double x, int ulps = 4) {
  if (!std::isfinite(x)) return x;
  return x - (std::fabs(x) * (ulps * 0x1p-52) + 0x1p-1070);
}
inline double up(double x, int ulps = 4) { return -down(-x, ulps); }

}  // namespace rounding

// Closed interval with outward-rounded arithmetic.
class Interval {
 public:
  Interval() = default;
  Interval(double x) : lo_(x), hi_(x) {}  // NOLINT(google-explicit-constructor)
  Interval(double lo, double hi);

  static Interval whole() {
    return {-std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  }
  // Enclosure of a real constant known to within a few ulps of `approx`.
  static Interval around(double approx, int ulps = 8) {
    return {rounding::down(approx, ulps), rounding::up(approx, ulps)};
  }

  double lo() const { return lo_; }
  double hi() const { return hi_; }
  double mid() const;
  double rad() const { return rounding::up((hi_ - lo_) * 0.5); }
  double width() const { return hi_ - lo_; }
  double mag() const { return std::max(std::fabs(lo_), std::fabs(hi_)); }
  double mig() const;
  bool contains(double x) const { return lo_ <= x && x <= hi_; }
  bool contains(const Interval& o) const { return lo_ <= o.lo_ && o.hi_ <= hi_; }
  bool contains_zero() const { return lo_ <= 0.0 && 0.0 <= hi_; }
  bool is_thin() const { return lo_ == hi_; }

  Interval& operator+=(const Interval& o);
  Interval& operator-=(const Interval& o);
  Interval& operator*=(const Interval& o);
  Interval& operator/=(const Interval& o);

  friend Interval operator-(const Interval& a) { return {-a.hi_, -a.lo_}; }
  friend Interval operator+(Interval a, const Interval& b) { return a += b; }
  friend Interval operator-(Interval a, const Interval& b) { return a -= b; }
  friend Interval operator*(Interval a, const Interval& b) { return a *= b; }
  friend Interval operator/(Interval a, const Interval& b) { return a /= b; }
  friend bool operator==(const Interval& a, const Interval& b) { return a.lo_ == b.lo_ && a.hi_ == b.hi_; }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
};

Interval hull(const Interval& a, const Interval& b);
// Throws DomainError when the intersection is empty.
Interval intersect(const Interval& a, const Interval& b);
bool overlaps(const Interval& a, const Interval& b);

Interval sqr(const Interval& x);
Interval sqrt(const Interval& x);
Interval exp(const Interval& x);
Interval erfc(const Interval& x);
Interval tanh(const Interval& x);
Interval abs(const Interval& x);

namespace constants {
Interval pi();
Interval sqrt2();
Interval inv_sqrt2();
Interval inv_sqrt_2pi();
}  // namespace constants

std::ostream& operator<<(std::ostream& os, const Interval& x);

}  // namespace certpoly
