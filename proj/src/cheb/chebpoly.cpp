#include "certpoly/cheb/chebpoly.hpp"

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::cheb {

ChebPoly::ChebPoly(std::vector<double> coeffs, double lo, double hi)
    : coeffs_(std::move(coeffs)), lo_(lo), hi_(hi) {
  if (coeffs_.empty()) coeffs_.push_back(0.0);
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi)) throw DomainError("ChebPoly needs lo < hi");
}

double clenshaw(const std::vector<double>& c, double t) {
  if (c.empty()) return 0.0;
  double b1 = 0.0, b2 = 0.0;
  const double tt = 2.0 * t;
  for (std::size_t k = c.size() - 1; k >= 1; --k) {
    const double b0 = c[k] + tt * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return c[0] + t * b1 - b2;
}

double ChebPoly::eval_unit(double t) const { return clenshaw(coeffs_, t); }

double ChebPoly::operator()(double x) const { return clenshaw(coeffs_, to_unit(x)); }

Interval ChebPoly::enclose(const Interval& x) const {
  const Interval t = (Interval(2.0) * x - Interval(lo_ + hi_)) / Interval(hi_ - lo_);
  const Interval tt = Interval(2.0) * t;
  Interval b1(0.0), b2(0.0);
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
    Interval b0 = Interval(coeffs_[k]) + tt * b1 - b2;
    b2 = b1;
    b1 = b0;
  }
  return Interval(coeffs_[0]) + t * b1 - b2;
}

Jet<Interval> ChebPoly::eval_jet(const Jet<Interval>& x) const {
  const std::size_t order = x.order();
  const Interval scale = Interval(2.0) / Interval(hi_ - lo_);
  const Interval shift = Interval(lo_ + hi_) / Interval(hi_ - lo_);
  Jet<Interval> t = x * scale;
  t[0] -= shift;
  const Jet<Interval> tt = t * Interval(2.0);
  Jet<Interval> b1(order), b2(order);
  for (std::size_t k = coeffs_.size() - 1; k >= 1; --k) {
    Jet<Interval> b0 = tt * b1 - b2;
    b0[0] += Interval(coeffs_[k]);
    b2 = std::move(b1);
    b1 = std::move(b0);
  }
  Jet<Interval> r = t * b1 - b2;
  r[0] += Interval(coeffs_[0]);
  return r;
}

ChebPoly ChebPoly::derivative() const {
  const int n = degree();
  if (n == 0) return ChebPoly({0.0}, lo_, hi_);
  std::vector<double> d(n, 0.0);
  for (int k = n - 1; k >= 0; --k) {
    const double next = (k + 2 <= n - 1) ? d[k + 2] : 0.0;
    d[k] = next + 2.0 * (k + 1) * coeffs_[k + 1];
  }
  d[0] *= 0.5;
  const double s = 2.0 / (hi_ - lo_);
  for (auto& v : d) v *= s;
  return ChebPoly(std::move(d), lo_, hi_);
}

double ChebPoly::abs_coeff_sum() const {
  double s = 0.0;
  for (double c : coeffs_) s += std::fabs(c);
  return s;
}

ChebPoly operator-(const ChebPoly& a, const ChebPoly& b) {
  if (a.lo() != b.lo() || a.hi() != b.hi()) throw DomainError("ChebPoly subtraction needs equal domains");
  std::vector<double> c(std::max(a.coeffs().size(), b.coeffs().size()), 0.0);
  for (std::size_t k = 0; k < a.coeffs().size(); ++k) c[k] += a.coeffs()[k];
  for (std::size_t k = 0; k < b.coeffs().size(); ++k) c[k] -= b.coeffs()[k];
  return ChebPoly(std::move(c), a.lo(), a.hi());
}

ChebPoly add_linear(const ChebPoly& p, double slope, double intercept) {
  std::vector<double> c = p.coeffs();
  if (c.size() < 2) c.resize(2, 0.0);
  c[0] += slope * 0.5 * (p.lo() + p.hi()) + intercept;
  c[1] += slope * 0.5 * (p.hi() - p.lo());
  return ChebPoly(std::move(c), p.lo(), p.hi());
}

ChebPoly restrict_to(const ChebPoly& p, double lo, double hi, int degree) {
  const int n = degree < 0 ? p.degree() : degree;
  return interpolate([&p](double x) { return p(x); }, n, lo, hi);
}

namespace {

void balance(Eigen::MatrixXd& m) {
  const Eigen::Index n = m.rows();
  bool converged = false;
  for (int sweep = 0; sweep < 100 && !converged; ++sweep) {
    converged = true;
    for (Eigen::Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Eigen::Index j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::fabs(m(j, i));
        r += std::fabs(m(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double f = 1.0;
      const double s = c + r;
      while (c < r / 2.0) {
        c *= 2.0;
        r /= 2.0;
        f *= 2.0;
      }
      while (c >= r * 2.0) {
        c /= 2.0;
        r *= 2.0;
        f /= 2.0;
      }
      if ((c + r) < 0.95 * s) {
        converged = false;
        m.row(i) /= f;
        m.col(i) *= f;
      }
    }
  }
}

}  // namespace

std::vector<std::complex<double>> colleague_roots(std::vector<double> a) {
  double amax = 0.0;
  for (double v : a) amax = std::max(amax, std::fabs(v));
  if (amax == 0.0) return {};
  while (a.size() > 1 && std::fabs(a.back()) <= 4.0 * std::numeric_limits<double>::epsilon() * amax) a.pop_back();
  const int m = static_cast<int>(a.size()) - 1;
  if (m <= 0) return {};
  if (m == 1) return {std::complex<double>(-a[0] / a[1], 0.0)};
  Eigen::MatrixXd c = Eigen::MatrixXd::Zero(m, m);
  c(0, 1) = 1.0;
  for (int i = 1; i < m - 1; ++i) {
    c(i, i - 1) = 0.5;
    c(i, i + 1) = 0.5;
  }
  c(m - 1, m - 2) = 0.5;
  for (int k = 0; k < m; ++k) c(m - 1, k) -= a[k] / (2.0 * a[m]);
  balance(c);
  Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
  if (es.info() != Eigen::Success) throw NumericalError("colleague eigenvalue solve did not converge");
  std::vector<std::complex<double>> roots(es.eigenvalues().begin(), es.eigenvalues().end());
  return roots;
}

std::vector<double> extrema(const ChebPoly& p, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("extrema needs lo <= hi");
  std::vector<double> pts{lo, hi};
  if (p.degree() >= 2 && lo < hi) {
    const ChebPoly dp = p.derivative();
    for (const auto& z : colleague_roots(dp.coeffs())) {
      // Near-real pairs come from clustered roots; their real parts are harmless extra candidates.
      if (std::fabs(z.imag()) > 1e-6 * (1.0 + std::abs(z))) continue;
      const double x = p.from_unit(z.real());
      if (x > lo && x < hi) pts.push_back(x);
    }
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  return pts;
}

ExtremaResult extrema_or_sample(const ChebPoly& p, double lo, double hi) {
  try {
    return {extrema(p, lo, hi), false};
  } catch (const NumericalError&) {
    const int n = std::max(4096, 64 * (p.degree() + 1));
    ExtremaResult r;
    r.sampled_fallback = true;
    for (int i = 0; i <= n; ++i) r.points.push_back(lo + (hi - lo) * i / n);
    return r;
  }
}

double max_abs_on(const ChebPoly& p, double lo, double hi) {
  double m = 0.0;
  for (double x : extrema_or_sample(p, lo, hi).points) m = std::max(m, std::fabs(p(x)));
  return m;
}

ChebPoly interpolate(const std::function<double(double)>& f, int n, double lo, double hi) {
  if (n < 0) throw DomainError("interpolate needs n >= 0");
  if (!(lo < hi)) throw DomainError("interpolate needs lo < hi");
  if (n == 0) {
    const double v = f(0.5 * (lo + hi));
    if (!std::isfinite(v)) throw NumericalError("non-finite sample in interpolate");
    return ChebPoly({v}, lo, hi);
  }
  std::vector<double> fv(n + 1);
  for (int j = 0; j <= n; ++j) {
    const double t = std::cos(std::numbers::pi * j / n);
    fv[j] = f(0.5 * (hi - lo) * t + 0.5 * (lo + hi));
    if (!std::isfinite(fv[j])) throw NumericalError("non-finite sample in interpolate");
  }
  std::vector<double> c(n + 1, 0.0);
  for (int k = 0; k <= n; ++k) {
    double s = 0.0;
    for (int j = 0; j <= n; ++j) {
      const double w = (j == 0 || j == n) ? 0.5 : 1.0;
      // cos(pi k j / n) with the product reduced mod 2n to keep the argument small
      const long r = (static_cast<long>(k) * j) % (2L * n);
      s += w * fv[j] * std::cos(std::numbers::pi * r / n);
    }
    c[k] = s * 2.0 / n;
  }
  c[0] *= 0.5;
  c[n] *= 0.5;
  return ChebPoly(std::move(c), lo, hi);
}

Interval range_enclosure(const ChebPoly& p, const Interval& x_range) {
  constexpr int kParts = 8;
  const double a = x_range.lo(), b = x_range.hi();
  Interval r = p.enclose(Interval(a));
  for (int i = 0; i < kParts; ++i) {
    const double l = (i == 0) ? a : a + (b - a) * i / kParts;
    const double h = (i == kParts - 1) ? b : a + (b - a) * (i + 1) / kParts;
    r = hull(r, p.enclose(Interval(std::min(l, h), std::max(l, h))));
  }
  if (p.lo() <= a && b <= p.hi()) {
    double s = 0.0;
    for (std::size_t k = 1; k < p.coeffs().size(); ++k) s += std::fabs(p.coeffs()[k]);
    const double slack = 4.0 * std::numeric_limits<double>::epsilon() * (p.abs_coeff_sum() + 1.0) * p.coeffs().size();
    const Interval bound(rounding::down(p.coeffs()[0] - s - slack), rounding::up(p.coeffs()[0] + s + slack));
    if (overlaps(r, bound)) r = intersect(r, bound);
  }
  return r;
}

}  // namespace certpoly::cheb
