#include "certpoly/approx/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "certpoly/cheb/remez.hpp"
#include "certpoly/common/error.hpp"

namespace certpoly::approx {

using cheb::ChebPoly;

namespace {

// Floating-point slack for evaluating the two sides at a point; independent of the degree.
double rounding_slack(double coeff_mass) { return 32.0 * std::numeric_limits<double>::epsilon() * coeff_mass; }

}  // namespace

double certify_pi_error(const ChebPoly& pi, const PiecewiseSurrogate& q, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("certify_pi_error needs lo <= hi");
  double eps = 0.0;
  for (const auto& seg : q.segments()) {
    const double a = std::max(lo, seg.lo), b = std::min(hi, seg.hi);
    if (a > b) continue;
    const double q_mass = seg.poly ? seg.poly->abs_coeff_sum()
                                   : std::fabs(seg.line.slope) * std::max(std::fabs(a), std::fabs(b)) +
                                         std::fabs(seg.line.intercept);
    auto diff = [&](double x) { return pi(x) - (seg.poly ? (*seg.poly)(x) : seg.line(x)); };
    std::vector<double> candidates{a, b};
    if (a < b) {
      // Locate extrema on the re-expanded difference, then evaluate both sides directly.
      ChebPoly d;
      if (!seg.poly) {
        d = cheb::add_linear(pi, -seg.line.slope, -seg.line.intercept);
      } else {
        const int n = std::max(pi.degree(), seg.poly->degree());
        d = cheb::restrict_to(pi, a, b, n) - cheb::restrict_to(*seg.poly, a, b, n);
      }
      candidates = cheb::extrema_or_sample(d, a, b).points;
    }
    double m = 0.0;
    for (double x : candidates) m = std::max(m, std::fabs(diff(x)));
    eps = std::max(eps, m + rounding_slack(pi.abs_coeff_sum() + q_mass));
  }
  return eps;
}

nn::CertifiedActivationPoly fit_activation(const nn::Activation& act, double lo, double hi, int degree,
                                           double eps_q_target, const FitOptions& opts) {
  if (degree < 1) throw DomainError("fit_activation needs degree >= 1");
  if (!(lo < hi)) throw DomainError("fit_activation needs lo < hi");
  SurrogateCache& cache = opts.cache ? *opts.cache : SurrogateCache::global();
  const PiecewiseSurrogate& q = cache.get(act, eps_q_target, opts.surrogate);
  cheb::RemezOptions ro;
  for (double d : q.breakpoints)
    if (d > lo && d < hi) ro.kinks.push_back(d);
  for (double k : act.kinks())
    if (k > lo && k < hi) ro.kinks.push_back(k);
  const auto fit = cheb::remez([&q](double x) { return q(x); }, degree, lo, hi, ro);
  nn::CertifiedActivationPoly out;
  out.pi = fit.poly;
  out.eps_pi = certify_pi_error(fit.poly, q, lo, hi);
  out.eps_q = q.eps_q;
  return out;
}

}  // namespace certpoly::approx
