#include "certpoly/approx/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::approx {

double convergence_bound(const std::variant<Differentiable, Analytic>& kind, int n) {
  if (const auto* d = std::get_if<Differentiable>(&kind)) {
    if (d->nu < 1 || n <= d->nu || !(d->V > 0.0)) throw DomainError("differentiable bound needs n > nu >= 1 and V > 0");
    return 4.0 * d->V / (std::numbers::pi * d->nu * std::pow(n - d->nu, d->nu));
  }
  const auto& a = std::get<Analytic>(kind);
  if (!(a.rho > 1.0) || !(a.M > 0.0) || n < 0) throw DomainError("analytic bound needs rho > 1, M > 0, n >= 0");
  return 4.0 * a.M * std::pow(a.rho, -n) / (a.rho - 1.0);
}

double total_variation(const std::function<double(double)>& f, double lo, double hi,
                       const std::optional<std::vector<double>>& breaks) {
  if (!breaks) throw DomainError("total variation needs a monotone-piece decomposition");
  if (!(lo <= hi)) throw DomainError("total variation needs lo <= hi");
  std::vector<double> pts{lo};
  for (double b : *breaks)
    if (b > lo && b < hi) pts.push_back(b);
  pts.push_back(hi);
  std::sort(pts.begin(), pts.end());
  double v = 0.0;
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) v += std::fabs(f(pts[i + 1]) - f(pts[i]));
  return v;
}

double total_variation(const nn::Activation& act, double lo, double hi) {
  return total_variation([&act](double x) { return act(x); }, lo, hi, act.critical_points());
}

}  // namespace certpoly::approx
