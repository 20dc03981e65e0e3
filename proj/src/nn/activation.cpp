#include "certpoly/nn/activation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::nn {

namespace {

constexpr double kInvSqrt2Pi = 0.3989422804014327;

double phi(double x) { return kInvSqrt2Pi * std::exp(-0.5 * x * x); }
double Phi(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }
double logistic(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

template <class F>
double bisect_root(F f, double a, double b) {
  double fa = f(a);
  for (int i = 0; i < 200 && b - a > 0.0; ++i) {
    const double m = 0.5 * (a + b);
    if (m == a || m == b) break;
    const double fm = f(m);
    if ((fm < 0.0) == (fa < 0.0)) {
      a = m;
      fa = fm;
    } else {
      b = m;
    }
  }
  return 0.5 * (a + b);
}

Interval Phi(const Interval& x) { return Interval(0.5) * erfc(-(x * constants::inv_sqrt2())); }
Interval phi(const Interval& x) { return constants::inv_sqrt_2pi() * exp(Interval(-0.5) * sqr(x)); }
Interval logistic(const Interval& x) {
  const double l = std::max(0.0, rounding::down(logistic(x.lo()), 8));
  const double h = std::min(1.0, rounding::up(logistic(x.hi()), 8));
  return {l, h};
}
// Range of s(1 - s) for s in S.
Interval bernoulli_var(const Interval& s) {
  auto h = [](double v) { return v * (1.0 - v); };
  double lo = std::min(h(s.lo()), h(s.hi()));
  double hi = std::max(h(s.lo()), h(s.hi()));
  if (s.contains(0.5)) hi = 0.25;
  return {rounding::down(lo), rounding::up(hi)};
}

// Mean-value enclosure of f over a small interval around c.
template <class F, class DF>
Interval mean_value(F f, DF df, const Interval& b) {
  const double m = b.mid();
  return f(Interval(m)) + df(b) * (b - Interval(m));
}

}  // namespace

Activation::Activation(ActivationKind kind, double alpha) : kind_(kind), alpha_(alpha) {
  switch (kind_) {
    case ActivationKind::ReLU:
      alpha_ = 0.0;
      kinks_ = {0.0};
      dbreaks_ = {0.0};
      break;
    case ActivationKind::LeakyReLU:
      kinks_ = {0.0};
      dbreaks_ = {0.0};
      if (alpha_ < 0.0) critical_ = {0.0};
      break;
    case ActivationKind::Sigmoid:
    case ActivationKind::Tanh:
      alpha_ = 0.0;
      dbreaks_ = {0.0};
      break;
    case ActivationKind::GELU: {
      alpha_ = 0.0;
      const double xs = bisect_root([](double x) { return Phi(x) + x * phi(x); }, -1.0, -0.5);
      critical_ = {xs};
      cutoffs_ = {xs, -xs};
      dbreaks_ = {-M_SQRT2, M_SQRT2};
      break;
    }
    case ActivationKind::SiLU: {
      alpha_ = 0.0;
      const double xs = bisect_root([](double x) { return 1.0 + x * (1.0 - logistic(x)); }, -2.0, -1.0);
      critical_ = {xs};
      cutoffs_ = {xs, -xs};
      const double xi = bisect_root([](double x) { return 2.0 + x * (1.0 - 2.0 * logistic(x)); }, 2.0, 3.0);
      dbreaks_ = {-xi, xi};
      break;
    }
    case ActivationKind::ELU:
      if (!(alpha_ > 0.0)) throw DomainError("ELU needs alpha > 0");
      kinks_ = {0.0};
      dbreaks_ = {0.0};
      break;
  }
}

Activation Activation::parse(const std::string& name, double alpha) {
  if (name == "relu") return relu();
  if (name == "leaky_relu") return leaky_relu(alpha);
  if (name == "sigmoid") return sigmoid();
  if (name == "tanh") return tanh();
  if (name == "gelu") return gelu();
  if (name == "silu") return silu();
  if (name == "elu") return elu(alpha == 0.0 ? 1.0 : alpha);
  throw ParseError("unknown activation '" + name + "'");
}

std::string Activation::name() const {
  switch (kind_) {
    case ActivationKind::ReLU: return "relu";
    case ActivationKind::LeakyReLU: return "leaky_relu";
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::GELU: return "gelu";
    case ActivationKind::SiLU: return "silu";
    case ActivationKind::ELU: return "elu";
  }
  return "?";
}

double Activation::operator()(double x) const {
  switch (kind_) {
    case ActivationKind::ReLU: return x > 0.0 ? x : 0.0;
    case ActivationKind::LeakyReLU: return x >= 0.0 ? x : alpha_ * x;
    case ActivationKind::Sigmoid: return logistic(x);
    case ActivationKind::Tanh: return std::tanh(x);
    case ActivationKind::GELU: return x * Phi(x);
    case ActivationKind::SiLU: return x * logistic(x);
    case ActivationKind::ELU: return x >= 0.0 ? x : alpha_ * std::expm1(x);
  }
  return 0.0;
}

double Activation::derivative(double x) const {
  switch (kind_) {
    case ActivationKind::ReLU: return x > 0.0 ? 1.0 : 0.0;
    case ActivationKind::LeakyReLU: return x > 0.0 ? 1.0 : alpha_;
    case ActivationKind::Sigmoid: {
      const double s = logistic(x);
      return s * (1.0 - s);
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      return 1.0 - t * t;
    }
    case ActivationKind::GELU: return Phi(x) + x * phi(x);
    case ActivationKind::SiLU: {
      const double s = logistic(x);
      return s + x * s * (1.0 - s);
    }
    case ActivationKind::ELU: return x > 0.0 ? 1.0 : alpha_ * std::exp(x);
  }
  return 0.0;
}

std::array<double, 4> Activation::tabulated_asymptotes() const {
  switch (kind_) {
    case ActivationKind::Sigmoid: return {0.0, 0.0, 0.0, 1.0};
    case ActivationKind::Tanh: return {0.0, -1.0, 0.0, 1.0};
    case ActivationKind::ReLU: return {0.0, 0.0, 1.0, 0.0};
    case ActivationKind::LeakyReLU: return {1.0 / alpha_, 0.0, 1.0, 0.0};
    case ActivationKind::GELU: return {1.0, 0.0, 0.0, 0.0};
    case ActivationKind::SiLU: return {1.0, 0.0, 0.0, 0.0};
    case ActivationKind::ELU: return {1.0, 0.0, 0.0, -1.0};
  }
  return {};
}

Line Activation::left_asymptote() const {
  switch (kind_) {
    case ActivationKind::Sigmoid: return {0.0, 0.0};
    case ActivationKind::Tanh: return {0.0, -1.0};
    case ActivationKind::ReLU: return {0.0, 0.0};
    case ActivationKind::LeakyReLU: return {alpha_, 0.0};
    case ActivationKind::GELU:
    case ActivationKind::SiLU: return {0.0, 0.0};
    case ActivationKind::ELU: return {0.0, -alpha_};
  }
  return {};
}

Line Activation::right_asymptote() const {
  switch (kind_) {
    case ActivationKind::Sigmoid:
    case ActivationKind::Tanh: return {0.0, 1.0};
    default: return {1.0, 0.0};
  }
}

Interval Activation::enclose(const Interval& x) const {
  switch (kind_) {
    case ActivationKind::ReLU: return {std::max(0.0, x.lo()), std::max(0.0, x.hi())};
    case ActivationKind::LeakyReLU: {
      auto f = [this](double v) { return v >= 0.0 ? v : alpha_ * v; };
      Interval r = hull(Interval(f(x.lo())), Interval(f(x.hi())));
      if (x.contains_zero()) r = hull(r, Interval(0.0));
      return {rounding::down(r.lo()), rounding::up(r.hi())};
    }
    case ActivationKind::Sigmoid: return logistic(x);
    case ActivationKind::Tanh: return certpoly::tanh(x);
    case ActivationKind::GELU: return x * Phi(x);
    case ActivationKind::SiLU: return x * logistic(x);
    case ActivationKind::ELU: {
      auto neg = [this](const Interval& v) { return Interval(alpha_) * (exp(v) - Interval(1.0)); };
      if (x.hi() <= 0.0) return neg(x);
      if (x.lo() >= 0.0) return x;
      return hull(neg(Interval(x.lo(), 0.0)), Interval(0.0, x.hi()));
    }
  }
  return Interval::whole();
}

Interval Activation::enclose_derivative(const Interval& x) const {
  switch (kind_) {
    case ActivationKind::ReLU:
      if (x.hi() < 0.0) return 0.0;
      if (x.lo() > 0.0) return 1.0;
      return {0.0, 1.0};
    case ActivationKind::LeakyReLU:
      if (x.hi() < 0.0) return alpha_;
      if (x.lo() > 0.0) return 1.0;
      return {std::min(alpha_, 1.0), std::max(alpha_, 1.0)};
    case ActivationKind::Sigmoid: return bernoulli_var(logistic(x));
    case ActivationKind::Tanh: {
      const Interval t = certpoly::tanh(x);
      return Interval(1.0) - sqr(t);
    }
    case ActivationKind::GELU: return Phi(x) + x * phi(x);
    case ActivationKind::SiLU: {
      const Interval s = logistic(x);
      return s + x * bernoulli_var(s);
    }
    case ActivationKind::ELU: {
      const Interval one(1.0);
      if (x.hi() < 0.0) return Interval(alpha_) * exp(x);
      if (x.lo() > 0.0) return one;
      return hull(Interval(alpha_) * exp(Interval(std::min(x.lo(), 0.0), 0.0)), one);
    }
  }
  return Interval::whole();
}

namespace {
constexpr double kBreakRadius = 1e-12;
}

Interval Activation::range(double lo, double hi) const {
  if (!(lo <= hi)) throw DomainError("range needs lo <= hi");
  Interval r = hull(enclose(Interval(lo)), enclose(Interval(hi)));
  for (double c : critical_) {
    if (c <= lo || c >= hi) continue;
    const Interval b(std::max(lo, c - kBreakRadius), std::min(hi, c + kBreakRadius));
    r = hull(r, mean_value([this](const Interval& v) { return enclose(v); },
                           [this](const Interval& v) { return enclose_derivative(v); }, b));
  }
  return r;
}

Interval Activation::derivative_range(double lo, double hi) const {
  if (!(lo <= hi)) throw DomainError("derivative_range needs lo <= hi");
  Interval r = hull(enclose_derivative(Interval(lo)), enclose_derivative(Interval(hi)));
  for (double c : dbreaks_) {
    if (c < lo || c > hi) continue;
    const Interval b(std::max(lo, c - kBreakRadius), std::min(hi, c + kBreakRadius));
    r = hull(r, enclose_derivative(b));
  }
  return r;
}

Jet<Interval> Activation::taylor(const Jet<Interval>& x) const {
  const std::size_t order = x.order();
  const Interval& x0 = x[0];
  auto logistic_jet = [&](const Jet<Interval>& v) {
    Jet<Interval> e = certpoly::exp(-v);
    e[0] = e[0] + Interval(1.0);
    return reciprocal(e);
  };
  switch (kind_) {
    case ActivationKind::ReLU:
      if (x0.hi() <= 0.0) return Jet<Interval>(order);
      if (x0.lo() >= 0.0) return x;
      throw DomainError("ReLU jet straddles the kink");
    case ActivationKind::LeakyReLU:
      if (x0.hi() <= 0.0) return x * Interval(alpha_);
      if (x0.lo() >= 0.0) return x;
      throw DomainError("LeakyReLU jet straddles the kink");
    case ActivationKind::Sigmoid:
      if (x0.lo() >= 0.0) return logistic_jet(x);
      {
        // 1 - logistic(-x) keeps the exponential argument non-positive
        Jet<Interval> r = -logistic_jet(-x);
        r[0] += Interval(1.0);
        return r;
      }
    case ActivationKind::Tanh: {
      // tanh(x) = 2 logistic(2x) - 1
      Jet<Interval> r = logistic_jet(x * Interval(2.0)) * Interval(2.0);
      r[0] -= Interval(1.0);
      return r;
    }
    case ActivationKind::GELU: {
      Jet<Interval> q = x * x * Interval(-0.5);
      Jet<Interval> ph = certpoly::exp(q) * constants::inv_sqrt_2pi();
      Jet<Interval> cdf = integrate_along(x, ph, Phi(x0));
      return x * cdf;
    }
    case ActivationKind::SiLU: return x * logistic_jet(x);
    case ActivationKind::ELU:
      if (x0.lo() >= 0.0) return x;
      if (x0.hi() <= 0.0) {
        Jet<Interval> e = certpoly::exp(x);
        e[0] -= Interval(1.0);
        return e * Interval(alpha_);
      }
      throw DomainError("ELU jet straddles the kink");
  }
  return x;
}

Interval extremize_offset(const Activation& act, double slope, double lo, double hi) {
  if (!(lo <= hi)) throw DomainError("extremize_offset needs lo <= hi");
  const Interval lam(slope);
  auto g = [&](const Interval& v) { return act.enclose(v) - lam * v; };
  auto dg = [&](const Interval& v) { return act.enclose_derivative(v) - lam; };
  Interval r = hull(g(Interval(lo)), g(Interval(hi)));
  std::vector<double> cuts{lo};
  for (double b : act.derivative_breaks())
    if (b > lo && b < hi) cuts.push_back(b);
  cuts.push_back(hi);
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double p = cuts[i], q = cuts[i + 1];
    if (i > 0) r = hull(r, g(Interval(p)));
    if (!(q > p)) continue;
    const double eps = 1e-12 * (q - p);
    const double dp = act.derivative(p + eps) - slope;
    const double dq = act.derivative(q - eps) - slope;
    if ((dp < 0.0) == (dq < 0.0) && dp != 0.0 && dq != 0.0) continue;
    const double root =
        bisect_root([&](double x) { return act.derivative(x) - slope; }, p + eps, q - eps);
    const Interval b(std::max(p, root - 1e-9), std::min(q, root + 1e-9));
    r = hull(r, mean_value(g, dg, b));
  }
  return {rounding::down(r.lo() - 1e-12), rounding::up(r.hi() + 1e-12)};
}

}  // namespace certpoly::nn
