#pragma once

#include <array>
#include <string>
#include <vector>

#include "certpoly/cheb/interval.hpp"
#include "certpoly/cheb/jet.hpp"

namespace certpoly::nn {

enum class ActivationKind { ReLU, LeakyReLU, Sigmoid, Tanh, GELU, SiLU, ELU };

struct Line {
  double slope = 0.0;
  double intercept = 0.0;
  double operator()(double x) const { return slope * x + intercept; }
};

class Activation {
 public:
  Activation() = default;
  explicit Activation(ActivationKind kind, double alpha = 0.0);

  static Activation relu() { return Activation(ActivationKind::ReLU); }
  static Activation leaky_relu(double alpha) { return Activation(ActivationKind::LeakyReLU, alpha); }
  static Activation sigmoid() { return Activation(ActivationKind::Sigmoid); }
  static Activation tanh() { return Activation(ActivationKind::Tanh); }
  static Activation gelu() { return Activation(ActivationKind::GELU); }
  static Activation silu() { return Activation(ActivationKind::SiLU); }
  static Activation elu(double alpha = 1.0) { return Activation(ActivationKind::ELU, alpha); }
  // Accepts "relu", "leaky_relu", "sigmoid", "tanh", "gelu", "silu", "elu".
  static Activation parse(const std::string& name, double alpha = 0.0);

  ActivationKind kind() const { return kind_; }
  double alpha() const { return alpha_; }
  std::string name() const;
  bool piecewise_linear() const { return kind_ == ActivationKind::ReLU || kind_ == ActivationKind::LeakyReLU; }

  double operator()(double x) const;
  double derivative(double x) const;

  // (a1, b1, a2, b2) exactly as listed in the published table of asymptotes.
  std::array<double, 4> tabulated_asymptotes() const;
  Line left_asymptote() const;
  Line right_asymptote() const;
  // Points beyond which sigma minus its asymptote is monotone.
  double left_cutoff() const { return cutoffs_[0]; }
  double right_cutoff() const { return cutoffs_[1]; }

  // Points where sigma is not differentiable.
  const std::vector<double>& kinks() const { return kinks_; }
  // sigma is monotone between consecutive critical points.
  const std::vector<double>& critical_points() const { return critical_; }
  // sigma' is monotone between consecutive points of this list (kinks and inflections).
  const std::vector<double>& derivative_breaks() const { return dbreaks_; }

  // Sound enclosures.
  Interval enclose(const Interval& x) const;             // natural interval extension
  Interval enclose_derivative(const Interval& x) const;  // hull of one-sided derivatives at kinks
  Interval range(double lo, double hi) const;            // tight range via monotone pieces
  Interval derivative_range(double lo, double hi) const;
  // Taylor coefficients of sigma(x(s)); the jet must not straddle a kink.
  Jet<Interval> taylor(const Jet<Interval>& x) const;

  friend bool operator==(const Activation& a, const Activation& b) {
    return a.kind_ == b.kind_ && a.alpha_ == b.alpha_;
  }

 private:
  ActivationKind kind_ = ActivationKind::ReLU;
  double alpha_ = 0.0;
  std::array<double, 2> cutoffs_{0.0, 0.0};
  std::vector<double> kinks_;
  std::vector<double> critical_;
  std::vector<double> dbreaks_;
};

// Rigorous bounds on min and max of sigma(x) - slope * x over [lo, hi].
Interval extremize_offset(const Activation& act, double slope, double lo, double hi);

}  // namespace certpoly::nn
