#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "certpoly/nn/activation.hpp"

namespace certpoly::approx {

// nu-times differentiable with nu-th derivative of total variation V.
struct Differentiable {
  int nu;
  double V;
};

// Analytic in the Bernstein ellipse of parameter rho, bounded there by M.
struct Analytic {
  double M;
  double rho;
};

double convergence_bound(const std::variant<Differentiable, Analytic>& kind, int n);

double total_variation(const nn::Activation& act, double lo, double hi);
// f must be monotone between consecutive entries of breaks; nullopt means unknown structure.
double total_variation(const std::function<double(double)>& f, double lo, double hi,
                       const std::optional<std::vector<double>>& breaks);

}  // namespace certpoly::approx
