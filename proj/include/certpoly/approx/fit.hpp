#pragma once

#include "certpoly/approx/surrogate.hpp"
#include "certpoly/nn/network.hpp"

namespace certpoly::approx {

// sup over [lo, hi] of |pi - q|, one extremum search per segment of q.
double certify_pi_error(const cheb::ChebPoly& pi, const PiecewiseSurrogate& q, double lo, double hi);

struct FitOptions {
  SurrogateCache* cache = nullptr;  // defaults to the global cache
  SurrogateOptions surrogate;
};

nn::CertifiedActivationPoly fit_activation(const nn::Activation& act, double lo, double hi, int degree,
                                           double eps_q_target, const FitOptions& opts = {});

}  // namespace certpoly::approx
