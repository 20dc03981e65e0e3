#pragma once

#include <vector>

#include "certpoly/approx/fit.hpp"
#include "certpoly/nn/network.hpp"
#include "certpoly/ranges/bounds.hpp"

namespace certpoly::ranges {

enum class FitMode { Heterogeneous, Uniform };

struct CertifyConfig {
  std::vector<int> degrees{27};  // per activation block; the last entry repeats
  double eps_q_target = 1e-10;
  FitMode mode = FitMode::Heterogeneous;
  Domain domain = Domain::Zonotope;
  // Intervals narrower than this are widened symmetrically before fitting.
  double min_width = 1e-6;
  bool parallel = true;
  approx::FitOptions fit;
};

struct CertifyResult {
  nn::PolyNetwork net;
  BoundsReport bounds;  // verified pre-activation bounds of the polynomial network
};

// Single pass: bound block k through the relaxed network, fit the block's activations
// on those bounds, record their errors as perturbations, continue with block k + 1.
CertifyResult certify_network(const nn::Network& net, const CertifyConfig& cfg);

// Fits every activation block on the given (e.g. sampled) bounds without verification.
nn::PolyNetwork fit_on_bounds(const nn::Network& net, const BoundsReport& bounds, const CertifyConfig& cfg);

// Degree used for the activation block with the given ordinal.
int degree_for(const CertifyConfig& cfg, int activation_ordinal);

// [lo, hi] widened to at least min_width.
std::pair<double, double> padded(double lo, double hi, double min_width);

}  // namespace certpoly::ranges
