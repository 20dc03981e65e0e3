#pragma once

#include <vector>

#include "certpoly/nn/network.hpp"
#include "certpoly/ranges/bounds.hpp"
#include "certpoly/ranges/zonotope.hpp"

namespace certpoly::diffverify {

using nn::Mat;
using nn::Vec;
using ranges::LayerBounds;
using ranges::Zonotope;

struct DerivativeBounds {
  double d_lo = 0.0;
  double d_hi = 0.0;
};

// min and max of gelu' over [l, u]: gelu' is monotone on (-inf, -sqrt2], [-sqrt2, sqrt2]
// and [sqrt2, inf), so only the endpoints of those pieces matter.
DerivativeBounds gelu_derivative_bounds(double l, double u);
// GELU uses the above; kinks contribute both one-sided derivatives.
DerivativeBounds derivative_bounds(const nn::Activation& act, double l, double u);

struct DiffBox {
  double lx = 0.0, ux = 0.0;  // pre-activation of the polynomial network
  double ly = 0.0, uy = 0.0;  // pre-activation of the original network
  double ld = 0.0, ud = 0.0;  // their difference
};

// alpha * d + beta_l - eps <= p(x) - sigma(x - d) <= alpha * d + beta_u + eps.
struct PSigmaRelaxation {
  double alpha = 0.0;
  double beta_l = 0.0;
  double beta_u = 0.0;
  double eps = 0.0;
  // Non-parallel bounds alpha_l * d + beta_hat_l <= sigma(x) - sigma(x - d) <= alpha_u * d + beta_hat_u.
  double alpha_l = 0.0;
  double alpha_u = 0.0;
  double beta_hat_l = 0.0;
  double beta_hat_u = 0.0;

  double lower_slope() const { return alpha; }
  double upper_slope() const { return alpha; }
  double lower(double d) const { return alpha * d + beta_l - eps; }
  double upper(double d) const { return alpha * d + beta_u + eps; }
};

PSigmaRelaxation p_sigma_relaxation(const DiffBox& box, const DerivativeBounds& db, double eps);

// Joint affine forms over one noise-symbol space. Rows [0, n) hold network 1,
// [n, 2n) network 2 and [2n, 3n) the difference (network 1 minus network 2).
struct DiffState {
  Zonotope z;
  int width = 0;

  static DiffState from_box(const Vec& lo, const Vec& hi);
  Zonotope y1() const { return z.rows(0, width); }
  Zonotope y2() const { return z.rows(width, width); }
  Zonotope delta() const { return z.rows(2 * width, width); }
};

// delta' = (W1 - W2) y2 + W1 delta + (b1 - b2), alongside y1' = W1 y1 + b1 and y2' = W2 y2 + b2.
DiffState linear_diff_step(const Mat& w1, const Vec& b1, const Mat& w2, const Vec& b2, const DiffState& state);

struct DiffOptions {
  // Intersect zonotope ranges with the per-network verified ranges before relaxing.
  bool intersect = true;
  bool parallel = true;
  // Surrogate accuracy used when a polynomial must be re-certified on a wider interval.
  double eps_q_target = 1e-10;
};

struct DiffResult {
  LayerBounds output;              // bound on f_pi(x) - f(x)
  std::vector<LayerBounds> delta;  // pre-activation difference bounds per block
};

// Network 1 is f_pi, network 2 is f. The reports hold verified pre-activation bounds of
// f and of f_pi (as returned by certification); they are only used when intersecting.
DiffResult diff_bound(const nn::Network& f, const nn::PolyNetwork& f_pi, const ranges::BoundsReport& f_bounds,
                      const ranges::BoundsReport& f_pi_bounds, const DiffOptions& options = {});

}  // namespace certpoly::diffverify
