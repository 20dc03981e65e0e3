#pragma once

#include "certpoly/nn/network.hpp"

namespace certpoly::attack {

using nn::Vec;

struct WarpParams {
  double angle_deg = 0.0;
  double shift_x = 0.0;  // pixels
  double shift_y = 0.0;
};

// Rotation about the image centre followed by a translation, sampled bilinearly.
// Images are [c][h][w] row-major; samples outside the image take `fill` (per pixel).
Vec warp(const Vec& image, const nn::InputShape& shape, const WarpParams& p, const Vec& fill);

// Derivatives of sum_p g_p * warp(image)_p with respect to (angle_deg, shift_x, shift_y).
struct WarpGradient {
  double angle_deg = 0.0;
  double shift_x = 0.0;
  double shift_y = 0.0;
};

WarpGradient warp_gradient(const Vec& image, const nn::InputShape& shape, const WarpParams& p, const Vec& fill,
                           const Vec& g);

}  // namespace certpoly::attack
