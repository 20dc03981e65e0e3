#pragma once

#include <cstdint>
#include <vector>

#include "certpoly/nn/dataset.hpp"
#include "certpoly/nn/network.hpp"

namespace certpoly::nn {

// widths = [in, hidden..., out]; weights ~ N(0, 1/fan_in), biases ~ N(0, 0.01); every
// hidden Dense is followed by `act`. Box input domain [lo, hi]^in.
Network random_mlp(const std::vector<int>& widths, const Activation& act, std::uint64_t seed, double lo = -1.0,
                   double hi = 1.0);

// Conv2D (out_c channels, k x k kernel, stride 1, no padding) + act, then Dense layers of the
// given widths (last one is the output), on a [c, h, w] image domain [0, 1].
Network random_conv_net(const InputShape& shape, int out_c, int k, const std::vector<int>& dense_widths,
                        const Activation& act, std::uint64_t seed);

// Rows uniform in [lo + f (hi - lo), hi - f (hi - lo)] per feature, f = shrink in [0, 0.5).
Dataset random_dataset(const Vec& lo, const Vec& hi, std::size_t rows, std::uint64_t seed, double shrink = 0.0);

}  // namespace certpoly::nn
