#include "certpoly/nn/generate.hpp"

#include <cmath>

#include "certpoly/common/error.hpp"
#include "certpoly/common/rng.hpp"

namespace certpoly::nn {

namespace {

Dense random_dense(int out, int in, Rng& rng) {
  std::normal_distribution<double> g(0.0, 1.0);
  Dense d{Mat(out, in), Vec(out)};
  const double s = 1.0 / std::sqrt(static_cast<double>(in));
  for (int r = 0; r < out; ++r)
    for (int c = 0; c < in; ++c) d.W(r, c) = s * g(rng);
  for (int r = 0; r < out; ++r) d.b[r] = 0.1 * g(rng);
  return d;
}

}  // namespace

Network random_mlp(const std::vector<int>& widths, const Activation& act, std::uint64_t seed, double lo, double hi) {
  if (widths.size() < 2) throw ShapeError("an MLP needs at least input and output widths");
  for (int w : widths)
    if (w < 1) throw ShapeError("layer widths must be positive");
  if (!(lo < hi)) throw DomainError("input domain needs lo < hi");
  Rng rng(seed);
  std::vector<Layer> layers;
  for (std::size_t i = 1; i < widths.size(); ++i) {
    layers.push_back(random_dense(widths[i], widths[i - 1], rng));
    if (i + 1 < widths.size()) layers.push_back(ActivationLayer{act});
  }
  return Network(std::move(layers), Vec::Constant(widths[0], lo), Vec::Constant(widths[0], hi));
}

Network random_conv_net(const InputShape& shape, int out_c, int k, const std::vector<int>& dense_widths,
                        const Activation& act, std::uint64_t seed) {
  if (dense_widths.empty()) throw ShapeError("conv net needs at least an output layer");
  Rng rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Conv2D c;
  c.in_c = shape.channels;
  c.in_h = shape.height;
  c.in_w = shape.width;
  c.out_c = out_c;
  c.kh = c.kw = k;
  const double s = 1.0 / std::sqrt(static_cast<double>(shape.channels * k * k));
  c.kernels.resize(static_cast<std::size_t>(out_c) * shape.channels * k * k);
  for (double& v : c.kernels) v = s * g(rng);
  c.bias = Vec(out_c);
  for (int o = 0; o < out_c; ++o) c.bias[o] = 0.1 * g(rng);
  c.validate();
  std::vector<Layer> layers;
  int prev = c.out_size();
  layers.push_back(std::move(c));
  layers.push_back(ActivationLayer{act});
  for (std::size_t i = 0; i < dense_widths.size(); ++i) {
    layers.push_back(random_dense(dense_widths[i], prev, rng));
    if (i + 1 < dense_widths.size()) layers.push_back(ActivationLayer{act});
    prev = dense_widths[i];
  }
  const int in = shape.channels * shape.height * shape.width;
  return Network(std::move(layers), Vec::Zero(in), Vec::Ones(in), shape);
}

Dataset random_dataset(const Vec& lo, const Vec& hi, std::size_t rows, std::uint64_t seed, double shrink) {
  if (lo.size() != hi.size()) throw ShapeError("domain bounds differ in length");
  if (!(shrink >= 0.0 && shrink < 0.5)) throw DomainError("shrink must lie in [0, 0.5)");
  Dataset d;
  d.rows.reserve(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    Rng rng(stream_seed(seed, r));
    Vec x(lo.size());
    for (int i = 0; i < lo.size(); ++i) {
      const double w = hi[i] - lo[i];
      x[i] = uniform(rng, lo[i] + shrink * w, hi[i] - shrink * w);
    }
    d.rows.push_back(std::move(x));
  }
  return d;
}

}  // namespace certpoly::nn
