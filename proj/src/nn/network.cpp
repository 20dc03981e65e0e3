#include "certpoly/nn/network.hpp"

#include <cmath>
#include <string>

#include "certpoly/common/error.hpp"

namespace certpoly::nn {

void Conv2D::validate() const {
  if (in_c < 1 || in_h < 1 || in_w < 1 || out_c < 1) throw ShapeError("conv: channel and image sizes must be positive");
  if (kh < 1 || kw < 1) throw ShapeError("conv: kernel size must be positive");
  if (stride < 1) throw ShapeError("conv: stride must be >= 1");
  if (padding < 0) throw ShapeError("conv: padding must be >= 0");
  if (in_h + 2 * padding < kh || in_w + 2 * padding < kw) throw ShapeError("conv: kernel larger than padded input");
  if (kernels.size() != static_cast<std::size_t>(out_c * in_c * kh * kw))
    throw ShapeError("conv: kernel tensor has " + std::to_string(kernels.size()) + " entries, expected " +
                     std::to_string(out_c * in_c * kh * kw));
  if (bias.size() != out_c) throw ShapeError("conv: bias size must equal output channels");
}

Vec Conv2D::apply(const Vec& x) const {
  if (x.size() != in_size()) throw ShapeError("conv: input size mismatch");
  const int oh = out_h(), ow = out_w();
  Vec y(out_size());
  for (int o = 0; o < out_c; ++o)
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        double acc = bias(o);
        for (int ch = 0; ch < in_c; ++ch)
          for (int i = 0; i < kh; ++i) {
            const int yy = r * stride + i - padding;
            if (yy < 0 || yy >= in_h) continue;
            for (int j = 0; j < kw; ++j) {
              const int xx = c * stride + j - padding;
              if (xx < 0 || xx >= in_w) continue;
              acc += kernel(o, ch, i, j) * x((ch * in_h + yy) * in_w + xx);
            }
          }
        y((o * oh + r) * ow + c) = acc;
      }
  return y;
}

Vec Conv2D::apply_transpose(const Vec& g) const {
  if (g.size() != out_size()) throw ShapeError("conv: gradient size mismatch");
  const int oh = out_h(), ow = out_w();
  Vec x = Vec::Zero(in_size());
  for (int o = 0; o < out_c; ++o)
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        const double go = g((o * oh + r) * ow + c);
        if (go == 0.0) continue;
        for (int ch = 0; ch < in_c; ++ch)
          for (int i = 0; i < kh; ++i) {
            const int yy = r * stride + i - padding;
            if (yy < 0 || yy >= in_h) continue;
            for (int j = 0; j < kw; ++j) {
              const int xx = c * stride + j - padding;
              if (xx < 0 || xx >= in_w) continue;
              x((ch * in_h + yy) * in_w + xx) += kernel(o, ch, i, j) * go;
            }
          }
      }
  return x;
}

Dense lower_conv_to_dense(const Conv2D& conv) {
  conv.validate();
  const int oh = conv.out_h(), ow = conv.out_w();
  Dense d{Mat::Zero(conv.out_size(), conv.in_size()), Vec(conv.out_size())};
  for (int o = 0; o < conv.out_c; ++o)
    for (int r = 0; r < oh; ++r)
      for (int c = 0; c < ow; ++c) {
        const int row = (o * oh + r) * ow + c;
        d.b(row) = conv.bias(o);
        for (int ch = 0; ch < conv.in_c; ++ch)
          for (int i = 0; i < conv.kh; ++i) {
            const int yy = r * conv.stride + i - conv.padding;
            if (yy < 0 || yy >= conv.in_h) continue;
            for (int j = 0; j < conv.kw; ++j) {
              const int xx = c * conv.stride + j - conv.padding;
              if (xx < 0 || xx >= conv.in_w) continue;
              d.W(row, (ch * conv.in_h + yy) * conv.in_w + xx) += conv.kernel(o, ch, i, j);
            }
          }
      }
  return d;
}

Network::Network(std::vector<Layer> layers, Vec input_lo, Vec input_hi, std::optional<InputShape> shape)
    : layers_(std::move(layers)), input_lo_(std::move(input_lo)), input_hi_(std::move(input_hi)), input_shape_(shape) {
  validate();
}

void Network::validate() {
  if (input_lo_.size() != input_hi_.size()) throw ShapeError("input domain bounds differ in length");
  if (input_lo_.size() == 0) throw ShapeError("network needs at least one input");
  for (Eigen::Index i = 0; i < input_lo_.size(); ++i)
    if (std::isnan(input_lo_(i)) || std::isnan(input_hi_(i)) || input_lo_(i) > input_hi_(i))
      throw ShapeError("input domain needs lo <= hi at index " + std::to_string(i));
  if (input_shape_) {
    const auto& s = *input_shape_;
    if (s.channels * s.height * s.width != in_dim()) throw ShapeError("input shape does not match input dimension");
  }
  blocks_.clear();
  int dim = in_dim();
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const Layer& l = layers_[i];
    const std::string where = "layer " + std::to_string(i) + ": ";
    if (const auto* d = std::get_if<Dense>(&l)) {
      if (d->W.cols() != dim) throw ShapeError(where + "dense input width " + std::to_string(d->W.cols()) + " != " + std::to_string(dim));
      if (d->b.size() != d->W.rows()) throw ShapeError(where + "dense bias length mismatch");
      blocks_.push_back(Block{i, std::nullopt, dim, static_cast<int>(d->W.rows())});
      dim = static_cast<int>(d->W.rows());
    } else if (const auto* c = std::get_if<Conv2D>(&l)) {
      c->validate();
      if (c->in_size() != dim) throw ShapeError(where + "conv input size mismatch");
      blocks_.push_back(Block{i, std::nullopt, dim, c->out_size()});
      dim = c->out_size();
    } else {
      if (blocks_.empty() || blocks_.back().activation) throw ShapeError(where + "activation must follow a linear layer");
      if (const auto* p = std::get_if<PolyActivationLayer>(&l)) {
        const std::size_t want = p->shared ? 1 : static_cast<std::size_t>(dim);
        if (p->polys.size() != want) throw ShapeError(where + "polynomial count does not match layer width");
      }
      blocks_.back().activation = i;
    }
  }
}

Dense Network::linear(int k) const {
  const Layer& l = layers_.at(blocks_.at(k).linear);
  if (const auto* d = std::get_if<Dense>(&l)) return *d;
  return lower_conv_to_dense(std::get<Conv2D>(l));
}

const Layer* Network::activation(int k) const {
  const auto& a = blocks_.at(k).activation;
  return a ? &layers_[*a] : nullptr;
}

bool Network::in_domain(const Vec& x, double tol) const {
  if (x.size() != in_dim()) return false;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (!(x(i) >= input_lo_(i) - tol && x(i) <= input_hi_(i) + tol)) return false;
  return true;
}

bool Network::is_polynomial() const {
  for (const auto& l : layers_)
    if (std::holds_alternative<ActivationLayer>(l)) return false;
  return true;
}

Network Network::with_layers(std::vector<Layer> layers) const {
  return Network(std::move(layers), input_lo_, input_hi_, input_shape_);
}

PolyNetwork::PolyNetwork(Network net) : Network(std::move(net)) {
  if (!is_polynomial()) throw ShapeError("polynomial network contains a non-polynomial activation");
}

const PolyActivationLayer* PolyNetwork::poly_layer(int k) const {
  const Layer* a = activation(k);
  return a ? &std::get<PolyActivationLayer>(*a) : nullptr;
}

Vec PolyNetwork::designed_lo(int k) const {
  const auto* p = poly_layer(k);
  if (!p) throw DomainError("block has no polynomial activation");
  Vec v(blocks()[k].out_dim);
  for (int j = 0; j < v.size(); ++j) v(j) = p->poly(j).pi.lo();
  return v;
}

Vec PolyNetwork::designed_hi(int k) const {
  const auto* p = poly_layer(k);
  if (!p) throw DomainError("block has no polynomial activation");
  Vec v(blocks()[k].out_dim);
  for (int j = 0; j < v.size(); ++j) v(j) = p->poly(j).pi.hi();
  return v;
}

Vec PolyNetwork::eps(int k) const {
  const auto* p = poly_layer(k);
  if (!p) return Vec::Zero(blocks()[k].out_dim);
  Vec v(blocks()[k].out_dim);
  for (int j = 0; j < v.size(); ++j) v(j) = p->poly(j).eps_total();
  return v;
}

Vec apply_linear(const Layer& layer, const Vec& x) {
  if (const auto* d = std::get_if<Dense>(&layer)) {
    if (x.size() != d->W.cols()) throw ShapeError("dense input size mismatch");
    return d->W * x + d->b;
  }
  if (const auto* c = std::get_if<Conv2D>(&layer)) return c->apply(x);
  throw ShapeError("not a linear layer");
}

Vec apply_activation(const Layer& layer, const Vec& z) {
  Vec y(z.size());
  if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
    for (Eigen::Index j = 0; j < z.size(); ++j) y(j) = a->act(z(j));
    return y;
  }
  if (const auto* p = std::get_if<PolyActivationLayer>(&layer)) {
    for (Eigen::Index j = 0; j < z.size(); ++j) y(j) = p->poly(static_cast<int>(j)).pi(z(j));
    return y;
  }
  throw ShapeError("not an activation layer");
}

namespace {

Vec activation_derivative(const Layer& layer, const Vec& z) {
  Vec d(z.size());
  if (const auto* a = std::get_if<ActivationLayer>(&layer)) {
    for (Eigen::Index j = 0; j < z.size(); ++j) d(j) = a->act.derivative(z(j));
  } else {
    const auto& p = std::get<PolyActivationLayer>(layer);
    if (p.shared) {
      const cheb::ChebPoly dp = p.polys.front().pi.derivative();
      for (Eigen::Index j = 0; j < z.size(); ++j) d(j) = dp(z(j));
    } else {
      for (Eigen::Index j = 0; j < z.size(); ++j) d(j) = p.polys[j].pi.derivative()(z(j));
    }
  }
  return d;
}

void check_input(const Network& net, const Vec& x) {
  if (x.size() != net.in_dim())
    throw ShapeError("input has " + std::to_string(x.size()) + " entries, network expects " + std::to_string(net.in_dim()));
}

}  // namespace

Trace forward(const Network& net, const Vec& x) {
  check_input(net, x);
  Trace t;
  Vec h = x;
  for (const Block& b : net.blocks()) {
    Vec z = apply_linear(net.layers()[b.linear], h);
    h = b.activation ? apply_activation(net.layers()[*b.activation], z) : z;
    t.pre.push_back(std::move(z));
    t.post.push_back(h);
  }
  t.output = h;
  return t;
}

Vec forward_output(const Network& net, const Vec& x) {
  check_input(net, x);
  Vec h = x;
  for (const Block& b : net.blocks()) {
    Vec z = apply_linear(net.layers()[b.linear], h);
    h = b.activation ? apply_activation(net.layers()[*b.activation], z) : std::move(z);
  }
  return h;
}

Vec forward_pre(const Network& net, const Vec& x, int k) {
  check_input(net, x);
  if (k < 0 || k >= net.num_blocks()) throw ShapeError("block index out of range");
  Vec h = x;
  for (int i = 0;; ++i) {
    const Block& b = net.blocks()[i];
    Vec z = apply_linear(net.layers()[b.linear], h);
    if (i == k) return z;
    h = b.activation ? apply_activation(net.layers()[*b.activation], z) : std::move(z);
  }
}

Vec grad_input(const Network& net, const Vec& x, int k, const Vec& coeffs) {
  check_input(net, x);
  if (k < 0 || k >= net.num_blocks()) throw ShapeError("objective targets a missing block");
  if (coeffs.size() != net.blocks()[k].out_dim) throw ShapeError("objective length does not match block width");
  std::vector<Vec> pre;
  Vec h = x;
  for (int i = 0; i < k; ++i) {
    const Block& b = net.blocks()[i];
    Vec z = apply_linear(net.layers()[b.linear], h);
    h = b.activation ? apply_activation(net.layers()[*b.activation], z) : z;
    pre.push_back(std::move(z));
  }
  Vec g = coeffs;
  for (int i = k; i >= 0; --i) {
    const Layer& lin = net.layers()[net.blocks()[i].linear];
    if (const auto* d = std::get_if<Dense>(&lin))
      g = d->W.transpose() * g;
    else
      g = std::get<Conv2D>(lin).apply_transpose(g);
    if (i > 0 && net.blocks()[i - 1].activation)
      g = g.cwiseProduct(activation_derivative(net.layers()[*net.blocks()[i - 1].activation], pre[i - 1]));
  }
  return g;
}

}  // namespace certpoly::nn
