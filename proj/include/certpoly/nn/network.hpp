#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <variant>
#include <vector>

#include "certpoly/cheb/chebpoly.hpp"
#include "certpoly/nn/activation.hpp"

namespace certpoly::nn {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

struct Dense {
  Mat W;
  Vec b;
};

// Kernels are stored as [out_c][in_c][kh][kw]; images as [c][h][w], row-major.
struct Conv2D {
  int in_c = 1, in_h = 1, in_w = 1;
  int out_c = 1;
  int kh = 1, kw = 1;
  int stride = 1;
  int padding = 0;
  std::vector<double> kernels;
  Vec bias;

  int out_h() const { return (in_h + 2 * padding - kh) / stride + 1; }
  int out_w() const { return (in_w + 2 * padding - kw) / stride + 1; }
  int in_size() const { return in_c * in_h * in_w; }
  int out_size() const { return out_c * out_h() * out_w(); }
  double kernel(int o, int c, int i, int j) const { return kernels[((o * in_c + c) * kh + i) * kw + j]; }
  void validate() const;
  Vec apply(const Vec& x) const;
  Vec apply_transpose(const Vec& g) const;
};

Dense lower_conv_to_dense(const Conv2D& conv);

struct ActivationLayer {
  Activation act;
};

// |pi - sigma| <= eps_pi + eps_q on pi's domain.
struct CertifiedActivationPoly {
  cheb::ChebPoly pi;
  double eps_pi = 0.0;
  double eps_q = 0.0;
  double eps_total() const { return eps_pi + eps_q; }
};

struct PolyActivationLayer {
  Activation source;
  std::vector<CertifiedActivationPoly> polys;  // one per neuron, or a single shared entry
  bool shared = false;

  const CertifiedActivationPoly& poly(int neuron) const { return shared ? polys.front() : polys[neuron]; }
};

using Layer = std::variant<Dense, Conv2D, ActivationLayer, PolyActivationLayer>;

// A linear layer optionally followed by an activation.
struct Block {
  std::size_t linear = 0;
  std::optional<std::size_t> activation;
  int in_dim = 0;
  int out_dim = 0;
};

struct InputShape {
  int channels = 1;
  int height = 1;
  int width = 1;
};

class Network {
 public:
  Network() = default;
  Network(std::vector<Layer> layers, Vec input_lo, Vec input_hi, std::optional<InputShape> shape = std::nullopt);

  const std::vector<Layer>& layers() const { return layers_; }
  const std::vector<Block>& blocks() const { return blocks_; }
  const Vec& input_lo() const { return input_lo_; }
  const Vec& input_hi() const { return input_hi_; }
  const std::optional<InputShape>& input_shape() const { return input_shape_; }
  int in_dim() const { return static_cast<int>(input_lo_.size()); }
  int out_dim() const { return blocks_.empty() ? in_dim() : blocks_.back().out_dim; }
  int num_blocks() const { return static_cast<int>(blocks_.size()); }

  // Linear part of block k in dense form (convolutions are lowered).
  Dense linear(int k) const;
  const Layer* activation(int k) const;
  bool has_activation(int k) const { return blocks_[k].activation.has_value(); }
  bool in_domain(const Vec& x, double tol = 0.0) const;
  bool is_polynomial() const;

  Network with_layers(std::vector<Layer> layers) const;

 private:
  void validate();

  std::vector<Layer> layers_;
  std::vector<Block> blocks_;
  Vec input_lo_;
  Vec input_hi_;
  std::optional<InputShape> input_shape_;
};

// A network whose activations are all certified polynomials.
class PolyNetwork : public Network {
 public:
  PolyNetwork() = default;
  explicit PolyNetwork(Network net);

  const PolyActivationLayer* poly_layer(int k) const;
  // Designed pre-activation range of block k (the polynomial domains).
  Vec designed_lo(int k) const;
  Vec designed_hi(int k) const;
  Vec eps(int k) const;
};

struct Trace {
  std::vector<Vec> pre;
  std::vector<Vec> post;
  Vec output;
};

Vec apply_linear(const Layer& layer, const Vec& x);
Vec apply_activation(const Layer& layer, const Vec& z);

Trace forward(const Network& net, const Vec& x);
Vec forward_output(const Network& net, const Vec& x);
// Pre-activations of block k only.
Vec forward_pre(const Network& net, const Vec& x, int k);

// Gradient with respect to x of coeffs . pre[k](x).
Vec grad_input(const Network& net, const Vec& x, int k, const Vec& coeffs);

}  // namespace certpoly::nn
