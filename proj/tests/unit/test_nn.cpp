#include <gtest/gtest.h>

#include <cmath>

#include "certpoly/common/error.hpp"
#include "certpoly/nn/dataset.hpp"
#include "certpoly/nn/generate.hpp"
#include "certpoly/nn/network_io.hpp"
#include "unit/helpers.hpp"

using namespace certpoly;
using namespace certpoly::testing;

namespace {

nn::Network single_dense(const Mat& w, const Vec& b, std::optional<nn::Activation> act = std::nullopt,
                         double lo = -10.0, double hi = 10.0) {
  std::vector<nn::Layer> layers{nn::Dense{w, b}};
  if (act) layers.push_back(nn::ActivationLayer{*act});
  return nn::Network(layers, Vec::Constant(w.cols(), lo), Vec::Constant(w.cols(), hi));
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST(Activation, AsymptotesMatchNumericLimits) {
  for (const auto& act : {nn::Activation::sigmoid(), nn::Activation::tanh(), nn::Activation::gelu(),
                          nn::Activation::silu(), nn::Activation::elu()}) {
    EXPECT_NEAR(act(-50.0), act.left_asymptote()(-50.0), 1e-10) << act.name();
    EXPECT_NEAR(act(50.0), act.right_asymptote()(50.0), 1e-10) << act.name();
  }
}

TEST(Activation, PiecewiseLinearAsymptotesAreExactBeyondZero) {
  for (const auto& act : {nn::Activation::relu(), nn::Activation::leaky_relu(0.1)}) {
    for (double x : {-7.0, -1.0, -1e-3}) EXPECT_EQ(act(x), act.left_asymptote()(x)) << act.name();
    for (double x : {1e-3, 1.0, 7.0}) EXPECT_EQ(act(x), act.right_asymptote()(x)) << act.name();
  }
}

TEST(Activation, TabulatedRowsAreStoredVerbatim) {
  const auto gelu = nn::Activation::gelu().tabulated_asymptotes();
  EXPECT_EQ(gelu[0], 1.0);
  EXPECT_EQ(gelu[1], 0.0);
  EXPECT_EQ(gelu[2], 0.0);
  EXPECT_EQ(gelu[3], 0.0);
  const auto leaky = nn::Activation::leaky_relu(0.2).tabulated_asymptotes();
  EXPECT_DOUBLE_EQ(leaky[0], 5.0);
  EXPECT_DOUBLE_EQ(nn::Activation::leaky_relu(0.2).left_asymptote().slope, 0.2);
}

TEST(Activation, GeluIsExactGaussianCdfForm) {
  const auto g = nn::Activation::gelu();
  EXPECT_EQ(g(0.0), 0.0);
  for (double x : {-3.0, -0.7, 0.4, 2.5}) EXPECT_NEAR(g(x), x * normal_cdf(x), 1e-15);
}

TEST(Activation, DerivativeMatchesFiniteDifferences) {
  for (const auto& act : {nn::Activation::sigmoid(), nn::Activation::tanh(), nn::Activation::gelu(),
                          nn::Activation::silu(), nn::Activation::elu(0.7)}) {
    for (double x : {-2.3, -0.4, 0.3, 1.9}) {
      const double h = 1e-6;
      EXPECT_NEAR(act.derivative(x), (act(x + h) - act(x - h)) / (2 * h), 1e-8) << act.name() << " at " << x;
    }
  }
}

TEST(Activation, EnclosuresContainSamples) {
  Rng rng(4);
  for (const auto& act : {nn::Activation::relu(), nn::Activation::sigmoid(), nn::Activation::tanh(),
                          nn::Activation::gelu(), nn::Activation::silu(), nn::Activation::elu()}) {
    for (int t = 0; t < 50; ++t) {
      double a = uniform(rng, -6, 6), b = uniform(rng, -6, 6);
      if (a > b) std::swap(a, b);
      const Interval r = act.range(a, b);
      const Interval e = act.enclose(Interval(a, b));
      for (int i = 0; i <= 200; ++i) {
        const double x = std::min(b, a + (b - a) * i / 200.0);
        EXPECT_TRUE(r.contains(act(x))) << act.name();
        EXPECT_TRUE(e.contains(act(x))) << act.name();
      }
    }
  }
}

TEST(Activation, ParseNames) {
  EXPECT_EQ(nn::Activation::parse("gelu"), nn::Activation::gelu());
  EXPECT_EQ(nn::Activation::parse("leaky_relu", 0.3), nn::Activation::leaky_relu(0.3));
  EXPECT_THROW(nn::Activation::parse("softmax"), Error);
}

TEST(Forward, IdentityDense) {
  const auto net = single_dense(Mat::Identity(2, 2), Vec::Zero(2));
  const Vec out = nn::forward_output(net, Vec{{0.3, -0.7}});
  EXPECT_EQ(out[0], 0.3);
  EXPECT_EQ(out[1], -0.7);
}

TEST(Forward, GeluAtZero) {
  const auto net = single_dense(Mat::Identity(1, 1), Vec::Zero(1), nn::Activation::gelu());
  const auto tr = nn::forward(net, Vec{{0.0}});
  EXPECT_EQ(tr.pre[0][0], 0.0);
  EXPECT_EQ(tr.post[0][0], 0.0);
}

TEST(Forward, HandComputedReluLayer) {
  Mat w{{1, 2}, {-1, 0}};
  const auto net = single_dense(w, Vec{{0.5, 0.0}}, nn::Activation::relu());
  const auto tr = nn::forward(net, Vec{{1.0, 1.0}});
  EXPECT_EQ(tr.pre[0][0], 3.5);
  EXPECT_EQ(tr.pre[0][1], -1.0);
  EXPECT_EQ(tr.post[0][0], 3.5);
  EXPECT_EQ(tr.post[0][1], 0.0);
  EXPECT_EQ(tr.output, tr.post.back());
}

TEST(Forward, ShapeMismatchIsStructuredError) {
  const auto net = single_dense(Mat::Identity(2, 2), Vec::Zero(2));
  EXPECT_THROW(nn::forward(net, Vec::Zero(3)), ShapeError);
  EXPECT_THROW(nn::Network({nn::Dense{Mat::Zero(2, 3), Vec::Zero(2)}, nn::Dense{Mat::Zero(2, 3), Vec::Zero(2)}},
                           Vec::Zero(3), Vec::Ones(3)),
               ShapeError);
}

TEST(Forward, DeterministicAndPure) {
  const auto net = nn::random_mlp({5, 7, 3}, nn::Activation::gelu(), 9);
  Rng rng(1);
  const Vec x = random_vector(5, rng);
  const auto a = nn::forward(net, x);
  const auto b = nn::forward(net, x);
  for (std::size_t k = 0; k < a.pre.size(); ++k) EXPECT_EQ(a.pre[k], b.pre[k]);
  EXPECT_EQ(a.output, b.output);
}

TEST(GradInput, LinearNetGivesWeightRow) {
  Rng rng(2);
  const Mat w = random_matrix(3, 4, rng);
  const auto net = single_dense(w, random_vector(3, rng));
  for (int j = 0; j < 3; ++j) {
    Vec e = Vec::Zero(3);
    e[j] = 1.0;
    const Vec g = nn::grad_input(net, random_vector(4, rng), 0, e);
    for (int k = 0; k < 4; ++k) EXPECT_DOUBLE_EQ(g[k], w(j, k));
  }
}

TEST(GradInput, ReluNegativePreActivationContributesZero) {
  Mat w{{1.0, 0.0}, {0.0, 1.0}};
  std::vector<nn::Layer> layers{nn::Dense{w, Vec::Zero(2)}, nn::ActivationLayer{nn::Activation::relu()},
                                nn::Dense{Mat{{1.0, 1.0}}, Vec::Zero(1)}};
  nn::Network net(layers, Vec::Constant(2, -1), Vec::Constant(2, 1));
  const Vec g = nn::grad_input(net, Vec{{-0.5, 0.5}}, 1, Vec::Ones(1));
  EXPECT_EQ(g[0], 0.0);
  EXPECT_EQ(g[1], 1.0);
}

TEST(GradInput, MatchesFiniteDifferencesOnRandomNets) {
  Rng rng(3);
  int checked = 0;
  for (int s = 0; s < 100; ++s) {
    const auto act = s % 3 == 0 ? nn::Activation::gelu() : (s % 3 == 1 ? nn::Activation::tanh() : nn::Activation::silu());
    const auto net = nn::random_mlp({4, 6, 5, 2}, act, 100 + s);
    const Vec x = random_vector(4, rng, -0.9, 0.9);
    const int k = s % net.num_blocks();
    const Vec c = random_vector(net.blocks()[k].out_dim, rng);
    const Vec g = nn::grad_input(net, x, k, c);
    const double h = 1e-5;
    for (int i = 0; i < 4; ++i) {
      Vec xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      const double fd = (c.dot(nn::forward_pre(net, xp, k)) - c.dot(nn::forward_pre(net, xm, k))) / (2 * h);
      EXPECT_LE(std::fabs(fd - g[i]), 1e-4 * std::max(1.0, std::fabs(fd)));
      ++checked;
    }
  }
  EXPECT_EQ(checked, 400);
}

namespace {

Vec direct_conv(const nn::Conv2D& c, const Vec& x) {
  Vec y(c.out_size());
  for (int o = 0; o < c.out_c; ++o)
    for (int i = 0; i < c.out_h(); ++i)
      for (int j = 0; j < c.out_w(); ++j) {
        double s = c.bias[o];
        for (int ch = 0; ch < c.in_c; ++ch)
          for (int a = 0; a < c.kh; ++a)
            for (int b = 0; b < c.kw; ++b) {
              const int r = i * c.stride + a - c.padding, q = j * c.stride + b - c.padding;
              if (r < 0 || q < 0 || r >= c.in_h || q >= c.in_w) continue;
              s += c.kernel(o, ch, a, b) * x[(ch * c.in_h + r) * c.in_w + q];
            }
        y[(o * c.out_h() + i) * c.out_w() + j] = s;
      }
  return y;
}

nn::Conv2D random_conv(int in_c, int h, int w, int out_c, int k, int stride, int pad, Rng& rng) {
  nn::Conv2D c;
  c.in_c = in_c;
  c.in_h = h;
  c.in_w = w;
  c.out_c = out_c;
  c.kh = c.kw = k;
  c.stride = stride;
  c.padding = pad;
  c.kernels.resize(static_cast<std::size_t>(out_c) * in_c * k * k);
  for (double& v : c.kernels) v = uniform(rng, -1, 1);
  c.bias = random_vector(out_c, rng);
  c.validate();
  return c;
}

}  // namespace

TEST(LowerConv, OneByOneKernelIsDiagonal) {
  Rng rng(5);
  const auto c = random_conv(1, 4, 4, 1, 1, 1, 0, rng);
  const nn::Dense d = nn::lower_conv_to_dense(c);
  ASSERT_EQ(d.W.rows(), 16);
  for (int i = 0; i < 16; ++i)
    for (int j = 0; j < 16; ++j) EXPECT_EQ(d.W(i, j), i == j ? c.kernels[0] : 0.0);
  for (int t = 0; t < 100; ++t) {
    const Vec x = random_vector(16, rng);
    EXPECT_LE((d.W * x + d.b - direct_conv(c, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LowerConv, ZeroKernelBroadcastsBias) {
  Rng rng(6);
  auto c = random_conv(2, 5, 5, 3, 3, 1, 0, rng);
  std::fill(c.kernels.begin(), c.kernels.end(), 0.0);
  const nn::Dense d = nn::lower_conv_to_dense(c);
  EXPECT_EQ(d.W.cwiseAbs().maxCoeff(), 0.0);
  const Vec y = d.W * random_vector(c.in_size(), rng) + d.b;
  for (int o = 0; o < 3; ++o)
    for (int p = 0; p < 9; ++p) EXPECT_EQ(y[o * 9 + p], c.bias[o]);
}

TEST(LowerConv, ThreeByThreeOnFiveByFive) {
  Rng rng(7);
  const auto c = random_conv(1, 5, 5, 1, 3, 1, 0, rng);
  const nn::Dense d = nn::lower_conv_to_dense(c);
  EXPECT_EQ(d.W.rows(), 9);
  EXPECT_EQ(d.W.cols(), 25);
  for (int t = 0; t < 100; ++t) {
    const Vec x = random_vector(25, rng);
    EXPECT_LE((d.W * x + d.b - direct_conv(c, x)).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LE((c.apply(x) - direct_conv(c, x)).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(LowerConv, StridePaddingAndTranspose) {
  Rng rng(8);
  const auto c = random_conv(2, 6, 5, 3, 3, 2, 1, rng);
  const nn::Dense d = nn::lower_conv_to_dense(c);
  const Vec x = random_vector(c.in_size(), rng);
  const Vec g = random_vector(c.out_size(), rng);
  EXPECT_LE((d.W * x + d.b - direct_conv(c, x)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE((d.W.transpose() * g - c.apply_transpose(g)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(LowerConv, InvalidGeometryRejected) {
  nn::Conv2D c;
  c.in_h = c.in_w = 2;
  c.kh = c.kw = 3;
  c.kernels.assign(9, 0.0);
  c.bias = Vec::Zero(1);
  EXPECT_THROW(c.validate(), ShapeError);
  c.kh = c.kw = 1;
  c.kernels.assign(1, 0.0);
  c.stride = 0;
  EXPECT_THROW(c.validate(), ShapeError);
}

TEST(PolyNetwork, KeepsLinearWeightsAndExposesDesignedRanges) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::tanh(), 11);
  nn::PolyActivationLayer pl{nn::Activation::tanh(), {}, false};
  for (int j = 0; j < 4; ++j)
    pl.polys.push_back({cheb::ChebPoly({0.0, 1.0}, -1.0 - j, 1.0 + j), 1e-3 * j, 1e-11});
  auto layers = net.layers();
  layers[1] = pl;
  const nn::PolyNetwork pnet(net.with_layers(layers));
  EXPECT_TRUE(pnet.is_polynomial());
  EXPECT_EQ(pnet.linear(0).W, net.linear(0).W);
  EXPECT_EQ(pnet.linear(1).b, net.linear(1).b);
  EXPECT_EQ(pnet.designed_lo(0)[2], -3.0);
  EXPECT_EQ(pnet.designed_hi(0)[3], 4.0);
  EXPECT_DOUBLE_EQ(pnet.eps(0)[1], 1e-3 + 1e-11);
  EXPECT_THROW(nn::PolyNetwork{net}, ShapeError);
}

TEST(PolyNetwork, LinearPreActivationsAgreeOnEqualInputs) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::relu(), 12);
  nn::PolyActivationLayer pl{nn::Activation::relu(), {{cheb::ChebPoly({0.25, 0.5}, -5, 5), 0.25, 0.0}}, true};
  auto layers = net.layers();
  layers[1] = pl;
  const nn::PolyNetwork pnet(net.with_layers(layers));
  Rng rng(3);
  const Vec x = random_vector(3, rng);
  EXPECT_EQ(nn::forward(pnet, x).pre[0], nn::forward(net, x).pre[0]);
}

TEST(NetworkIo, TextRoundTripIsBitExact) {
  for (const auto& net : {nn::random_mlp({4, 5, 3}, nn::Activation::elu(0.5), 1),
                          nn::random_conv_net({1, 5, 5}, 2, 3, {4, 2}, nn::Activation::gelu(), 2)}) {
    const std::string text = nn::network_to_text(net);
    const nn::Network back = nn::parse_network(text);
    EXPECT_EQ(nn::network_to_text(back), text);
    Rng rng(1);
    const Vec x = random_vector(net.in_dim(), rng, 0.0, 1.0);
    EXPECT_EQ(nn::forward_output(back, x), nn::forward_output(net, x));
  }
}

TEST(NetworkIo, PolyNetworkRoundTrip) {
  const auto net = nn::random_mlp({2, 3, 1}, nn::Activation::sigmoid(), 5);
  nn::PolyActivationLayer pl{nn::Activation::sigmoid(), {}, false};
  for (int j = 0; j < 3; ++j) pl.polys.push_back({cheb::ChebPoly({0.5, 0.2, -0.01 * j}, -2.0, 1.5 + j), 1e-4, 1e-10});
  auto layers = net.layers();
  layers[1] = pl;
  const nn::Network pn = net.with_layers(layers);
  const std::string text = nn::network_to_text(pn);
  EXPECT_EQ(nn::network_to_text(nn::parse_network(text)), text);
}

TEST(NetworkIo, MalformedInputsAreParseOrShapeErrors) {
  EXPECT_THROW(nn::parse_network("{not json"), ParseError);
  EXPECT_THROW(nn::parse_network(R"({"format":"certpoly.network","version":1})"), ParseError);
  const auto net = nn::random_mlp({2, 2}, nn::Activation::relu(), 1);
  std::string text = nn::network_to_text(net);
  const auto pos = text.find("\"shape\"");
  ASSERT_NE(pos, std::string::npos);
  const auto open = text.find('[', pos);
  text.replace(open, text.find(']', open) - open + 1, "[3, 2]");
  EXPECT_THROW(nn::parse_network(text), Error);
}

TEST(Dataset, RowsOutsideDomainAreRejected) {
  const Vec lo = Vec::Constant(2, -1.0), hi = Vec::Constant(2, 1.0);
  nn::Dataset d;
  d.rows = {Vec{{0.5, -0.5}}, Vec{{1.0, -1.0}}};
  const std::string ok = nn::dataset_to_text(d);
  EXPECT_EQ(nn::parse_dataset(ok, lo, hi).size(), 2u);
  EXPECT_EQ(nn::dataset_to_text(nn::parse_dataset(ok, lo, hi)), ok);
  d.rows.push_back(Vec{{1.5, 0.0}});
  EXPECT_THROW(nn::parse_dataset(nn::dataset_to_text(d), lo, hi), ParseError);
  d.rows.back() = Vec{{0.0}};
  EXPECT_THROW(nn::parse_dataset(nn::dataset_to_text(d), lo, hi), Error);
}

TEST(Generate, FixturesAreDeterministicAndInDomain) {
  const auto a = nn::random_mlp({3, 8, 2}, nn::Activation::gelu(), 7);
  const auto b = nn::random_mlp({3, 8, 2}, nn::Activation::gelu(), 7);
  EXPECT_EQ(nn::network_to_text(a), nn::network_to_text(b));
  EXPECT_NE(nn::network_to_text(a), nn::network_to_text(nn::random_mlp({3, 8, 2}, nn::Activation::gelu(), 8)));
  const auto data = nn::random_dataset(a.input_lo(), a.input_hi(), 50, 3, 0.25);
  ASSERT_EQ(data.size(), 50u);
  for (const Vec& r : data.rows) {
    EXPECT_TRUE(a.in_domain(r));
    EXPECT_LE(r.cwiseAbs().maxCoeff(), 0.5);
  }
}
