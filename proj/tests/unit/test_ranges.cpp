#include <gtest/gtest.h>

#include <cmath>

#include "certpoly/common/error.hpp"
#include "certpoly/nn/generate.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/bounds.hpp"
#include "certpoly/ranges/certify.hpp"
#include "certpoly/ranges/relaxation.hpp"
#include "certpoly/ranges/zonotope.hpp"
#include "unit/helpers.hpp"

using namespace certpoly;
using namespace certpoly::testing;
using ranges::Domain;
using ranges::LayerBounds;

namespace {

nn::Network one_dense(const Mat& w, const Vec& b, const Vec& lo, const Vec& hi) {
  return nn::Network({nn::Dense{w, b}}, lo, hi);
}

bool contains(const LayerBounds& outer, const LayerBounds& inner, double tol = 0.0) {
  for (int i = 0; i < outer.lo.size(); ++i)
    if (inner.lo[i] < outer.lo[i] - tol || inner.hi[i] > outer.hi[i] + tol) return false;
  return true;
}

}  // namespace

TEST(Zonotope, ConcretizationIsCenterPlusMinusRowL1) {
  Mat g{{1.0, -2.0, 0.5}, {0.0, 0.25, -0.25}};
  ranges::Zonotope z(Vec{{1.0, -1.0}}, g);
  EXPECT_GE(z.radius()[0], 3.5);
  EXPECT_LE(z.radius()[0], 3.5 * (1 + 1e-12));
  EXPECT_LE(z.lower()[0], -2.5);
  EXPECT_GE(z.upper()[1], -0.5);
}

TEST(Zonotope, AffineAndReducePreserveContainment) {
  Rng rng(1);
  for (int t = 0; t < 50; ++t) {
    const int n = 4, k = 6;
    ranges::Zonotope z(random_vector(n, rng), random_matrix(n, k, rng));
    const Mat w = random_matrix(3, n, rng);
    const Vec b = random_vector(3, rng);
    auto y = z.affine(w, b);
    y.add_box(Vec::Constant(3, 0.01));
    auto r = y;
    r.reduce(3);
    EXPECT_LE(r.num_generators(), 3 + 3);
    for (int s = 0; s < 200; ++s) {
      const Vec e = random_vector(k, rng);
      const Vec point = w * (z.center() + z.generators() * e) + b;
      for (int i = 0; i < 3; ++i) {
        EXPECT_TRUE(y.bounds(i).contains(point[i]));
        EXPECT_TRUE(r.bounds(i).contains(point[i]));
      }
    }
  }
}

TEST(SampledRanges, Examples) {
  const auto net = one_dense(Mat::Identity(1, 1), Vec::Zero(1), Vec::Constant(1, -5), Vec::Constant(1, 5));
  nn::Dataset single;
  single.rows = {Vec{{2.0}}};
  auto r = ranges::sampled_ranges(net, single, 2.0);
  EXPECT_EQ(r.layers[0].lo[0], 2.0);
  EXPECT_EQ(r.layers[0].hi[0], 2.0);
  nn::Dataset two;
  two.rows = {Vec{{1.0}}, Vec{{3.0}}, Vec{{2.5}}};
  r = ranges::sampled_ranges(net, two, 2.0);
  EXPECT_EQ(r.layers[0].lo[0], 0.0);
  EXPECT_EQ(r.layers[0].hi[0], 4.0);
  EXPECT_EQ(r.method, ranges::BoundsMethod::Sampled);
  r = ranges::sampled_ranges(net, two, 1.0);
  EXPECT_EQ(r.layers[0].lo[0], 1.0);
  EXPECT_EQ(r.layers[0].hi[0], 3.0);
  EXPECT_THROW(ranges::sampled_ranges(net, nn::Dataset{}, 1.0), DomainError);
  EXPECT_THROW(ranges::sampled_ranges(net, two, 0.5), DomainError);
}

TEST(ConstantRanges, SymmetricBoxes) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::gelu(), 1);
  const auto r = ranges::constant_ranges(net, 7.5);
  ASSERT_EQ(r.layers.size(), 2u);
  EXPECT_EQ(r.layers[0].lo, Vec::Constant(4, -7.5));
  EXPECT_EQ(r.layers[1].hi, Vec::Constant(2, 7.5));
  EXPECT_THROW(ranges::constant_ranges(net, 0.0), DomainError);
}

TEST(VerifiedBounds, PointDomainGivesForwardValues) {
  const auto net0 = nn::random_mlp({3, 5, 4, 2}, nn::Activation::gelu(), 2);
  Rng rng(2);
  const Vec x = random_vector(3, rng);
  const nn::Network net(net0.layers(), x, x);
  const auto tr = nn::forward(net, x);
  for (auto dom : {Domain::Interval, Domain::Zonotope}) {
    const auto rep = ranges::verified_report(net, dom);
    for (int k = 0; k < net.num_blocks(); ++k)
      for (int j = 0; j < tr.pre[k].size(); ++j) {
        EXPECT_NEAR(rep.layers[k].lo[j], tr.pre[k][j], 1e-12);
        EXPECT_NEAR(rep.layers[k].hi[j], tr.pre[k][j], 1e-12);
      }
  }
}

TEST(VerifiedBounds, SingleDenseClosedForm) {
  Rng rng(3);
  const Mat w = random_matrix(4, 3, rng);
  const Vec b = random_vector(4, rng);
  const Vec lo{{-1.0, 0.0, 0.5}}, hi{{0.0, 2.0, 1.5}};
  const auto net = one_dense(w, b, lo, hi);
  const Vec c = 0.5 * (lo + hi), h = 0.5 * (hi - lo);
  const Vec mid = w * c + b, rad = w.cwiseAbs() * h;
  for (auto dom : {Domain::Interval, Domain::Zonotope}) {
    const auto r = ranges::verified_bounds(ranges::RelaxedNetwork(net), 0, dom);
    for (int i = 0; i < 4; ++i) {
      EXPECT_NEAR(r.lo[i], mid[i] - rad[i], 1e-12);
      EXPECT_NEAR(r.hi[i], mid[i] + rad[i], 1e-12);
      EXPECT_LE(r.lo[i], mid[i] - rad[i]);
      EXPECT_GE(r.hi[i], mid[i] + rad[i]);
    }
  }
}

TEST(VerifiedBounds, EpsilonWidensNextLayerByAbsWeights) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::tanh(), 4);
  ranges::RelaxedNetwork plain(net), relaxed(net);
  const Vec eps{{0.1, 0.0, 0.3, 0.05}};
  relaxed.substitute(0, eps);
  const auto a = ranges::verified_bounds(plain, 1, Domain::Interval);
  const auto b = ranges::verified_bounds(relaxed, 1, Domain::Interval);
  const Vec widen = net.linear(1).W.cwiseAbs() * eps;
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(a.lo[i] - b.lo[i], widen[i], 1e-12);
    EXPECT_NEAR(b.hi[i] - a.hi[i], widen[i], 1e-12);
  }
}

TEST(VerifiedBounds, SubstitutionPreconditions) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::tanh(), 4);
  ranges::RelaxedNetwork r(net);
  EXPECT_THROW(r.substitute(1, Vec::Zero(2)), ShapeError);
  EXPECT_THROW(r.substitute(0, Vec::Zero(3)), ShapeError);
  EXPECT_THROW(r.substitute(0, Vec::Constant(4, -1.0)), DomainError);
  EXPECT_FALSE(r.substituted(0));
  r.substitute(0, Vec::Zero(4));
  EXPECT_TRUE(r.substituted(0));
  const nn::Network unbounded(net.layers(), Vec::Constant(3, -INFINITY), Vec::Constant(3, 1.0));
  EXPECT_THROW(ranges::verified_report(unbounded, Domain::Interval), DomainError);
}

TEST(VerifiedBounds, MonotoneWideningInEpsilon) {
  Rng rng(5);
  for (int t = 0; t < 20; ++t) {
    const auto net = nn::random_mlp({3, 6, 5, 2}, t % 2 ? nn::Activation::gelu() : nn::Activation::sigmoid(), 50 + t);
    ranges::RelaxedNetwork small(net), big(net);
    const Vec e0 = random_vector(6, rng, 0.0, 0.05), e1 = random_vector(5, rng, 0.0, 0.05);
    small.substitute(0, e0);
    small.substitute(1, e1);
    big.substitute(0, e0 + random_vector(6, rng, 0.0, 0.05));
    big.substitute(1, e1 + random_vector(5, rng, 0.0, 0.05));
    const auto a = ranges::verified_report(small, Domain::Interval);
    const auto b = ranges::verified_report(big, Domain::Interval);
    for (std::size_t k = 0; k < a.layers.size(); ++k) EXPECT_TRUE(contains(b.layers[k], a.layers[k]));
  }
}

TEST(VerifiedBounds, ZonotopeTighterThanInterval) {
  for (int t = 0; t < 20; ++t) {
    const auto act = t % 3 == 0 ? nn::Activation::gelu() : (t % 3 == 1 ? nn::Activation::relu() : nn::Activation::tanh());
    const auto net = nn::random_mlp({4, 8, 8, 3}, act, 200 + t);
    const auto z = ranges::verified_report(net, Domain::Zonotope);
    const auto i = ranges::verified_report(net, Domain::Interval);
    for (std::size_t k = 0; k < z.layers.size(); ++k) EXPECT_TRUE(contains(i.layers[k], z.layers[k])) << t << " " << k;
  }
}

TEST(VerifiedBounds, SoundOnRandomInputs) {
  for (int t = 0; t < 6; ++t) {
    const auto act = t % 2 ? nn::Activation::gelu() : nn::Activation::elu();
    const auto net = nn::random_mlp({4, 8, 8, 3}, act, 300 + t);
    const auto xs = parallel::sample_box(net.input_lo(), net.input_hi(), 20000, t);
    for (auto dom : {Domain::Interval, Domain::Zonotope}) {
      const auto rep = ranges::verified_report(net, dom);
      std::vector<Vec> lo, hi;
      for (const auto& l : rep.layers) {
        lo.push_back(l.lo);
        hi.push_back(l.hi);
      }
      EXPECT_EQ(parallel::count_range_violations(net, lo, hi, xs, parallel::Exec::Parallel), 0u);
    }
  }
}

TEST(VerifiedBounds, SampledRangesInsideVerified) {
  const auto net = nn::random_mlp({5, 10, 6, 2}, nn::Activation::gelu(), 9);
  const auto data = nn::random_dataset(net.input_lo(), net.input_hi(), 500, 3);
  const auto s = ranges::sampled_ranges(net, data, 1.0);
  for (auto dom : {Domain::Interval, Domain::Zonotope}) {
    const auto v = ranges::verified_report(net, dom);
    for (std::size_t k = 0; k < s.layers.size(); ++k) EXPECT_TRUE(contains(v.layers[k], s.layers[k]));
  }
}

TEST(GeluRelaxation, ConvexMiddleUsesSecantAndMidpointTangent) {
  const auto g = nn::Activation::gelu();
  const double l = -1.0, u = 1.2;
  const auto r = ranges::gelu_relaxation(l, u);
  EXPECT_EQ(r.which, ranges::GeluCase::ConvexMiddle);
  const double secant = (g(u) - g(l)) / (u - l);
  EXPECT_NEAR(r.upper.slope, secant, 1e-12);
  EXPECT_NEAR(r.upper(l), g(l), 1e-9);
  const double m = 0.5 * (l + u);
  EXPECT_NEAR(r.lower.slope, g.derivative(m), 1e-12);
  EXPECT_NEAR(r.lower(m), g(m), 1e-9);
}

TEST(GeluRelaxation, DegenerateInterval) {
  const auto g = nn::Activation::gelu();
  const auto r = ranges::gelu_relaxation(0.7, 0.7);
  EXPECT_EQ(r.which, ranges::GeluCase::Degenerate);
  EXPECT_NEAR(r.lower.slope, g.derivative(0.7), 1e-12);
  EXPECT_NEAR(r.upper.slope, g.derivative(0.7), 1e-12);
  EXPECT_NEAR(r.lower(0.7), g(0.7), 1e-11);
  EXPECT_NEAR(r.upper(0.7), g(0.7), 1e-11);
  EXPECT_LE(r.lower(0.7), g(0.7));
  EXPECT_GE(r.upper(0.7), g(0.7));
}

TEST(GeluRelaxation, SoundOnRandomIntervals) {
  Rng rng(6);
  const auto g = nn::Activation::gelu();
  int violations = 0;
  for (int t = 0; t < 300; ++t) {
    double l = uniform(rng, -6, 6), u = uniform(rng, -6, 6);
    if (l > u) std::swap(l, u);
    const auto r = ranges::gelu_relaxation(l, u);
    for (int i = 0; i <= 10000; ++i) {
      const double x = l + (u - l) * i / 10000;
      violations += r.lower(x) > g(x) || r.upper(x) < g(x);
    }
  }
  EXPECT_EQ(violations, 0);
}

TEST(ParallelRelaxation, OffsetsContainActivation) {
  Rng rng(7);
  for (const auto& act : {nn::Activation::relu(), nn::Activation::sigmoid(), nn::Activation::tanh(), nn::Activation::silu(),
                          nn::Activation::elu(), nn::Activation::leaky_relu(0.1), nn::Activation::gelu()}) {
    for (int t = 0; t < 30; ++t) {
      double l = uniform(rng, -5, 5), u = uniform(rng, -5, 5);
      if (l > u) std::swap(l, u);
      const auto r = ranges::parallel_relaxation(act, l, u);
      for (int i = 0; i <= 2000; ++i) {
        const double x = l + (u - l) * i / 2000, v = act(x) - r.slope * x;
        ASSERT_GE(v, r.offset_lo) << act.name();
        ASSERT_LE(v, r.offset_hi) << act.name();
      }
    }
  }
}

TEST(CertifyNetwork, LinearOnlyNetworkUnchanged) {
  Rng rng(8);
  const auto net = nn::Network({nn::Dense{random_matrix(3, 2, rng), random_vector(3, rng)},
                                nn::Dense{random_matrix(2, 3, rng), random_vector(2, rng)}},
                               Vec::Constant(2, -1), Vec::Constant(2, 1));
  const auto res = ranges::certify_network(net, {});
  EXPECT_EQ(res.net.linear(0).W, net.linear(0).W);
  EXPECT_EQ(res.net.linear(1).b, net.linear(1).b);
  const auto direct = ranges::verified_report(net, Domain::Zonotope);
  ASSERT_EQ(res.bounds.layers.size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) {
    EXPECT_EQ(res.bounds.layers[k].lo, direct.layers[k].lo);
    EXPECT_EQ(res.bounds.layers[k].hi, direct.layers[k].hi);
  }
}

TEST(CertifyNetwork, TwoLayerGeluSoundnessFuzz) {
  const auto net = nn::random_mlp({6, 16, 16, 2}, nn::Activation::gelu(), 10);
  ranges::CertifyConfig cfg;
  cfg.degrees = {15};
  const auto res = ranges::certify_network(net, cfg);
  std::vector<Vec> lo, hi;
  for (int k = 0; k < res.net.num_blocks(); ++k)
    if (res.net.has_activation(k)) {
      lo.push_back(res.net.designed_lo(k));
      hi.push_back(res.net.designed_hi(k));
      EXPECT_TRUE(contains({res.net.designed_lo(k), res.net.designed_hi(k)}, res.bounds.layers[k]));
    }
  const auto xs = parallel::sample_box(net.input_lo(), net.input_hi(), 100000, 77);
  EXPECT_EQ(parallel::count_range_violations(res.net, lo, hi, xs, parallel::Exec::Parallel), 0u);
}

TEST(CertifyNetwork, EpsilonsAreRecordedPerNeuron) {
  const auto net = nn::random_mlp({3, 5, 2}, nn::Activation::sigmoid(), 11);
  const auto res = ranges::certify_network(net, {});
  const auto* pl = res.net.poly_layer(0);
  ASSERT_NE(pl, nullptr);
  ASSERT_EQ(pl->polys.size(), 5u);
  for (int j = 0; j < 5; ++j) {
    EXPECT_EQ(pl->polys[j].pi.degree(), 27);
    EXPECT_EQ(res.net.eps(0)[j], pl->polys[j].eps_total());
    EXPECT_LE(pl->polys[j].eps_q, 1e-10);
  }
}

TEST(CertifyNetwork, HeterogeneousNoWorseThanUniform) {
  const auto net = nn::random_mlp({4, 8, 2}, nn::Activation::gelu(), 12);
  ranges::CertifyConfig het, uni;
  het.degrees = uni.degrees = {10};
  uni.mode = ranges::FitMode::Uniform;
  const auto a = ranges::certify_network(net, het);
  const auto b = ranges::certify_network(net, uni);
  EXPECT_TRUE(b.net.poly_layer(0)->shared);
  for (int j = 0; j < 8; ++j) EXPECT_LE(a.net.eps(0)[j], b.net.eps(0)[j]);
}

TEST(CertifyNetwork, SerialAndParallelAgreeBitwise) {
  const auto net = nn::random_mlp({4, 12, 6, 2}, nn::Activation::silu(), 13);
  ranges::CertifyConfig p, s;
  p.degrees = s.degrees = {12};
  s.parallel = false;
  const auto a = ranges::certify_network(net, p);
  const auto b = ranges::certify_network(net, s);
  for (int k = 0; k < 2; ++k) {
    EXPECT_EQ(a.net.designed_lo(k), b.net.designed_lo(k));
    EXPECT_EQ(a.net.eps(k), b.net.eps(k));
  }
}

TEST(CertifyNetwork, UnboundedDomainRejected) {
  const auto net0 = nn::random_mlp({2, 3, 1}, nn::Activation::gelu(), 1);
  const nn::Network net(net0.layers(), Vec::Constant(2, -INFINITY), Vec::Constant(2, 1));
  EXPECT_THROW(ranges::certify_network(net, {}), DomainError);
}

TEST(BoundsIo, RoundTrip) {
  const auto net = nn::random_mlp({3, 4, 2}, nn::Activation::gelu(), 14);
  auto rep = ranges::verified_report(net, Domain::Zonotope);
  rep.output_difference = LayerBounds{Vec{{-1e-9, -2e-9}}, Vec{{1e-9, 3e-9}}};
  const std::string text = ranges::bounds_to_text(rep);
  const auto back = ranges::parse_bounds(text);
  EXPECT_EQ(ranges::bounds_to_text(back), text);
  EXPECT_EQ(back.layers[1].hi, rep.layers[1].hi);
  EXPECT_THROW(ranges::parse_bounds("{\"format\":\"certpoly.bounds\"}"), ParseError);
}
