#include <gtest/gtest.h>

#include <cmath>

#include "certpoly/approx/fit.hpp"
#include "certpoly/common/error.hpp"
#include "certpoly/diffverify/diffverify.hpp"
#include "certpoly/nn/generate.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/certify.hpp"
#include "unit/helpers.hpp"

using namespace certpoly;
using namespace certpoly::testing;
using diffverify::DiffBox;
using diffverify::DiffState;

TEST(LinearDiffStep, SharedWeightsGiveWTimesDelta) {
  Rng rng(1);
  const Mat w = random_matrix(3, 4, rng);
  const Vec b = random_vector(3, rng);
  DiffState s = DiffState::from_box(Vec::Constant(4, -1), Vec::Constant(4, 1));
  // Seed a nonzero difference through a first step with distinct weights.
  const Mat w0 = random_matrix(4, 4, rng);
  s = diffverify::linear_diff_step(w0, Vec::Zero(4), w0 + 0.01 * random_matrix(4, 4, rng), Vec::Zero(4), s);
  const auto before = s.delta();
  const auto after = diffverify::linear_diff_step(w, b, w, b, s).delta();
  const auto expected = before.affine(w, Vec::Zero(3));
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(after.lower()[i], expected.lower()[i], 1e-12);
    EXPECT_NEAR(after.upper()[i], expected.upper()[i], 1e-12);
  }
}

TEST(LinearDiffStep, ZeroSecondNetworkReducesToFirstOutput) {
  Rng rng(2);
  const Mat w1 = random_matrix(3, 3, rng);
  const Vec b1 = random_vector(3, rng);
  DiffState s = DiffState::from_box(Vec::Constant(3, -1), Vec::Constant(3, 2));
  s = diffverify::linear_diff_step(random_matrix(3, 3, rng), Vec::Zero(3), random_matrix(3, 3, rng), Vec::Zero(3), s);
  const auto next = diffverify::linear_diff_step(w1, b1, Mat::Zero(3, 3), Vec::Zero(3), s);
  // Identity: (W1 - 0) y2 + W1 (y1 - y2) + b1 = W1 y1 + b1.
  const Vec lo = next.delta().lower(), hi = next.delta().upper();
  const Vec lo1 = next.y1().lower(), hi1 = next.y1().upper();
  for (int i = 0; i < 3; ++i) {
    EXPECT_NEAR(lo[i], lo1[i], 1e-12);
    EXPECT_NEAR(hi[i], hi1[i], 1e-12);
    EXPECT_NEAR(next.y2().lower()[i], 0.0, 1e-15);
  }
}

TEST(LinearDiffStep, ContainsConcreteDifferences) {
  Rng rng(3);
  const Mat a1 = random_matrix(5, 4, rng), a2 = a1 + 0.05 * random_matrix(5, 4, rng);
  const Vec c1 = random_vector(5, rng), c2 = c1 + 0.05 * random_vector(5, rng);
  const Mat w1 = random_matrix(3, 5, rng), w2 = w1 + 0.05 * random_matrix(3, 5, rng);
  const Vec b1 = random_vector(3, rng), b2 = random_vector(3, rng);
  DiffState s = DiffState::from_box(Vec::Constant(4, -1), Vec::Constant(4, 1));
  s = diffverify::linear_diff_step(a1, c1, a2, c2, s);
  s = diffverify::linear_diff_step(w1, b1, w2, b2, s);
  const Vec lo = s.delta().lower(), hi = s.delta().upper();
  int violations = 0;
  for (int t = 0; t < 10000; ++t) {
    const Vec x = random_vector(4, rng);
    const Vec d = (w1 * (a1 * x + c1) + b1) - (w2 * (a2 * x + c2) + b2);
    for (int i = 0; i < 3; ++i) violations += d[i] < lo[i] || d[i] > hi[i];
  }
  EXPECT_EQ(violations, 0);
  EXPECT_THROW(diffverify::linear_diff_step(w1, b1, Mat::Zero(2, 5), b2, s), ShapeError);
}

TEST(DerivativeBounds, GeluClosedForms) {
  const auto z = diffverify::gelu_derivative_bounds(0.0, 0.0);
  EXPECT_NEAR(z.d_lo, 0.5, 1e-14);
  EXPECT_NEAR(z.d_hi, 0.5, 1e-14);
  EXPECT_LE(z.d_lo, 0.5);
  EXPECT_GE(z.d_hi, 0.5);
  const auto g = nn::Activation::gelu();
  const auto r = diffverify::gelu_derivative_bounds(2.0, 3.0);
  EXPECT_NEAR(r.d_hi, g.derivative(2.0), 1e-12);
  EXPECT_GE(r.d_hi, g.derivative(2.0));
  EXPECT_NEAR(r.d_lo, g.derivative(3.0), 1e-12);
  EXPECT_LE(r.d_lo, g.derivative(3.0));
}

TEST(DerivativeBounds, GridOracle) {
  Rng rng(4);
  for (const auto& act : {nn::Activation::gelu(), nn::Activation::sigmoid(), nn::Activation::tanh(), nn::Activation::silu(),
                          nn::Activation::elu(), nn::Activation::relu()}) {
    for (int t = 0; t < 50; ++t) {
      double l = uniform(rng, -6, 6), u = uniform(rng, -6, 6);
      if (l > u) std::swap(l, u);
      const auto db = diffverify::derivative_bounds(act, l, u);
      for (int i = 0; i <= 10000; ++i) {
        const double x = l + (u - l) * i / 10000, d = act.derivative(x);
        ASSERT_GE(d, db.d_lo - 1e-12) << act.name();
        ASSERT_LE(d, db.d_hi + 1e-12) << act.name();
      }
    }
  }
  const auto relu = diffverify::derivative_bounds(nn::Activation::relu(), -1, 1);
  EXPECT_EQ(relu.d_lo, 0.0);
  EXPECT_EQ(relu.d_hi, 1.0);
}

TEST(PSigma, ZeroDifferenceCollapsesToEpsBand) {
  const auto r = diffverify::p_sigma_relaxation({-1, 1, -1, 1, 0, 0}, {0.2, 0.9}, 1e-3);
  EXPECT_EQ(r.alpha_l, 0.2);
  EXPECT_EQ(r.alpha_u, 0.9);
  EXPECT_EQ(r.beta_hat_l, 0.0);
  EXPECT_EQ(r.beta_hat_u, 0.0);
  EXPECT_NEAR(r.lower(0.0), -1e-3, 1e-15);
  EXPECT_NEAR(r.upper(0.0), 1e-3, 1e-15);
}

TEST(PSigma, SymmetricMixedBranch) {
  const auto r = diffverify::p_sigma_relaxation({-2, 2, -3, 3, -1, 1}, {0.0, 1.0}, 0.0);
  EXPECT_DOUBLE_EQ(r.alpha_l, 0.5);
  EXPECT_DOUBLE_EQ(r.alpha_u, 0.5);
  EXPECT_DOUBLE_EQ(r.beta_hat_l, -0.5);
  EXPECT_DOUBLE_EQ(r.beta_hat_u, 0.5);
  EXPECT_DOUBLE_EQ(r.alpha, 0.5);
  EXPECT_NEAR(r.beta_l, -0.5, 1e-14);
  EXPECT_NEAR(r.beta_u, 0.5, 1e-14);
}

TEST(PSigma, ParallelSlopesAndEpsMonotonicity) {
  Rng rng(5);
  for (int t = 0; t < 100; ++t) {
    const double ld = uniform(rng, -1, 0.5), ud = ld + uniform(rng, 0, 1);
    const DiffBox box{-1, 1, -1 - ud, 1 - ld, ld, ud};
    const diffverify::DerivativeBounds db{uniform(rng, 0, 0.3), uniform(rng, 0.5, 1.2)};
    const double e1 = uniform(rng, 0, 1e-3), e2 = e1 + uniform(rng, 0, 1e-3);
    const auto a = diffverify::p_sigma_relaxation(box, db, e1);
    const auto b = diffverify::p_sigma_relaxation(box, db, e2);
    EXPECT_EQ(a.lower_slope(), a.upper_slope());
    EXPECT_EQ(a.beta_l, b.beta_l);
    EXPECT_EQ(a.beta_u, b.beta_u);
    const double d = uniform(rng, ld, ud);
    EXPECT_NEAR(a.lower(d) - b.lower(d), e2 - e1, 1e-15);
    EXPECT_NEAR(b.upper(d) - a.upper(d), e2 - e1, 1e-15);
  }
  EXPECT_THROW(diffverify::p_sigma_relaxation({0, 1, 0, 1, 1, 0}, {0, 1}, 0.0), DomainError);
}

TEST(PSigma, AsymmetricDifferenceIntervalIsSound) {
  // ReLU with Delta in [-1, 3]: the true difference at x = 0, Delta = 3 is 0.
  const auto r = diffverify::p_sigma_relaxation({-1, 1, -4, 2, -1, 3}, {0.0, 1.0}, 0.0);
  const auto relu = nn::Activation::relu();
  for (int i = 0; i <= 200; ++i)
    for (int j = 0; j <= 200; ++j) {
      const double x = -1 + 2.0 * i / 200, d = -1 + 4.0 * j / 200;
      const double v = relu(x) - relu(x - d);
      ASSERT_GE(v, r.lower(d));
      ASSERT_LE(v, r.upper(d));
    }
}

TEST(PSigma, SoundnessGridForCertifiedGeluDegreeTwenty) {
  const auto g = nn::Activation::gelu();
  const auto cp = approx::fit_activation(g, -3, 3, 20, 1e-10);
  const double ld = -0.4, ud = 0.3;
  const DiffBox box{-3, 3, -3 - ud, 3 - ld, ld, ud};
  const auto db = diffverify::derivative_bounds(g, box.lx - ud, box.ux - ld);
  const auto r = diffverify::p_sigma_relaxation(box, db, cp.eps_total());
  int violations = 0;
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 100; ++j) {
      const double x = -3 + 6.0 * i / 99, d = ld + (ud - ld) * j / 99;
      const double v = cp.pi(x) - g(x - d);
      violations += v < r.lower(d) || v > r.upper(d);
    }
  EXPECT_EQ(violations, 0);
}

TEST(DiffBound, LinearNetworkHasZeroDifference) {
  Rng rng(6);
  const nn::Network net({nn::Dense{random_matrix(3, 2, rng), random_vector(3, rng)},
                         nn::Dense{random_matrix(2, 3, rng), random_vector(2, rng)}},
                        Vec::Constant(2, -1), Vec::Constant(2, 1));
  const nn::PolyNetwork pnet(net);
  const auto fb = ranges::verified_report(net, ranges::Domain::Zonotope);
  const auto d = diffverify::diff_bound(net, pnet, fb, fb);
  for (int i = 0; i < 2; ++i) {
    EXPECT_NEAR(d.output.lo[i], 0.0, 1e-12);
    EXPECT_NEAR(d.output.hi[i], 0.0, 1e-12);
  }
}

TEST(DiffBound, ContainmentAndTighteningOnToyNets) {
  struct Case {
    nn::Activation act;
    int degree;
  };
  const std::vector<Case> cases{{nn::Activation::gelu(), 10}, {nn::Activation::sigmoid(), 8}, {nn::Activation::tanh(), 12}};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const auto net = nn::random_mlp({4, 16, 16, 2}, cases[c].act, 40 + c);
    ranges::CertifyConfig cfg;
    cfg.degrees = {cases[c].degree};
    const auto res = ranges::certify_network(net, cfg);
    const auto fb = ranges::verified_report(net, ranges::Domain::Zonotope);
    const auto tight = diffverify::diff_bound(net, res.net, fb, res.bounds);
    diffverify::DiffOptions plain_opts;
    plain_opts.intersect = false;
    const auto plain = diffverify::diff_bound(net, res.net, fb, res.bounds, plain_opts);
    for (int i = 0; i < 2; ++i) {
      EXPECT_GE(tight.output.lo[i], plain.output.lo[i]);
      EXPECT_LE(tight.output.hi[i], plain.output.hi[i]);
    }
    const auto xs = parallel::sample_box(net.input_lo(), net.input_hi(), 100000, 90 + c);
    int violations = 0;
    for (const Vec& x : xs) {
      const auto t1 = nn::forward(res.net, x), t2 = nn::forward(net, x);
      const Vec d = t1.output - t2.output;
      for (int i = 0; i < 2; ++i) violations += d[i] < tight.output.lo[i] || d[i] > tight.output.hi[i];
      for (std::size_t k = 0; k < tight.delta.size(); ++k) {
        const Vec dk = t1.pre[k] - t2.pre[k];
        for (int j = 0; j < dk.size(); ++j) violations += dk[j] < tight.delta[k].lo[j] || dk[j] > tight.delta[k].hi[j];
      }
    }
    EXPECT_EQ(violations, 0) << cases[c].act.name();
  }
}

TEST(DiffBound, ArchitectureMismatchRejected) {
  const auto a = nn::random_mlp({3, 4, 2}, nn::Activation::gelu(), 1);
  const auto b = nn::random_mlp({3, 5, 2}, nn::Activation::gelu(), 1);
  const auto res = ranges::certify_network(b, {});
  const auto fb = ranges::verified_report(a, ranges::Domain::Zonotope);
  EXPECT_THROW(diffverify::diff_bound(a, res.net, fb, res.bounds), ShapeError);
}
