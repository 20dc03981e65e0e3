#include "certpoly/diffverify/diffverify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "certpoly/approx/fit.hpp"
#include "certpoly/common/error.hpp"
#include "certpoly/parallel/kernels.hpp"
#include "certpoly/ranges/relaxation.hpp"

namespace certpoly::diffverify {

DerivativeBounds gelu_derivative_bounds(double l, double u) {
  if (!(l <= u)) throw DomainError("gelu_derivative_bounds needs l <= u");
  static const nn::Activation gelu = nn::Activation::gelu();
  const double r2 = std::numbers::sqrt2;
  std::vector<double> pts{l, u};
  for (double b : {-r2, r2})
    if (b > l && b < u) pts.push_back(b);
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double x : pts) {
    const Interval d = gelu.enclose_derivative(Interval(x));
    lo = std::min(lo, d.lo());
    hi = std::max(hi, d.hi());
  }
  return {lo, hi};
}

DerivativeBounds derivative_bounds(const nn::Activation& act, double l, double u) {
  if (act.kind() == nn::ActivationKind::GELU) return gelu_derivative_bounds(l, u);
  const Interval d = act.derivative_range(l, u);
  return {d.lo(), d.hi()};
}

PSigmaRelaxation p_sigma_relaxation(const DiffBox& box, const DerivativeBounds& db, double eps) {
  const double ld = box.ld, ud = box.ud;
  if (ld > ud) throw DomainError("p_sigma_relaxation: empty difference interval");
  if (!(eps >= 0.0)) throw DomainError("p_sigma_relaxation: eps must be non-negative");
  if (db.d_lo > db.d_hi) throw DomainError("p_sigma_relaxation: empty derivative bounds");
  const double dl = db.d_lo, du = db.d_hi;
  PSigmaRelaxation r;
  r.eps = eps;
  if (ld >= 0.0) {
    r.alpha_l = dl;
    r.alpha_u = du;
  } else if (ud <= 0.0) {
    r.alpha_l = du;
    r.alpha_u = dl;
  } else {
    const double w = ud - ld;
    r.alpha_l = (dl * ud - du * ld) / w;
    r.alpha_u = (du * ud - dl * ld) / w;
    r.beta_hat_l = (du - dl) * ld * ud / w;
    r.beta_hat_u = -r.beta_hat_l;
  }
  r.alpha = 0.5 * (r.alpha_l + r.alpha_u);
  // Shift alpha * d below the lower and above the upper non-parallel line on [ld, ud].
  const double gl = r.alpha_l - r.alpha, gu = r.alpha_u - r.alpha;
  const double low = std::min(gl * ld, gl * ud) + r.beta_hat_l;
  const double high = std::max(gu * ld, gu * ud) + r.beta_hat_u;
  // Rounding in the slopes, intercepts and products above.
  const double mag = std::max(std::fabs(ld), std::fabs(ud));
  const double slack = 8.0 * std::numeric_limits<double>::epsilon() *
                       ((std::fabs(dl) + std::fabs(du)) * mag + std::fabs(r.beta_hat_l) + std::fabs(r.alpha) * mag);
  r.beta_l = rounding::down(low - slack);
  r.beta_u = rounding::up(high + slack);
  return r;
}

DiffState DiffState::from_box(const Vec& lo, const Vec& hi) {
  const Zonotope in = Zonotope::from_box(lo, hi);
  const int n = in.dim(), k = in.num_generators();
  Vec c(3 * n);
  c << in.center(), in.center(), Vec::Zero(n);
  Mat g = Mat::Zero(3 * n, k);
  g.topRows(n) = in.generators();
  g.middleRows(n, n) = in.generators();
  return {Zonotope(c, g), n};
}

DiffState linear_diff_step(const Mat& w1, const Vec& b1, const Mat& w2, const Vec& b2, const DiffState& state) {
  const int n = state.width;
  if (w1.rows() != w2.rows() || w1.cols() != w2.cols() || w1.cols() != n || b1.size() != w1.rows() ||
      b2.size() != w2.rows())
    throw ShapeError("linear_diff_step: shape mismatch");
  const int m = static_cast<int>(w1.rows());
  Mat big = Mat::Zero(3 * m, 3 * n);
  big.block(0, 0, m, n) = w1;
  big.block(m, n, m, n) = w2;
  big.block(2 * m, n, m, n) = w1 - w2;
  big.block(2 * m, 2 * n, m, n) = w1;
  Vec bias(3 * m);
  bias << b1, b2, b1 - b2;
  DiffState out{state.z.affine(big, bias), m};
  out.z.reduce(4 * out.z.dim());
  return out;
}

namespace {

void check_architecture(const nn::Network& f, const nn::PolyNetwork& f_pi) {
  if (f.num_blocks() != f_pi.num_blocks() || f.in_dim() != f_pi.in_dim())
    throw ShapeError("diff_bound: architecture mismatch");
  for (int k = 0; k < f.num_blocks(); ++k) {
    if (f.blocks()[k].out_dim != f_pi.blocks()[k].out_dim || f.has_activation(k) != f_pi.has_activation(k))
      throw ShapeError("diff_bound: architecture mismatch at block " + std::to_string(k));
    if (!f.has_activation(k)) continue;
    const auto* a = std::get_if<nn::ActivationLayer>(f.activation(k));
    const auto* p = f_pi.poly_layer(k);
    if (!a || !p || !(a->act == p->source))
      throw ShapeError("diff_bound: block " + std::to_string(k) + " must pair an activation with its polynomial");
  }
}

// eps valid for p on [lo, hi]: the certified value inside the designed range, else a fresh
// certificate on the hull of both.
double eps_on(const nn::CertifiedActivationPoly& cp, const nn::Activation& act, double lo, double hi, double eps_q_target) {
  if (lo >= cp.pi.lo() && hi <= cp.pi.hi()) return cp.eps_total();
  const double a = std::min(lo, cp.pi.lo()), b = std::max(hi, cp.pi.hi());
  const approx::PiecewiseSurrogate& q = approx::SurrogateCache::global().get(act, eps_q_target);
  return rounding::up(approx::certify_pi_error(cp.pi, q, a, b) + q.eps_q);
}

LayerBounds run(const nn::Network& f, const nn::PolyNetwork& f_pi, const ranges::BoundsReport& f_bounds,
                const ranges::BoundsReport& f_pi_bounds, const DiffOptions& options, std::vector<LayerBounds>* deltas) {
  if (options.intersect && (static_cast<int>(f_bounds.layers.size()) < f.num_blocks() ||
                            static_cast<int>(f_pi_bounds.layers.size()) < f.num_blocks()))
    throw ShapeError("diff_bound: bounds reports do not cover every block");
  const auto exec = options.parallel ? parallel::Exec::Parallel : parallel::Exec::Serial;
  DiffState s = DiffState::from_box(f_pi.input_lo(), f_pi.input_hi());
  for (int k = 0; k < f.num_blocks(); ++k) {
    const nn::Dense d1 = f_pi.linear(k), d2 = f.linear(k);
    s = linear_diff_step(d1.W, d1.b, d2.W, d2.b, s);
    const int n = s.width;
    const Vec lo = s.z.lower(), hi = s.z.upper();
    LayerBounds box1{lo.head(n), hi.head(n)}, box2{lo.segment(n, n), hi.segment(n, n)}, boxd{lo.tail(n), hi.tail(n)};
    if (options.intersect) {
      auto meet = [k](LayerBounds& a, const Vec& l, const Vec& u) {
        for (int j = 0; j < a.lo.size(); ++j) {
          const double nl = std::max(a.lo[j], l[j]), nu = std::min(a.hi[j], u[j]);
          if (nl > nu) throw NumericalError("diff_bound: disjoint sound ranges at block " + std::to_string(k));
          a.lo[j] = nl;
          a.hi[j] = nu;
        }
      };
      meet(box1, f_pi_bounds.layers[k].lo, f_pi_bounds.layers[k].hi);
      meet(box2, f_bounds.layers[k].lo, f_bounds.layers[k].hi);
      Vec dl(n), du(n);
      for (int j = 0; j < n; ++j) {
        dl[j] = rounding::down(box1.lo[j] - box2.hi[j]);
        du[j] = rounding::up(box1.hi[j] - box2.lo[j]);
      }
      meet(boxd, dl, du);
    }
    if (deltas) deltas->push_back(boxd);
    if (!f.has_activation(k)) continue;

    const nn::Activation& act = std::get<nn::ActivationLayer>(*f.activation(k)).act;
    const nn::PolyActivationLayer& pl = *f_pi.poly_layer(k);
    Vec slope(3 * n), mid(3 * n), rad(3 * n);
    parallel::for_each_index(n, exec, [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      const nn::CertifiedActivationPoly& cp = pl.poly(j);
      const ranges::ParallelRelaxation r1 = ranges::parallel_relaxation(cp.pi, box1.lo[j], box1.hi[j]);
      const ranges::ParallelRelaxation r2 = ranges::parallel_relaxation(act, box2.lo[j], box2.hi[j]);
      const DiffBox b{box1.lo[j], box1.hi[j], box2.lo[j], box2.hi[j], boxd.lo[j], boxd.hi[j]};
      const DerivativeBounds db =
          derivative_bounds(act, std::min(b.lx, b.ly), std::max(b.ux, b.uy));
      const double eps = eps_on(cp, act, b.lx, b.ux, options.eps_q_target);
      const PSigmaRelaxation r3 = p_sigma_relaxation(b, db, eps);
      const ranges::ParallelRelaxation rs[3] = {r1, r2, {r3.alpha, r3.beta_l - r3.eps, r3.beta_u + r3.eps}};
      for (int t = 0; t < 3; ++t) {
        const int row = t * n + j;
        slope[row] = rs[t].slope;
        mid[row] = 0.5 * (rs[t].offset_lo + rs[t].offset_hi);
        rad[row] = rounding::up(std::max(rs[t].offset_hi - mid[row], mid[row] - rs[t].offset_lo));
      }
    });
    s.z.apply_parallel(slope, mid, rad);
    s.z.reduce(4 * s.z.dim());
  }
  const Zonotope dz = s.delta();
  return {dz.lower(), dz.upper()};
}

}  // namespace

DiffResult diff_bound(const nn::Network& f, const nn::PolyNetwork& f_pi, const ranges::BoundsReport& f_bounds,
                      const ranges::BoundsReport& f_pi_bounds, const DiffOptions& options) {
  check_architecture(f, f_pi);
  if (f.input_lo() != f_pi.input_lo() || f.input_hi() != f_pi.input_hi())
    throw ShapeError("diff_bound: networks have different input domains");
  DiffResult result;
  result.output = run(f, f_pi, f_bounds, f_pi_bounds, options, &result.delta);
  if (options.intersect) {
    // Relaxations are not monotone in their input boxes, so keep the plain run as a ceiling.
    DiffOptions plain = options;
    plain.intersect = false;
    const LayerBounds p = run(f, f_pi, f_bounds, f_pi_bounds, plain, nullptr);
    result.output.lo = result.output.lo.cwiseMax(p.lo);
    result.output.hi = result.output.hi.cwiseMin(p.hi);
    const int last = f.num_blocks() - 1;
    if (last >= 0 && !f.has_activation(last)) {
      const LayerBounds& a = f_pi_bounds.layers[last];
      const LayerBounds& b = f_bounds.layers[last];
      for (int j = 0; j < result.output.lo.size(); ++j) {
        result.output.lo[j] = std::max(result.output.lo[j], rounding::down(a.lo[j] - b.hi[j]));
        result.output.hi[j] = std::min(result.output.hi[j], rounding::up(a.hi[j] - b.lo[j]));
      }
    }
  }
  return result;
}

}  // namespace certpoly::diffverify
