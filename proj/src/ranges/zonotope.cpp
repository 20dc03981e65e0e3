#include "certpoly/ranges/zonotope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "certpoly/common/error.hpp"

namespace certpoly::ranges {

double gamma(int n) {
  const double u = std::numeric_limits<double>::epsilon() / 2.0;
  return n * u / (1.0 - n * u);
}

Zonotope::Zonotope(Vec center, Mat generators) : center_(std::move(center)), generators_(std::move(generators)) {
  if (generators_.rows() != center_.size()) throw ShapeError("zonotope generator rows do not match center");
}

Zonotope Zonotope::from_box(const Vec& lo, const Vec& hi) {
  if (lo.size() != hi.size()) throw ShapeError("box bounds differ in size");
  const int n = static_cast<int>(lo.size());
  Vec c(n);
  Vec r(n);
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(lo[i]) || !std::isfinite(hi[i])) throw DomainError("unbounded input domain");
    if (lo[i] > hi[i]) throw DomainError("empty input box");
    c[i] = 0.5 * (lo[i] + hi[i]);
    r[i] = rounding::up(std::max(hi[i] - c[i], c[i] - lo[i]));
  }
  int k = 0;
  for (int i = 0; i < n; ++i) k += r[i] > 0.0;
  Mat g = Mat::Zero(n, k);
  for (int i = 0, j = 0; i < n; ++i)
    if (r[i] > 0.0) g(i, j++) = r[i];
  return {c, g};
}

Vec Zonotope::radius() const {
  Vec r = generators_.cwiseAbs().rowwise().sum();
  const double g = gamma(num_generators() + 1);
  for (int i = 0; i < r.size(); ++i) r[i] = rounding::up(r[i] * (1.0 + g));
  return r;
}

Vec Zonotope::lower() const {
  const Vec r = radius();
  Vec lo(dim());
  for (int i = 0; i < dim(); ++i) lo[i] = rounding::down(center_[i] - r[i]);
  return lo;
}

Vec Zonotope::upper() const {
  const Vec r = radius();
  Vec hi(dim());
  for (int i = 0; i < dim(); ++i) hi[i] = rounding::up(center_[i] + r[i]);
  return hi;
}

Interval Zonotope::bounds(int i) const {
  double r = generators_.row(i).cwiseAbs().sum();
  r = rounding::up(r * (1.0 + gamma(num_generators() + 1)));
  return {rounding::down(center_[i] - r), rounding::up(center_[i] + r)};
}

Zonotope Zonotope::affine(const Mat& w, const Vec& b) const {
  if (w.cols() != dim() || w.rows() != b.size()) throw ShapeError("affine map shape mismatch");
  Zonotope out;
  out.center_ = w * center_ + b;
  out.generators_ = w * generators_;
  // Error of the floating-point products: gamma_{n+1} (|W| |c| + |b| + |W| |G| 1).
  const Vec gen_mass = generators_.cwiseAbs().rowwise().sum();
  const Vec mass = w.cwiseAbs() * (center_.cwiseAbs() + gen_mass) + b.cwiseAbs();
  const double g = gamma(static_cast<int>(w.cols()) + 2);
  Vec err(mass.size());
  for (int i = 0; i < mass.size(); ++i) err[i] = rounding::up(g * mass[i]);
  out.add_box(err);
  return out;
}

void Zonotope::apply_parallel(const Vec& slope, const Vec& mid, const Vec& rad) {
  if (slope.size() != dim() || mid.size() != dim() || rad.size() != dim())
    throw ShapeError("parallel relaxation size mismatch");
  const double u = std::numeric_limits<double>::epsilon();
  Vec extra(dim());
  for (int i = 0; i < dim(); ++i) {
    const double gen_mass = generators_.row(i).cwiseAbs().sum();
    const double c = slope[i] * center_[i] + mid[i];
    extra[i] = rad[i] + 2.0 * u * (std::fabs(slope[i] * center_[i]) + std::fabs(mid[i]) + std::fabs(slope[i]) * gen_mass);
    center_[i] = c;
    generators_.row(i) *= slope[i];
    extra[i] = rounding::up(extra[i]);
  }
  add_box(extra);
}

void Zonotope::add_box(const Vec& rad) {
  int k = 0;
  for (int i = 0; i < rad.size(); ++i) k += rad[i] > 0.0;
  if (k == 0) return;
  const int old = num_generators();
  generators_.conservativeResize(Eigen::NoChange, old + k);
  generators_.rightCols(k).setZero();
  for (int i = 0, j = old; i < rad.size(); ++i)
    if (rad[i] > 0.0) generators_(i, j++) = rad[i];
}

void Zonotope::reduce(int max_generators) {
  const int k = num_generators();
  if (k <= max_generators) return;
  const int keep = std::max(0, max_generators - dim());
  Vec norms = generators_.cwiseAbs().colwise().sum().transpose();
  std::vector<int> order(k);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) { return norms[a] > norms[b]; });
  Mat kept(dim(), keep);
  Vec box = Vec::Zero(dim());
  for (int j = 0; j < k; ++j) {
    if (j < keep)
      kept.col(j) = generators_.col(order[j]);
    else
      box += generators_.col(order[j]).cwiseAbs();
  }
  const double g = gamma(k + 1);
  for (int i = 0; i < dim(); ++i) box[i] = rounding::up(box[i] * (1.0 + g));
  generators_ = std::move(kept);
  add_box(box);
}

Zonotope Zonotope::rows(int start, int n) const {
  return {center_.segment(start, n), generators_.middleRows(start, n)};
}

}  // namespace certpoly::ranges
