#include "certpoly/attack/warp.hpp"

#include <cmath>
#include <numbers>

#include "certpoly/common/error.hpp"

namespace certpoly::attack {

namespace {

struct Sample {
  double value;
  double d_sx;  // derivative with respect to the source column coordinate
  double d_sy;  // and the source row coordinate
};

// Bilinear sample of channel ch at source (sx, sy), with fill outside the image.
Sample bilinear(const Vec& img, const nn::InputShape& s, const Vec& fill, int ch, int out_index, double sx, double sy) {
  const int x0 = static_cast<int>(std::floor(sx)), y0 = static_cast<int>(std::floor(sy));
  const double fx = sx - x0, fy = sy - y0;
  auto at = [&](int y, int x) {
    if (x < 0 || y < 0 || x >= s.width || y >= s.height) return fill[out_index];
    return img[(ch * s.height + y) * s.width + x];
  };
  const double v00 = at(y0, x0), v01 = at(y0, x0 + 1), v10 = at(y0 + 1, x0), v11 = at(y0 + 1, x0 + 1);
  const double top = v00 + fx * (v01 - v00), bottom = v10 + fx * (v11 - v10);
  return {top + fy * (bottom - top), (1.0 - fy) * (v01 - v00) + fy * (v11 - v10), bottom - top};
}

void check(const Vec& image, const nn::InputShape& shape, const Vec& fill) {
  const long n = static_cast<long>(shape.channels) * shape.height * shape.width;
  if (image.size() != n || fill.size() != n) throw ShapeError("warp: image size does not match its shape");
}

template <class F>
void for_each_pixel(const nn::InputShape& s, const WarpParams& p, F&& f) {
  const double th = p.angle_deg * std::numbers::pi / 180.0;
  const double c = std::cos(th), sn = std::sin(th);
  const double cx = 0.5 * (s.width - 1), cy = 0.5 * (s.height - 1);
  for (int ch = 0; ch < s.channels; ++ch)
    for (int y = 0; y < s.height; ++y)
      for (int x = 0; x < s.width; ++x) {
        // Output pixel p maps back to source R(-th) (p - centre - shift) + centre.
        const double u = x - cx - p.shift_x, v = y - cy - p.shift_y;
        const double sx = c * u + sn * v + cx, sy = -sn * u + c * v + cy;
        // d(sx, sy)/d th, d/d shift_x, d/d shift_y.
        const double dsx_dth = -sn * u + c * v, dsy_dth = -c * u - sn * v;
        f(ch, (ch * s.height + y) * s.width + x, sx, sy, dsx_dth, dsy_dth, -c, sn, -sn, -c);
      }
}

}  // namespace

Vec warp(const Vec& image, const nn::InputShape& shape, const WarpParams& p, const Vec& fill) {
  check(image, shape, fill);
  Vec out(image.size());
  for_each_pixel(shape, p, [&](int ch, int idx, double sx, double sy, auto...) {
    out[idx] = bilinear(image, shape, fill, ch, idx, sx, sy).value;
  });
  return out;
}

WarpGradient warp_gradient(const Vec& image, const nn::InputShape& shape, const WarpParams& p, const Vec& fill,
                           const Vec& g) {
  check(image, shape, fill);
  if (g.size() != image.size()) throw ShapeError("warp: gradient size mismatch");
  WarpGradient r;
  const double deg = std::numbers::pi / 180.0;
  for_each_pixel(shape, p,
                 [&](int ch, int idx, double sx, double sy, double dsx_dth, double dsy_dth, double dsx_dtx,
                     double dsy_dtx, double dsx_dty, double dsy_dty) {
                   const Sample s = bilinear(image, shape, fill, ch, idx, sx, sy);
                   r.angle_deg += g[idx] * (s.d_sx * dsx_dth + s.d_sy * dsy_dth) * deg;
                   r.shift_x += g[idx] * (s.d_sx * dsx_dtx + s.d_sy * dsy_dtx);
                   r.shift_y += g[idx] * (s.d_sx * dsx_dty + s.d_sy * dsy_dty);
                 });
  return r;
}

}  // namespace certpoly::attack
