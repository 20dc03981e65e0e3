#pragma once

#include "certpoly/cheb/interval.hpp"
#include "certpoly/nn/network.hpp"

namespace certpoly::ranges {

using nn::Mat;
using nn::Vec;

// {center + G e : e in [-1, 1]^k}. All operations are sound under floating point:
// rounding errors are absorbed into fresh generators.
class Zonotope {
 public:
  Zonotope() = default;
  Zonotope(Vec center, Mat generators);
  static Zonotope from_box(const Vec& lo, const Vec& hi);

  int dim() const { return static_cast<int>(center_.size()); }
  int num_generators() const { return static_cast<int>(generators_.cols()); }
  const Vec& center() const { return center_; }
  const Mat& generators() const { return generators_; }

  // Row-wise L1 norm of the generators, rounded up.
  Vec radius() const;
  Vec lower() const;
  Vec upper() const;
  Interval bounds(int i) const;

  Zonotope affine(const Mat& w, const Vec& b) const;
  // Row i becomes slope_i * x_i + mid_i + rad_i * e_new(i).
  void apply_parallel(const Vec& slope, const Vec& mid, const Vec& rad);
  // Append one generator per row with the given magnitudes (zero rows are skipped).
  void add_box(const Vec& rad);
  // Keep at most max_generators columns by merging the smallest (L1) ones into a box.
  void reduce(int max_generators);

  // Rows [start, start + n) as a zonotope over the same noise symbols.
  Zonotope rows(int start, int n) const;

 private:
  Vec center_;
  Mat generators_;
};

// Unit roundoff multiple gamma_n = n u / (1 - n u).
double gamma(int n);

}  // namespace certpoly::ranges
