#pragma once

#include <cmath>
#include <vector>

#include "certpoly/common/rng.hpp"
#include "certpoly/nn/network.hpp"

namespace certpoly::testing {

using nn::Mat;
using nn::Vec;

inline std::vector<double> to_std(const Vec& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

inline Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<int>(v.size())); }

inline Mat random_matrix(int rows, int cols, Rng& rng, double scale = 1.0) {
  Mat m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = uniform(rng, -scale, scale);
  return m;
}

inline Vec random_vector(int n, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = uniform(rng, lo, hi);
  return v;
}

// Independent Chebyshev evaluation through the explicit three-term recurrence.
inline double cheb_direct(const std::vector<double>& c, double t) {
  double tkm1 = 1.0, tk = t, s = c[0];
  if (c.size() > 1) s += c[1] * t;
  for (std::size_t k = 2; k < c.size(); ++k) {
    const double tn = 2.0 * t * tk - tkm1;
    tkm1 = tk;
    tk = tn;
    s += c[k] * tk;
  }
  return s;
}

}  // namespace certpoly::testing
