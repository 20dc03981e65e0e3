#pragma once

#include <cstddef>
#include <vector>

#include "certpoly/cheb/interval.hpp"

namespace certpoly {

// Truncated Taylor series: f(x0 + s) = sum_k c[k] s^k, k < order.
template <class T>
class Jet {
 public:
  Jet() = default;
  explicit Jet(std::size_t order) : c_(order, T(0.0)) {}

  static Jet constant(const T& v, std::size_t order) {
    Jet j(order);
    j.c_[0] = v;
    return j;
  }
  static Jet variable(const T& x0, std::size_t order) {
    Jet j(order);
    j.c_[0] = x0;
    if (order > 1) j.c_[1] = T(1.0);
    return j;
  }

  std::size_t order() const { return c_.size(); }
  const T& operator[](std::size_t k) const { return c_[k]; }
  T& operator[](std::size_t k) { return c_[k]; }
  const std::vector<T>& coeffs() const { return c_; }

  Jet& operator+=(const Jet& o) {
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] += o.c_[k];
    return *this;
  }
  Jet& operator-=(const Jet& o) {
    for (std::size_t k = 0; k < c_.size(); ++k) c_[k] -= o.c_[k];
    return *this;
  }
  Jet& operator*=(const T& s) {
    for (auto& v : c_) v *= s;
    return *this;
  }

  friend Jet operator+(Jet a, const Jet& b) { return a += b; }
  friend Jet operator-(Jet a, const Jet& b) { return a -= b; }
  friend Jet operator-(const Jet& a) {
    Jet r(a.order());
    for (std::size_t k = 0; k < a.order(); ++k) r.c_[k] = -a.c_[k];
    return r;
  }
  friend Jet operator*(Jet a, const T& s) { return a *= s; }
  friend Jet operator*(const T& s, Jet a) { return a *= s; }
  friend Jet operator+(Jet a, const T& s) {
    a.c_[0] += s;
    return a;
  }

  friend Jet operator*(const Jet& a, const Jet& b) {
    const std::size_t n = a.order();
    Jet r(n);
    for (std::size_t k = 0; k < n; ++k) {
      T acc(0.0);
      for (std::size_t j = 0; j <= k; ++j) acc += a.c_[j] * b.c_[k - j];
      r.c_[k] = acc;
    }
    return r;
  }

 private:
  std::vector<T> c_;
};

template <class T>
Jet<T> reciprocal(const Jet<T>& a) {
  const std::size_t n = a.order();
  Jet<T> r(n);
  const T inv0 = T(1.0) / a[0];
  r[0] = inv0;
  for (std::size_t k = 1; k < n; ++k) {
    T acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) acc += a[j] * r[k - j];
    r[k] = -(acc * inv0);
  }
  return r;
}

template <class T>
Jet<T> operator/(const Jet<T>& a, const Jet<T>& b) {
  return a * reciprocal(b);
}

template <class T>
Jet<T> exp_with_value(const Jet<T>& x, const T& e0) {
  const std::size_t n = x.order();
  Jet<T> e(n);
  e[0] = e0;
  for (std::size_t k = 1; k < n; ++k) {
    T acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) acc += T(static_cast<double>(j)) * x[j] * e[k - j];
    e[k] = acc / T(static_cast<double>(k));
  }
  return e;
}

template <class T>
Jet<T> exp(const Jet<T>& x) {
  using std::exp;
  using certpoly::exp;
  return exp_with_value(x, exp(x[0]));
}

// F with F' = G along x: F_k = (1/k) sum_j j x_j G_{k-j}.
template <class T>
Jet<T> integrate_along(const Jet<T>& x, const Jet<T>& g, const T& f0) {
  const std::size_t n = x.order();
  Jet<T> f(n);
  f[0] = f0;
  for (std::size_t k = 1; k < n; ++k) {
    T acc(0.0);
    for (std::size_t j = 1; j <= k; ++j) acc += T(static_cast<double>(j)) * x[j] * g[k - j];
    f[k] = acc / T(static_cast<double>(k));
  }
  return f;
}

}  // namespace certpoly
