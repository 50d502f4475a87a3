#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace hkflow {

/// Position of entry (i, j), i <= j, in the packed upper triangle of a
/// dim x dim symmetric matrix. Row-wise packing: (0,0) (0,1) .. (1,1) ..
constexpr int packed_index(int dim, int i, int j) {
  if (i > j) {
    const int t = i;
    i = j;
    j = t;
  }
  return i * dim - i * (i - 1) / 2 + (j - i);
}

constexpr int packed_size(int dim) { return dim * (dim + 1) / 2; }

/// Symmetric matrix of order <= 3 stored as its packed upper triangle.
struct SmallSym {
  int dim = 1;
  std::array<double, 6> c{};

  static SmallSym zero(int dim) { return SmallSym{dim, {}}; }
  static SmallSym identity(int dim, double scale = 1.0) {
    SmallSym s{dim, {}};
    for (int i = 0; i < dim; ++i) s.c[packed_index(dim, i, i)] = scale;
    return s;
  }

  double operator()(int i, int j) const { return c[packed_index(dim, i, j)]; }
  double& operator()(int i, int j) { return c[packed_index(dim, i, j)]; }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < dim; ++i) t += (*this)(i, i);
    return t;
  }

  double det() const {
    const auto& a = *this;
    switch (dim) {
      case 1:
        return a(0, 0);
      case 2:
        return a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
      default:
        return a(0, 0) * (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2)) -
               a(0, 1) * (a(0, 1) * a(2, 2) - a(1, 2) * a(0, 2)) +
               a(0, 2) * (a(0, 1) * a(1, 2) - a(1, 1) * a(0, 2));
    }
  }

  /// Closed-form inverse (adjugate / determinant). Caller guarantees det != 0.
  SmallSym inverse() const {
    const auto& a = *this;
    SmallSym r{dim, {}};
    const double d = det();
    switch (dim) {
      case 1:
        r(0, 0) = 1.0 / a(0, 0);
        break;
      case 2:
        r(0, 0) = a(1, 1) / d;
        r(1, 1) = a(0, 0) / d;
        r(0, 1) = -a(0, 1) / d;
        break;
      default:
        r(0, 0) = (a(1, 1) * a(2, 2) - a(1, 2) * a(1, 2)) / d;
        r(0, 1) = (a(0, 2) * a(1, 2) - a(0, 1) * a(2, 2)) / d;
        r(0, 2) = (a(0, 1) * a(1, 2) - a(0, 2) * a(1, 1)) / d;
        r(1, 1) = (a(0, 0) * a(2, 2) - a(0, 2) * a(0, 2)) / d;
        r(1, 2) = (a(0, 1) * a(0, 2) - a(0, 0) * a(1, 2)) / d;
        r(2, 2) = (a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1)) / d;
        break;
    }
    return r;
  }

  /// Sylvester criterion on the leading principal minors.
  bool positive_definite() const {
    const auto& a = *this;
    if (!(a(0, 0) > 0.0)) return false;
    if (dim == 1) return true;
    const double m2 = a(0, 0) * a(1, 1) - a(0, 1) * a(0, 1);
    if (!(m2 > 0.0)) return false;
    if (dim == 2) return true;
    return det() > 0.0;
  }

  /// Smallest eigenvalue, closed form.
  double min_eigenvalue() const {
    const auto& a = *this;
    if (dim == 1) return a(0, 0);
    if (dim == 2) {
      const double m = 0.5 * (a(0, 0) + a(1, 1));
      const double d = 0.5 * (a(0, 0) - a(1, 1));
      return m - std::hypot(d, a(0, 1));
    }
    // Trigonometric solution of the characteristic cubic.
    const double p1 = a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2);
    const double q = trace() / 3.0;
    if (p1 == 0.0) return std::min({a(0, 0), a(1, 1), a(2, 2)});
    const double b00 = a(0, 0) - q, b11 = a(1, 1) - q, b22 = a(2, 2) - q;
    const double p2 = b00 * b00 + b11 * b11 + b22 * b22 + 2.0 * p1;
    const double p = std::sqrt(p2 / 6.0);
    SmallSym b = a;
    b(0, 0) = b00;
    b(1, 1) = b11;
    b(2, 2) = b22;
    for (double& v : b.c) v /= p;
    double r = 0.5 * b.det();
    r = std::clamp(r, -1.0, 1.0);
    const double phi = std::acos(r) / 3.0;
    return q + 2.0 * p * std::cos(phi + 2.0 * std::numbers::pi / 3.0);
  }

  SmallSym& operator+=(const SmallSym& o) {
    for (int k = 0; k < packed_size(dim); ++k) c[k] += o.c[k];
    return *this;
  }
  SmallSym& operator-=(const SmallSym& o) {
    for (int k = 0; k < packed_size(dim); ++k) c[k] -= o.c[k];
    return *this;
  }
  SmallSym& operator*=(double s) {
    for (int k = 0; k < packed_size(dim); ++k) c[k] *= s;
    return *this;
  }
  friend SmallSym operator+(SmallSym a, const SmallSym& b) { return a += b; }
  friend SmallSym operator-(SmallSym a, const SmallSym& b) { return a -= b; }
  friend SmallSym operator*(double s, SmallSym a) { return a *= s; }
};

/// Tr(a^{-1} b) given the precomputed inverse of a.
inline double trace_with_inverse(const SmallSym& a_inv, const SmallSym& b) {
  double t = 0.0;
  for (int i = 0; i < a_inv.dim; ++i)
    for (int j = 0; j < a_inv.dim; ++j) t += a_inv(i, j) * b(j, i);
  return t;
}

}  // namespace hkflow
