/**
 * @file linalg.hpp
 * @brief Small dense linear algebra over exact rationals or doubles.
 *
 * Everything here works on row-major std::vector matrices of modest size
 * (ambient dimensions up to ~10); exactness for Rational comes from plain
 * Gaussian elimination with exact pivots.
 */
#pragma once

#include "geomint/rational.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <utility>
#include <vector>

namespace geomint {

template <class S>
using Point = std::vector<S>;

template <class S>
using Matrix = std::vector<std::vector<S>>;

template <class S>
Point<S> operator+(const Point<S>& a, const Point<S>& b) {
  Point<S> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

template <class S>
Point<S> operator-(const Point<S>& a, const Point<S>& b) {
  Point<S> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

template <class S>
Point<S> scaled(const Point<S>& a, const S& s) {
  Point<S> r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] * s;
  return r;
}

template <class S>
S dot(const Point<S>& a, const Point<S>& b) {
  S r = 0;
  for (std::size_t i = 0; i < a.size(); ++i) r += a[i] * b[i];
  return r;
}

template <class S>
std::vector<double> to_doubles(const Point<S>& p) {
  std::vector<double> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = to_double(p[i]);
  return r;
}

template <class S>
Point<S> from_doubles(const std::vector<double>& p) {
  Point<S> r(p.size());
  for (std::size_t i = 0; i < p.size(); ++i) r[i] = ScalarTraits<S>::from_double(p[i]);
  return r;
}

inline double norm2(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

namespace detail {

template <class S>
bool pivot_is_zero(const S& v, double scale) {
  if constexpr (ScalarTraits<S>::exact) {
    (void)scale;
    return sgn(v) == 0;
  } else {
    return std::abs(v) <= 1e-13 * std::max(1.0, scale);
  }
}

template <class S>
double magnitude(const S& v) {
  return std::abs(to_double(v));
}

}  // namespace detail

/// Determinant by Gaussian elimination (partial pivoting in float mode).
template <class S>
S determinant(Matrix<S> a) {
  const std::size_t n = a.size();
  S det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (detail::magnitude(a[r][col]) > detail::magnitude(a[piv][col])) piv = r;
    if constexpr (ScalarTraits<S>::exact) {
      if (sgn(a[piv][col]) == 0) return S(0);
    } else {
      if (a[piv][col] == 0.0) return 0.0;
    }
    if (piv != col) {
      std::swap(a[piv], a[col]);
      det = -det;
    }
    det *= a[col][col];
    for (std::size_t r = col + 1; r < n; ++r) {
      if (detail::magnitude(a[r][col]) == 0.0) continue;
      S f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
    }
  }
  return det;
}

/**
 * @brief Reduced row echelon form; returns pivot columns.
 * In float mode, entries below 1e-13 (relative to the largest entry) count as zero.
 */
template <class S>
std::vector<std::size_t> rref(Matrix<S>& a) {
  std::vector<std::size_t> pivots;
  if (a.empty()) return pivots;
  const std::size_t rows = a.size(), cols = a[0].size();
  double scale = 0;
  for (auto& row : a)
    for (auto& v : row) scale = std::max(scale, detail::magnitude(v));
  std::size_t r = 0;
  for (std::size_t c = 0; c < cols && r < rows; ++c) {
    std::size_t piv = r;
    for (std::size_t i = r + 1; i < rows; ++i)
      if (detail::magnitude(a[i][c]) > detail::magnitude(a[piv][c])) piv = i;
    if (detail::pivot_is_zero(a[piv][c], scale)) continue;
    std::swap(a[piv], a[r]);
    S inv = S(1) / a[r][c];
    for (std::size_t j = 0; j < cols; ++j) a[r][j] *= inv;
    for (std::size_t i = 0; i < rows; ++i) {
      if (i == r || detail::magnitude(a[i][c]) == 0.0) continue;
      S f = a[i][c];
      for (std::size_t j = 0; j < cols; ++j) a[i][j] -= f * a[r][j];
    }
    pivots.push_back(c);
    ++r;
  }
  a.resize(r);
  return pivots;
}

template <class S>
std::size_t matrix_rank(Matrix<S> a) {
  return rref(a).size();
}

/// Solve A x = b for square nonsingular A; returns false if singular.
template <class S>
bool solve_linear(Matrix<S> a, std::vector<S> b, std::vector<S>& x) {
  const std::size_t n = a.size();
  double scale = 0;
  for (auto& row : a)
    for (auto& v : row) scale = std::max(scale, detail::magnitude(v));
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (detail::magnitude(a[r][col]) > detail::magnitude(a[piv][col])) piv = r;
    if (detail::pivot_is_zero(a[piv][col], scale)) return false;
    std::swap(a[piv], a[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      if (detail::magnitude(a[r][col]) == 0.0) continue;
      S f = a[r][col] / a[col][col];
      for (std::size_t c = col; c < n; ++c) a[r][c] -= f * a[col][c];
      b[r] -= f * b[col];
    }
  }
  x.assign(n, S(0));
  for (std::size_t i = n; i-- > 0;) {
    S acc = b[i];
    for (std::size_t c = i + 1; c < n; ++c) acc -= a[i][c] * x[c];
    x[i] = acc / a[i][i];
  }
  return true;
}

/// Gram matrix of the edge vectors v_i - v_0.
template <class S>
Matrix<S> edge_gram(const std::vector<Point<S>>& verts) {
  const std::size_t k = verts.size() - 1;
  std::vector<Point<S>> e(k);
  for (std::size_t i = 0; i < k; ++i) e[i] = verts[i + 1] - verts[0];
  Matrix<S> g(k, std::vector<S>(k));
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i; j < k; ++j) g[i][j] = g[j][i] = dot(e[i], e[j]);
  return g;
}

inline double factorial(int k) {
  double f = 1;
  for (int i = 2; i <= k; ++i) f *= i;
  return f;
}

inline Rational factorial_q(int k) {
  mpz_class f;
  mpz_fac_ui(f.get_mpz_t(), static_cast<unsigned long>(std::max(k, 0)));
  return Rational(f);
}

/// Squared k-volume of the simplex with the given k+1 vertices (exact in rational mode).
template <class S>
S squared_volume(const std::vector<Point<S>>& verts) {
  const int k = static_cast<int>(verts.size()) - 1;
  if (k == 0) return S(1);
  S det = determinant(edge_gram(verts));
  if constexpr (ScalarTraits<S>::exact) {
    Rational kf = factorial_q(k);
    return det / (kf * kf);
  } else {
    double kf = factorial(k);
    return std::max(0.0, det) / (kf * kf);
  }
}

/// Parity (+1 / -1) of the permutation that sorts `keys` ascending.
template <class T, class Less = std::less<T>>
int sort_with_sign(std::vector<T>& keys, Less less = Less{}) {
  int sign = 1;
  // insertion sort: small inputs, and every swap flips the parity
  for (std::size_t i = 1; i < keys.size(); ++i)
    for (std::size_t j = i; j > 0 && less(keys[j], keys[j - 1]); --j) {
      std::swap(keys[j], keys[j - 1]);
      sign = -sign;
    }
  return sign;
}

}  // namespace geomint
