/**
 * @file quadrature.hpp
 * @brief Integration against the mass measure of a chain.
 *
 * Polynomial integrands use the exact barycentric monomial rule; arbitrary
 * fields use an adaptive Grundmann-Moller rule with longest-edge bisection.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/polynomial.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

namespace geomint {

using FieldFn = std::function<double(const std::vector<double>&)>;

struct QuadratureResult {
  double value = 0.0;
  double error = 0.0;
};

struct QuadratureOptions {
  double abs_tol = 1e-10;
  int max_depth = 24;
  int rule_order = 4;  // Grundmann-Moller s; exact for degree 2s+1
};

/**
 * @brief Grundmann-Moller rule on the standard k-simplex, expressed in
 * barycentric coordinates with weights summing to 1 (i.e. normalized by volume).
 */
class GrundmannMollerRule {
 public:
  GrundmannMollerRule(int k, int s) : k_(k) {
    const int d = 2 * s + 1;
    for (int i = 0; i <= s; ++i) {
      const double denom = d + k - 2 * i;
      double w = std::pow(2.0, -2 * s) * std::pow(denom, d) / (factorial(i) * factorial(d + k - i));
      if (i % 2 == 1) w = -w;
      w *= factorial(k);  // reference simplex has volume 1/k!
      std::vector<int> beta(k + 1, 0);
      enumerate(beta, 0, s - i, [&](const std::vector<int>& b) {
        std::vector<double> bary(k + 1);
        for (int j = 0; j <= k; ++j) bary[j] = (2.0 * b[j] + 1.0) / denom;
        points_.push_back(std::move(bary));
        weights_.push_back(w);
      });
    }
  }

  int dim() const { return k_; }
  const std::vector<std::vector<double>>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

  /// Average of f over the simplex with the given vertices.
  double average(const std::vector<std::vector<double>>& verts, const FieldFn& f) const {
    const std::size_t n = verts[0].size();
    std::vector<double> x(n);
    double acc = 0;
    for (std::size_t q = 0; q < points_.size(); ++q) {
      std::fill(x.begin(), x.end(), 0.0);
      for (int j = 0; j <= k_; ++j)
        for (std::size_t c = 0; c < n; ++c) x[c] += points_[q][j] * verts[j][c];
      acc += weights_[q] * f(x);
    }
    return acc;
  }

 private:
  template <class F>
  void enumerate(std::vector<int>& beta, int pos, int remaining, F&& emit) {
    if (pos == k_) {
      beta[pos] = remaining;
      emit(beta);
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      beta[pos] = v;
      enumerate(beta, pos + 1, remaining - v, emit);
    }
  }

  int k_;
  std::vector<std::vector<double>> points_;
  std::vector<double> weights_;
};

namespace detail {

inline double simplex_volume_d(const std::vector<std::vector<double>>& verts) {
  return std::sqrt(std::max(0.0, squared_volume(verts)));
}

inline double adaptive_simplex(const GrundmannMollerRule& rule, const std::vector<std::vector<double>>& verts,
                               double vol, const FieldFn& f, double whole, double tol, int depth, double& err) {
  // bisect the longest edge
  std::size_t bi = 0, bj = 1;
  double best = -1;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j) {
      double d = 0;
      for (std::size_t c = 0; c < verts[i].size(); ++c) d += (verts[i][c] - verts[j][c]) * (verts[i][c] - verts[j][c]);
      if (d > best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  std::vector<double> mid(verts[bi].size());
  for (std::size_t c = 0; c < mid.size(); ++c) mid[c] = 0.5 * (verts[bi][c] + verts[bj][c]);
  auto left = verts, right = verts;
  left[bj] = mid;
  right[bi] = mid;
  const double half = 0.5 * vol;
  const double ql = half * rule.average(left, f);
  const double qr = half * rule.average(right, f);
  const double diff = std::abs(ql + qr - whole);
  // below this the difference is rounding noise and bisection cannot reduce it
  const double noise = 64 * std::numeric_limits<double>::epsilon() * (std::abs(ql) + std::abs(qr));
  if (diff <= std::max(tol, noise) || depth <= 0) {
    err += diff;
    return ql + qr;
  }
  return adaptive_simplex(rule, left, half, f, ql, 0.5 * tol, depth - 1, err) +
         adaptive_simplex(rule, right, half, f, qr, 0.5 * tol, depth - 1, err);
}

}  // namespace detail

/// Adaptive integral of f over one simplex w.r.t. its k-dimensional Hausdorff measure.
inline QuadratureResult integrate_simplex(const std::vector<std::vector<double>>& verts, const FieldFn& f,
                                          const QuadratureOptions& opts = {}) {
  const int k = static_cast<int>(verts.size()) - 1;
  if (k == 0) return {f(verts[0]), 0.0};
  const double vol = detail::simplex_volume_d(verts);
  if (vol == 0.0) return {0.0, 0.0};
  GrundmannMollerRule rule(k, opts.rule_order);
  QuadratureResult out;
  const double whole = vol * rule.average(verts, f);
  out.value = detail::adaptive_simplex(rule, verts, vol, f, whole, opts.abs_tol, opts.max_depth, out.error);
  if (!std::isfinite(out.value)) throw std::domain_error("non-finite field value on the support of the chain");
  return out;
}

/// \f$\int f \, d\|T\|\f$ for a general field by adaptive quadrature.
template <class S>
QuadratureResult integrate_measure(const Chain<S>& t, const FieldFn& f, const QuadratureOptions& opts = {}) {
  const Chain<S> s = simplicial(t);
  QuadratureResult out;
  const double per_cell_tol = opts.abs_tol / std::max<std::size_t>(1, s.size());
  for (const auto& [cell, a] : s.terms()) {
    std::vector<std::vector<double>> verts;
    for (const auto& v : std::get<Simplex<S>>(cell).verts) verts.push_back(to_doubles(v));
    QuadratureOptions local = opts;
    local.abs_tol = per_cell_tol / std::max(1e-300, std::abs(to_double(a)));
    auto r = integrate_simplex(verts, f, local);
    const double w = std::abs(to_double(a));
    out.value += w * r.value;
    out.error += w * r.error;
  }
  return out;
}

/**
 * @brief \f$\int p \, d\|T\|\f$ for a polynomial p with the exact monomial rule.
 * The rational part is exact; only the cell volume (a square root) is rounded.
 */
template <class S>
double integrate_measure(const Chain<S>& t, const Polynomial<Rational>& p) {
  const Chain<S> s = simplicial(t);
  double total = 0;
  const Polynomial<S> ps = p.template cast<S>();
  for (const auto& [cell, a] : s.terms()) {
    const auto& verts = std::get<Simplex<S>>(cell).verts;
    const int k = static_cast<int>(verts.size()) - 1;
    S avg = integrate_barycentric(ps.substitute_affine(verts));
    if constexpr (ScalarTraits<S>::exact)
      avg *= factorial_q(k);
    else
      avg *= factorial(k);
    total += std::abs(to_double(a)) * cell_volume(cell) * to_double(avg);
  }
  return total;
}

/// Tensor Gauss-Legendre nodes/weights on [a, b].
inline void gauss_legendre(int npts, double a, double b, std::vector<double>& x, std::vector<double>& w) {
  x.assign(npts, 0.0);
  w.assign(npts, 0.0);
  for (int i = 0; i < npts; ++i) {
    double z = std::cos(M_PI * (i + 0.75) / (npts + 0.5));
    for (int it = 0; it < 100; ++it) {
      double p0 = 1, p1 = 0;
      for (int j = 0; j < npts; ++j) {
        double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1);
      }
      double dp = npts * (z * p0 - p1) / (z * z - 1.0);
      double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) {
        x[i] = 0.5 * (a + b) - 0.5 * (b - a) * z;
        w[i] = (b - a) / ((1 - z * z) * dp * dp);
        break;
      }
    }
  }
}

}  // namespace geomint
