/**
 * @file forms.hpp
 * @brief Differential forms with polynomial coefficients, optionally multiplied
 * by a smooth radial cutoff.
 *
 * Multi-indices are stored 0-based and strictly increasing. Polynomial forms
 * support exact exterior derivative and exact integration over chains; cutoff
 * forms are evaluated pointwise and integrated numerically.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/comass.hpp"
#include "geomint/polynomial.hpp"
#include "geomint/quadrature.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace geomint {

class FormError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Quintic radial profile: 1 on B(0,k), 0 outside B(0,2k), |grad| <= 1.875/k.
struct Cutoff {
  Rational k;

  double value(const std::vector<double>& x) const {
    const double t = radial(x);
    if (t <= 0) return 1.0;
    if (t >= 1) return 0.0;
    return 1.0 - t * t * t * (10 - 15 * t + 6 * t * t);
  }
  std::vector<double> gradient(const std::vector<double>& x) const {
    std::vector<double> g(x.size(), 0.0);
    const double t = radial(x);
    if (t <= 0 || t >= 1) return g;
    const double kk = k.get_d();
    const double rho = norm2(x);
    const double dphi = -30 * t * t * (1 - t) * (1 - t) / kk;
    for (std::size_t i = 0; i < x.size(); ++i) g[i] = dphi * x[i] / rho;
    return g;
  }

 private:
  double radial(const std::vector<double>& x) const {
    const double kk = k.get_d();
    return (norm2(x) - kk) / kk;
  }
};

/// Degree-m form sum_alpha p_alpha(x) dx^alpha with rational polynomial coefficients.
class PolyForm {
 public:
  PolyForm() = default;
  PolyForm(int n, int m) : n_(n), m_(m) {
    if (m < 0 || m > n) throw FormError("form degree must lie in [0, n]");
  }

  int ambient() const { return n_; }
  int degree() const { return m_; }
  const std::map<MultiIndex, Polynomial<Rational>>& coeffs() const { return coeffs_; }
  const std::optional<Cutoff>& cutoff() const { return cutoff_; }
  bool is_polynomial() const { return !cutoff_.has_value(); }

  /// Adds p dx^alpha (alpha 0-based, strictly increasing).
  void add(const MultiIndex& alpha, const Polynomial<Rational>& p) {
    check_index(alpha);
    if (p.is_zero()) return;
    auto it = coeffs_.find(alpha);
    if (it == coeffs_.end()) {
      coeffs_.emplace(alpha, p);
      return;
    }
    it->second += p;
    if (it->second.is_zero()) coeffs_.erase(it);
  }
  void add_monomial(const MultiIndex& alpha, const Exponent& e, const Rational& c) {
    Polynomial<Rational> p(n_);
    p.add_term(e, c);
    add(alpha, p);
  }
  Polynomial<Rational> coefficient(const MultiIndex& alpha) const {
    auto it = coeffs_.find(alpha);
    return it == coeffs_.end() ? Polynomial<Rational>(n_) : it->second;
  }
  void set_cutoff(std::optional<Cutoff> c) { cutoff_ = std::move(c); }

  PolyForm& operator+=(const PolyForm& o) {
    for (const auto& [a, p] : o.coeffs_) add(a, p);
    return *this;
  }
  PolyForm& operator*=(const Rational& s) {
    if (s == 0) {
      coeffs_.clear();
      return *this;
    }
    for (auto& [a, p] : coeffs_) p *= s;
    return *this;
  }
  friend PolyForm operator+(PolyForm a, const PolyForm& b) { return a += b; }
  friend PolyForm operator*(PolyForm a, const Rational& s) { return a *= s; }
  friend bool operator==(const PolyForm& a, const PolyForm& b) {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.coeffs_ == b.coeffs_ &&
           a.cutoff_.has_value() == b.cutoff_.has_value() && (!a.cutoff_ || a.cutoff_->k == b.cutoff_->k);
  }

  /// omega(x) as a covector, cutoff applied.
  Covector at(const std::vector<double>& x) const {
    Covector c(n_, m_);
    const double phi = cutoff_ ? cutoff_->value(x) : 1.0;
    if (phi == 0.0) return c;
    for (const auto& [a, p] : coeffs_) c[a] = phi * p.evaluate<double>(x);
    return c;
  }
  /// Exact coefficient values (cutoff ignored).
  std::map<MultiIndex, Rational> at_exact(const Point<Rational>& x) const {
    std::map<MultiIndex, Rational> out;
    for (const auto& [a, p] : coeffs_) out[a] = p.evaluate<Rational>(x);
    return out;
  }

 private:
  void check_index(const MultiIndex& alpha) const {
    if (static_cast<int>(alpha.size()) != m_) throw FormError("multi-index has wrong length");
    for (std::size_t i = 0; i < alpha.size(); ++i) {
      if (alpha[i] < 0 || alpha[i] >= n_) throw FormError("multi-index entry out of range");
      if (i > 0 && alpha[i] <= alpha[i - 1]) throw FormError("multi-index must be strictly increasing");
    }
  }

  int n_ = 0;
  int m_ = 0;
  std::map<MultiIndex, Polynomial<Rational>> coeffs_;
  std::optional<Cutoff> cutoff_;
};

/// Returns a copy of omega multiplied by the radial cutoff of radius k.
inline PolyForm apply_cutoff(PolyForm omega, const Rational& k) {
  if (!(k > 0)) throw FormError("cutoff radius must be positive");
  omega.set_cutoff(Cutoff{k});
  return omega;
}

/// Classical exterior derivative of a polynomial form.
inline PolyForm exterior_derivative(const PolyForm& omega) {
  if (omega.degree() >= omega.ambient()) throw FormError("exterior derivative of an n-form is not defined here");
  if (!omega.is_polynomial()) throw FormError("exact exterior derivative needs polynomial coefficients");
  PolyForm out(omega.ambient(), omega.degree() + 1);
  for (const auto& [alpha, p] : omega.coeffs()) {
    for (int j = 0; j < omega.ambient(); ++j) {
      auto ins = insert_index(alpha, j);
      if (!ins) continue;
      const auto& [beta, pos] = *ins;
      Polynomial<Rational> dp = p.derivative(j);
      if (dp.is_zero()) continue;
      if (pos % 2 == 1) dp *= Rational(-1);
      out.add(beta, dp);
    }
  }
  return out;
}

/// The polynomial part of omega, without cutoff.
inline PolyForm bare(PolyForm omega) {
  omega.set_cutoff(std::nullopt);
  return omega;
}

/// d(omega)(x) pointwise given d of the polynomial part; adds d(phi) ^ omega for cutoff forms.
inline Covector d_at(const PolyForm& omega, const PolyForm& d_bare, const std::vector<double>& x) {
  Covector d = d_bare.at(x);
  if (!omega.cutoff()) return d;
  const double phi = omega.cutoff()->value(x);
  for (auto& v : d.values()) v *= phi;
  const Covector w = bare(omega).at(x);
  const auto grad = omega.cutoff()->gradient(x);
  for (std::size_t b = 0; b < d.size(); ++b) {
    const MultiIndex& beta = d.index(b);
    for (std::size_t i = 0; i < beta.size(); ++i) {
      MultiIndex rest;
      for (std::size_t j = 0; j < beta.size(); ++j)
        if (j != i) rest.push_back(beta[j]);
      const double s = (i % 2 == 0) ? 1.0 : -1.0;
      d.values()[b] += s * grad[beta[i]] * w[rest];
    }
  }
  return d;
}

inline Covector d_at(const PolyForm& omega, const std::vector<double>& x) {
  return d_at(omega, exterior_derivative(bare(omega)), x);
}

/// <omega(x), xi> for an m-vector xi given by its coordinates.
inline double evaluate(const PolyForm& omega, const std::vector<double>& x, const std::map<MultiIndex, double>& xi) {
  const Covector c = omega.at(x);
  double s = 0;
  for (const auto& [a, v] : xi) s += c[a] * v;
  return s;
}

namespace detail {

/// Columns v_i - v_0 of the simplex parameterization.
template <class S>
Matrix<S> edge_matrix(const std::vector<Point<S>>& verts) {
  const std::size_t m = verts.size() - 1, n = verts[0].size();
  Matrix<S> e(n, std::vector<S>(m));
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t r = 0; r < n; ++r) e[r][i] = verts[i + 1][r] - verts[0][r];
  return e;
}

template <class S>
S minor_det(const Matrix<S>& e, const MultiIndex& rows) {
  Matrix<S> sub;
  for (int r : rows) sub.push_back(e[r]);
  return determinant(std::move(sub));
}

}  // namespace detail

/**
 * @brief Exact integral of a polynomial form over a chain: each simplex is
 * pulled back through its affine parameterization and integrated monomially.
 */
template <class S>
S integrate_over_chain(const PolyForm& omega, const Chain<S>& t) {
  if (omega.degree() != t.degree()) throw FormError("form and chain degrees differ");
  if (omega.ambient() != t.ambient() && !t.empty()) throw FormError("form and chain live in different dimensions");
  if (!omega.is_polynomial()) throw FormError("exact integration needs polynomial coefficients");
  const int m = t.degree();
  std::map<MultiIndex, Polynomial<S>> coeffs;
  for (const auto& [a, p] : omega.coeffs()) coeffs.emplace(a, p.template cast<S>());
  S total = 0;
  const Chain<S> st = simplicial(t);
  for (const auto& [cell, coef] : st.terms()) {
    const auto& verts = std::get<Simplex<S>>(cell).verts;
    if (m == 0) {
      auto it = coeffs.find(MultiIndex{});
      if (it != coeffs.end()) total += coef * it->second.template evaluate<S>(verts[0]);
      continue;
    }
    const Matrix<S> e = detail::edge_matrix(verts);
    S cell_sum = 0;
    for (const auto& [a, p] : coeffs) {
      const S jac = detail::minor_det(e, a);
      if (ScalarTraits<S>::is_zero(jac)) continue;
      cell_sum += jac * integrate_barycentric(p.substitute_affine(verts));
    }
    total += coef * cell_sum;
  }
  return total;
}

/// Numeric integral of any form (cutoff allowed) over a chain, to absolute tolerance `tol`.
template <class S>
QuadratureResult integrate_over_chain_numeric(const PolyForm& omega, const Chain<S>& t, double tol = 1e-10) {
  if (omega.degree() != t.degree()) throw FormError("form and chain degrees differ");
  const int m = t.degree();
  const Chain<S> s = simplicial(t);
  QuadratureResult out;
  QuadratureOptions opts;
  opts.abs_tol = tol / std::max<std::size_t>(1, s.size());
  for (const auto& [cell, coef] : s.terms()) {
    const auto& verts = std::get<Simplex<S>>(cell).verts;
    std::vector<std::vector<double>> dv;
    for (const auto& v : verts) dv.push_back(to_doubles(v));
    const double a = to_double(coef);
    if (m == 0) {
      out.value += a * omega.at(dv[0])[MultiIndex{}];
      continue;
    }
    // tau_alpha = det(E_alpha) / (m! vol)
    const Matrix<double> e = detail::edge_matrix(dv);
    const double scale = factorial(m) * std::sqrt(std::max(0.0, squared_volume(dv)));
    std::map<MultiIndex, double> tau;
    for (const auto& [alpha, p] : omega.coeffs()) tau[alpha] = detail::minor_det(e, alpha) / scale;
    FieldFn f = [&](const std::vector<double>& x) {
      const Covector c = omega.at(x);
      double s = 0;
      for (const auto& [alpha, v] : tau) s += c[alpha] * v;
      return s;
    };
    QuadratureOptions local = opts;
    local.abs_tol = opts.abs_tol / std::max(1e-300, std::abs(a));
    auto r = integrate_simplex(dv, f, local);
    out.value += a * r.value;
    out.error += std::abs(a) * r.error;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Norms
// ---------------------------------------------------------------------------

struct Box {
  std::vector<double> lo, hi;

  std::size_t dim() const { return lo.size(); }
  double volume() const {
    double v = 1;
    for (std::size_t i = 0; i < lo.size(); ++i) v *= hi[i] - lo[i];
    return v;
  }
  static Box unit(int n) { return {std::vector<double>(n, 0.0), std::vector<double>(n, 1.0)}; }
};

struct NormResult {
  double value = 0;
  double error = 0;  // refinement difference (q < inf) or continuity slack (q = inf)
};

struct NormOptions {
  int cells = 0;  // per axis on the coarse grid (0 picks by dimension); the fine grid doubles it
  ComassOptions comass{8, 64};
};

namespace detail {

/// Visits midpoints of a uniform tensor grid with `cells` per axis.
template <class F>
void for_each_midpoint(const Box& box, int cells, F&& f) {
  const std::size_t n = box.dim();
  std::vector<int> idx(n, 0);
  std::vector<double> x(n);
  while (true) {
    for (std::size_t i = 0; i < n; ++i) x[i] = box.lo[i] + (idx[i] + 0.5) * (box.hi[i] - box.lo[i]) / cells;
    f(x);
    std::size_t k = 0;
    while (k < n && ++idx[k] == cells) idx[k++] = 0;
    if (k == n) break;
  }
}

inline NormResult lq_of_field(const std::function<double(const std::vector<double>&)>& g, double q, const Box& box,
                              NormOptions opts) {
  const double vol = box.volume();
  if (opts.cells <= 0) {
    static constexpr int by_dim[] = {1, 256, 64, 16, 6, 4};
    opts.cells = box.dim() < 6 ? by_dim[box.dim()] : 2;
  }
  if (std::isinf(q)) {
    double mx = 0, prev = 0;
    for (int cells : {opts.cells, 2 * opts.cells}) {
      prev = mx;
      for_each_midpoint(box, cells, [&](const std::vector<double>& x) { mx = std::max(mx, g(x)); });
    }
    // growth between the two grids bounds what the finer grid still misses
    return {mx, std::max(0.0, mx - prev)};
  }
  auto sum_at = [&](int cells) {
    double s = 0;
    double cell_vol = vol;
    for (std::size_t i = 0; i < box.dim(); ++i) cell_vol /= cells;
    for_each_midpoint(box, cells, [&](const std::vector<double>& x) { s += std::pow(g(x), q); });
    return s * cell_vol;
  };
  const double coarse = sum_at(opts.cells);
  const double fine = sum_at(2 * opts.cells);
  const double extrap = std::max(0.0, (4 * fine - coarse) / 3);
  return {std::pow(extrap, 1.0 / q), std::abs(std::pow(extrap, 1.0 / q) - std::pow(std::max(fine, 0.0), 1.0 / q))};
}

inline Box default_box(const PolyForm& omega, const std::optional<Box>& domain, double q) {
  if (domain) return *domain;
  if (omega.cutoff()) {
    const double r = 2 * omega.cutoff()->k.get_d();
    return {std::vector<double>(omega.ambient(), -r), std::vector<double>(omega.ambient(), r)};
  }
  if (!std::isinf(q)) throw FormError("L^q norm with q < inf needs a domain box or a cutoff");
  throw FormError("sup norm needs a domain box or a cutoff");
}

}  // namespace detail

/// (integral over the box of comass(omega(x))^q)^(1/q); q = inf gives the grid maximum.
inline NormResult lq_norm(const PolyForm& omega, double q, const std::optional<Box>& domain = std::nullopt,
                          const NormOptions& opts = {}) {
  if (!(q > 1)) throw FormError("exponent q must lie in (1, inf]");
  const Box box = detail::default_box(omega, domain, q);
  return detail::lq_of_field([&](const std::vector<double>& x) { return comass(omega.at(x), opts.comass).value; }, q, box,
                             opts);
}

/// L^p norm of d(omega) (pointwise, so cutoff forms are supported).
inline NormResult lq_norm_d(const PolyForm& omega, double p, const std::optional<Box>& domain = std::nullopt,
                            const NormOptions& opts = {}) {
  if (!(p > 1)) throw FormError("exponent p must lie in (1, inf]");
  if (omega.degree() == omega.ambient()) return {0.0, 0.0};
  const Box box = detail::default_box(omega, domain, p);
  const PolyForm d_bare = exterior_derivative(bare(omega));
  return detail::lq_of_field(
      [&](const std::vector<double>& x) { return comass(d_at(omega, d_bare, x), opts.comass).value; }, p, box,
                             opts);
}

/// max(||omega||_q, ||d omega||_p).
inline NormResult sobolev_norm(const PolyForm& omega, double q, double p, const std::optional<Box>& domain = std::nullopt,
                               const NormOptions& opts = {}) {
  NormResult a = lq_norm(omega, q, domain, opts);
  NormResult b = lq_norm_d(omega, p, domain, opts);
  return a.value >= b.value ? a : b;
}

}  // namespace geomint
