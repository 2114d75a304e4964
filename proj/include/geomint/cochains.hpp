/**
 * @file cochains.hpp
 * @brief Cochains as evaluation contracts on chains: form-induced cochains,
 * coboundaries, translation averages, certificate checks and pointwise
 * reconstruction of the underlying form from cube probes.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/forms.hpp"
#include "geomint/quadrature.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace geomint {

/// An extended real with an optional exact value and an error bar.
struct CochainValue {
  double value = 0;
  bool infinite = false;
  std::optional<Rational> exact;
  double error = 0;

  static CochainValue from_exact(const Rational& q) { return {q.get_d(), false, q, 0.0}; }
  static CochainValue plus_infinity() { return {std::numeric_limits<double>::infinity(), true, std::nullopt, 0.0}; }
};

inline CochainValue operator+(const CochainValue& a, const CochainValue& b) {
  if (a.infinite || b.infinite) return CochainValue::plus_infinity();
  CochainValue r{a.value + b.value, false, std::nullopt, a.error + b.error};
  if (a.exact && b.exact) {
    r.exact = *a.exact + *b.exact;
    r.value = r.exact->get_d();
  }
  return r;
}

class CochainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/**
 * @brief Degree-m cochain on polyhedral chains in R^n.
 *
 * The exact evaluator takes rational chains. An optional float evaluator is
 * used by sampling-heavy operations (averages) when present.
 */
class Cochain {
 public:
  using ExactEval = std::function<CochainValue(const RationalChain&)>;
  using FloatEval = std::function<CochainValue(const FloatChain&)>;

  Cochain(int n, int m, std::string provenance, ExactEval exact, FloatEval fast = nullptr)
      : n_(n), m_(m), provenance_(std::move(provenance)), exact_(std::move(exact)), fast_(std::move(fast)) {}

  int ambient() const { return n_; }
  int degree() const { return m_; }
  const std::string& provenance() const { return provenance_; }
  bool has_float_path() const { return static_cast<bool>(fast_); }

  CochainValue operator()(const RationalChain& t) const {
    check(t.degree(), t.ambient(), t.empty());
    if (t.empty()) return CochainValue::from_exact(0);
    return exact_(t);
  }
  CochainValue operator()(const FloatChain& t) const {
    check(t.degree(), t.ambient(), t.empty());
    if (t.empty()) return {};
    if (fast_) return fast_(t);
    return exact_(t.cast<Rational>());
  }

 private:
  void check(int m, int n, bool empty) const {
    if (empty) return;
    if (m != m_) throw CochainError("cochain applied to a chain of the wrong degree");
    if (n != n_) throw CochainError("cochain applied to a chain in the wrong dimension");
  }

  int n_, m_;
  std::string provenance_;
  ExactEval exact_;
  FloatEval fast_;
};

/// X(T) = integral of omega over T (exact for polynomial forms).
inline Cochain form_cochain(const PolyForm& omega) {
  if (omega.is_polynomial()) {
    return Cochain(
        omega.ambient(), omega.degree(), "form",
        [omega](const RationalChain& t) { return CochainValue::from_exact(integrate_over_chain(omega, t)); },
        [omega](const FloatChain& t) {
          return CochainValue{integrate_over_chain(omega, t), false, std::nullopt, 0.0};
        });
  }
  return Cochain(
      omega.ambient(), omega.degree(), "form",
      [omega](const RationalChain& t) {
        auto r = integrate_over_chain_numeric(omega, t, 1e-10);
        return CochainValue{r.value, false, std::nullopt, r.error};
      },
      [omega](const FloatChain& t) {
        auto r = integrate_over_chain_numeric(omega, t, 1e-10);
        return CochainValue{r.value, false, std::nullopt, r.error};
      });
}

/// dX(S) = X(boundary S).
inline Cochain coboundary(const Cochain& x) {
  if (x.degree() >= x.ambient()) throw CochainError("coboundary of an n-cochain is not defined");
  Cochain::FloatEval fast = nullptr;
  if (x.has_float_path()) fast = [x](const FloatChain& s) { return x(boundary(s)); };
  return Cochain(
      x.ambient(), x.degree() + 1, "coboundary", [x](const RationalChain& s) { return x(boundary(s)); }, fast);
}

// ---------------------------------------------------------------------------
// Translation averages
// ---------------------------------------------------------------------------

struct SamplerOptions {
  std::uint64_t seed = 1;
  int samples = 512;   // total evaluations, antithetic partners included
  int replicates = 8;  // randomized replicates used for the standard error
};

/// Quasi-random points in the unit ball for one randomized replicate:
/// a Cranley-Patterson shifted Halton sequence, rejection-mapped from the cube.
inline std::vector<std::vector<double>> qmc_ball_points(int n, int count, std::uint64_t seed, int replicate) {
  static constexpr int primes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
  if (n > 12) throw std::invalid_argument("QMC sampler supports n <= 12");
  std::mt19937_64 rng(seed * 1000003ULL + static_cast<std::uint64_t>(replicate));
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> shift(n);
  for (auto& s : shift) s = uni(rng);
  std::vector<std::vector<double>> out;
  for (std::uint64_t i = 1; static_cast<int>(out.size()) < count; ++i) {
    std::vector<double> y(n);
    double r2 = 0;
    for (int d = 0; d < n; ++d) {
      double h = 0, f = 1.0 / primes[d];
      for (std::uint64_t k = i; k > 0; k /= primes[d], f /= primes[d]) h += f * static_cast<double>(k % primes[d]);
      double u = h + shift[d];
      u -= std::floor(u);
      y[d] = 2 * u - 1;
      r2 += y[d] * y[d];
    }
    if (r2 <= 1.0) out.push_back(std::move(y));
  }
  return out;
}

/**
 * @brief X_r(T): mean of X(T + x) over x in B(0, r), estimated from
 * antithetic QMC pairs (x, -x); error is the standard error over replicates.
 */
inline CochainValue average_value(const Cochain& x, const RationalChain& t, double r, const SamplerOptions& opts = {}) {
  if (!(r > 0)) throw CochainError("averaging radius must be positive");
  if (t.empty()) return CochainValue::from_exact(0);
  const int n = t.ambient();
  const int pairs = std::max(1, opts.samples / (2 * opts.replicates));
  const FloatChain tf = t.cast<double>();
  std::vector<double> means;
  for (int rep = 0; rep < opts.replicates; ++rep) {
    double acc = 0;
    for (const auto& y : qmc_ball_points(n, pairs, opts.seed, rep)) {
      for (double sign : {1.0, -1.0}) {
        Point<double> shift(n);
        for (int d = 0; d < n; ++d) shift[d] = sign * r * y[d];
        CochainValue v = x.has_float_path() ? x(translate(tf, shift))
                                            : x(translate(t, from_doubles<Rational>(shift)));
        if (v.infinite) return CochainValue::plus_infinity();
        acc += v.value;
      }
    }
    means.push_back(acc / (2.0 * pairs));
  }
  double mean = 0;
  for (double m : means) mean += m;
  mean /= means.size();
  double var = 0;
  for (double m : means) var += (m - mean) * (m - mean);
  const double se = means.size() > 1 ? std::sqrt(var / (means.size() - 1) / means.size()) : 0.0;
  return {mean, false, std::nullopt, se};
}

inline Cochain average(const Cochain& x, double r, const SamplerOptions& opts = {}) {
  if (!(r > 0)) throw CochainError("averaging radius must be positive");
  return Cochain(x.ambient(), x.degree(), "averaged",
                 [x, r, opts](const RationalChain& t) { return average_value(x, t, r, opts); });
}

// ---------------------------------------------------------------------------
// Upper norm / upper gradient certificates
// ---------------------------------------------------------------------------

enum class CertificateRole { UpperNorm, UpperGradient };

struct UpperBoundCertificate {
  CertificateRole role = CertificateRole::UpperNorm;
  bool valid = true;
  double worst_slack = std::numeric_limits<double>::infinity();
  std::optional<std::size_t> counterexample;  // index into the family
  std::size_t checked = 0;
  double tolerance = 0;
};

/**
 * @brief Checks |X(T)| <= int h d||T|| (upper norm) or |X(dS)| <= int g d||S||
 * (upper gradient) over a finite family.
 */
inline UpperBoundCertificate check_certificate(const Cochain& x, const FieldFn& field, CertificateRole role,
                                               const std::vector<RationalChain>& family, double tol = 1e-10) {
  UpperBoundCertificate cert;
  cert.role = role;
  cert.tolerance = tol;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const RationalChain& c = family[i];
    CochainValue v = role == CertificateRole::UpperNorm ? x(c) : x(boundary(c));
    double slack = -std::numeric_limits<double>::infinity();
    if (!v.infinite) {
      const double scale = std::max(1.0, std::abs(v.value));
      // tighten the quadrature only while the slack is not clearly resolved
      for (double rel : {1e-2, 1e-5, 1e-8, 1e-11, 1e-13}) {
        QuadratureOptions q;
        q.abs_tol = rel * scale;
        const QuadratureResult rhs = integrate_measure(c, field, q);
        slack = rhs.value - std::abs(v.value);
        if (std::abs(slack) > 10 * (q.abs_tol + rhs.error)) break;
      }
    }
    ++cert.checked;
    if (slack < cert.worst_slack) {
      cert.worst_slack = slack;
      if (slack < -tol) cert.counterexample = i;
    }
  }
  cert.valid = cert.worst_slack >= -tol;
  if (cert.valid) cert.counterexample.reset();
  return cert;
}

namespace detail {

/// Pointwise comass of a polynomial form with coefficients cast to double once.
inline FieldFn polynomial_comass_field(const PolyForm& omega) {
  std::vector<std::pair<MultiIndex, Polynomial<double>>> coeffs;
  for (const auto& [a, p] : omega.coeffs()) coeffs.emplace_back(a, p.cast<double>());
  const Covector blank(omega.ambient(), omega.degree());
  return [coeffs = std::move(coeffs), blank](const std::vector<double>& x) {
    Covector c = blank;
    for (const auto& [a, p] : coeffs) c[a] = p.evaluate<double>(x);
    return comass(c).value;
  };
}

}  // namespace detail

/// x -> comass(omega(x)), the canonical upper norm of X^omega.
inline FieldFn comass_field(const PolyForm& omega) {
  if (omega.is_polynomial()) return detail::polynomial_comass_field(omega);
  return [omega](const std::vector<double>& x) { return comass(omega.at(x)).value; };
}

/// x -> comass(d omega(x)), the canonical upper gradient of X^omega.
inline FieldFn d_comass_field(const PolyForm& omega) {
  PolyForm d_bare = exterior_derivative(bare(omega));
  if (omega.is_polynomial()) return detail::polynomial_comass_field(d_bare);
  return [omega, d_bare](const std::vector<double>& x) { return comass(d_at(omega, d_bare, x)).value; };
}

// ---------------------------------------------------------------------------
// Reconstruction from cube probes
// ---------------------------------------------------------------------------

/// phi(z) = y + sum_i z_i e_{alpha(i)}.
struct AxisFrame {
  MultiIndex alpha;
  Point<Rational> base;

  Point<Rational> operator()(const std::vector<Rational>& z) const {
    Point<Rational> p = base;
    for (std::size_t i = 0; i < alpha.size(); ++i) p[alpha[i]] += z[i];
    return p;
  }
};

/// Radii 2^-k for k_min <= k <= k_max, decreasing.
inline std::vector<Rational> dyadic_radii(int k_min = 4, int k_max = 10) {
  std::vector<Rational> out;
  for (int k = k_min; k <= k_max; ++k) {
    Rational r = 1;
    r /= Rational(mpz_class(1) << k);
    out.push_back(r);
  }
  return out;
}

struct Reconstruction {
  double estimate = 0;
  double error = 0;
  bool converged = false;
  std::vector<double> raw;  // r^-m X(probe_r) per radius
};

namespace detail {

/// Order-1 then order-2 Richardson on values at radii halving each step.
template <class T>
std::vector<std::vector<T>> richardson_table(const std::vector<T>& raw) {
  std::vector<std::vector<T>> table{raw};
  for (int order = 1; order <= 2 && table.back().size() >= 2; ++order) {
    const auto& prev = table.back();
    const T factor = T(1 << order);
    std::vector<T> next;
    for (std::size_t i = 0; i + 1 < prev.size(); ++i) next.push_back((factor * prev[i + 1] - prev[i]) / (factor - T(1)));
    table.push_back(std::move(next));
  }
  return table;
}

inline Reconstruction probe_sequence(const Cochain& x, const std::vector<Rational>& radii, int dim,
                                     const std::function<RationalChain(const Rational&)>& probe) {
  for (std::size_t i = 1; i < radii.size(); ++i)
    if (radii[i] * 2 != radii[i - 1]) throw CochainError("reconstruction radii must halve at each step");
  Reconstruction out;
  std::vector<Rational> exact_raw;
  bool all_exact = true;
  for (const auto& r : radii) {
    CochainValue v = x(probe(r));
    if (v.infinite) throw CochainError("cochain is infinite on a reconstruction probe");
    Rational scale = 1;
    for (int i = 0; i < dim; ++i) scale *= r;
    if (v.exact) {
      exact_raw.push_back(*v.exact / scale);
      out.raw.push_back(exact_raw.back().get_d());
    } else {
      all_exact = false;
      out.raw.push_back(v.value / scale.get_d());
    }
  }
  if (out.raw.empty()) throw CochainError("no reconstruction radii given");
  if (all_exact) {
    auto table = richardson_table(exact_raw);
    const auto& top = table.back();
    out.estimate = top.back().get_d();
    out.error = top.size() >= 2 ? Rational(abs(top[top.size() - 1] - top[top.size() - 2])).get_d() : 0.0;
  } else {
    auto table = richardson_table(out.raw);
    const auto& top = table.back();
    out.estimate = top.back();
    out.error = top.size() >= 2 ? std::abs(top[top.size() - 1] - top[top.size() - 2]) : 0.0;
  }
  out.converged = out.error <= 1e-8;
  return out;
}

inline RationalChain cube_probe(int n, const Point<Rational>& anchor, const MultiIndex& axes, const Rational& r) {
  RationalChain c(n, static_cast<int>(axes.size()));
  if (axes.empty())
    c.add_simplex({anchor}, 1);
  else
    c.add_cube(anchor, axes, r, 1);
  return c;
}

}  // namespace detail

/// omega^X(phi(z), alpha) from r^-m X(cube of side r at phi(z) spanned by alpha).
inline Reconstruction reconstruct_coefficient(const Cochain& x, const AxisFrame& frame, const std::vector<Rational>& z,
                                              const std::vector<Rational>& radii = dyadic_radii()) {
  if (static_cast<int>(frame.alpha.size()) != x.degree()) throw CochainError("frame degree differs from cochain degree");
  const Point<Rational> at = frame(z);
  const int n = x.ambient();
  return detail::probe_sequence(x, radii, x.degree(), [&](const Rational& r) {
    return detail::cube_probe(n, at, frame.alpha, r);
  });
}

/// d omega^X(phi(z), beta) from r^-(m+1) X(boundary of the (m+1)-cube).
inline Reconstruction reconstruct_dcoefficient(const Cochain& x, const AxisFrame& frame, const std::vector<Rational>& z,
                                               const std::vector<Rational>& radii = dyadic_radii()) {
  if (static_cast<int>(frame.alpha.size()) != x.degree() + 1)
    throw CochainError("frame degree must be one more than the cochain degree");
  const Point<Rational> at = frame(z);
  const int n = x.ambient();
  return detail::probe_sequence(x, radii, x.degree() + 1, [&](const Rational& r) {
    return boundary(detail::cube_probe(n, at, frame.alpha, r));
  });
}

struct ReconstructedForm {
  int n = 0, m = 0;
  std::vector<Point<Rational>> points;
  std::vector<MultiIndex> alphas, betas;
  std::vector<std::vector<Reconstruction>> coeff;   // [point][alpha]
  std::vector<std::vector<Reconstruction>> dcoeff;  // [point][beta]

  bool all_converged() const {
    for (const auto& row : coeff)
      for (const auto& c : row)
        if (!c.converged) return false;
    for (const auto& row : dcoeff)
      for (const auto& c : row)
        if (!c.converged) return false;
    return true;
  }
};

/// Uniform grid of `per_axis` points per axis over a box (endpoints included).
inline std::vector<Point<Rational>> grid_points(const std::vector<Rational>& lo, const std::vector<Rational>& hi,
                                                int per_axis) {
  const std::size_t n = lo.size();
  std::vector<Point<Rational>> out;
  std::vector<int> idx(n, 0);
  while (true) {
    Point<Rational> p(n);
    for (std::size_t i = 0; i < n; ++i)
      p[i] = per_axis == 1 ? lo[i] : lo[i] + (hi[i] - lo[i]) * Rational(idx[i]) / Rational(per_axis - 1);
    out.push_back(std::move(p));
    std::size_t k = 0;
    while (k < n && ++idx[k] == per_axis) idx[k++] = 0;
    if (k == n) break;
  }
  return out;
}

inline ReconstructedForm reconstruct_form(const Cochain& x, const std::vector<Point<Rational>>& points,
                                          const std::vector<Rational>& radii = dyadic_radii()) {
  ReconstructedForm out;
  out.n = x.ambient();
  out.m = x.degree();
  out.points = points;
  out.alphas = all_multi_indices(out.m, out.n);
  if (out.m < out.n) out.betas = all_multi_indices(out.m + 1, out.n);
  for (const auto& p : points) {
    std::vector<Reconstruction> row, drow;
    for (const auto& a : out.alphas)
      row.push_back(reconstruct_coefficient(x, AxisFrame{a, p}, std::vector<Rational>(a.size(), 0), radii));
    for (const auto& b : out.betas)
      drow.push_back(reconstruct_dcoefficient(x, AxisFrame{b, p}, std::vector<Rational>(b.size(), 0), radii));
    out.coeff.push_back(std::move(row));
    out.dcoeff.push_back(std::move(drow));
  }
  return out;
}

}  // namespace geomint
