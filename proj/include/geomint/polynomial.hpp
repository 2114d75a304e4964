/**
 * @file polynomial.hpp
 * @brief Sparse multivariate polynomials with exact or floating coefficients.
 */
#pragma once

#include "geomint/linalg.hpp"

#include <map>
#include <type_traits>
#include <stdexcept>
#include <vector>

namespace geomint {

using Exponent = std::vector<int>;

/// Sparse polynomial: exponent vector -> coefficient, zero terms never stored.
template <class S>
class Polynomial {
 public:
  Polynomial() = default;
  explicit Polynomial(int vars) : vars_(vars) {}

  static Polynomial constant(int vars, const S& c) {
    Polynomial p(vars);
    p.add_term(Exponent(vars, 0), c);
    return p;
  }
  static Polynomial variable(int vars, int index) {
    Polynomial p(vars);
    Exponent e(vars, 0);
    e[index] = 1;
    p.add_term(e, S(1));
    return p;
  }

  int vars() const { return vars_; }
  const std::map<Exponent, S>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  int degree() const {
    int d = 0;
    for (const auto& [e, c] : terms_) {
      int s = 0;
      for (int x : e) s += x;
      d = std::max(d, s);
    }
    return d;
  }

  void add_term(const Exponent& e, const S& c) {
    if (static_cast<int>(e.size()) != vars_) throw std::invalid_argument("exponent length mismatch");
    auto it = terms_.find(e);
    if (it == terms_.end()) {
      if (!exactly_zero(c)) terms_.emplace(e, c);
      return;
    }
    it->second += c;
    if (exactly_zero(it->second)) terms_.erase(it);
  }

  Polynomial& operator+=(const Polynomial& o) {
    adopt_vars(o);
    for (const auto& [e, c] : o.terms_) add_term(e, c);
    return *this;
  }
  Polynomial& operator-=(const Polynomial& o) {
    adopt_vars(o);
    for (const auto& [e, c] : o.terms_) add_term(e, S(-c));
    return *this;
  }
  Polynomial& operator*=(const S& s) {
    if (exactly_zero(s)) {
      terms_.clear();
      return *this;
    }
    for (auto& [e, c] : terms_) c *= s;
    return *this;
  }

  friend Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
  friend Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
  friend Polynomial operator*(Polynomial a, const S& s) { return a *= s; }
  friend Polynomial operator*(const Polynomial& a, const Polynomial& b) {
    Polynomial r(std::max(a.vars_, b.vars_));
    for (const auto& [ea, ca] : a.terms_)
      for (const auto& [eb, cb] : b.terms_) {
        Exponent e(ea.size());
        for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
        r.add_term(e, ca * cb);
      }
    return r;
  }
  friend bool operator==(const Polynomial& a, const Polynomial& b) { return a.terms_ == b.terms_; }

  Polynomial derivative(int index) const {
    Polynomial r(vars_);
    for (const auto& [e, c] : terms_) {
      if (e[index] == 0) continue;
      Exponent d = e;
      d[index] -= 1;
      r.add_term(d, c * S(e[index]));
    }
    return r;
  }

  template <class T>
  T evaluate(const Point<T>& x) const {
    T acc = 0;
    for (const auto& [e, c] : terms_) {
      T term = convert<T>(c);
      for (int i = 0; i < vars_; ++i)
        for (int k = 0; k < e[i]; ++k) term *= x[i];
      acc += term;
    }
    return acc;
  }

  /// Coefficient-wise conversion (exact -> float, or float -> exact dyadic).
  template <class T>
  Polynomial<T> cast() const {
    Polynomial<T> r(vars_);
    for (const auto& [e, c] : terms_) r.add_term(e, convert<T>(c));
    return r;
  }

  /**
   * @brief Substitute x_j = sum_i lambda_i * verts[i][j].
   * Produces a polynomial in verts.size() variables (barycentric coordinates).
   */
  Polynomial substitute_affine(const std::vector<Point<S>>& verts) const {
    const int k = static_cast<int>(verts.size());
    std::vector<Polynomial> linear(vars_, Polynomial(k));
    for (int j = 0; j < vars_; ++j)
      for (int i = 0; i < k; ++i) {
        Exponent e(k, 0);
        e[i] = 1;
        linear[j].add_term(e, verts[i][j]);
      }
    std::vector<std::vector<Polynomial>> powers(vars_);
    Polynomial result(k);
    for (const auto& [e, c] : terms_) {
      Polynomial term = Polynomial::constant(k, c);
      for (int j = 0; j < vars_; ++j) {
        if (e[j] == 0) continue;
        auto& pw = powers[j];
        if (pw.empty()) pw.push_back(Polynomial::constant(k, S(1)));
        while (static_cast<int>(pw.size()) <= e[j]) pw.push_back(pw.back() * linear[j]);
        term = term * pw[e[j]];
      }
      result += term;
    }
    return result;
  }

 private:
  template <class T, class U>
  static T convert(const U& v) {
    if constexpr (std::is_same_v<T, U>) {
      return v;
    } else if constexpr (std::is_same_v<U, Rational>) {
      return ScalarTraits<T>::from_rational(v);
    } else {
      return ScalarTraits<T>::from_double(static_cast<double>(v));
    }
  }
  static bool exactly_zero(const S& v) {
    if constexpr (ScalarTraits<S>::exact)
      return sgn(v) == 0;
    else
      return v == 0.0;
  }
  void adopt_vars(const Polynomial& o) {
    if (vars_ == 0) vars_ = o.vars_;
  }

  int vars_ = 0;
  std::map<Exponent, S> terms_;
};

/**
 * @brief Integral over the standard k-simplex of a polynomial in k+1
 * barycentric coordinates: int lambda^a = a_0! ... a_k! / (|a| + k)!.
 */
template <class S>
S integrate_barycentric(const Polynomial<S>& p) {
  const int k = p.vars() - 1;
  S total = 0;
  for (const auto& [e, c] : p.terms()) {
    int order = 0;
    for (int a : e) order += a;
    if constexpr (ScalarTraits<S>::exact) {
      Rational num = 1;
      for (int a : e) num *= factorial_q(a);
      total += c * num / factorial_q(order + k);
    } else {
      double num = 1;
      for (int a : e) num *= factorial(a);
      total += c * num / factorial(order + k);
    }
  }
  return total;
}

}  // namespace geomint
