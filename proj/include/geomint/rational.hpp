/**
 * @file rational.hpp
 * @brief Exact rational scalars, scalar traits and certified square roots.
 */
#pragma once

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

namespace geomint {

using Rational = mpq_class;

/// Closed interval of doubles, used for certified (non-exact) magnitudes.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double mid() const { return 0.5 * (lo + hi); }
  double width() const { return hi - lo; }
  Interval& operator+=(const Interval& o) {
    lo += o.lo;
    hi += o.hi;
    return *this;
  }
};

inline Interval operator*(double a, const Interval& iv) {
  return a >= 0 ? Interval{a * iv.lo, a * iv.hi} : Interval{a * iv.hi, a * iv.lo};
}

/**
 * @brief Parse "p/q", an integer, or a finite decimal ("0.25", "-1.5e-3").
 * Decimals are converted exactly (0.1 becomes 1/10, not the nearest double).
 */
inline Rational parse_rational(std::string_view text) {
  std::string s(text);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.pop_back();
  std::size_t start = 0;
  while (start < s.size() && std::isspace(static_cast<unsigned char>(s[start]))) ++start;
  s = s.substr(start);
  if (s.empty()) throw std::invalid_argument("empty rational literal");
  if (s.find('/') != std::string::npos) {
    Rational r;
    if (r.set_str(s, 10) != 0 || r.get_den() == 0) throw std::invalid_argument("bad rational literal: " + s);
    r.canonicalize();
    return r;
  }
  // decimal with optional exponent
  std::string mantissa = s;
  long exponent = 0;
  if (auto e = s.find_first_of("eE"); e != std::string::npos) {
    mantissa = s.substr(0, e);
    try {
      exponent = std::stol(s.substr(e + 1));
    } catch (const std::exception&) {
      throw std::invalid_argument("bad exponent in literal: " + s);
    }
  }
  bool negative = false;
  if (!mantissa.empty() && (mantissa[0] == '-' || mantissa[0] == '+')) {
    negative = mantissa[0] == '-';
    mantissa = mantissa.substr(1);
  }
  std::string digits;
  long frac_digits = 0;
  bool seen_dot = false;
  for (char c : mantissa) {
    if (c == '.') {
      if (seen_dot) throw std::invalid_argument("bad decimal literal: " + s);
      seen_dot = true;
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      digits.push_back(c);
      if (seen_dot) ++frac_digits;
    } else {
      throw std::invalid_argument("bad decimal literal: " + s);
    }
  }
  if (digits.empty()) throw std::invalid_argument("bad decimal literal: " + s);
  mpz_class num(digits, 10);
  long shift = exponent - frac_digits;
  mpz_class ten = 10;
  mpz_class scale;
  mpz_pow_ui(scale.get_mpz_t(), ten.get_mpz_t(), static_cast<unsigned long>(std::labs(shift)));
  Rational r = shift >= 0 ? Rational(num * scale) : Rational(num, scale);
  r.canonicalize();
  return negative ? Rational(-r) : r;
}

/// num/den in canonical form (the two-argument mpq constructor does not reduce).
inline Rational make_rational(long num, long den) {
  Rational r(num, den);
  r.canonicalize();
  return r;
}

/// "p/q" (or "p" for integers), the serialized form used in all JSON files.
inline std::string to_string(const Rational& r) {
  if (r.get_den() == 1) return r.get_num().get_str();
  return r.get_str();
}

/// Exact conversion of a finite double (doubles are dyadic rationals).
inline Rational exact_rational(double d) {
  if (!std::isfinite(d)) throw std::invalid_argument("non-finite value cannot become a rational");
  return Rational(d);
}

inline bool is_perfect_square(const Rational& x, Rational* root = nullptr) {
  if (sgn(x) < 0) return false;
  const mpz_class& num = x.get_num();
  const mpz_class& den = x.get_den();
  if (mpz_perfect_square_p(num.get_mpz_t()) == 0 || mpz_perfect_square_p(den.get_mpz_t()) == 0) return false;
  if (root != nullptr) {
    mpz_class rn, rd;
    mpz_sqrt(rn.get_mpz_t(), num.get_mpz_t());
    mpz_sqrt(rd.get_mpz_t(), den.get_mpz_t());
    *root = Rational(rn, rd);
    root->canonicalize();
  }
  return true;
}

/// Certified enclosure lo <= sqrt(x) <= hi with lo, hi adjacent-ish doubles.
inline Interval sqrt_interval(const Rational& x) {
  if (sgn(x) < 0) throw std::domain_error("sqrt of negative rational");
  if (sgn(x) == 0) return {0.0, 0.0};
  const double guess = std::sqrt(x.get_d());
  double lo = guess, hi = guess;
  while (lo > 0 && Rational(lo) * Rational(lo) > x) lo = std::nextafter(lo, 0.0);
  while (Rational(hi) * Rational(hi) < x) hi = std::nextafter(hi, std::numeric_limits<double>::infinity());
  return {lo, hi};
}

/// Per-scalar behaviour for the two supported coefficient modes.
template <class S>
struct ScalarTraits;

template <>
struct ScalarTraits<Rational> {
  static constexpr bool exact = true;
  static constexpr const char* name = "rational";
  static bool is_zero(const Rational& v) { return sgn(v) == 0; }
  static double to_double(const Rational& v) { return v.get_d(); }
  static Rational from_rational(const Rational& v) { return v; }
  static Rational from_double(double d) { return exact_rational(d); }
  static Rational abs(const Rational& v) { return ::abs(v); }
  static int sign(const Rational& v) { return sgn(v); }
};

template <>
struct ScalarTraits<double> {
  static constexpr bool exact = false;
  static constexpr const char* name = "f64";
  static constexpr double zero_tolerance = 1e-12;
  static bool is_zero(double v) { return std::abs(v) <= zero_tolerance; }
  static double to_double(double v) { return v; }
  static double from_rational(const Rational& v) { return v.get_d(); }
  static double from_double(double d) { return d; }
  static double abs(double v) { return std::abs(v); }
  static int sign(double v) { return (v > 0) - (v < 0); }
};

template <class S>
double to_double(const S& v) {
  return ScalarTraits<S>::to_double(v);
}

}  // namespace geomint
