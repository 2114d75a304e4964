#include <catch_amalgamated.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace geomint;
using namespace testing_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using P = Polynomial<Q>;

P var(int n, int i) { return P::variable(n, i); }
P cst(int n, const Q& c) { return P::constant(n, c); }

PolyForm one_form(int n, std::initializer_list<std::pair<int, P>> parts) {
  PolyForm w(n, 1);
  for (const auto& [i, p] : parts) w.add({i}, p);
  return w;
}

Covector random_covector(std::mt19937_64& rng, int n, int m) {
  std::normal_distribution<double> g;
  Covector c(n, m);
  for (auto& v : c.values()) v = g(rng);
  return c;
}

/// Oracle: best pairing over random orthonormal frames (Gram-Schmidt on Gaussian columns).
double sampled_comass(const Covector& nu, int frames, std::uint64_t seed) {
  const int n = nu.ambient(), m = nu.degree();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  double best = 0;
  std::vector<std::vector<double>> v(m, std::vector<double>(n));
  for (int f = 0; f < frames; ++f) {
    for (int j = 0; j < m; ++j) {
      for (auto& x : v[j]) x = g(rng);
      for (int k = 0; k < j; ++k) {
        double d = 0;
        for (int i = 0; i < n; ++i) d += v[j][i] * v[k][i];
        for (int i = 0; i < n; ++i) v[j][i] -= d * v[k][i];
      }
      double s = 0;
      for (double x : v[j]) s += x * x;
      s = std::sqrt(s);
      for (auto& x : v[j]) x /= s;
    }
    double pair = 0;
    for (std::size_t k = 0; k < nu.size(); ++k) {
      const auto& a = nu.index(k);
      // m x m minor, m is 2 here
      const double det = v[0][a[0]] * v[1][a[1]] - v[0][a[1]] * v[1][a[0]];
      pair += nu.values()[k] * det;
    }
    best = std::max(best, std::abs(pair));
  }
  return best;
}

}  // namespace

TEST_CASE("exterior derivative examples") {
  SECTION("d of a constant coefficient form vanishes") {
    PolyForm w = one_form(3, {{0, cst(3, Q(5))}, {2, cst(3, Q(-1))}});
    CHECK(exterior_derivative(w).coeffs().empty());
  }
  SECTION("d(x2 dx1) = -dx1 dx2") {
    const PolyForm dw = exterior_derivative(one_form(2, {{0, var(2, 1)}}));
    REQUIRE(dw.coeffs().size() == 1);
    CHECK(dw.coefficient({0, 1}) == cst(2, Q(-1)));
  }
  SECTION("d(x1 dx2) = dx1 dx2") {
    const PolyForm dw = exterior_derivative(one_form(2, {{1, var(2, 0)}}));
    CHECK(dw.coefficient({0, 1}) == cst(2, Q(1)));
  }
  SECTION("d of a function is its gradient") {
    PolyForm f(3, 0);
    f.add({}, var(3, 0) * var(3, 1) + var(3, 2));
    const PolyForm df = exterior_derivative(f);
    CHECK(df.coefficient({0}) == var(3, 1));
    CHECK(df.coefficient({1}) == var(3, 0));
    CHECK(df.coefficient({2}) == cst(3, Q(1)));
  }
  SECTION("n-forms and cutoff forms are rejected") {
    PolyForm top(2, 2);
    CHECK_THROWS_AS(exterior_derivative(top), FormError);
    CHECK_THROWS_AS(exterior_derivative(apply_cutoff(one_form(2, {{0, var(2, 1)}}), Q(1))), FormError);
  }
}

TEST_CASE("d applied twice vanishes on random forms") {
  std::mt19937_64 rng(11);
  for (int n = 2; n <= 4; ++n)
    for (int m = 0; m + 2 <= n; ++m)
      for (int trial = 0; trial < 20; ++trial) {
        const PolyForm w = random_form(rng, n, m, 3);
        CHECK(exterior_derivative(exterior_derivative(w)).coeffs().empty());
      }
}

TEST_CASE("comass examples") {
  Covector dx1(3, 1);
  dx1[{0}] = 1;
  CHECK(comass(dx1).value == 1.0);

  Covector ab(2, 1);
  ab[{0}] = 3;
  ab[{1}] = -4;
  CHECK_THAT(comass(ab).value, WithinAbs(5.0, 1e-15));

  Covector vol(3, 3);
  vol[{0, 1, 2}] = -2;
  CHECK_THAT(comass(vol).value, WithinAbs(2.0, 1e-15));
}

TEST_CASE("comass of dx12 + dx34 in R^4 matches a frame-sampling oracle") {
  Covector nu(4, 2);
  nu[{0, 1}] = 1;
  nu[{2, 3}] = 1;
  const ComassResult r = comass(nu);
  CHECK_FALSE(r.closed_form);
  CHECK_FALSE(r.low_confidence);
  CHECK_THAT(r.value, WithinAbs(1.0, 1e-8));
  const double oracle = sampled_comass(nu, 1000000, 2024);
  CHECK(oracle <= 1.0 + 1e-12);
  CHECK(oracle > 0.99);
  CHECK(r.value >= oracle - 1e-9);
}

TEST_CASE("comass of a non-simple 2-covector exceeds sampling only slightly") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 5; ++trial) {
    const Covector nu = random_covector(rng, 4, 2);
    const ComassResult r = comass(nu);
    CHECK_FALSE(r.low_confidence);
    const double oracle = sampled_comass(nu, 100000, 77 + trial);
    CHECK(r.value >= oracle - 1e-9);
    CHECK(r.value <= oracle * 1.01);
    CHECK(r.value <= nu.euclidean_norm() + 1e-12);
  }
}

TEST_CASE("comass is a norm") {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 4 + trial % 2, m = 2;
    const Covector a = random_covector(rng, n, m), b = random_covector(rng, n, m);
    Covector sum(n, m), scaled(n, m);
    for (std::size_t k = 0; k < a.size(); ++k) {
      sum.values()[k] = a.values()[k] + b.values()[k];
      scaled.values()[k] = -2.5 * a.values()[k];
    }
    const double ca = comass(a).value, cb = comass(b).value;
    CHECK(comass(sum).value <= ca + cb + 1e-10);
    CHECK_THAT(comass(scaled).value, WithinAbs(2.5 * ca, 1e-10));
  }
  for (int trial = 0; trial < 30; ++trial) {
    const Covector a = random_covector(rng, 5, 1);
    CHECK(comass(a).value == a.euclidean_norm());
  }
}

TEST_CASE("evaluate examples") {
  PolyForm dx1 = one_form(3, {{0, cst(3, Q(1))}});
  CHECK(evaluate(dx1, {0.3, -7, 2}, {{MultiIndex{0}, 1.0}}) == 1.0);
  PolyForm x1dx1 = one_form(2, {{0, var(2, 0)}});
  CHECK(evaluate(x1dx1, {2, 0}, {{MultiIndex{0}, 1.0}}) == 2.0);
  CHECK(evaluate(x1dx1, {2, 0}, {{MultiIndex{1}, 1.0}}) == 0.0);
}

TEST_CASE("integration examples") {
  const RationalChain unit = segment({Q(0), Q(0)}, {Q(1), Q(0)});
  CHECK(integrate_over_chain(one_form(2, {{0, cst(2, Q(1))}}), unit) == Q(1));
  CHECK(integrate_over_chain(one_form(2, {{0, var(2, 0)}}), unit) == make_rational(1, 2));

  SECTION("Stokes pair on the unit square") {
    const PolyForm w = one_form(2, {{1, var(2, 0)}});
    RationalChain square(2, 2);
    square.add_simplex({{Q(0), Q(0)}, {Q(1), Q(0)}, {Q(1), Q(1)}}, Q(1));
    square.add_simplex({{Q(0), Q(0)}, {Q(1), Q(1)}, {Q(0), Q(1)}}, Q(1));
    CHECK(integrate_over_chain(w, unit_square_boundary()) == Q(1));
    CHECK(integrate_over_chain(exterior_derivative(w), square) == Q(1));
  }
  SECTION("degree mismatch is an error") {
    CHECK_THROWS_AS(integrate_over_chain(PolyForm(2, 2), unit), FormError);
  }
}

TEST_CASE("exact integration agrees with numeric quadrature") {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 15; ++trial) {
    const int n = 2 + trial % 2, m = 1 + trial % n;
    const PolyForm w = random_form(rng, n, m, 3);
    const RationalChain t = random_chain(rng, n, m, 2);
    const double exact = integrate_over_chain(w, t).get_d();
    const double numeric = integrate_over_chain_numeric(w, t, 1e-10).value;
    CHECK_THAT(numeric, WithinAbs(exact, 1e-8 * (1 + std::abs(exact))));
  }
}

TEST_CASE("Stokes holds exactly on random chains") {
  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 3, m = trial % n;
    const PolyForm w = random_form(rng, n, m, 3);
    const RationalChain s = random_chain(rng, n, m + 1, 2);
    CHECK(integrate_over_chain(exterior_derivative(w), s) == integrate_over_chain(w, boundary(s)));
  }
}

TEST_CASE("integration is bilinear and bounded by comass mass") {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 3, m = 1 + trial % 2;
    const PolyForm a = random_form(rng, n, m, 2), b = random_form(rng, n, m, 2);
    const RationalChain s = random_chain(rng, n, m, 2), t = random_chain(rng, n, m, 2);
    PolyForm ab = a;
    ab += b;
    CHECK(integrate_over_chain(ab, s) == integrate_over_chain(a, s) + integrate_over_chain(b, s));
    RationalChain st = s;
    st += t;
    CHECK(integrate_over_chain(a, st) == integrate_over_chain(a, s) + integrate_over_chain(a, t));

    const double lhs = std::abs(integrate_over_chain(a, s).get_d());
    const auto bound = integrate_measure(s, [&](const std::vector<double>& x) { return comass(a.at(x)).value; });
    CHECK(lhs <= bound.value + bound.error + 1e-9);
  }
}

TEST_CASE("L^q norm examples") {
  for (int n = 1; n <= 3; ++n) {
    PolyForm dx1(n, 1);
    dx1.add({0}, cst(n, Q(1)));
    for (double q : {1.5, 2.0, 4.0, static_cast<double>(INFINITY)}) CHECK_THAT(lq_norm(dx1, q, Box::unit(n)).value, WithinAbs(1.0, 1e-9));
    PolyForm c = dx1;
    c *= Q(-3);
    CHECK_THAT(lq_norm(c, 2.0, Box::unit(n)).value, WithinAbs(3.0, 1e-9));
  }
  PolyForm x1dx1(1, 1);
  x1dx1.add({0}, var(1, 0));
  const NormResult r = lq_norm(x1dx1, 2.0, Box::unit(1));
  CHECK_THAT(r.value, WithinRel(1 / std::sqrt(3.0), 1e-6));
  CHECK(r.error < 1e-5);
  CHECK_THROWS_AS(lq_norm(x1dx1, 1.0, Box::unit(1)), FormError);
  CHECK_THROWS_AS(lq_norm(x1dx1, 2.0), FormError);
}

TEST_CASE("Sobolev norm examples") {
  PolyForm dx1 = one_form(2, {{0, cst(2, Q(1))}});
  CHECK_THAT(sobolev_norm(dx1, 2, 2, Box::unit(2)).value, WithinAbs(1.0, 1e-9));
  const PolyForm x2dx1 = one_form(2, {{0, var(2, 1)}});
  CHECK_THAT(lq_norm(x2dx1, 2, Box::unit(2)).value, WithinRel(1 / std::sqrt(3.0), 1e-6));
  CHECK_THAT(sobolev_norm(x2dx1, 2, 2, Box::unit(2)).value, WithinAbs(1.0, 1e-9));
  const PolyForm closed = one_form(2, {{0, var(2, 0)}});
  CHECK(sobolev_norm(closed, 3, 2, Box::unit(2)).value == lq_norm(closed, 3, Box::unit(2)).value);
}

TEST_CASE("cutoff forms") {
  const PolyForm w = one_form(2, {{0, var(2, 1)}, {1, cst(2, Q(2))}});
  const PolyForm wk = apply_cutoff(w, Q(1));
  CHECK_FALSE(wk.is_polynomial());
  CHECK_THROWS_AS(apply_cutoff(w, Q(0)), FormError);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  for (int i = 0; i < 500; ++i) {
    const std::vector<double> x{u(rng), u(rng)};
    const double full = comass(w.at(x)).value, cut = comass(wk.at(x)).value;
    CHECK(cut <= full + 1e-12);
    if (std::hypot(x[0], x[1]) <= 1) CHECK(cut == full);
    if (std::hypot(x[0], x[1]) >= 2) CHECK(cut == 0.0);
  }
  // the cutoff box is [-2k, 2k]^n
  CHECK_NOTHROW(lq_norm(wk, 2.0));
  CHECK(lq_norm_d(wk, 2.0).value > 0);
}
