#include <catch_amalgamated.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace geomint;
using namespace testing_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

using P = Polynomial<Q>;

PolyForm monomial_one_form(int n, int axis, const P& coef) {
  PolyForm w(n, 1);
  w.add({axis}, coef);
  return w;
}

const RationalChain kUnitX = segment({Q(0), Q(0)}, {Q(1), Q(0)});

/// Oracle: brute-force maximal function over every pair of cells.
std::vector<double> brute_maximal(const GridField& u, const std::vector<double>& radii) {
  std::vector<double> out(u.data());
  const double h = u.cell_size(0);
  for (double r : radii) {
    const int reach = static_cast<int>(std::floor(r / h + 1e-9));
    int count = 0;
    for (int a = -reach; a <= reach; ++a)
      for (int b = -reach; b <= reach; ++b)
        if ((a * a + b * b) * h * h <= r * r * (1 + 1e-9)) ++count;
    for (std::size_t k = 0; k < u.size(); ++k) {
      const auto ck = u.center(k);
      double s = 0;
      for (std::size_t j = 0; j < u.size(); ++j) {
        const auto cj = u.center(j);
        if (std::hypot(ck[0] - cj[0], ck[1] - cj[1]) <= r * (1 + 1e-9)) s += u.data()[j];
      }
      out[k] = std::max(out[k], s / count);
    }
  }
  return out;
}

}  // namespace

TEST_CASE("form cochain examples") {
  CHECK(*form_cochain(monomial_one_form(2, 0, P::constant(2, Q(1))))(kUnitX).exact == Q(1));
  CHECK(*form_cochain(monomial_one_form(2, 0, P::variable(2, 0)))(kUnitX).exact == make_rational(1, 2));
  const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 0)));
  RationalChain wrong(3, 1);
  wrong.add_simplex({{Q(0), Q(0), Q(0)}, {Q(1), Q(0), Q(0)}}, Q(1));
  CHECK_THROWS_AS(x(wrong), CochainError);
  CHECK(x(RationalChain(2, 1)).value == 0.0);
}

TEST_CASE("coboundary examples") {
  const PolyForm w = monomial_one_form(2, 0, P::variable(2, 0));
  const Cochain dx = coboundary(form_cochain(w));
  CHECK(dx.degree() == 2);
  RationalChain square(2, 2);
  square.add_cube({Q(0), Q(0)}, {0, 1}, Q(1), Q(1));
  CHECK(*dx(square).exact == Q(0));

  const Cochain dy = coboundary(form_cochain(monomial_one_form(2, 0, P::variable(2, 1))));
  CHECK(*dy(square).exact == Q(-1));
  CHECK_THROWS_AS(coboundary(coboundary(form_cochain(w))), CochainError);
}

TEST_CASE("coboundary of a form cochain is the cochain of d omega") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 3, m = trial % 3;
    const PolyForm w = random_form(rng, n, m, 3);
    const RationalChain s = random_chain(rng, n, m + 1, 2);
    CHECK(*coboundary(form_cochain(w))(s).exact == *form_cochain(exterior_derivative(w))(s).exact);
  }
}

TEST_CASE("form cochains are additive") {
  std::mt19937_64 rng(22);
  for (int trial = 0; trial < 30; ++trial) {
    const PolyForm w = random_form(rng, 3, 2, 2);
    const Cochain x = form_cochain(w);
    const RationalChain s = random_chain(rng, 3, 2, 2), t = random_chain(rng, 3, 2, 2);
    RationalChain st = s;
    st += t;
    CHECK(*x(st).exact == *x(s).exact + *x(t).exact);
  }
}

TEST_CASE("translation average examples") {
  SECTION("constant forms are translation invariant") {
    PolyForm w(2, 1);
    w.add({0}, P::constant(2, make_rational(3, 2)));
    w.add({1}, P::constant(2, Q(-1)));
    const Cochain x = form_cochain(w);
    for (double r : {0.5, 0.125, 2.0}) CHECK_THAT(average(x, r)(kUnitX).value, WithinAbs(1.5, 1e-12));
  }
  SECTION("x2 dx1 averages to zero on the unit segment") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1)));
    for (double r : {1.0, 0.25, 1.0 / 64}) {
      const CochainValue v = average_value(x, kUnitX, r);
      CHECK_THAT(v.value, WithinAbs(0.0, 1e-13));
    }
  }
  SECTION("x1 dx1 averages to one half") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 0)));
    CHECK_THAT(average_value(x, kUnitX, 0.3).value, WithinAbs(0.5, 1e-13));
  }
  SECTION("a quadratic coefficient matches the ball second moment") {
    // X(T + y) = 1 + y2^2 for x2^2 dx1 on the unit segment; mean of y2^2 over B(0,r) in R^2 is r^2/4
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1) * P::variable(2, 1) + P::constant(2, Q(1))));
    SamplerOptions opts;
    opts.samples = 8192;
    const CochainValue v = average_value(x, kUnitX, 1.0, opts);
    CHECK_THAT(v.value, WithinAbs(1.25, 5e-3));
    CHECK(v.error < 5e-3);
  }
  SECTION("radius must be positive") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1)));
    CHECK_THROWS_AS(average(x, 0.0), CochainError);
  }
}

TEST_CASE("averages are additive for a fixed sampler") {
  std::mt19937_64 rng(23);
  const PolyForm w = random_form(rng, 2, 1, 2);
  const Cochain x = form_cochain(w);
  const RationalChain s = random_chain(rng, 2, 1, 2), t = random_chain(rng, 2, 1, 2);
  RationalChain st = s;
  st += t;
  const double a = average_value(x, s, 0.5).value, b = average_value(x, t, 0.5).value;
  CHECK_THAT(average_value(x, st, 0.5).value, WithinAbs(a + b, 1e-10));
  CHECK(std::abs(average_value(x, st, 0.5).value) <= std::abs(a) + std::abs(b) + 1e-10);
}

TEST_CASE("certificate examples") {
  const PolyForm w = monomial_one_form(2, 0, P::variable(2, 0));
  const Cochain x = form_cochain(w);
  std::mt19937_64 rng(24);
  std::vector<RationalChain> family;
  for (int i = 0; i < 40; ++i) family.push_back(random_chain(rng, 2, 1, 2));
  family.push_back(kUnitX);

  const auto ok = check_certificate(x, comass_field(w), CertificateRole::UpperNorm, family);
  CHECK(ok.valid);
  CHECK(ok.worst_slack >= -1e-10);
  CHECK(ok.checked == family.size());

  const auto half = check_certificate(x, [](const std::vector<double>& p) { return 0.5 * std::abs(p[0]); },
                                      CertificateRole::UpperNorm, family);
  CHECK_FALSE(half.valid);
  REQUIRE(half.counterexample.has_value());

  std::vector<RationalChain> fillings;
  for (int i = 0; i < 20; ++i) fillings.push_back(random_chain(rng, 2, 2, 2));
  const auto grad = check_certificate(x, d_comass_field(w), CertificateRole::UpperGradient, fillings);
  CHECK(grad.valid);

  const PolyForm y = monomial_one_form(2, 0, P::variable(2, 1));
  const auto zero = check_certificate(form_cochain(y), [](const std::vector<double>&) { return 0.0; },
                                      CertificateRole::UpperGradient, fillings);
  CHECK_FALSE(zero.valid);
}

TEST_CASE("comass fields certify random forms on random chains") {
  std::mt19937_64 rng(25);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3, m = 1 + trial % 2;
    const PolyForm w = random_form(rng, n, m, 2);
    std::vector<RationalChain> family, fillings;
    for (int i = 0; i < 10; ++i) {
      family.push_back(random_chain(rng, n, m, 2));
      fillings.push_back(random_chain(rng, n, m + 1, 2));
    }
    const Cochain x = form_cochain(w);
    CHECK(check_certificate(x, comass_field(w), CertificateRole::UpperNorm, family).valid);
    CHECK(check_certificate(x, d_comass_field(w), CertificateRole::UpperGradient, fillings).valid);
  }
}

TEST_CASE("reconstruction examples") {
  SECTION("constant coefficient is exact at every radius") {
    const Cochain x = form_cochain(monomial_one_form(2, 1, P::constant(2, make_rational(-7, 3))));
    const auto r = reconstruct_coefficient(x, AxisFrame{{1}, {Q(1), Q(2)}}, {Q(0)});
    for (double v : r.raw) CHECK_THAT(v, WithinAbs(-7.0 / 3, 1e-15));
    CHECK_THAT(r.estimate, WithinAbs(-7.0 / 3, 1e-15));
    CHECK(r.converged);
  }
  SECTION("x1 dx1 raw values are x1 + r/2 and extrapolate to x1") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 0)));
    const auto radii = dyadic_radii(2, 6);
    const auto r = reconstruct_coefficient(x, AxisFrame{{0}, {make_rational(3, 4), Q(0)}}, {Q(0)}, radii);
    for (std::size_t i = 0; i < radii.size(); ++i) CHECK_THAT(r.raw[i], WithinAbs(0.75 + radii[i].get_d() / 2, 1e-15));
    CHECK_THAT(r.estimate, WithinAbs(0.75, 1e-15));
  }
  SECTION("dcoefficient of x2 dx1 is -1") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1)));
    const auto r = reconstruct_dcoefficient(x, AxisFrame{{0, 1}, {Q(0), Q(0)}}, {Q(0), Q(0)});
    for (double v : r.raw) CHECK(v == -1.0);
    CHECK(r.estimate == -1.0);
  }
  SECTION("radii must halve") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1)));
    CHECK_THROWS_AS(reconstruct_coefficient(x, AxisFrame{{0}, {Q(0), Q(0)}}, {Q(0)}, {Q(1), make_rational(1, 3)}),
                    CochainError);
  }
}

TEST_CASE("reconstruct_form recovers random polynomial forms on a grid") {
  std::mt19937_64 rng(26);
  const PolyForm w = random_form(rng, 2, 1, 3);
  const PolyForm dw = exterior_derivative(w);
  const auto pts = grid_points({Q(-1), Q(-1)}, {Q(1), Q(1)}, 3);
  const auto rec = reconstruct_form(form_cochain(w), pts);
  CHECK(rec.all_converged());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const auto x = to_doubles(pts[i]);
    for (std::size_t a = 0; a < rec.alphas.size(); ++a)
      CHECK_THAT(rec.coeff[i][a].estimate, WithinAbs(w.at(x)[rec.alphas[a]], 1e-8));
    for (std::size_t b = 0; b < rec.betas.size(); ++b)
      CHECK_THAT(rec.dcoeff[i][b].estimate, WithinAbs(dw.at(x)[rec.betas[b]], 1e-8));
  }
}

TEST_CASE("truncated Riesz potential of a constant") {
  const GridField one2 = GridField::sample({-2, -2}, {2, 2}, {40, 40}, [](const auto&) { return 1.0; });
  CHECK_THAT(riesz_potential(one2, 1.0, {0, 0}), WithinRel(2 * M_PI, 1e-6));
  CHECK_THAT(riesz_potential(one2, 0.5, {0.3, -0.2}), WithinRel(M_PI, 1e-6));
  const GridField one3 = GridField::sample({-1, -1, -1}, {1, 1, 1}, {10, 10, 10}, [](const auto&) { return 1.0; });
  CHECK_THAT(riesz_potential(one3, 0.5, {0, 0, 0}), WithinRel(4 * M_PI * 0.5, 1e-6));
  CHECK_THROWS(riesz_potential(one2, 1.0, {5, 0}));
}

TEST_CASE("Riesz potential is linear and monotone in u") {
  auto bump = [](const std::vector<double>& x) { return std::exp(-(x[0] * x[0] + x[1] * x[1])); };
  const GridField u = GridField::sample({-2, -2}, {2, 2}, {32, 32}, bump);
  GridField twice = u;
  for (auto& v : twice.data()) v *= 2;
  const double a = riesz_potential(u, 0.7, {0.1, 0.2});
  CHECK_THAT(riesz_potential(twice, 0.7, {0.1, 0.2}), WithinRel(2 * a, 1e-12));
  CHECK(a < 2 * M_PI * 0.7);
  CHECK(riesz_potential(u, 0.35, {0.1, 0.2}) < a);
}

TEST_CASE("maximal function matches a brute-force oracle") {
  std::mt19937_64 rng(27);
  std::uniform_real_distribution<double> d(0, 1);
  GridField u({0, 0}, {1, 1}, {12, 12});
  for (auto& v : u.data()) v = d(rng);
  const std::vector<double> radii{1.0 / 12, 2.5 / 12, 4.0 / 12};
  const GridField m = maximal_function(u, radii);
  const auto oracle = brute_maximal(u, radii);
  for (std::size_t k = 0; k < u.size(); ++k) {
    CHECK_THAT(m.data()[k], WithinAbs(oracle[k], 1e-12));
    CHECK(m.data()[k] >= u.data()[k]);
  }
  GridField neg = u;
  neg.data()[0] = -1;
  CHECK_THROWS(maximal_function(neg, radii));
}

TEST_CASE("continuity of averages") {
  SECTION("x2 dx1 on the unit segment has zero differences") {
    const Cochain x = form_cochain(monomial_one_form(2, 0, P::variable(2, 1)));
    const auto rep = continuity_experiment(x, kUnitX, {0.5, 0.25, 0.125});
    CHECK(rep.all_zero);
    for (const auto& row : rep.rows) CHECK(row.difference < 1e-13);
  }
  SECTION("a quadratic form shrinks at least linearly within the bound") {
    const PolyForm w = monomial_one_form(2, 0, P::variable(2, 1) * P::variable(2, 1));
    const Cochain x = form_cochain(w);
    const std::vector<double> radii{1.0 / 4, 1.0 / 8, 1.0 / 16, 1.0 / 32};
    const ContinuityBound bound = continuity_bound(w, kUnitX, 4, 4, radii.front());
    const auto rep = continuity_experiment(x, kUnitX, radii, {}, bound);
    CHECK_FALSE(rep.all_zero);
    CHECK(rep.within_bound);
    CHECK(rep.monotone);
    CHECK(rep.slope > 0.9);
  }
}

TEST_CASE("Riesz lemma check examples") {
  RationalChain t(2, 1);
  t.add_simplex({{make_rational(-1, 2), Q(0)}, {make_rational(1, 2), make_rational(1, 4)}}, Q(1));
  SamplerOptions opts;
  opts.samples = 64;
  SECTION("u = 0 gives zero on both sides") {
    GridField zero({-2, -2}, {2, 2}, {16, 16});
    const auto rep = riesz_lemma_check(t, zero, 0.5, opts);
    CHECK(rep.lhs == 0.0);
    CHECK(rep.rhs == 0.0);
    CHECK(rep.holds());
  }
  SECTION("doubling u doubles both sides") {
    const GridField u = GridField::sample({-2, -2}, {2, 2}, {16, 16}, [](const auto& x) { return 1 + x[0] * x[0]; });
    GridField twice = u;
    for (auto& v : twice.data()) v *= 2;
    const auto a = riesz_lemma_check(t, u, 0.5, opts), b = riesz_lemma_check(t, twice, 0.5, opts);
    CHECK_THAT(b.lhs, WithinRel(2 * a.lhs, 1e-6));
    CHECK_THAT(b.rhs, WithinRel(2 * a.rhs, 1e-9));
    CHECK(a.holds());
  }
}
