#include <catch_amalgamated.hpp>

#include "test_support.hpp"

#include <cmath>

using namespace geomint;
using namespace testing_support;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RationalChain horizontal(const Q& y, const Q& coef = Q(1)) { return segment({Q(0), y}, {Q(1), y}, coef); }

/// Axis-aligned rectangle [x0,x1] x [y0,y1] as a 2-chain (two triangles).
RationalChain rect(const Q& x0, const Q& y0, const Q& x1, const Q& y1) {
  RationalChain t(2, 2);
  t.add_simplex({{x0, y0}, {x1, y0}, {x1, y1}}, Q(1));
  t.add_simplex({{x0, y0}, {x1, y1}, {x0, y1}}, Q(1));
  return t;
}

/// Oracle measure of a grid-aligned rectangle on an N x N unit grid: h^2 on covered cells.
std::vector<double> rect_measure(int cells, int i0, int j0, int i1, int j1) {
  std::vector<double> mu(cells * cells, 0.0);
  const double h = 1.0 / cells;
  for (int j = j0; j < j1; ++j)
    for (int i = i0; i < i1; ++i) mu[j * cells + i] = h * h;
  return mu;
}

/// Oracle measure of the boundary of a grid-aligned square: each edge piece split between its two cells.
std::vector<double> square_boundary_measure(int cells, int a, int b) {
  std::vector<double> mu(cells * cells, 0.0);
  const double h = 1.0 / cells;
  for (int k = a; k < b; ++k) {
    for (int row : {a - 1, a, b - 1, b}) mu[row * cells + k] += h / 2;  // horizontal edges at y = a, b
    for (int col : {a - 1, a, b - 1, b}) mu[k * cells + col] += h / 2;  // vertical edges at x = a, b
  }
  return mu;
}

/// Closed form of min sum w f^p subject to sum mu f >= 1.
double single_constraint_modulus(const std::vector<double>& mu, double w, double p) {
  const double pc = p / (p - 1);
  double s = 0;
  for (double m : mu) s += std::pow(m / w, pc) * w;
  return std::pow(s, 1 - p);
}

/// Oracle for two constraints: maximize the concave dual over (l1, l2) >= 0 by nested golden sections.
double two_constraint_modulus(const std::vector<double>& mu1, const std::vector<double>& mu2, double w, double p) {
  auto dual = [&](double l1, double l2) {
    double g = l1 + l2;
    for (std::size_t v = 0; v < mu1.size(); ++v) {
      const double s = l1 * mu1[v] + l2 * mu2[v];
      if (s <= 0) continue;
      const double f = std::pow(s / (p * w), 1 / (p - 1));
      g += -(p - 1) * w * std::pow(f, p);
    }
    return g;
  };
  auto golden = [](auto&& fn, double lo, double hi) {
    const double r = (std::sqrt(5.0) - 1) / 2;
    double a = lo, b = hi;
    for (int it = 0; it < 90; ++it) {
      const double c = b - r * (b - a), d = a + r * (b - a);
      if (fn(c) > fn(d))
        b = d;
      else
        a = c;
    }
    return 0.5 * (a + b);
  };
  double hi = 1;
  while (dual(hi, 0) > dual(hi / 2, 0) || dual(0, hi) > dual(0, hi / 2)) hi *= 2;
  hi *= 4;
  auto inner = [&](double l1) { return dual(l1, golden([&](double l2) { return dual(l1, l2); }, 0, hi)); };
  const double l1 = golden(inner, 0, hi);
  return inner(l1);
}

}  // namespace

TEST_CASE("modulus of a single segment is its Hölder closed form") {
  const ModulusGrid grid = ModulusGrid::unit_cube(2, 16);
  for (double p : {1.5, 2.0, 4.0}) {
    const auto r = p_modulus({horizontal(make_rational(5, 32))}, grid, p);
    CHECK(r.converged);
    CHECK_THAT(r.value, WithinRel(1.0 / 16, 1e-8));
    CHECK(r.lower_bound <= r.value * (1 + 1e-12));
    CHECK(r.relative_gap <= 1e-9);
  }
}

TEST_CASE("family of spanning segments has modulus 1") {
  std::vector<RationalChain> family;
  for (int j = 0; j <= 64; ++j) family.push_back(horizontal(make_rational(j, 64)));
  const auto r = p_modulus(family, ModulusGrid::unit_cube(2, 128), 2.0);
  CHECK(r.converged);
  CHECK_THAT(r.value, WithinAbs(1.0, 1e-6));
  for (double a : r.activity) CHECK(a >= 1 - 1e-9);

  // on a 16 x 16 grid neighbouring segments share cells
  std::vector<RationalChain> coarse;
  for (int j = 0; j <= 16; ++j) coarse.push_back(horizontal(make_rational(j, 16)));
  const auto c = p_modulus(coarse, ModulusGrid::unit_cube(2, 16), 2.0);
  CHECK(c.converged);
  CHECK_THAT(c.value, WithinAbs(1.0, 1e-6));
}

TEST_CASE("modulus conventions and errors") {
  const ModulusGrid grid = ModulusGrid::unit_cube(2, 8);
  const auto inf = p_modulus({RationalChain(2, 1)}, grid, 2.0);
  CHECK(std::isinf(inf.value));
  CHECK_FALSE(inf.finite());
  const auto outside = p_modulus({segment({Q(2), Q(2)}, {Q(3), Q(2)})}, grid, 2.0);
  CHECK(std::isinf(outside.value));
  CHECK_THROWS_AS(p_modulus({}, grid, 2.0), std::invalid_argument);
  CHECK_THROWS_AS(p_modulus({horizontal(Q(0))}, grid, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(p_modulus({horizontal(Q(0))}, grid, INFINITY), std::invalid_argument);
}

TEST_CASE("modulus family properties") {
  const ModulusGrid grid = ModulusGrid::unit_cube(2, 16);
  std::mt19937_64 rng(41);
  std::vector<RationalChain> family;
  for (int i = 0; i < 4; ++i) family.push_back(random_chain(rng, 2, 1, 2, 0, 1));
  const double p = 2.5;
  const auto base = p_modulus(family, grid, p);
  REQUIRE(base.converged);

  SECTION("duplicates do not change the modulus") {
    auto doubled = family;
    doubled.insert(doubled.end(), family.begin(), family.end());
    CHECK_THAT(p_modulus(doubled, grid, p).value, WithinRel(base.value, 1e-8));
  }
  SECTION("adding members never decreases the modulus") {
    auto more = family;
    more.push_back(random_chain(rng, 2, 1, 2, 0, 1));
    CHECK(p_modulus(more, grid, p).value >= base.value * (1 - 1e-9));
    auto fewer = family;
    fewer.pop_back();
    CHECK(p_modulus(fewer, grid, p).value <= base.value * (1 + 1e-9));
  }
  SECTION("doubling every chain scales by 2^-p") {
    auto twice = family;
    for (auto& t : twice) t *= Q(2);
    CHECK_THAT(p_modulus(twice, grid, p).value, WithinRel(std::pow(2.0, -p) * base.value, 1e-8));
  }
  SECTION("the reported density is admissible") {
    for (double a : base.activity) CHECK(a >= 1 - 1e-9);
    const auto mu = cell_measure(family[0], grid);
    double act = 0;
    for (const auto& [c, m] : mu) act += m * base.density[0].data()[c];
    CHECK(act >= 1 - 1e-9);
  }
  SECTION("repeat runs and threads agree exactly") {
    ModulusOptions two;
    two.threads = 2;
    CHECK(p_modulus(family, grid, p).value == base.value);
    CHECK(p_modulus(family, grid, p, two).value == base.value);
  }
  SECTION("translated families stay positive") {
    auto moved = family;
    for (auto& t : moved) t = translate(t, Point<Q>{make_rational(1, 8), make_rational(-1, 16)});
    CHECK(p_modulus(moved, grid, p).value > 0);
  }
}

TEST_CASE("cell measures split shared faces equally") {
  const ModulusGrid grid = ModulusGrid::unit_cube(2, 4);
  const auto mu = cell_measure(horizontal(make_rational(1, 2)), grid);
  CHECK(mu.size() == 8);
  for (const auto& [c, m] : mu) CHECK_THAT(m, WithinAbs(0.125, 1e-15));
  const auto inner = cell_measure(horizontal(make_rational(3, 8)), grid);
  CHECK(inner.size() == 4);
  const auto diag = cell_measure(segment({Q(0), Q(0)}, {Q(1), Q(1)}), grid);
  double total = 0;
  for (const auto& [c, m] : diag) total += m;
  CHECK_THAT(total, WithinAbs(std::sqrt(2.0), 1e-12));
}

TEST_CASE("capacity of square and L-shape fillings matches a dual-ascent oracle") {
  for (int cells : {32, 64}) {
    const ModulusGrid grid = ModulusGrid::unit_cube(2, cells);
    const Q a = make_rational(1, 4), mid = make_rational(1, 2), b = make_rational(3, 4);
    const RationalChain square = rect(a, a, b, b);
    RationalChain ell = rect(a, a, b, mid);
    ell += rect(a, mid, mid, b);
    const std::vector<RationalChain> cycles{boundary(square), boundary(ell)};

    const int ia = cells / 4, im = cells / 2, ib = 3 * cells / 4;
    const auto mu_sq = rect_measure(cells, ia, ia, ib, ib);
    auto mu_ell = rect_measure(cells, ia, ia, ib, im);
    const auto upper = rect_measure(cells, ia, im, im, ib);
    for (std::size_t v = 0; v < mu_ell.size(); ++v) mu_ell[v] += upper[v];
    const double w = 1.0 / (cells * cells);

    for (double p : {2.0, 3.0}) {
      const auto r = capacity_lower_bound(cycles, {square, ell}, grid, p);
      REQUIRE(r.converged);
      CHECK_THAT(r.value, WithinRel(two_constraint_modulus(mu_sq, mu_ell, w, p), 1e-6));
    }
  }
  CHECK_THROWS_AS(capacity_lower_bound({unit_square_boundary()}, {rect(Q(0), Q(0), Q(1), Q(2))},
                                       ModulusGrid::unit_cube(2, 8), 2.0),
                  std::invalid_argument);
}

TEST_CASE("qp capacity of the two trivial decompositions is separable") {
  for (int cells : {32, 64}) {
    const ModulusGrid grid = ModulusGrid::unit_cube(2, cells);
    const Q a = make_rational(1, 4), b = make_rational(3, 4);
    const RationalChain square = rect(a, a, b, b);
    const RationalChain t = boundary(square);
    const double q = 2, p = 3;
    const auto r =
        qp_capacity_lower_bound({t}, {{t, RationalChain(2, 2)}, {RationalChain(2, 1), square}}, grid, q, p);
    REQUIRE(r.converged);
    const double w = 1.0 / (cells * cells);
    const double expect = single_constraint_modulus(square_boundary_measure(cells, cells / 4, 3 * cells / 4), w, q) +
                          single_constraint_modulus(rect_measure(cells, cells / 4, cells / 4, 3 * cells / 4, 3 * cells / 4), w, p);
    CHECK_THAT(r.value, WithinRel(expect, 1e-6));
    REQUIRE(r.density.size() == 2);
  }
  const RationalChain t = unit_square_boundary();
  CHECK_THROWS_AS(qp_capacity_lower_bound({t}, {{RationalChain(2, 1), RationalChain(2, 2)}},
                                          ModulusGrid::unit_cube(2, 8), 2, 2),
                  std::invalid_argument);
}
