#include <catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace geomint;
using namespace testing_support;
using Catch::Matchers::WithinAbs;

namespace {

std::vector<Q> qv(std::initializer_list<long> v) {
  std::vector<Q> out;
  for (long x : v) out.emplace_back(x);
  return out;
}

RationalChain square_boundary(const Q& side) {
  RationalChain t(2, 1);
  t.add_cube({Q(0), Q(0)}, {0}, side, Q(1));
  t.add_cube({side, Q(0)}, {1}, side, Q(1));
  t.add_cube({Q(0), side}, {0}, side, Q(-1));
  t.add_cube({Q(0), Q(0)}, {1}, side, Q(-1));
  return t;
}

/// Random integer 1-chain on the grid edges of a complex.
ChainVector random_grid_chain(std::mt19937_64& rng, const ChainComplex& k, int edges) {
  std::uniform_int_distribution<int> pick(0, static_cast<int>(k.count(1)) - 1), coef(-2, 2);
  ChainVector v{1, {}};
  for (int i = 0; i < edges; ++i) v.add(pick(rng), Q(coef(rng)));
  return v;
}

Q exact_mass(const ChainComplex& k, const ChainVector& v) {
  Q s = 0;
  for (const auto& [id, a] : v.coeffs) s += abs(a) * *k.exact_cell_mass(v.dim, id);
  return s;
}

/// Oracle: min over integer S in {-2..2}^faces of M(T - dS) + M(S).
Q brute_force_flat(const ChainComplex& k, const ChainVector& t) {
  const int ns = static_cast<int>(k.count(2));
  std::vector<int> s(ns, -2);
  std::optional<Q> best;
  while (true) {
    ChainVector sv{2, {}};
    for (int j = 0; j < ns; ++j) sv.add(j, Q(s[j]));
    ChainVector r = t;
    if (!sv.empty())
      for (const auto& [i, a] : apply_boundary(k, sv).coeffs) r.add(i, -a);
    const Q cost = exact_mass(k, r) + exact_mass(k, sv);
    if (!best || cost < *best) best = cost;
    int j = 0;
    while (j < ns && ++s[j] > 2) s[j++] = -2;
    if (j == ns) break;
  }
  return *best;
}

}  // namespace

TEST_CASE("cubical complex cell counts") {
  const ChainComplex unit = build_cubical_complex(qv({0, 0}), qv({1, 1}), Q(1), 2);
  CHECK(unit.count(0) == 4);
  CHECK(unit.count(1) == 4);
  CHECK(unit.count(2) == 1);
  const ChainComplex two = build_cubical_complex(qv({0, 0}), qv({2, 1}), Q(1), 2);
  CHECK(two.count(0) == 6);
  CHECK(two.count(1) == 7);
  CHECK(two.count(2) == 2);
  const ChainComplex cube = build_cubical_complex(qv({0, 0, 0}), qv({1, 1, 1}), make_rational(1, 2), 3);
  CHECK(cube.count(0) == 27);
  CHECK(cube.count(1) == 54);
  CHECK(cube.count(2) == 36);
  CHECK(cube.count(3) == 8);
  CHECK(cube.cubical());
}

TEST_CASE("boundary matrices compose to zero") {
  const ChainComplex k = build_cubical_complex(qv({0, 0, 0}), qv({1, 1, 1}), make_rational(1, 3), 3);
  CHECK(k.boundary_matrix(1).times(k.boundary_matrix(2)).empty());
  CHECK(k.boundary_matrix(2).times(k.boundary_matrix(3)).empty());
  for (const auto& col : k.boundary_matrix(3).cols) CHECK(col.size() == 6);
}

TEST_CASE("simplicial complexes close under faces") {
  const Simplex<Q> tri{{{Q(0), Q(0)}, {Q(1), Q(0)}, {Q(0), Q(1)}}};
  const ChainComplex k = build_simplicial_complex(2, {tri});
  CHECK(k.count(0) == 3);
  CHECK(k.count(1) == 3);
  CHECK(k.count(2) == 1);
  CHECK(k.boundary_matrix(1).times(k.boundary_matrix(2)).empty());
}

TEST_CASE("embedding examples") {
  const ChainComplex k = build_cubical_complex(qv({-1, -1}), qv({2, 2}), make_rational(1, 2), 2);
  SECTION("coarse grid edges split into fine edges") {
    const ChainVector v = embed_chain(square_boundary(Q(1)), k);
    CHECK(v.coeffs.size() == 8);
    for (const auto& [id, a] : v.coeffs) CHECK(abs(a) == 1);
    CHECK(equivalent(to_chain(k, v), square_boundary(Q(1))));
  }
  SECTION("axis-parallel simplicial segments are accepted") {
    const ChainVector v = embed_chain(segment({Q(0), Q(0)}, {Q(0), Q(1)}), k);
    CHECK(v.coeffs.size() == 2);
  }
  SECTION("diagonal segments are not representable") {
    try {
      embed_chain(segment({Q(0), Q(0)}, {Q(1), Q(1)}), k);
      FAIL("expected NOT_REPRESENTABLE");
    } catch (const NotRepresentable& e) {
      CHECK(e.offending.size() == 1);
      CHECK(std::string(e.what()).find("NOT_REPRESENTABLE") != std::string::npos);
    }
  }
  SECTION("off-grid segments are not representable") {
    CHECK_THROWS_AS(embed_chain(segment({make_rational(1, 3), Q(0)}, {Q(1), Q(0)}), k), NotRepresentable);
  }
  SECTION("cells outside the box are not representable") {
    CHECK_THROWS_AS(embed_chain(square_boundary(Q(4)), k), NotRepresentable);
  }
}

TEST_CASE("lp_solve examples") {
  SECTION("optimal") {
    LpProblem<Q> lp;
    lp.num_vars = 2;
    lp.c = {Q(1), Q(2)};
    lp.rows = {{{0, Q(1)}, {1, Q(1)}}};
    lp.b = {Q(3)};
    const auto r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == Q(3));
    CHECK(r.x[0] == Q(3));
    CHECK(r.x[1] == Q(0));
    CHECK(r.dual_objective == r.objective);
  }
  SECTION("infeasible") {
    LpProblem<double> lp;
    lp.num_vars = 1;
    lp.c = {1.0};
    lp.rows = {{{0, 1.0}}};
    lp.b = {-1.0};
    CHECK(lp_solve(lp).status == LpStatus::Infeasible);
  }
  SECTION("unbounded") {
    LpProblem<double> lp;
    lp.num_vars = 2;
    lp.c = {-1.0, 0.0};
    lp.rows = {{{0, 1.0}, {1, -1.0}}};
    lp.b = {0.0};
    CHECK(lp_solve(lp).status == LpStatus::Unbounded);
  }
  SECTION("free variables and upper bounds") {
    LpProblem<Q> lp;
    lp.num_vars = 2;
    lp.c = {Q(1), Q(-1)};
    lp.rows = {{{0, Q(1)}, {1, Q(1)}}};
    lp.b = {Q(0)};
    lp.lower = {std::nullopt, Q(0)};
    lp.upper = {std::nullopt, Q(5)};
    const auto r = lp_solve(lp);
    REQUIRE(r.status == LpStatus::Optimal);
    CHECK(r.objective == Q(-10));
  }
}

TEST_CASE("flat norm of square boundaries") {
  SECTION("side 1: filling is cheaper") {
    const RationalChain t = square_boundary(Q(1));
    auto [lo, hi] = auto_box(t, make_rational(1, 4));
    const ChainComplex k = build_cubical_complex(lo, hi, make_rational(1, 4), 2);
    const auto d = flat_norm(embed_chain(t, k), k);
    REQUIRE(d.status == LpStatus::Optimal);
    REQUIRE(d.exact_value.has_value());
    CHECK(*d.exact_value == Q(1));
    CHECK(d.R.empty());
    CHECK(d.integral);
  }
  SECTION("side 5: keeping the boundary is cheaper") {
    const RationalChain t = square_boundary(Q(5));
    auto [lo, hi] = auto_box(t, Q(1));
    const ChainComplex k = build_cubical_complex(lo, hi, Q(1), 2);
    const auto d = flat_norm(embed_chain(t, k), k);
    CHECK(*d.exact_value == Q(20));
    CHECK(d.S.empty());
  }
  SECTION("side 4 is a tie at 16") {
    const RationalChain t = square_boundary(Q(4));
    auto [lo, hi] = auto_box(t, Q(1));
    const ChainComplex k = build_cubical_complex(lo, hi, Q(1), 2);
    CHECK(*flat_norm(embed_chain(t, k), k, {true}).exact_value == Q(16));
  }
}

TEST_CASE("flat decomposition is exact") {
  std::mt19937_64 rng(31);
  const ChainComplex k = build_cubical_complex(qv({0, 0}), qv({2, 2}), make_rational(1, 2), 2);
  for (int trial = 0; trial < 20; ++trial) {
    const ChainVector t = random_grid_chain(rng, k, 6);
    const auto d = flat_norm(t, k);
    REQUIRE(d.status == LpStatus::Optimal);
    ChainVector sum = d.R;
    if (!d.S.empty())
      for (const auto& [i, a] : apply_boundary(k, d.S).coeffs) sum.add(i, a);
    CHECK(sum == t);
    CHECK(*d.exact_value == exact_mass(k, d.R) + exact_mass(k, d.S));
    CHECK(d.duality_gap <= 1e-9);
    CHECK_THAT(d.value, WithinAbs(d.lp_objective, 1e-9));
  }
}

TEST_CASE("flat norm matches a brute-force integer search") {
  std::mt19937_64 rng(32);
  const ChainComplex k = build_cubical_complex(qv({0, 0}), qv({1, 1}), make_rational(1, 2), 2);
  for (int trial = 0; trial < 15; ++trial) {
    const ChainVector t = random_grid_chain(rng, k, 4);
    const Q oracle = brute_force_flat(k, t);
    CHECK(*flat_norm(t, k).exact_value == oracle);
    CHECK(*flat_norm(t, k, {true}).exact_value == oracle);
  }
}

TEST_CASE("flat norm properties") {
  std::mt19937_64 rng(33);
  const ChainComplex k = build_cubical_complex(qv({0, 0}), qv({2, 2}), make_rational(1, 2), 2);
  for (int trial = 0; trial < 20; ++trial) {
    const ChainVector a = random_grid_chain(rng, k, 5), b = random_grid_chain(rng, k, 5);
    ChainVector ab = a;
    for (const auto& [i, v] : b.coeffs) ab.add(i, v);
    const Q fa = *flat_norm(a, k).exact_value, fb = *flat_norm(b, k).exact_value;
    CHECK(fa <= exact_mass(k, a));
    CHECK(*flat_norm(ab, k).exact_value <= fa + fb);
    ChainVector neg{1, {}};
    for (const auto& [i, v] : a.coeffs) neg.add(i, -3 * v);
    CHECK(*flat_norm(neg, k).exact_value == 3 * fa);
  }
}

TEST_CASE("refining the grid never increases the flat norm") {
  std::mt19937_64 rng(34);
  const ChainComplex coarse = build_cubical_complex(qv({0, 0}), qv({2, 2}), make_rational(1, 2), 2);
  const ChainComplex fine = build_cubical_complex(qv({0, 0}), qv({2, 2}), make_rational(1, 4), 2);
  for (int trial = 0; trial < 10; ++trial) {
    const ChainVector t = random_grid_chain(rng, coarse, 5);
    const RationalChain chain = to_chain(coarse, t);
    const Q fc = *flat_norm(t, coarse).exact_value;
    const Q ff = *flat_norm(embed_chain(chain, fine), fine).exact_value;
    CHECK(ff <= fc);
  }
}

TEST_CASE("flat norm of a boundary is at most the filling mass") {
  std::mt19937_64 rng(35);
  const ChainComplex k = build_cubical_complex(qv({0, 0, 0}), qv({1, 1, 1}), make_rational(1, 2), 3);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(k.count(2)) - 1);
  for (int trial = 0; trial < 5; ++trial) {
    ChainVector s{2, {}};
    s.add(pick(rng), Q(1));
    s.add(pick(rng), Q(-1));
    if (s.empty()) continue;
    const ChainVector t = apply_boundary(k, s);
    CHECK(*flat_norm(t, k).exact_value <= exact_mass(k, s));
  }
}

TEST_CASE("flat norm is deterministic") {
  std::mt19937_64 rng(36);
  const ChainComplex k = build_cubical_complex(qv({0, 0}), qv({2, 2}), make_rational(1, 2), 2);
  const ChainVector t = random_grid_chain(rng, k, 8);
  const auto a = flat_norm(t, k), b = flat_norm(t, k);
  CHECK(a.R == b.R);
  CHECK(a.S == b.S);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("flat norm rejects complexes without top cells") {
  const ChainComplex k = build_cubical_complex(qv({0, 0}), qv({1, 1}), Q(1), 1);
  ChainVector t{1, {}};
  t.add(0, Q(1));
  CHECK_THROWS_AS(flat_norm(t, k), std::invalid_argument);
  CHECK(*flat_norm(ChainVector{1, {}}, build_cubical_complex(qv({0, 0}), qv({1, 1}), Q(1), 2)).exact_value == 0);
}
