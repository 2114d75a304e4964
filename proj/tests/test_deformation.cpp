#include <catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace geomint;
using namespace testing_support;

namespace {

/// P must consist of eps-cubes anchored on the eps-grid (or grid vertices when m = 0).
bool on_grid(const RationalChain& p, const Q& eps) {
  for (const auto& [cell, a] : p.terms()) {
    Point<Q> anchor;
    if (const auto* q = std::get_if<CubeCell<Q>>(&cell)) {
      if (q->eps != eps) return false;
      anchor = q->anchor;
    } else {
      const auto& s = std::get<Simplex<Q>>(cell);
      if (s.verts.size() != 1) return false;
      anchor = s.verts[0];
    }
    for (const auto& x : anchor)
      if (Q(x / eps).get_den() != 1) return false;
  }
  return true;
}

void check_identity(const RationalChain& t, const DeformationResult& r) {
  RationalChain rest = t - r.P - r.R;
  if (!r.S.empty()) rest -= boundary(r.S);
  CHECK(is_polyhedral_zero(rest));
  CHECK(r.identity_verified);
  CHECK(on_grid(r.P, r.eps));
  CHECK(r.rho_R >= 0);
  CHECK(r.rho_S >= 0);
}

}  // namespace

TEST_CASE("cubical chains on the grid are left in place") {
  RationalChain t(2, 1);
  t.add_cube({Q(0), Q(0)}, {0}, make_rational(1, 2), Q(2));
  t.add_cube({make_rational(1, 2), Q(0)}, {1}, make_rational(1, 2), Q(-1));
  const auto r = deform(t, make_rational(1, 2), 7);
  CHECK(equivalent(r.P, t));
  CHECK(is_polyhedral_zero(r.R));
  CHECK(is_polyhedral_zero(r.S));
  CHECK(r.rho_R == 0);
  CHECK(r.rho_S == 0);
}

TEST_CASE("diagonal segment at eps 1") {
  const RationalChain t = segment({Q(0), Q(0)}, {Q(1), Q(1)});
  const auto r = deform(t, Q(1), 7);
  check_identity(t, r);
  CHECK(is_polyhedral_zero(r.R));
  CHECK(equivalent(boundary(r.P), boundary(t)));
  CHECK(mass(r.P).value == 2.0);
}

TEST_CASE("point chains move to grid vertices with total weight kept") {
  RationalChain t(2, 0);
  t.add_simplex({{make_rational(1, 3), make_rational(2, 7)}}, Q(3));
  t.add_simplex({{make_rational(-5, 4), make_rational(1, 2)}}, Q(-1));
  const auto r = deform(t, make_rational(1, 2), 3);
  check_identity(t, r);
  Q total = 0;
  for (const auto& [cell, a] : r.P.terms()) total += a;
  CHECK(total == Q(2));
}

TEST_CASE("deformation identity holds exactly on random chains") {
  std::mt19937_64 rng(51);
  for (int trial = 0; trial < 24; ++trial) {
    const int n = 2 + trial % 2, m = trial % n;
    const RationalChain t = random_chain(rng, n, m, 2, -1, 1);
    for (const Q& eps : {Q(1), make_rational(1, 2)}) {
      const auto r = deform(t, eps, 100 + trial);
      check_identity(t, r);
      CHECK_FALSE(r.experimental);
    }
  }
}

TEST_CASE("deformation is deterministic for a seed") {
  std::mt19937_64 rng(52);
  const RationalChain t = random_chain(rng, 3, 2, 2, -1, 1);
  const auto a = deform(t, make_rational(1, 2), 9), b = deform(t, make_rational(1, 2), 9);
  CHECK(a.P == b.P);
  CHECK(a.R == b.R);
  CHECK(a.S == b.S);
  CHECK(a.rho_R == b.rho_R);
  CHECK(a.rho_S == b.rho_S);
}

TEST_CASE("scaling chain and grid together keeps the ratios") {
  std::mt19937_64 rng(53);
  for (int trial = 0; trial < 6; ++trial) {
    const int n = 2 + trial % 2, m = 1;
    const RationalChain t = random_chain(rng, n, m, 2, -1, 1);
    const Q lambda = 2;
    RationalChain scaled(n, m);
    const RationalChain st = simplicial(t);
    for (const auto& [cell, a] : st.terms()) {
      auto verts = std::get<Simplex<Q>>(cell).verts;
      for (auto& v : verts)
        for (auto& x : v) x *= lambda;
      scaled.add_simplex(verts, a);
    }
    const auto a = deform(t, make_rational(1, 2), 5), b = deform(scaled, make_rational(1, 2) * lambda, 5);
    CHECK(b.rho_R == Catch::Approx(a.rho_R).epsilon(1e-9));
    CHECK(b.rho_S == Catch::Approx(a.rho_S).epsilon(1e-9));
  }
}

TEST_CASE("deformation input errors") {
  const RationalChain t = segment({Q(0), Q(0)}, {Q(1), Q(1)});
  CHECK_THROWS_AS(deform(t, Q(0), 1), std::invalid_argument);
  RationalChain top(2, 2);
  top.add_simplex({{Q(0), Q(0)}, {Q(1), Q(0)}, {Q(0), Q(1)}}, Q(1));
  CHECK_THROWS_AS(deform(top, Q(1), 1), std::invalid_argument);
}

TEST_CASE("empirical constants table") {
  std::mt19937_64 rng(54);
  std::vector<RationalChain> corpus;
  for (int i = 0; i < 4; ++i) corpus.push_back(random_chain(rng, 2, 1, 2, -1, 1));
  const auto rows = empirical_constants(corpus, {Q(1), make_rational(1, 2)}, 7);
  REQUIRE(rows.size() == 2);
  for (const auto& row : rows) {
    CHECK(row.runs == 4);
    CHECK(row.all_verified);
    CHECK(row.max_rho_R >= row.median_rho_R);
    CHECK(row.max_rho_S >= row.median_rho_S);
  }
}
