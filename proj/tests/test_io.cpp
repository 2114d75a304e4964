#include <catch_amalgamated.hpp>

#include "test_support.hpp"

#include <filesystem>

using namespace geomint;
using namespace testing_support;

namespace {

const std::filesystem::path kSamples = GEOMINT_SAMPLES_DIR;

PolyForm dx(int n, int axis, const Q& c = Q(1)) {
  PolyForm w(n, 1);
  w.add({axis}, Polynomial<Q>::constant(n, c));
  return w;
}

RationalChain grid_path(std::mt19937_64& rng, int steps, const Q& eps) {
  RationalChain t(2, 1);
  std::uniform_int_distribution<int> dir(0, 3), coef(-2, 2);
  Point<Q> at{Q(0), Q(0)};
  for (int i = 0; i < steps; ++i) {
    const int d = dir(rng), axis = d % 2;
    Point<Q> anchor = at;
    if (d >= 2) anchor[axis] -= eps;
    const int a = coef(rng);
    if (a != 0) t.add_cube(anchor, {axis}, eps, Q(a));
    at[axis] += d >= 2 ? -eps : eps;
  }
  return t;
}

}  // namespace

TEST_CASE("rational and exponent codecs") {
  CHECK(rational_from_json("3/6") == make_rational(1, 2));
  CHECK(rational_from_json(Json::parse("0.125")) == make_rational(1, 8));
  CHECK(rational_from_json(Json(7)) == Q(7));
  CHECK(rational_json(make_rational(-4, 6)) == "-2/3");
  CHECK_THROWS_AS(rational_from_json("1/0"), InputError);
  CHECK_THROWS_AS(rational_from_json("abc"), InputError);
  CHECK(std::isinf(exponent_from_json("inf")));
  CHECK(exponent_json(HUGE_VAL) == "inf");
  CHECK(exponent_from_json(exponent_json(2.5)) == 2.5);
}

TEST_CASE("chain codec round trips") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 2 + trial % 3, m = trial % n;
    RationalChain t = random_chain(rng, n, m, 3);
    if (m == 1) t.add_cube(random_point(rng, n), MultiIndex{0}, make_rational(1, 4), Q(-2));
    const Json j = chain_to_json(t);
    CHECK(j["n"] == n);
    CHECK(j["m"] == m);
    CHECK(j["scalar"] == "rational");
    CHECK(chain_from_json(j) == t);
    CHECK(chain_from_json(Json::parse(j.dump())) == t);
  }
}

TEST_CASE("chain codec rejects malformed input") {
  const Json good = chain_to_json(unit_square_boundary());
  Json bad = good;
  bad["cells"][0]["verts"] = {0, 0};
  CHECK_THROWS_AS(chain_from_json(bad), InputError);
  bad = good;
  bad["cells"][0]["verts"] = {0, 99};
  CHECK_THROWS_AS(chain_from_json(bad), InputError);
  bad = good;
  bad.erase("m");
  CHECK_THROWS_AS(chain_from_json(bad), InputError);
  bad = good;
  bad["vertices"][0] = {"1/2"};
  CHECK_THROWS_AS(chain_from_json(bad), InputError);
}

TEST_CASE("form codec round trips") {
  std::mt19937_64 rng(62);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 1 + trial % 4, m = trial % (n + 1);
    PolyForm w = random_form(rng, n, m, 3);
    if (trial % 5 == 0) w = apply_cutoff(w, make_rational(3, 2));
    CHECK(form_from_json(Json::parse(form_to_json(w).dump())) == w);
  }
  CHECK(multi_index_key({0, 2}) == "1,3");
  CHECK(multi_index_from_key("1,3") == MultiIndex{0, 2});
  CHECK_THROWS_AS(multi_index_from_key("3,1"), InputError);
}

TEST_CASE("family and config codecs") {
  const std::vector<RationalChain> family{unit_square_boundary(), unit_square_boundary(Q(2))};
  const auto back = family_from_json(Json::parse(family_json(family).dump()));
  REQUIRE(back.size() == 2);
  CHECK(back[1] == family[1]);

  const ExperimentConfig c = load_config(kSamples / "configs" / "flatnorm.json");
  CHECK(c.kind == "flatnorm");
  CHECK(*c.eps == make_rational(1, 4));
  CHECK(config_from_json(config_to_json(c)) == c);
  CHECK_THROWS_AS(config_from_json(Json{{"kind", "flatnorm"}, {"bogus", 1}}), InputError);
  CHECK_THROWS_AS(config_from_json(Json{{"kind", "nope"}}), InputError);
}

TEST_CASE("flat cochain inequality examples") {
  std::mt19937_64 rng(63);
  const Q eps = make_rational(1, 4);
  std::vector<RationalChain> family;
  for (int i = 0; i < 12; ++i) {
    RationalChain t = grid_path(rng, 6, eps);
    if (!t.empty()) family.push_back(std::move(t));
  }
  SECTION("dx1 satisfies it with flat value at most mass") {
    const Report rep = flat_cochain_check(dx(2, 0), eps, family);
    CHECK(rep.all_pass());
  }
  SECTION("square boundary has zero cochain value") {
    RationalChain sq(2, 1);
    sq.add_cube({Q(0), Q(0)}, {0}, Q(1), Q(1));
    sq.add_cube({Q(1), Q(0)}, {1}, Q(1), Q(1));
    sq.add_cube({Q(0), Q(1)}, {0}, Q(1), Q(-1));
    sq.add_cube({Q(0), Q(0)}, {1}, Q(1), Q(-1));
    const Report rep = flat_cochain_check(dx(2, 0), eps, {sq});
    CHECK(rep.all_pass());
    CHECK(rep.tables[0].rows[0][1] == "0");
  }
  SECTION("halving the form widens every margin") {
    const Report full = flat_cochain_check(dx(2, 1), eps, family);
    const Report half = flat_cochain_check(dx(2, 1, make_rational(1, 2)), eps, family);
    REQUIRE(full.tables[0].rows.size() == half.tables[0].rows.size());
    for (std::size_t i = 0; i < full.tables[0].rows.size(); ++i)
      CHECK(std::stod(half.tables[0].rows[i][4]) >= std::stod(full.tables[0].rows[i][4]));
  }
  SECTION("forms with comass above one are not certified") {
    const Report rep = flat_cochain_check(dx(2, 0, Q(2)), eps, family);
    CHECK_FALSE(rep.all_pass());
  }
}

TEST_CASE("sample experiments pass and are deterministic") {
  for (const char* name : {"stokes.json", "flatnorm.json"}) {
    ExperimentConfig c = load_config(kSamples / "configs" / name);
    const Report a = run(c), b = run(c);
    CHECK(a.all_pass());
    CHECK(report_json(a).dump() == report_json(b).dump());
    CHECK(a.inputs_digest.size() == 16);
    c.out_json = "elsewhere.json";
    CHECK(run(c).inputs_digest == a.inputs_digest);
  }
}

TEST_CASE("report serialization") {
  Report r;
  r.kind = "demo";
  r.verdict("v", true, 0.5, 1.0);
  r.tables.push_back({"t", {"a", "b"}, {{"1", "x,y"}}});
  const Json j = report_json(r);
  CHECK(j["kind"] == "demo");
  CHECK(j["verdicts"][0]["pass"] == true);
  CHECK_FALSE(j.contains("timestamp"));
  CHECK(table_csv(r.tables[0]) == "a,b\n1,\"x,y\"\n");
  CHECK(format_number(0.1) == "0.1");
  CHECK(fnv1a_hex("") == "cbf29ce484222325");
}
