/**
 * @file io.hpp
 * @brief JSON codecs for chains, forms, decompositions and modulus results.
 *
 * Rationals are written as "p/q" strings. Readers also accept JSON numbers,
 * which are converted from their decimal text exactly. Form multi-index keys
 * and cube axes are 1-based in files and 0-based in memory.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/deformation.hpp"
#include "geomint/flatnorm.hpp"
#include "geomint/forms.hpp"
#include "geomint/modulus.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

namespace geomint {

using Json = nlohmann::json;

/// Malformed or inconsistent input (CLI exit code 2).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure (CLI exit code 3).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline Json rational_json(const Rational& r) { return to_string(r); }

inline Rational rational_from_json(const Json& j) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(mpz_class(j.dump()));
    if (j.is_number_float()) {
      if (!std::isfinite(j.get<double>())) throw InputError("non-finite number");
      return parse_rational(j.dump());
    }
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
  throw InputError("expected a rational string or number, got " + j.dump());
}

/// Real exponent with the "inf" sentinel.
inline double exponent_from_json(const Json& j) {
  if (j.is_string() && (j.get<std::string>() == "inf" || j.get<std::string>() == "Infinity"))
    return std::numeric_limits<double>::infinity();
  const double v = rational_from_json(j).get_d();
  if (!(v > 1)) throw InputError("exponent must lie in (1, inf]");
  return v;
}

inline Json exponent_json(double p) {
  if (std::isinf(p)) return "inf";
  return p;
}

inline Point<Rational> point_from_json(const Json& j, int n) {
  if (!j.is_array() || static_cast<int>(j.size()) != n) throw InputError("point must be an array of length " + std::to_string(n));
  Point<Rational> p(n);
  for (int i = 0; i < n; ++i) p[i] = rational_from_json(j[i]);
  return p;
}

inline Json point_json(const Point<Rational>& p) {
  Json a = Json::array();
  for (const auto& c : p) a.push_back(rational_json(c));
  return a;
}

// ---------------------------------------------------------------------------
// Chains
// ---------------------------------------------------------------------------

namespace detail {

template <class S>
Json scalar_json(const S& v) {
  if constexpr (std::is_same_v<S, Rational>)
    return rational_json(v);
  else
    return v;
}

inline int require_int(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_number_integer()) throw InputError(std::string("missing integer field \"") + key + "\"");
  return j[key].get<int>();
}

}  // namespace detail

template <class S>
Json chain_to_json(const Chain<S>& t) {
  const bool exact = std::is_same_v<S, Rational>;
  Json vertices = Json::array(), cells = Json::array();
  std::map<Point<S>, int> index;
  auto vertex = [&](const Point<S>& p) {
    auto [it, fresh] = index.emplace(p, static_cast<int>(index.size()));
    if (fresh) {
      Json a = Json::array();
      for (const auto& c : p) a.push_back(detail::scalar_json(c));
      vertices.push_back(std::move(a));
    }
    return it->second;
  };
  for (const auto& [cell, a] : t.terms()) {
    Json c;
    if (const auto* s = std::get_if<Simplex<S>>(&cell)) {
      c["type"] = "simplex";
      Json v = Json::array();
      for (const auto& p : s->verts) v.push_back(vertex(p));
      c["verts"] = std::move(v);
    } else {
      const auto& q = std::get<CubeCell<S>>(cell);
      c["type"] = "cube";
      Json anchor = Json::array(), axes = Json::array();
      for (const auto& x : q.anchor) anchor.push_back(detail::scalar_json(x));
      for (int ax : q.axes) axes.push_back(ax + 1);
      Json eps = detail::scalar_json(q.eps);
      if (!eps.is_string()) eps = eps.dump();
      c["verts"] = {{"anchor", anchor}, {"axes", axes}, {"eps", eps}};
    }
    c["coef"] = detail::scalar_json(a);
    cells.push_back(std::move(c));
  }
  return {{"n", t.ambient()},     {"m", t.degree()},  {"scalar", exact ? "rational" : "f64"},
          {"vertices", vertices}, {"cells", cells}};
}

/**
 * @brief Parses a chain. Degenerate simplices are rejected. f64 files are
 * read exactly from their decimal text.
 */
inline RationalChain chain_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("chain must be a JSON object");
  const int n = detail::require_int(j, "n"), m = detail::require_int(j, "m");
  if (n < 1 || m < 0 || m > n) throw InputError("chain needs 0 <= m <= n and n >= 1");
  if (j.contains("scalar") && j["scalar"] != "rational" && j["scalar"] != "f64")
    throw InputError("scalar must be \"rational\" or \"f64\"");
  std::vector<Point<Rational>> verts;
  if (j.contains("vertices")) {
    if (!j["vertices"].is_array()) throw InputError("vertices must be an array");
    for (const auto& v : j["vertices"]) verts.push_back(point_from_json(v, n));
  }
  if (!j.contains("cells") || !j["cells"].is_array()) throw InputError("chain needs a cells array");
  RationalChain t(n, m);
  for (const auto& c : j["cells"]) {
    const std::string type = c.value("type", "simplex");
    const Rational coef = c.contains("coef") ? rational_from_json(c["coef"]) : Rational(1);
    if (!c.contains("verts")) throw InputError("cell without verts");
    try {
      if (type == "simplex") {
        std::vector<Point<Rational>> pts;
        for (const auto& idx : c["verts"]) {
          if (!idx.is_number_integer()) throw InputError("simplex verts must be vertex indices");
          const long i = idx.get<long>();
          if (i < 0 || i >= static_cast<long>(verts.size())) throw InputError("vertex index out of range");
          pts.push_back(verts[i]);
        }
        if (static_cast<int>(pts.size()) != m + 1) throw InputError("simplex has the wrong number of vertices");
        t.add_simplex(std::move(pts), coef);
      } else if (type == "cube") {
        const Json& q = c["verts"];
        if (!q.is_object()) throw InputError("cube verts must be {anchor, axes, eps}");
        std::vector<int> axes;
        for (const auto& a : q.at("axes")) axes.push_back(a.get<int>() - 1);
        if (static_cast<int>(axes.size()) != m) throw InputError("cube has the wrong number of axes");
        t.add_cube(point_from_json(q.at("anchor"), n), axes, rational_from_json(q.at("eps")), coef);
      } else {
        throw InputError("unknown cell type \"" + type + "\"");
      }
    } catch (const ChainError& e) {
      throw InputError(e.what());
    } catch (const Json::exception& e) {
      throw InputError(e.what());
    }
  }
  return t;
}

// ---------------------------------------------------------------------------
// Forms
// ---------------------------------------------------------------------------

inline std::string multi_index_key(const MultiIndex& a) {
  std::string s;
  for (std::size_t i = 0; i < a.size(); ++i) s += (i ? "," : "") + std::to_string(a[i] + 1);
  return s;
}

inline MultiIndex multi_index_from_key(const std::string& key) {
  MultiIndex a;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      a.push_back(std::stoi(part) - 1);
    } catch (const std::exception&) {
      throw InputError("bad multi-index key \"" + key + "\"");
    }
    if (a.back() < 0 || (a.size() > 1 && a[a.size() - 2] >= a.back()))
      throw InputError("multi-index key \"" + key + "\" must be positive and strictly increasing");
  }
  return a;
}

inline Json form_to_json(const PolyForm& w) {
  Json coeffs = Json::object();
  for (const auto& [alpha, p] : w.coeffs()) {
    Json terms = Json::array();
    for (const auto& [e, c] : p.terms()) terms.push_back({{"exp", e}, {"coef", rational_json(c)}});
    coeffs[multi_index_key(alpha)] = std::move(terms);
  }
  Json cutoff = nullptr;
  if (w.cutoff()) cutoff = {{"k", rational_json(w.cutoff()->k)}};
  return {{"n", w.ambient()}, {"m", w.degree()}, {"coeffs", coeffs}, {"cutoff", cutoff}};
}

inline PolyForm form_from_json(const Json& j) {
  if (!j.is_object()) throw InputError("form must be a JSON object");
  const int n = detail::require_int(j, "n"), m = detail::require_int(j, "m");
  if (n < 1 || m < 0 || m > n) throw InputError("form needs 0 <= m <= n and n >= 1");
  PolyForm w(n, m);
  try {
    if (j.contains("coeffs")) {
      if (!j["coeffs"].is_object()) throw InputError("coeffs must be an object");
      for (const auto& [key, terms] : j["coeffs"].items()) {
        const MultiIndex alpha = multi_index_from_key(key);
        for (const auto& t : terms) {
          Exponent e = t.at("exp").get<Exponent>();
          if (static_cast<int>(e.size()) != n) throw InputError("exponent length must equal n");
          for (int x : e)
            if (x < 0) throw InputError("negative exponent");
          w.add_monomial(alpha, e, rational_from_json(t.at("coef")));
        }
      }
    }
  } catch (const FormError& e) {
    throw InputError(e.what());
  } catch (const Json::exception& e) {
    throw InputError(e.what());
  }
  if (j.contains("cutoff") && !j["cutoff"].is_null()) {
    const Rational k = rational_from_json(j["cutoff"].at("k"));
    if (k <= 0) throw InputError("cutoff radius must be positive");
    w.set_cutoff(Cutoff{k});
  }
  return w;
}

// ---------------------------------------------------------------------------
// Results
// ---------------------------------------------------------------------------

inline Json decomposition_json(const FlatDecomposition& d, const ChainComplex& k) {
  Json j{{"value", d.value},
         {"exact_value", d.exact_value ? Json(rational_json(*d.exact_value)) : Json(nullptr)},
         {"status", to_string(d.status)},
         {"duality_gap", d.duality_gap},
         {"lp_objective", d.lp_objective},
         {"integral", d.integral},
         {"exact_lp", d.exact_lp},
         {"iterations", d.iterations}};
  if (d.status == LpStatus::Optimal) {
    j["R"] = chain_to_json(to_chain(k, d.R));
    j["S"] = chain_to_json(to_chain(k, d.S));
  }
  return j;
}

inline Json grid_field_json(const GridField& g) {
  return {{"lo", g.lo()}, {"hi", g.hi()}, {"shape", g.shape()}, {"values", g.data()}};
}

inline Json modulus_json(const ModulusResult& r) {
  Json density = Json::array();
  for (const auto& g : r.density) density.push_back(grid_field_json(g));
  return {{"value", r.finite() ? Json(r.value) : Json("inf")},
          {"lower_bound", r.finite() ? Json(r.lower_bound) : Json("inf")},
          {"relative_gap", r.relative_gap},
          {"converged", r.converged},
          {"iterations", r.iterations},
          {"convention", r.finite() ? "finite" : "plus_infinity_empty_admissible"},
          {"activity", r.activity},
          {"multipliers", r.multipliers},
          {"density", density}};
}

inline Json deformation_json(const DeformationResult& d) {
  Json centers = Json::array();
  for (const auto& c : d.centers)
    centers.push_back({{"anchor", c.anchor},
                       {"axes", c.axes},
                       {"center", point_json(c.center)},
                       {"pushed_mass", c.pushed_mass},
                       {"rejected", c.rejected}});
  return {{"eps", rational_json(d.eps)},
          {"P", chain_to_json(d.P)},
          {"R", chain_to_json(d.R)},
          {"S", chain_to_json(d.S)},
          {"rho_R", d.rho_R},
          {"rho_S", d.rho_S},
          {"identity_verified", d.identity_verified},
          {"experimental", d.experimental},
          {"centers", centers}};
}

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

inline Json load_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

/// Pretty-printed with a trailing newline; key order is sorted, so output is deterministic.
inline void save_json(const std::filesystem::path& path, const Json& j) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw InputError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

inline std::vector<RationalChain> family_from_json(const Json& j) {
  const Json& list = j.is_object() && j.contains("chains") ? j["chains"] : j;
  if (!list.is_array()) throw InputError("family must be an array of chains or {\"chains\": [...]}");
  std::vector<RationalChain> out;
  for (const auto& c : list) out.push_back(chain_from_json(c));
  return out;
}

inline Json family_json(const std::vector<RationalChain>& family) {
  Json a = Json::array();
  for (const auto& c : family) a.push_back(chain_to_json(c));
  return {{"chains", a}};
}

}  // namespace geomint
