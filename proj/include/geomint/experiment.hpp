/**
 * @file experiment.hpp
 * @brief Experiment configs, reports (JSON, CSV, SVG) and the run dispatcher.
 *
 * Config layout:
 *
 *     {"kind": "stokes" | "roundtrip" | "continuity" | "flatnorm" | "modulus"
 *              | "deform" | "rieszcheck" | "flatcochain",
 *      "chain": ref, "form": ref, "family": ref, "u": ref,
 *      "cochain": form-ref | {"average": {"of": ref, "r": str, "seed": int, "samples": int}},
 *      "probes": {"points": [[..], ..]} | {"lo": [..], "hi": [..], "per_axis": int}
 *              | {"lo": [..], "hi": [..], "random": int},
 *      "radii": {"k_min": int, "k_max": int},
 *      "params": {"q", "p", "eps", "r", "expect", "grid", "samples", "seed", "tol", "box"},
 *      "outputs": {"json": path, "csv": path, "svg": path}}
 *
 * A ref is a path relative to the config file or an inline JSON object.
 */
#pragma once

#include "geomint/analysis.hpp"
#include "geomint/cochains.hpp"
#include "geomint/io.hpp"

#include <cstdio>
#include <random>

#ifndef GEOMINT_VERSION
#define GEOMINT_VERSION "0.1.0"
#endif

namespace geomint {

inline constexpr const char* kToolVersion = GEOMINT_VERSION;

struct Verdict {
  std::string name;
  bool pass = false;
  double value = 0;
  double tolerance = 0;
  std::string detail;
};

struct Table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct Report {
  std::string kind;
  std::string tool_version = kToolVersion;
  std::uint64_t seed = 0;
  std::string inputs_digest;
  std::vector<Verdict> verdicts;
  std::vector<Table> tables;
  Json data = Json::object();
  /// Table and columns for the optional log-log plot.
  std::optional<std::tuple<std::size_t, std::string, std::vector<std::string>>> plot;

  bool all_pass() const {
    for (const auto& v : verdicts)
      if (!v.pass) return false;
    return true;
  }
  void verdict(std::string name, bool pass, double value, double tol, std::string detail = {}) {
    verdicts.push_back({std::move(name), pass, value, tol, std::move(detail)});
  }
};

/// Shortest round-trip decimal text of a double.
inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline Json report_json(const Report& r) {
  Json verdicts = Json::array(), tables = Json::object();
  for (const auto& v : r.verdicts) {
    Json j{{"name", v.name}, {"pass", v.pass}, {"value", format_number(v.value)}, {"tolerance", format_number(v.tolerance)}};
    if (!v.detail.empty()) j["detail"] = v.detail;
    verdicts.push_back(std::move(j));
  }
  for (const auto& t : r.tables) tables[t.name] = {{"columns", t.columns}, {"rows", t.rows}};
  return {{"kind", r.kind},         {"tool_version", r.tool_version}, {"seed", r.seed},
          {"inputs_digest", r.inputs_digest}, {"pass", r.all_pass()}, {"verdicts", verdicts},
          {"tables", tables},       {"data", r.data}};
}

inline std::string table_csv(const Table& t) {
  auto quote = [](const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) out += (i ? "," : "") + quote(t.columns[i]);
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out += (i ? "," : "") + quote(row[i]);
    out += '\n';
  }
  return out;
}

/// Standalone log-log SVG of y-columns against an x-column; nonpositive points are skipped.
inline std::string loglog_svg(const Table& t, const std::string& xcol, const std::vector<std::string>& ycols) {
  auto col = [&](const std::string& name) {
    auto it = std::find(t.columns.begin(), t.columns.end(), name);
    if (it == t.columns.end()) throw InputError("plot column \"" + name + "\" not in table");
    return static_cast<std::size_t>(it - t.columns.begin());
  };
  const std::size_t xi = col(xcol);
  std::vector<std::vector<std::pair<double, double>>> series;
  double x0 = HUGE_VAL, x1 = -HUGE_VAL, y0 = HUGE_VAL, y1 = -HUGE_VAL;
  for (const auto& name : ycols) {
    const std::size_t yi = col(name);
    std::vector<std::pair<double, double>> pts;
    for (const auto& row : t.rows) {
      const double x = std::strtod(row[xi].c_str(), nullptr), y = std::strtod(row[yi].c_str(), nullptr);
      if (!(x > 0) || !(y > 0) || !std::isfinite(x) || !std::isfinite(y)) continue;
      pts.emplace_back(std::log10(x), std::log10(y));
      x0 = std::min(x0, pts.back().first), x1 = std::max(x1, pts.back().first);
      y0 = std::min(y0, pts.back().second), y1 = std::max(y1, pts.back().second);
    }
    series.push_back(std::move(pts));
  }
  if (x0 > x1) x0 = -1, x1 = 0, y0 = -1, y1 = 0;
  x0 = std::floor(x0), x1 = std::max(std::ceil(x1), x0 + 1);
  y0 = std::floor(y0), y1 = std::max(std::ceil(y1), y0 + 1);
  const double W = 640, H = 440, L = 70, R = 20, T = 30, B = 50;
  auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double y) { return H - B - (y - y0) / (y1 - y0) * (H - T - B); };
  auto f = [](double v) {
    char b[32];
    std::snprintf(b, sizeof b, "%.2f", v);
    return std::string(b);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + f(W) + "\" height=\"" + f(H) +
                  "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  s += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  s += "<text x=\"" + f(W / 2) + "\" y=\"18\" text-anchor=\"middle\">" + t.name + "</text>\n";
  s += "<rect x=\"" + f(L) + "\" y=\"" + f(T) + "\" width=\"" + f(W - L - R) + "\" height=\"" + f(H - T - B) +
       "\" fill=\"none\" stroke=\"black\"/>\n";
  for (double d = x0; d <= x1 + 1e-9; d += 1)
    s += "<text x=\"" + f(px(d)) + "\" y=\"" + f(H - B + 18) + "\" text-anchor=\"middle\">1e" + format_number(d) +
         "</text>\n";
  for (double d = y0; d <= y1 + 1e-9; d += 1)
    s += "<text x=\"" + f(L - 6) + "\" y=\"" + f(py(d) + 4) + "\" text-anchor=\"end\">1e" + format_number(d) +
         "</text>\n";
  s += "<text x=\"" + f(W / 2) + "\" y=\"" + f(H - 12) + "\" text-anchor=\"middle\">" + xcol + "</text>\n";
  for (std::size_t k = 0; k < series.size(); ++k) {
    const char* c = colors[k % 5];
    std::string pts;
    for (auto [x, y] : series[k]) pts += f(px(x)) + "," + f(py(y)) + " ";
    s += "<polyline fill=\"none\" stroke=\"" + std::string(c) + "\" points=\"" + pts + "\"/>\n";
    for (auto [x, y] : series[k])
      s += "<circle cx=\"" + f(px(x)) + "\" cy=\"" + f(py(y)) + "\" r=\"3\" fill=\"" + c + "\"/>\n";
    s += "<text x=\"" + f(L + 10) + "\" y=\"" + f(T + 16 + 16 * k) + "\" fill=\"" + c + "\">" + ycols[k] + "</text>\n";
  }
  return s + "</svg>\n";
}

// ---------------------------------------------------------------------------
// Config
// ---------------------------------------------------------------------------

struct ExperimentConfig {
  struct Radii {
    int k_min = 4, k_max = 10;
    friend bool operator==(const Radii&, const Radii&) = default;
  };

  std::string kind;
  std::map<std::string, Json> inputs;  // chain, form, family, cochain, probes, u
  std::optional<Radii> radii;
  std::optional<double> q, p;
  std::optional<Rational> eps, r, expect;
  std::optional<int> grid, samples;
  std::optional<std::uint64_t> seed;
  std::optional<double> tol;
  std::optional<Json> box;  // "auto" or {"lo": [..], "hi": [..]}
  std::optional<std::string> out_json, out_csv, out_svg;
  std::filesystem::path base_dir;  // for resolving refs; not serialized

  friend bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) {
    auto same = [](const std::optional<double>& x, const std::optional<double>& y) {
      return x.has_value() == y.has_value() && (!x || *x == *y);
    };
    return a.kind == b.kind && a.inputs == b.inputs && a.radii == b.radii && same(a.q, b.q) && same(a.p, b.p) &&
           a.eps == b.eps && a.r == b.r && a.expect == b.expect && a.grid == b.grid && a.samples == b.samples &&
           a.seed == b.seed && same(a.tol, b.tol) && a.box == b.box && a.out_json == b.out_json &&
           a.out_csv == b.out_csv && a.out_svg == b.out_svg;
  }
};

inline const std::vector<std::string>& experiment_kinds() {
  static const std::vector<std::string> k{"stokes", "roundtrip",  "continuity", "flatnorm",
                                          "modulus", "deform", "rieszcheck", "flatcochain"};
  return k;
}

inline ExperimentConfig config_from_json(const Json& j, std::filesystem::path base_dir = {}) {
  if (!j.is_object()) throw InputError("config must be a JSON object");
  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  try {
    c.kind = j.at("kind").get<std::string>();
    const auto& kinds = experiment_kinds();
    if (std::find(kinds.begin(), kinds.end(), c.kind) == kinds.end()) throw InputError("unknown experiment kind " + c.kind);
    for (const auto& [key, value] : j.items()) {
      if (key == "kind" || key == "params" || key == "outputs" || key == "radii") continue;
      if (key == "chain" || key == "form" || key == "family" || key == "cochain" || key == "probes" || key == "u")
        c.inputs[key] = value;
      else
        throw InputError("unknown config key \"" + key + "\"");
    }
    if (j.contains("radii")) {
      c.radii = ExperimentConfig::Radii{j["radii"].at("k_min").get<int>(), j["radii"].at("k_max").get<int>()};
      if (c.radii->k_min > c.radii->k_max) throw InputError("radii need k_min <= k_max");
    }
    if (j.contains("params")) {
      for (const auto& [key, v] : j["params"].items()) {
        if (key == "q") c.q = exponent_from_json(v);
        else if (key == "p") c.p = exponent_from_json(v);
        else if (key == "eps") c.eps = rational_from_json(v);
        else if (key == "r") c.r = rational_from_json(v);
        else if (key == "expect") c.expect = rational_from_json(v);
        else if (key == "grid") c.grid = v.get<int>();
        else if (key == "samples") c.samples = v.get<int>();
        else if (key == "seed") c.seed = v.get<std::uint64_t>();
        else if (key == "tol") c.tol = v.get<double>();
        else if (key == "box") c.box = v;
        else throw InputError("unknown parameter \"" + key + "\"");
      }
      if (c.eps && *c.eps <= 0) throw InputError("eps must be positive");
      if (c.r && *c.r <= 0) throw InputError("r must be positive");
      if (c.grid && *c.grid <= 0) throw InputError("grid must be positive");
      if (c.samples && *c.samples <= 0) throw InputError("samples must be positive");
      if (c.tol && !(*c.tol >= 0)) throw InputError("tol must be nonnegative");
    }
    if (j.contains("outputs")) {
      for (const auto& [key, v] : j["outputs"].items()) {
        if (key == "json") c.out_json = v.get<std::string>();
        else if (key == "csv") c.out_csv = v.get<std::string>();
        else if (key == "svg") c.out_svg = v.get<std::string>();
        else throw InputError("unknown output \"" + key + "\"");
      }
    }
  } catch (const Json::exception& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return c;
}

inline Json config_to_json(const ExperimentConfig& c) {
  Json j{{"kind", c.kind}};
  for (const auto& [k, v] : c.inputs) j[k] = v;
  if (c.radii) j["radii"] = {{"k_min", c.radii->k_min}, {"k_max", c.radii->k_max}};
  Json params = Json::object();
  if (c.q) params["q"] = exponent_json(*c.q);
  if (c.p) params["p"] = exponent_json(*c.p);
  if (c.eps) params["eps"] = rational_json(*c.eps);
  if (c.r) params["r"] = rational_json(*c.r);
  if (c.expect) params["expect"] = rational_json(*c.expect);
  if (c.grid) params["grid"] = *c.grid;
  if (c.samples) params["samples"] = *c.samples;
  if (c.seed) params["seed"] = *c.seed;
  if (c.tol) params["tol"] = *c.tol;
  if (c.box) params["box"] = *c.box;
  if (!params.empty()) j["params"] = params;
  Json outputs = Json::object();
  if (c.out_json) outputs["json"] = *c.out_json;
  if (c.out_csv) outputs["csv"] = *c.out_csv;
  if (c.out_svg) outputs["svg"] = *c.out_svg;
  if (!outputs.empty()) j["outputs"] = outputs;
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  return config_from_json(load_json(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Flat-cochain inequality
// ---------------------------------------------------------------------------

inline Box complex_box(const ChainComplex& k) {
  Box b{std::vector<double>(k.ambient(), HUGE_VAL), std::vector<double>(k.ambient(), -HUGE_VAL)};
  for (const auto& c : k.cells(0))
    for (const auto& v : cell_vertices(c))
      for (int i = 0; i < k.ambient(); ++i) {
        b.lo[i] = std::min(b.lo[i], v[i].get_d());
        b.hi[i] = std::max(b.hi[i], v[i].get_d());
      }
  return b;
}

/**
 * @brief Checks |X^omega(T)| <= flat_norm(T, K).value + tol for every member,
 * after certifying sup comass of omega and d omega <= 1 on the box of K.
 */
inline Report flat_cochain_check(const PolyForm& omega, const ChainComplex& k, const std::vector<RationalChain>& family,
                                 double tol = 1e-6) {
  Report rep;
  rep.kind = "flatcochain";
  const Box box = complex_box(k);
  const NormResult h = lq_norm(omega, HUGE_VAL, box);
  const NormResult g = lq_norm_d(omega, HUGE_VAL, box);
  rep.verdict("sup_comass_omega", h.value + h.error <= 1.0, h.value + h.error, 1.0, "grid sup plus refinement slack");
  rep.verdict("sup_comass_d_omega", g.value + g.error <= 1.0, g.value + g.error, 1.0, "grid sup plus refinement slack");
  const Cochain x = form_cochain(omega);
  Table t{"flatcochain", {"member", "X(T)", "flat", "mass", "margin"}, {}};
  double worst = -HUGE_VAL;
  for (std::size_t i = 0; i < family.size(); ++i) {
    const RationalChain& c = family[i];
    const CochainValue xv = x(c);
    const FlatDecomposition d = flat_norm(embed_chain(c, k), k);
    if (d.status != LpStatus::Optimal) throw NumericError("flat norm LP failed: " + to_string(d.status));
    const double margin = d.value + tol - std::abs(xv.value);
    worst = std::max(worst, std::abs(xv.value) - d.value);
    t.rows.push_back({std::to_string(i), format_number(xv.value), format_number(d.value),
                      format_number(mass(c).value), format_number(margin)});
  }
  rep.verdict("flat_inequality", family.empty() || worst <= tol, family.empty() ? 0.0 : worst, tol,
              "max over members of |X(T)| - flat(T)");
  rep.tables.push_back(std::move(t));
  return rep;
}

inline Report flat_cochain_check(const PolyForm& omega, const Rational& eps, const std::vector<RationalChain>& family,
                                 double tol = 1e-6) {
  if (family.empty()) throw InputError("flat cochain check needs a nonempty family");
  const int n = family.front().ambient(), m = family.front().degree();
  std::vector<Rational> lo, hi;
  for (const auto& c : family) {
    if (c.ambient() != n || c.degree() != m) throw InputError("family members must share n and m");
    if (c.empty()) continue;
    auto [l, h] = auto_box(c, eps);
    if (lo.empty()) lo = l, hi = h;
    for (int i = 0; i < n; ++i) lo[i] = std::min(lo[i], l[i]), hi[i] = std::max(hi[i], h[i]);
  }
  if (lo.empty()) lo.assign(n, Rational(0)), hi.assign(n, eps);
  return flat_cochain_check(omega, build_cubical_complex(lo, hi, eps, m + 1), family, tol);
}

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

namespace detail {

class Inputs {
 public:
  explicit Inputs(const ExperimentConfig& c) : c_(c) {}

  bool has(const std::string& key) const { return c_.inputs.count(key) > 0; }
  Json resolve(const Json& ref) {
    if (ref.is_string()) {
      const std::filesystem::path p = c_.base_dir / ref.get<std::string>();
      Json j = load_json(p);
      resolved_[ref.get<std::string>()] = j;
      return j;
    }
    return ref;
  }
  Json get(const std::string& key) {
    auto it = c_.inputs.find(key);
    if (it == c_.inputs.end()) throw InputError(c_.kind + " experiment needs input \"" + key + "\"");
    return resolve(it->second);
  }
  RationalChain chain() { return chain_from_json(get("chain")); }
  PolyForm form() { return form_from_json(get("form")); }
  std::vector<RationalChain> family() { return family_from_json(get("family")); }
  /// Digest of the config (outputs excluded) plus every file it referenced.
  std::string digest() const {
    Json cfg = config_to_json(c_);
    cfg.erase("outputs");
    Json all{{"config", cfg}, {"files", resolved_}};
    return fnv1a_hex(all.dump());
  }

 private:
  const ExperimentConfig& c_;
  std::map<std::string, Json> resolved_;
};

inline std::vector<double> double_radii(const ExperimentConfig::Radii& r) {
  std::vector<double> out;
  for (int k = r.k_min; k <= r.k_max; ++k) out.push_back(std::ldexp(1.0, -k));
  return out;
}

inline std::pair<std::vector<Rational>, std::vector<Rational>> box_from_json(const Json& j, int n) {
  std::vector<Rational> lo, hi;
  for (const auto& v : j.at("lo")) lo.push_back(rational_from_json(v));
  for (const auto& v : j.at("hi")) hi.push_back(rational_from_json(v));
  if (static_cast<int>(lo.size()) != n || static_cast<int>(hi.size()) != n) throw InputError("box has wrong dimension");
  for (int i = 0; i < n; ++i)
    if (!(lo[i] < hi[i])) throw InputError("box needs lo < hi");
  return {lo, hi};
}

inline std::vector<Point<Rational>> probe_points(const Json& j, int n, std::uint64_t seed) {
  if (j.contains("points")) {
    std::vector<Point<Rational>> out;
    for (const auto& p : j["points"]) out.push_back(point_from_json(p, n));
    return out;
  }
  auto [lo, hi] = box_from_json(j, n);
  if (j.contains("random")) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<long> d(0, 1024);
    std::vector<Point<Rational>> out;
    for (int k = 0; k < j["random"].get<int>(); ++k) {
      Point<Rational> p(n);
      for (int i = 0; i < n; ++i) p[i] = lo[i] + (hi[i] - lo[i]) * make_rational(d(rng), 1024);
      out.push_back(std::move(p));
    }
    return out;
  }
  return grid_points(lo, hi, j.value("per_axis", 2));
}

inline Table quantity_table(const std::string& name, const std::vector<std::pair<std::string, std::string>>& rows) {
  Table t{name, {"quantity", "value"}, {}};
  for (const auto& [k, v] : rows) t.rows.push_back({k, v});
  return t;
}

inline Report run_stokes(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const PolyForm w = in.form();
  const RationalChain s = in.chain();
  if (w.degree() + 1 != s.degree() || w.ambient() != s.ambient())
    throw InputError("stokes needs a form of degree m and a chain of degree m+1 in the same dimension");
  const PolyForm dw = exterior_derivative(w);
  if (w.is_polynomial()) {
    const Rational a = integrate_over_chain(dw, s), b = integrate_over_chain(w, boundary(s));
    const Rational res = a - b;
    rep.verdict("stokes_residual", res == 0, std::abs(res.get_d()), 0.0, "exact rational");
    rep.tables.push_back(quantity_table(
        "stokes", {{"int_S d_omega", to_string(a)}, {"int_dS omega", to_string(b)}, {"residual", to_string(res)}}));
  } else {
    const double tol = c.tol.value_or(1e-8);
    const auto a = integrate_over_chain_numeric(dw, s, 1e-12), b = integrate_over_chain_numeric(w, boundary(s), 1e-12);
    const double res = a.value - b.value;
    rep.verdict("stokes_residual", std::abs(res) <= tol, std::abs(res), tol, "adaptive quadrature");
    rep.tables.push_back(quantity_table("stokes", {{"int_S d_omega", format_number(a.value)},
                                                   {"int_dS omega", format_number(b.value)},
                                                   {"residual", format_number(res)}}));
  }
  return rep;
}

inline Report run_roundtrip(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const std::uint64_t seed = c.seed.value_or(1);
  std::optional<PolyForm> truth;
  std::optional<Cochain> x;
  if (in.has("cochain")) {
    const Json cj = in.get("cochain");
    if (cj.is_object() && cj.contains("average")) {
      const Json& a = cj["average"];
      const PolyForm of = form_from_json(in.resolve(a.at("of")));
      SamplerOptions so;
      so.seed = a.value("seed", seed);
      so.samples = a.value("samples", so.samples);
      x = average(form_cochain(of), rational_from_json(a.at("r")).get_d(), so);
    } else {
      truth = form_from_json(cj);
    }
  } else {
    truth = in.form();
  }
  if (truth) x = form_cochain(*truth);
  const auto radii = c.radii.value_or(ExperimentConfig::Radii{});
  std::vector<Rational> rs = dyadic_radii(radii.k_min, radii.k_max);
  const std::vector<Point<Rational>> pts = probe_points(in.get("probes"), x->ambient(), seed);
  const ReconstructedForm rf = reconstruct_form(*x, pts, rs);
  rep.verdict("probes_converged", rf.all_converged(), 0.0, 0.0);
  Table conv{"convergence", {"r", "value", "error"}, {}};
  if (truth) {
    const double tol = c.tol.value_or(1e-6);
    const PolyForm dw = exterior_derivative(*truth);
    double ce = 0, de = 0;
    std::vector<double> raw_err(rs.size(), 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const auto want = truth->at_exact(pts[i]);
      const auto dwant = dw.at_exact(pts[i]);
      for (std::size_t a = 0; a < rf.alphas.size(); ++a) {
        auto it = want.find(rf.alphas[a]);
        const double w = it == want.end() ? 0.0 : it->second.get_d();
        ce = std::max(ce, std::abs(rf.coeff[i][a].estimate - w));
        for (std::size_t k = 0; k < rs.size(); ++k) raw_err[k] = std::max(raw_err[k], std::abs(rf.coeff[i][a].raw[k] - w));
      }
      for (std::size_t b = 0; b < rf.betas.size(); ++b) {
        auto it = dwant.find(rf.betas[b]);
        const double w = it == dwant.end() ? 0.0 : it->second.get_d();
        de = std::max(de, std::abs(rf.dcoeff[i][b].estimate - w));
      }
    }
    rep.verdict("coefficient_error", ce <= tol, ce, tol, "max over probes and multi-indices after extrapolation");
    rep.verdict("derivative_error", de <= tol, de, tol, "max over probes and multi-indices after extrapolation");
    for (std::size_t k = 0; k < rs.size(); ++k)
      conv.rows.push_back({format_number(rs[k].get_d()),
                           format_number(pts.empty() || rf.alphas.empty() ? 0.0 : rf.coeff[0][0].raw[k]),
                           format_number(raw_err[k])});
  } else {
    for (std::size_t k = 0; k < rs.size(); ++k)
      conv.rows.push_back({format_number(rs[k].get_d()),
                           format_number(pts.empty() || rf.alphas.empty() ? 0.0 : rf.coeff[0][0].raw[k]),
                           format_number(pts.empty() || rf.alphas.empty() ? 0.0 : rf.coeff[0][0].error)});
  }
  Table coeffs{"coefficients", {"probe", "index", "estimate", "error"}, {}};
  for (std::size_t i = 0; i < pts.size(); ++i)
    for (std::size_t a = 0; a < rf.alphas.size(); ++a)
      coeffs.rows.push_back({std::to_string(i), multi_index_key(rf.alphas[a]), format_number(rf.coeff[i][a].estimate),
                             format_number(rf.coeff[i][a].error)});
  rep.tables.push_back(std::move(conv));
  rep.tables.push_back(std::move(coeffs));
  rep.plot = std::make_tuple(0, "r", std::vector<std::string>{"error"});
  return rep;
}

inline Report run_continuity(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const PolyForm w = in.form();
  const RationalChain t = in.chain();
  const auto radii = double_radii(c.radii.value_or(ExperimentConfig::Radii{2, 8}));
  const double p = c.p.value_or(4), q = c.q.value_or(4);
  SamplerOptions so;
  so.seed = c.seed.value_or(1);
  so.samples = c.samples.value_or(so.samples);
  const ContinuityBound bound = continuity_bound(w, t, p, q, *std::max_element(radii.begin(), radii.end()));
  const ContinuityReport cr = continuity_experiment(form_cochain(w), t, radii, so, bound);
  const double min_slope = c.tol.value_or(0.9);
  rep.verdict("monotone", cr.monotone, 0.0, 0.0, "differences shrink with r up to two standard errors");
  rep.verdict("slope", cr.all_zero || cr.slope >= min_slope, cr.slope, min_slope, "least-squares log-log slope");
  rep.verdict("within_bound", cr.within_bound, 0.0, 0.0);
  Table tb{"continuity", {"r", "value", "error", "bound"}, {}};
  for (const auto& row : cr.rows)
    tb.rows.push_back(
        {format_number(row.r), format_number(row.difference), format_number(row.std_error), format_number(row.bound)});
  rep.tables.push_back(std::move(tb));
  rep.data["exact_value"] = cr.exact_value;
  rep.plot = std::make_tuple(0, "r", std::vector<std::string>{"value", "bound"});
  return rep;
}

inline Report run_flatnorm(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const RationalChain t = in.chain();
  const Rational eps = c.eps.value_or(make_rational(1, 4));
  auto [lo, hi] = !c.box || (c.box->is_string() && *c.box == "auto") ? auto_box(t, eps) : box_from_json(*c.box, t.ambient());
  const ChainComplex k = build_cubical_complex(lo, hi, eps, t.degree() + 1);
  const ChainVector v = embed_chain(t, k);
  const FlatDecomposition d = flat_norm(v, k);
  if (d.status != LpStatus::Optimal) throw NumericError("flat norm LP failed: " + to_string(d.status));
  ChainVector check = d.R;
  for (const auto& [i, a] : apply_boundary(k, d.S).coeffs) check.add(i, a);
  rep.verdict("decomposition_identity", check == v, 0.0, 0.0, "R + dS = T exactly");
  if (c.expect) {
    const double tol = c.tol.value_or(1e-8);
    const double err = std::abs(d.value - c.expect->get_d());
    rep.verdict("expected_value", err <= tol, err, tol, "expected " + to_string(*c.expect));
  }
  rep.tables.push_back(quantity_table("flatnorm", {{"value", format_number(d.value)},
                                                   {"exact_value", d.exact_value ? to_string(*d.exact_value) : "-"},
                                                   {"duality_gap", format_number(d.duality_gap)},
                                                   {"eps", to_string(eps)}}));
  rep.data = decomposition_json(d, k);
  return rep;
}

inline Report run_modulus(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const auto family = in.family();
  if (family.empty()) throw InputError("modulus family is empty");
  const int n = family.front().ambient();
  ModulusGrid grid;
  if (c.box && c.box->is_object()) {
    std::tie(grid.lo, grid.hi) = box_from_json(*c.box, n);
  } else {
    bool first = true;
    grid.lo.assign(n, Rational(0));
    grid.hi.assign(n, Rational(0));
    for (const auto& t : family)
      for (const auto& [cell, a] : t.terms())
        for (const auto& v : cell_vertices(cell))
          for (int i = 0; i < n; ++i) {
            if (first || v[i] < grid.lo[i]) grid.lo[i] = v[i];
            if (first || v[i] > grid.hi[i]) grid.hi[i] = v[i];
            if (i == n - 1) first = false;
          }
    for (int i = 0; i < n; ++i)
      if (!(grid.lo[i] < grid.hi[i])) grid.hi[i] = grid.lo[i] + 1;
  }
  grid.shape.assign(n, c.grid.value_or(128));
  const ModulusResult r = p_modulus(family, grid, c.p.value_or(2));
  rep.verdict("converged", r.converged, r.relative_gap, 1e-9, "relative duality gap");
  if (c.expect) {
    const double tol = c.tol.value_or(0.02);
    const double err = std::abs(r.value - c.expect->get_d()) / std::max(1e-300, std::abs(c.expect->get_d()));
    rep.verdict("expected_value", err <= tol, err, tol, "relative error against " + to_string(*c.expect));
  }
  rep.tables.push_back(quantity_table("modulus", {{"value", r.finite() ? format_number(r.value) : "inf"},
                                                  {"lower_bound", r.finite() ? format_number(r.lower_bound) : "inf"},
                                                  {"relative_gap", format_number(r.relative_gap)},
                                                  {"iterations", std::to_string(r.iterations)}}));
  Table act{"activity", {"member", "activity", "multiplier"}, {}};
  for (std::size_t i = 0; i < r.activity.size(); ++i)
    act.rows.push_back({std::to_string(i), format_number(r.activity[i]),
                        i < r.multipliers.size() ? format_number(r.multipliers[i]) : "-"});
  rep.tables.push_back(std::move(act));
  return rep;
}

inline bool grid_representable(const RationalChain& p, const Rational& eps) {
  for (const auto& [cell, a] : p.terms()) {
    if (const auto* q = std::get_if<CubeCell<Rational>>(&cell)) {
      if (q->eps != eps) return false;
      for (const auto& x : q->anchor)
        if (Rational(x / eps).get_den() != 1) return false;
    } else {
      const auto& s = std::get<Simplex<Rational>>(cell);
      if (s.verts.size() != 1) return false;
      for (const auto& x : s.verts[0])
        if (Rational(x / eps).get_den() != 1) return false;
    }
  }
  return true;
}

inline Report run_deform(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const RationalChain t = in.chain();
  const Rational eps = c.eps.value_or(make_rational(1, 2));
  const DeformationResult d = deform(t, eps, c.seed.value_or(7));
  rep.verdict("identity", d.identity_verified, 0.0, 0.0, "T - P - R - dS is polyhedrally zero");
  rep.verdict("P_grid_representable", grid_representable(d.P, eps), 0.0, 0.0);
  rep.tables.push_back(quantity_table("deform", {{"eps", to_string(eps)},
                                                 {"rho_R", format_number(d.rho_R)},
                                                 {"rho_S", format_number(d.rho_S)},
                                                 {"cells_P", std::to_string(d.P.size())},
                                                 {"cells_R", std::to_string(d.R.size())},
                                                 {"cells_S", std::to_string(d.S.size())}}));
  rep.data = deformation_json(d);
  return rep;
}

/// "one" or {"bump": {"center": [..], "width": str}}: u = exp(-|x-c|^2 / w^2).
inline FieldFn weight_from_json(const Json& j, int n) {
  if (j.is_string() && j == "one") return [](const std::vector<double>&) { return 1.0; };
  if (j.is_object() && j.contains("bump")) {
    const Point<Rational> c = point_from_json(j["bump"].at("center"), n);
    const double w = rational_from_json(j["bump"].at("width")).get_d();
    if (!(w > 0)) throw InputError("bump width must be positive");
    std::vector<double> cd(n);
    for (int i = 0; i < n; ++i) cd[i] = c[i].get_d();
    return [cd, w](const std::vector<double>& x) {
      double s = 0;
      for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - cd[i]) * (x[i] - cd[i]);
      return std::exp(-s / (w * w));
    };
  }
  throw InputError("u must be \"one\" or {\"bump\": {...}}");
}

inline Report run_riesz(const ExperimentConfig& c, Inputs& in) {
  Report rep;
  const RationalChain t = in.chain();
  const int n = t.ambient();
  const double r = c.r.value_or(make_rational(1, 4)).get_d();
  const FieldFn uf = weight_from_json(in.has("u") ? in.get("u") : Json("one"), n);
  const Box box = support_box(t, 2 * r);
  const int cells = c.grid.value_or(n == 2 ? 64 : 24);
  const GridField u = GridField::sample(box.lo, box.hi, std::vector<int>(n, cells), uf);
  SamplerOptions so;
  so.seed = c.seed.value_or(1);
  so.samples = c.samples.value_or(so.samples);
  const RieszReport rr = riesz_lemma_check(t, u, r, so);
  const double factor = 1 + c.tol.value_or(0.05);
  rep.verdict("riesz_inequality", rr.holds(factor), rr.rhs > 0 ? rr.lhs / rr.rhs : 0.0, factor, "LHS / RHS");
  rep.tables.push_back(quantity_table("riesz", {{"lhs", format_number(rr.lhs)},
                                                {"lhs_error", format_number(rr.lhs_error)},
                                                {"rhs", format_number(rr.rhs)},
                                                {"r", format_number(r)}}));
  return rep;
}

inline Report run_flatcochain(const ExperimentConfig& c, Inputs& in) {
  const PolyForm w = in.form();
  const auto family = in.family();
  return flat_cochain_check(w, c.eps.value_or(make_rational(1, 4)), family, c.tol.value_or(1e-6));
}

}  // namespace detail

/// Dispatches one experiment. Throws InputError or NumericError; verdict failures are in the report.
inline Report run(const ExperimentConfig& c) {
  detail::Inputs in(c);
  Report rep;
  try {
    if (c.kind == "stokes") rep = detail::run_stokes(c, in);
    else if (c.kind == "roundtrip") rep = detail::run_roundtrip(c, in);
    else if (c.kind == "continuity") rep = detail::run_continuity(c, in);
    else if (c.kind == "flatnorm") rep = detail::run_flatnorm(c, in);
    else if (c.kind == "modulus") rep = detail::run_modulus(c, in);
    else if (c.kind == "deform") rep = detail::run_deform(c, in);
    else if (c.kind == "rieszcheck") rep = detail::run_riesz(c, in);
    else if (c.kind == "flatcochain") rep = detail::run_flatcochain(c, in);
    else throw InputError("unknown experiment kind " + c.kind);
  } catch (const Json::exception& e) {
    throw InputError(e.what());
  } catch (const ChainError& e) {
    throw InputError(e.what());
  } catch (const FormError& e) {
    throw InputError(e.what());
  } catch (const NotRepresentable& e) {
    throw InputError(e.what());
  }
  rep.kind = c.kind;
  rep.seed = c.seed.value_or(1);
  rep.inputs_digest = in.digest();
  return rep;
}

/// Writes the configured outputs; the SVG only when `plot` is set and the report has a plot.
inline void write_outputs(const Report& rep, const ExperimentConfig& c, bool plot) {
  if (c.out_json) save_json(*c.out_json, report_json(rep));
  if (c.out_csv && !rep.tables.empty()) {
    std::filesystem::path p(*c.out_csv);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << table_csv(rep.tables.front());
  }
  if (plot && rep.plot) {
    const auto& [idx, x, ys] = *rep.plot;
    std::filesystem::path p(c.out_svg.value_or(rep.kind + ".svg"));
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream(p) << loglog_svg(rep.tables.at(idx), x, ys);
  }
}

}  // namespace geomint
