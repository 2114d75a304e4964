// geomint command-line tool. Exit codes: 0 ok, 1 verdict failure, 2 input error, 3 numeric failure.
#include "geomint.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace geomint;

namespace {

struct Globals {
  std::uint64_t seed = 1;
  bool seed_set = false;
  double tol = -1;
  int threads = 1;
  std::string format = "json";
  bool plot = false;
};

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string part;
  while (std::getline(ss, part, sep)) out.push_back(part);
  return out;
}

Point<Rational> parse_point(const std::string& s, int n) {
  const auto parts = split(s, ',');
  if (static_cast<int>(parts.size()) != n) throw InputError("expected " + std::to_string(n) + " comma-separated coordinates");
  Point<Rational> p(n);
  for (int i = 0; i < n; ++i) {
    try {
      p[i] = parse_rational(parts[i]);
    } catch (const std::invalid_argument& e) {
      throw InputError(e.what());
    }
  }
  return p;
}

Rational parse_scalar(const std::string& s) {
  try {
    return parse_rational(s);
  } catch (const std::invalid_argument& e) {
    throw InputError(e.what());
  }
}

/// "lo1,lo2;hi1,hi2"
std::pair<Point<Rational>, Point<Rational>> parse_box(const std::string& s, int n) {
  const auto parts = split(s, ';');
  if (parts.size() != 2) throw InputError("box must be \"lo1,..;hi1,..\"");
  auto lo = parse_point(parts[0], n), hi = parse_point(parts[1], n);
  for (int i = 0; i < n; ++i)
    if (!(lo[i] < hi[i])) throw InputError("box needs lo < hi");
  return {lo, hi};
}

Box to_box(const std::pair<Point<Rational>, Point<Rational>>& b) {
  Box out;
  for (std::size_t i = 0; i < b.first.size(); ++i) {
    out.lo.push_back(b.first[i].get_d());
    out.hi.push_back(b.second[i].get_d());
  }
  return out;
}

std::string csv_cell(const Json& v) {
  std::string s = v.is_string() ? v.get<std::string>() : v.dump();
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

/// Flat objects become key,value rows; arrays of flat objects become tables.
std::string to_csv(const Json& j) {
  std::string out;
  if (j.is_array() && !j.empty() && j[0].is_object()) {
    std::vector<std::string> cols;
    for (const auto& [k, v] : j[0].items()) cols.push_back(k);
    for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + cols[i];
    out += '\n';
    for (const auto& row : j) {
      for (std::size_t i = 0; i < cols.size(); ++i) out += (i ? "," : "") + csv_cell(row.value(cols[i], Json()));
      out += '\n';
    }
    return out;
  }
  out = "key,value\n";
  for (const auto& [k, v] : j.items())
    if (!v.is_structured()) out += k + "," + csv_cell(v) + '\n';
  return out;
}

void emit(const Json& j, const std::string& out_path, const Globals& g) {
  const std::string text = g.format == "csv" ? to_csv(j) : j.dump(2) + "\n";
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::filesystem::path p(out_path);
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream f(p);
  if (!f) throw InputError("cannot write " + out_path);
  f << text;
}

Json mass_json(const Mass& m) {
  return {{"mass", m.value},
          {"exact", m.exact_value ? Json(to_string(*m.exact_value)) : Json(nullptr)},
          {"lower", m.bounds.lo},
          {"upper", m.bounds.hi}};
}

int run_chain(const std::string& action, const std::string& chain_path, const std::string& by, const std::string& out,
              const Globals& g) {
  RationalChain t;
  try {
    t = chain_from_json(load_json(chain_path));
  } catch (const InputError& e) {
    if (action != "validate") throw;
    emit({{"valid", false}, {"error", e.what()}}, out, g);
    return 2;
  }
  if (action == "boundary") {
    if (t.degree() == 0) throw InputError("boundary of a 0-chain is undefined");
    emit(chain_to_json(boundary(t)), out, g);
  } else if (action == "mass") {
    emit(mass_json(mass(t)), out, g);
  } else if (action == "validate") {
    Json warnings = Json::array();
    for (const auto& [a, b] : find_overlaps(t)) warnings.push_back("cells overlap: " + a + " and " + b);
    for (const auto& w : warnings) std::cerr << "warning: " << w.get<std::string>() << '\n';
    emit({{"valid", true},
          {"n", t.ambient()},
          {"m", t.degree()},
          {"cells", t.size()},
          {"cycle", is_cycle(t)},
          {"warnings", warnings}},
         out, g);
  } else {
    if (by.empty()) throw InputError("translate needs --by");
    emit(chain_to_json(translate(t, parse_point(by, t.ambient()))), out, g);
  }
  return 0;
}

struct FormArgs {
  std::string form, at, chain, q = "inf", box, out;
  bool derivative = false;
};

int run_form(const std::string& action, const FormArgs& a, const Globals& g) {
  const PolyForm w = form_from_json(load_json(a.form));
  if (action == "d") {
    emit(form_to_json(exterior_derivative(w)), a.out, g);
  } else if (action == "comass") {
    if (a.at.empty()) throw InputError("comass needs --at");
    const Point<Rational> x = parse_point(a.at, w.ambient());
    std::vector<double> xd(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) xd[i] = x[i].get_d();
    const ComassResult c = comass(a.derivative ? d_at(w, xd) : w.at(xd));
    emit({{"comass", c.value},
          {"sampled_lower", c.sampled_lower},
          {"closed_form", c.closed_form},
          {"low_confidence", c.low_confidence}},
         a.out, g);
  } else if (action == "integrate") {
    if (a.chain.empty()) throw InputError("integrate needs --chain");
    const RationalChain t = chain_from_json(load_json(a.chain));
    if (w.is_polynomial()) {
      const Rational v = integrate_over_chain(w, t);
      emit({{"value", to_string(v)}, {"approx", v.get_d()}, {"exact", true}}, a.out, g);
    } else {
      const auto r = integrate_over_chain_numeric(w, t, g.tol > 0 ? g.tol : 1e-10);
      emit({{"value", r.value}, {"error", r.error}, {"exact", false}}, a.out, g);
    }
  } else {
    const double q = exponent_from_json(Json(a.q));
    std::optional<Box> box;
    if (!a.box.empty()) box = to_box(parse_box(a.box, w.ambient()));
    const NormResult r = a.derivative ? lq_norm_d(w, q, box) : lq_norm(w, q, box);
    emit({{"value", r.value}, {"error", r.error}, {"q", exponent_json(q)}}, a.out, g);
  }
  return 0;
}

struct CochainArgs {
  std::string form, chain, family, at, r = "1/8", role = "norm", p = "4", q = "4", out;
  int samples = 512, k_min = 4, k_max = 10;
};

int run_cochain(const std::string& action, const CochainArgs& a, const Globals& g) {
  const PolyForm w = form_from_json(load_json(a.form));
  const Cochain x = form_cochain(w);
  SamplerOptions so;
  so.seed = g.seed;
  so.samples = a.samples;
  if (action == "average") {
    if (a.chain.empty()) throw InputError("average needs --chain");
    const RationalChain t = chain_from_json(load_json(a.chain));
    const CochainValue v = average_value(x, t, parse_scalar(a.r).get_d(), so);
    const CochainValue base = x(t);
    emit({{"value", v.value}, {"error", v.error}, {"unaveraged", base.value}, {"r", a.r}}, a.out, g);
  } else if (action == "reconstruct") {
    if (a.at.empty()) throw InputError("reconstruct needs --at (points separated by ';')");
    std::vector<Point<Rational>> pts;
    for (const auto& s : split(a.at, ';')) pts.push_back(parse_point(s, w.ambient()));
    const ReconstructedForm rf = reconstruct_form(x, pts, dyadic_radii(a.k_min, a.k_max));
    Json rows = Json::array();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = 0; k < rf.alphas.size(); ++k)
        rows.push_back({{"point", i}, {"kind", "coeff"}, {"index", multi_index_key(rf.alphas[k])},
                        {"estimate", rf.coeff[i][k].estimate}, {"error", rf.coeff[i][k].error},
                        {"converged", rf.coeff[i][k].converged}});
      for (std::size_t k = 0; k < rf.betas.size(); ++k)
        rows.push_back({{"point", i}, {"kind", "dcoeff"}, {"index", multi_index_key(rf.betas[k])},
                        {"estimate", rf.dcoeff[i][k].estimate}, {"error", rf.dcoeff[i][k].error},
                        {"converged", rf.dcoeff[i][k].converged}});
    }
    emit(rows, a.out, g);
  } else if (action == "certify") {
    if (a.family.empty()) throw InputError("certify needs --family");
    const auto family = family_from_json(load_json(a.family));
    const bool gradient = a.role == "gradient";
    if (!gradient && a.role != "norm") throw InputError("--role must be norm or gradient");
    const auto cert = check_certificate(x, gradient ? d_comass_field(w) : comass_field(w),
                                        gradient ? CertificateRole::UpperGradient : CertificateRole::UpperNorm, family,
                                        g.tol > 0 ? g.tol : 1e-10);
    emit({{"valid", cert.valid},
          {"role", a.role},
          {"worst_slack", cert.worst_slack},
          {"checked", cert.checked},
          {"counterexample", cert.counterexample ? Json(*cert.counterexample) : Json(nullptr)}},
         a.out, g);
    return cert.valid ? 0 : 1;
  } else {
    if (a.chain.empty()) throw InputError("continuity needs --chain");
    const RationalChain t = chain_from_json(load_json(a.chain));
    std::vector<double> radii;
    for (int k = a.k_min; k <= a.k_max; ++k) radii.push_back(std::ldexp(1.0, -k));
    const double p = exponent_from_json(Json(a.p)), q = exponent_from_json(Json(a.q));
    const auto bound = continuity_bound(w, t, p, q, radii.front());
    const auto rep = continuity_experiment(x, t, radii, so, bound);
    Json rows = Json::array();
    for (const auto& r : rep.rows)
      rows.push_back({{"r", r.r}, {"value", r.difference}, {"error", r.std_error}, {"bound", r.bound}});
    if (g.format == "csv")
      emit(rows, a.out, g);
    else
      emit({{"rows", rows}, {"slope", rep.slope}, {"monotone", rep.monotone}, {"within_bound", rep.within_bound}},
           a.out, g);
  }
  return 0;
}

int run_flatnorm(const std::string& chain_path, const std::string& eps_s, const std::string& box_s, bool exact,
                 const std::string& out, const Globals& g) {
  const RationalChain t = chain_from_json(load_json(chain_path));
  const Rational eps = parse_scalar(eps_s);
  if (eps <= 0) throw InputError("--eps must be positive");
  std::vector<Rational> lo, hi;
  if (box_s == "auto") {
    std::tie(lo, hi) = auto_box(t, eps);
  } else {
    auto b = parse_box(box_s, t.ambient());
    lo = b.first, hi = b.second;
  }
  const ChainComplex k = build_cubical_complex(lo, hi, eps, t.degree() + 1);
  FlatNormOptions opts;
  opts.exact_lp = exact;
  const FlatDecomposition d = flat_norm(embed_chain(t, k), k, opts);
  emit(decomposition_json(d, k), out, g);
  return d.status == LpStatus::Optimal ? 0 : 3;
}

int run_modulus(const std::string& family_path, const std::string& p_s, int cells, const std::string& box_s,
                const std::string& out, const Globals& g) {
  const auto family = family_from_json(load_json(family_path));
  if (family.empty()) throw InputError("family is empty");
  const int n = family.front().ambient();
  ModulusGrid grid = ModulusGrid::unit_cube(n, cells);
  if (!box_s.empty()) {
    auto b = parse_box(box_s, n);
    grid.lo = b.first, grid.hi = b.second;
  }
  ModulusOptions opts;
  opts.threads = g.threads;
  if (g.tol > 0) opts.gap_tol = g.tol;
  const ModulusResult r = p_modulus(family, grid, exponent_from_json(Json(p_s)), opts);
  emit(modulus_json(r), out, g);
  return r.converged || !r.finite() ? 0 : 3;
}

int run_deform(const std::string& chain_path, const std::string& eps_s, std::uint64_t seed, const std::string& out,
               const Globals& g) {
  const RationalChain t = chain_from_json(load_json(chain_path));
  const Rational eps = parse_scalar(eps_s);
  if (eps <= 0) throw InputError("--eps must be positive");
  const DeformationResult d = deform(t, eps, seed);
  emit(deformation_json(d), out, g);
  return d.identity_verified ? 0 : 3;
}

int run_experiment(const std::string& config_path, const std::string& out, const Globals& g) {
  ExperimentConfig c = load_config(config_path);
  if (g.seed_set) c.seed = g.seed;
  if (g.tol >= 0) c.tol = g.tol;
  if (!out.empty()) c.out_json = out;
  const Report rep = run(c);
  write_outputs(rep, c, g.plot);
  if (!c.out_json) {
    if (g.format == "csv" && !rep.tables.empty())
      std::cout << table_csv(rep.tables.front());
    else
      std::cout << report_json(rep).dump(2) << '\n';
  }
  for (const auto& v : rep.verdicts)
    std::cerr << (v.pass ? "PASS " : "FAIL ") << v.name << " value=" << format_number(v.value)
              << " tol=" << format_number(v.tolerance) << '\n';
  return rep.all_pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"geomint: polyhedral chains, forms, cochains, flat norms, modulus and deformation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { g.seed = s, g.seed_set = true; }, "RNG seed");
  app.add_option("--tol", g.tol, "Tolerance override");
  app.add_option("--threads", g.threads, "Worker threads")->check(CLI::PositiveNumber);
  app.add_option("--format", g.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
  app.add_flag("--plot", g.plot, "Write SVG plots for experiments");
  app.set_version_flag("--version", kToolVersion);

  std::string action, chain_path, by, out;
  auto* chain = app.add_subcommand("chain", "Chain operations");
  chain->add_option("action", action, "boundary|mass|validate|translate")
      ->required()
      ->check(CLI::IsMember({"boundary", "mass", "validate", "translate"}));
  chain->add_option("--chain", chain_path, "Chain JSON")->required();
  chain->add_option("--by", by, "Translation vector x1,x2,..");
  chain->add_option("--out", out, "Output file (default stdout)");

  FormArgs fa;
  auto* form = app.add_subcommand("form", "Form operations");
  form->add_option("action", action, "d|comass|integrate|norm")
      ->required()
      ->check(CLI::IsMember({"d", "comass", "integrate", "norm"}));
  form->add_option("--form", fa.form, "Form JSON")->required();
  form->add_option("--at", fa.at, "Point x1,x2,..");
  form->add_option("--chain", fa.chain, "Chain JSON");
  form->add_option("--q", fa.q, "Norm exponent in (1, inf]");
  form->add_option("--box", fa.box, "Domain lo1,..;hi1,..");
  form->add_flag("--derivative", fa.derivative, "Use d(omega) for comass/norm");
  form->add_option("--out", fa.out, "Output file");

  CochainArgs ca;
  auto* cochain = app.add_subcommand("cochain", "Cochain operations on form-induced cochains");
  cochain->add_option("action", action, "average|reconstruct|certify|continuity")
      ->required()
      ->check(CLI::IsMember({"average", "reconstruct", "certify", "continuity"}));
  cochain->add_option("--form", ca.form, "Form JSON")->required();
  cochain->add_option("--chain", ca.chain, "Chain JSON");
  cochain->add_option("--family", ca.family, "Family JSON");
  cochain->add_option("--at", ca.at, "Probe points x1,..;y1,..");
  cochain->add_option("--r", ca.r, "Averaging radius");
  cochain->add_option("--samples", ca.samples, "QMC evaluations");
  cochain->add_option("--kmin", ca.k_min, "Smallest k of radii 2^-k");
  cochain->add_option("--kmax", ca.k_max, "Largest k of radii 2^-k");
  cochain->add_option("--role", ca.role, "norm|gradient");
  cochain->add_option("--p", ca.p, "Upper-gradient exponent");
  cochain->add_option("--q", ca.q, "Upper-norm exponent");
  cochain->add_option("--out", ca.out, "Output file");

  std::string eps = "1/4", box = "auto";
  bool exact = false;
  auto* flat = app.add_subcommand("flatnorm", "Flat norm decomposition on a cubical grid");
  flat->add_option("--chain", chain_path, "Chain JSON")->required();
  flat->add_option("--eps", eps, "Grid size");
  flat->add_option("--box", box, "auto or lo1,..;hi1,..");
  flat->add_flag("--exact", exact, "Exact rational LP (small instances)");
  flat->add_option("--out", out, "Output file");

  std::string family_path, p = "2", mbox;
  int cells = 128;
  auto* mod = app.add_subcommand("modulus", "p-modulus of a chain family");
  mod->add_option("--family", family_path, "Family JSON")->required();
  mod->add_option("--p", p, "Exponent in (1, inf)");
  mod->add_option("--grid", cells, "Cells per axis")->check(CLI::PositiveNumber);
  mod->add_option("--box", mbox, "Grid box lo1,..;hi1,.. (default unit cube)");
  mod->add_option("--out", out, "Output file");

  std::string deps = "1/2";
  std::uint64_t dseed = 7;
  bool dseed_set = false;
  auto* def = app.add_subcommand("deform", "Deformation onto the cubical grid");
  def->add_option("--chain", chain_path, "Chain JSON")->required();
  def->add_option("--eps", deps, "Grid size");
  def->add_option_function<std::uint64_t>("--seed", [&](std::uint64_t s) { dseed = s, dseed_set = true; }, "Center seed");
  def->add_option("--out", out, "Output file");

  std::string config_path;
  auto* exp = app.add_subcommand("experiment", "Run a configured experiment");
  auto* exp_run = exp->add_subcommand("run", "Run <config.json>");
  exp->require_subcommand(1);
  exp_run->add_option("config", config_path, "Experiment config JSON")->required();
  exp_run->add_option("--out", out, "Report JSON (overrides the config)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*chain) return run_chain(action, chain_path, by, out, g);
    if (*form) return run_form(action, fa, g);
    if (*cochain) return run_cochain(action, ca, g);
    if (*flat) return run_flatnorm(chain_path, eps, box, exact, out, g);
    if (*mod) return run_modulus(family_path, p, cells, mbox, out, g);
    if (*def) return run_deform(chain_path, deps, dseed_set ? dseed : (g.seed_set ? g.seed : 7), out, g);
    if (*exp_run) return run_experiment(config_path, out, g);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const Json::exception& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const ChainError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const FormError& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const NotRepresentable& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "input error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "numeric failure: " << e.what() << '\n';
    return 3;
  }
  return 2;
}
