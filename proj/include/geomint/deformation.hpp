/**
 * @file deformation.hpp
 * @brief Deformation of a polyhedral chain onto the eps-grid: T = P + R + ∂S
 * with P cubical, computed exactly in rational arithmetic.
 *
 * The chain is clipped to grid cells; then, from the top dimension down to
 * m + 1, the part of the chain inside each open grid face is pushed radially
 * from an interior center onto the face boundary. The straight-line homotopy
 * of each push contributes to S (chain part) and R (boundary part). On the
 * m-skeleton the remaining boundary is pushed once more so that every m-face
 * carries a constant multiple of itself.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/clip.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomint {

struct DeformOptions {
  int candidates = 64;
  bool verify = true;
};

struct CenterChoice {
  std::vector<long> anchor;  // face anchor in grid units
  std::vector<int> axes;     // free axes of the face
  Point<Rational> center;
  double pushed_mass = 0;  // selection objective at the chosen center
  int rejected = 0;  // candidates inside the support
};

struct DeformationResult {
  RationalChain P, R, S;
  Rational eps;
  double rho_R = 0;
  double rho_S = 0;
  bool identity_verified = false;
  bool experimental = false;  // outside n <= 3, m <= 2
  std::vector<CenterChoice> centers;
};

class DeformationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

struct Piece {
  RationalSimplex verts;
  Rational coef;
};

/// Smallest closed grid face containing a piece that lies in one closed cell.
struct FaceKey {
  std::vector<long> anchor;
  std::vector<int> axes;
  friend bool operator<(const FaceKey& a, const FaceKey& b) {
    if (a.axes.size() != b.axes.size()) return a.axes.size() > b.axes.size();
    if (a.axes != b.axes) return a.axes < b.axes;
    return a.anchor < b.anchor;
  }
};

inline long floor_div(const Rational& q) {
  mpz_class f;
  mpz_fdiv_q(f.get_mpz_t(), q.get_num().get_mpz_t(), q.get_den().get_mpz_t());
  return f.get_si();
}

inline FaceKey face_of(const RationalSimplex& s, const Rational& eps) {
  const std::size_t n = s[0].size();
  FaceKey key{std::vector<long>(n), {}};
  for (std::size_t a = 0; a < n; ++a) {
    Rational mn = s[0][a], mx = mn;
    for (const auto& v : s) {
      if (v[a] < mn) mn = v[a];
      if (v[a] > mx) mx = v[a];
    }
    const Rational q = mn / eps;
    key.anchor[a] = floor_div(q);
    if (!(mn == mx && q.get_den() == 1)) key.axes.push_back(static_cast<int>(a));
  }
  return key;
}

/// Scaled facet coordinates u_j(x); the facet hit by the ray c -> x is argmax_j u_j.
/// Facet 2i is the lower side of axes[i], 2i+1 the upper side.
template <class S>
std::vector<S> facet_coords(const Point<S>& x, const Point<S>& c, const std::vector<int>& axes,
                            const std::vector<S>& lo, const std::vector<S>& hi) {
  std::vector<S> u(2 * axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    const int a = axes[i];
    u[2 * i] = (c[a] - x[a]) / (c[a] - lo[i]);
    u[2 * i + 1] = (x[a] - c[a]) / (hi[i] - c[a]);
  }
  return u;
}

template <class S>
int argmax(const std::vector<S>& u) {
  return static_cast<int>(std::max_element(u.begin(), u.end()) - u.begin());
}

/// Splits s along {u_j = u_i} until each piece lies in a single facet cone.
template <class S>
std::vector<std::pair<std::vector<Point<S>>, int>> cone_pieces(const std::vector<Point<S>>& s, const Point<S>& c,
                                                               const std::vector<int>& axes, const std::vector<S>& lo,
                                                               const std::vector<S>& hi) {
  const S tol = ScalarTraits<S>::exact ? S(0) : S(1e-12);
  std::vector<std::pair<std::vector<Point<S>>, int>> out;
  std::vector<std::vector<Point<S>>> stack{s};
  while (!stack.empty()) {
    auto cur = std::move(stack.back());
    stack.pop_back();
    std::vector<std::vector<S>> u;
    for (const auto& v : cur) u.push_back(facet_coords(v, c, axes, lo, hi));
    // a facet that is maximal at every vertex
    int common = -1;
    for (std::size_t j = 0; j < u[0].size() && common < 0; ++j) {
      bool all = true;
      for (const auto& uv : u) all = all && !(uv[argmax(uv)] - uv[j] > tol);
      if (all) common = static_cast<int>(j);
    }
    if (common >= 0) {
      out.emplace_back(std::move(cur), common);
      continue;
    }
    // some pair (j, i) with u_j - u_i changing strict sign exists when no facet is common
    int pos = -1, neg = -1;
    std::size_t jj = 0, ii = 0;
    for (std::size_t j = 0; j < u[0].size() && neg < 0; ++j)
      for (std::size_t i = 0; i < u[0].size() && neg < 0; ++i) {
        if (i == j) continue;
        pos = neg = -1;
        for (std::size_t v = 0; v < cur.size(); ++v) {
          if (pos < 0 && u[v][j] - u[v][i] > tol) pos = static_cast<int>(v);
          if (neg < 0 && u[v][i] - u[v][j] > tol) neg = static_cast<int>(v);
        }
        if (pos < 0) neg = -1;
        jj = j, ii = i;
      }
    if (neg < 0) throw std::logic_error("cone splitting found no separating plane");
    std::vector<S> g(cur.size());
    g[pos] = u[pos][jj] - u[pos][ii];
    g[neg] = u[neg][jj] - u[neg][ii];
    const S t = g[pos] / (g[pos] - g[neg]);
    Point<S> p(cur[0].size());
    for (std::size_t a = 0; a < p.size(); ++a) p[a] = cur[pos][a] + t * (cur[neg][a] - cur[pos][a]);
    auto c1 = cur, c2 = cur;
    c1[neg] = p;
    c2[pos] = std::move(p);
    stack.push_back(std::move(c1));
    stack.push_back(std::move(c2));
  }
  return out;
}

template <class S>
Point<S> project_to_facet(const Point<S>& x, const Point<S>& c, const std::vector<int>& axes, const std::vector<S>& lo,
                          const std::vector<S>& hi, int facet) {
  const auto u = facet_coords(x, c, axes, lo, hi);
  const S t = S(1) / u[facet];
  Point<S> y(x.size());
  for (std::size_t a = 0; a < x.size(); ++a) y[a] = c[a] + (x[a] - c[a]) * t;
  const int a = axes[facet / 2];
  y[a] = facet % 2 ? hi[facet / 2] : lo[facet / 2];
  return y;
}

/// Exact test for c in the convex hull of affinely independent vertices.
inline bool simplex_contains(const RationalSimplex& s, const Point<Rational>& c) {
  const std::size_t n = c.size(), k = s.size();
  Matrix<Rational> ata(k, std::vector<Rational>(k));
  std::vector<Rational> atb(k);
  auto col = [&](std::size_t j, std::size_t r) { return r < n ? s[j][r] : Rational(1); };
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j)
      for (std::size_t r = 0; r <= n; ++r) ata[i][j] += col(i, r) * col(j, r);
    for (std::size_t r = 0; r <= n; ++r) atb[i] += col(i, r) * (r < n ? c[r] : Rational(1));
  }
  std::vector<Rational> lam;
  if (!solve_linear(ata, atb, lam)) return false;
  for (const auto& l : lam)
    if (l < 0) return false;
  for (std::size_t r = 0; r < n; ++r) {
    Rational acc = 0;
    for (std::size_t j = 0; j < k; ++j) acc += lam[j] * s[j][r];
    if (acc != c[r]) return false;
  }
  return true;
}

inline std::vector<Point<double>> to_double_simplex(const RationalSimplex& s) {
  std::vector<Point<double>> out;
  for (const auto& v : s) out.push_back(to_doubles(v));
  return out;
}

inline std::uint64_t face_seed(std::uint64_t seed, const FaceKey& key) {
  std::uint64_t h = 1469598103934665603ull ^ seed;
  auto mix = [&](std::uint64_t v) {
    for (int b = 0; b < 8; ++b) {
      h ^= (v >> (8 * b)) & 0xff;
      h *= 1099511628211ull;
    }
  };
  for (long a : key.anchor) mix(static_cast<std::uint64_t>(a));
  mix(0xfeedull);
  for (int a : key.axes) mix(static_cast<std::uint64_t>(a));
  return h;
}

/// Homotopy prism between a cone piece and its projection (staircase order).
/// `flat` marks a piece whose affine hull contains the center: the prism is then degenerate.
inline void add_homotopy(RationalChain& out, const RationalSimplex& x, const RationalSimplex& y, const Rational& coef,
                         bool flat) {
  if (flat) return;
  const int k = static_cast<int>(x.size()) - 1;
  for (int j = 0; j <= k; ++j) {
    if (x[j] == y[j]) continue;
    std::vector<Point<Rational>> p;
    for (int i = 0; i <= j; ++i) p.push_back(x[i]);
    for (int i = j; i <= k; ++i) p.push_back(y[i]);
    const int sign = sort_with_sign(p);
    out.add_cell(Simplex<Rational>{std::move(p)}, ((j % 2 == 0) == (sign > 0)) ? coef : Rational(-coef));
  }
}

struct FaceWork {
  std::vector<Piece> chain, bd;
};

/// Mass of the projection plus mass of the swept prism, for pieces pushed from c.
inline std::pair<double, double> push_masses(const std::vector<Piece>& pieces, const Point<double>& c,
                                             const std::vector<int>& axes, const std::vector<double>& lo,
                                             const std::vector<double>& hi) {
  double proj = 0, swept = 0;
  for (const auto& piece : pieces) {
    const double w = std::abs(piece.coef.get_d());
    for (const auto& [cone, facet] : cone_pieces<double>(to_double_simplex(piece.verts), c, axes, lo, hi)) {
      std::vector<Point<double>> img;
      for (const auto& v : cone) img.push_back(project_to_facet<double>(v, c, axes, lo, hi, facet));
      proj += w * std::sqrt(std::max(0.0, squared_volume(img)));
      const int k = static_cast<int>(cone.size()) - 1;
      for (int j = 0; j <= k; ++j) {
        std::vector<Point<double>> p(cone.begin(), cone.begin() + j + 1);
        p.insert(p.end(), img.begin() + j, img.end());
        swept += w * std::sqrt(std::max(0.0, squared_volume(p)));
      }
    }
  }
  return {proj, swept};
}

/**
 * @brief Picks, among random interior candidates, the center with the least
 * pushed mass: projected plus swept/eps for the chain, and eps times that for
 * its boundary. Candidates inside either support are skipped.
 */
inline CenterChoice choose_center(const FaceKey& key, const std::vector<Piece>& chain, const std::vector<Piece>& bd,
                                  const Rational& eps, const DeformOptions& opts, std::uint64_t seed) {
  const std::size_t n = key.anchor.size();
  std::mt19937_64 rng(face_seed(seed, key));
  std::uniform_int_distribution<int> coord(4, 60);  // interior of the face, in units of eps/64
  std::vector<double> lo_d, hi_d;
  for (int a : key.axes) {
    lo_d.push_back(Rational(Rational(key.anchor[a]) * eps).get_d());
    hi_d.push_back(Rational(Rational(key.anchor[a] + 1) * eps).get_d());
  }
  const double e = eps.get_d();
  struct Candidate {
    Point<Rational> c;
    double cost;
  };
  std::vector<Candidate> cands;
  for (int k = 0; k < std::max(1, opts.candidates); ++k) {
    Point<Rational> c(n);
    for (std::size_t a = 0; a < n; ++a) c[a] = Rational(key.anchor[a]) * eps;
    for (int a : key.axes) c[a] += eps * make_rational(coord(rng), 64);
    const auto cd = to_doubles(c);
    const auto [pc, sc] = push_masses(chain, cd, key.axes, lo_d, hi_d);
    const auto [pb, sb] = push_masses(bd, cd, key.axes, lo_d, hi_d);
    double cost = pc + sc / e + e * pb + sb;
    if (!std::isfinite(cost)) cost = std::numeric_limits<double>::max();
    cands.push_back({std::move(c), cost});
  }
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return a.cost < b.cost; });
  CenterChoice choice{key.anchor, key.axes, {}, 0, 0};
  for (const auto& cand : cands) {
    bool hit = false;
    for (const auto* list : {&chain, &bd})
      for (const auto& piece : *list) hit = hit || simplex_contains(piece.verts, cand.c);
    if (hit) {
      ++choice.rejected;
      continue;
    }
    choice.center = cand.c;
    choice.pushed_mass = cand.cost;
    return choice;
  }
  std::string where;
  for (long a : key.anchor) where += std::to_string(a) + " ";
  throw DeformationError("center selection failed for the face at grid anchor [ " + where + "]");
}

/// Pushes pieces from the face center onto the face boundary, adding the
/// homotopy (with sign -1) to `sweep`.
inline std::vector<Piece> push_face(const std::vector<Piece>& pieces, const FaceKey& key, const Point<Rational>& c,
                                    const Rational& eps, RationalChain& sweep) {
  std::vector<Rational> lo, hi;
  for (int a : key.axes) {
    lo.push_back(Rational(key.anchor[a]) * eps);
    hi.push_back(Rational(key.anchor[a] + 1) * eps);
  }
  std::vector<Piece> out;
  for (const auto& piece : pieces)
    for (auto& [cone, facet] : cone_pieces<Rational>(piece.verts, c, key.axes, lo, hi)) {
      RationalSimplex with_center = cone;
      with_center.push_back(c);
      const bool flat = is_degenerate(with_center);
      RationalSimplex img;
      for (const auto& v : cone) img.push_back(project_to_facet<Rational>(v, c, key.axes, lo, hi, facet));
      add_homotopy(sweep, cone, img, -piece.coef, flat);
      if (!flat) out.push_back({std::move(img), piece.coef});
    }
  return out;
}

inline std::map<FaceKey, FaceWork> group(const std::vector<Piece>& chain, const std::vector<Piece>& bd,
                                         const Rational& eps) {
  std::map<FaceKey, FaceWork> faces;
  for (const auto& p : chain) faces[face_of(p.verts, eps)].chain.push_back(p);
  for (const auto& p : bd) faces[face_of(p.verts, eps)].bd.push_back(p);
  return faces;
}

inline std::vector<Piece> clip_chain(const RationalChain& t, const Rational& eps) {
  const int n = t.ambient();
  const Point<Rational> origin(n, Rational(0));
  const std::vector<Rational> h(n, eps);
  std::vector<Piece> out;
  const RationalChain st = simplicial(t);
  for (const auto& [cell, a] : st.terms())
    for (auto& piece : clip_to_grid(std::get<Simplex<Rational>>(cell).verts, origin, h))
      if (!is_degenerate(piece)) out.push_back({std::move(piece), a});
  return out;
}

/// Σ |a| vol(σ) over the stored simplices, in floating point.
inline double term_mass(const RationalChain& c) {
  double total = 0;
  for (const auto& [cell, a] : c.terms())
    total += std::abs(a.get_d()) * std::sqrt(std::max(0.0, squared_volume(to_double_simplex(std::get<Simplex<Rational>>(cell).verts))));
  return total;
}

}  // namespace detail

/**
 * @brief T = P + R + ∂S with P a cubical chain on the eps-grid. The identity
 * is checked exactly when opts.verify is set.
 */
inline DeformationResult deform(const RationalChain& t, const Rational& eps, std::uint64_t seed,
                                const DeformOptions& opts = {}) {
  using namespace detail;
  const int n = t.ambient(), m = t.degree();
  if (!(eps > 0)) throw std::invalid_argument("grid size must be positive");
  if (m >= n) throw std::invalid_argument("deformation needs degree m <= n - 1");
  DeformationResult res{RationalChain(n, m), RationalChain(n, m), RationalChain(n, m + 1), eps, 0, 0, false, false, {}};
  res.experimental = n > 3 || m > 2;

  std::vector<Piece> chain = clip_chain(t, eps);
  std::vector<Piece> bd;
  if (m > 0) bd = clip_chain(boundary(simplicial(t)), eps);

  for (int level = n; level > m; --level) {
    auto faces = group(chain, bd, eps);
    std::vector<Piece> next_chain, next_bd;
    for (auto& [key, work] : faces) {
      if (static_cast<int>(key.axes.size()) != level) {
        for (auto& p : work.chain) next_chain.push_back(std::move(p));
        for (auto& p : work.bd) next_bd.push_back(std::move(p));
        continue;
      }
      CenterChoice choice = choose_center(key, work.chain, work.bd, eps, opts, seed);
      for (auto& p : push_face(work.chain, key, choice.center, eps, res.S)) next_chain.push_back(std::move(p));
      for (auto& p : push_face(work.bd, key, choice.center, eps, res.R)) next_bd.push_back(std::move(p));
      res.centers.push_back(std::move(choice));
    }
    chain = std::move(next_chain);
    bd = std::move(next_bd);
  }

  // m-skeleton: X + H(B_Q) has boundary in ∂Q, hence is a constant multiple of Q
  auto faces = group(chain, bd, eps);
  for (auto& [key, work] : faces) {
    if (static_cast<int>(key.axes.size()) < m) {
      if (!work.chain.empty()) throw std::logic_error("chain piece below the m-skeleton");
      continue;
    }
    if (work.chain.empty() && work.bd.empty()) continue;
    RationalChain filled(n, m);
    if (m > 0 && !work.bd.empty()) {
      CenterChoice choice = choose_center(key, {}, work.bd, eps, opts, seed);
      RationalChain h(n, m);
      push_face(work.bd, key, choice.center, eps, h);
      res.R += h;  // h already carries the minus sign
      filled -= h;
      res.centers.push_back(std::move(choice));
    }
    for (const auto& p : work.chain) filled.add_simplex(p.verts, p.coef, Degenerate::Drop);
    // signed m-volume relative to e_axes in units of eps^m
    Rational vol = 0;
    for (const auto& [cell, a] : filled.terms()) {
      const auto& v = std::get<Simplex<Rational>>(cell).verts;
      Matrix<Rational> e(m, std::vector<Rational>(m));
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) e[i][j] = v[j + 1][key.axes[i]] - v[0][key.axes[i]];
      vol += a * (m == 0 ? Rational(1) : determinant(e));
    }
    Rational scale = factorial_q(m);
    for (int i = 0; i < m; ++i) scale *= eps;
    Rational density = vol / scale;
    density.canonicalize();
    Point<Rational> anchor(n);
    for (int a = 0; a < n; ++a) anchor[a] = Rational(key.anchor[a]) * eps;
    if (density != 0) {
      if (m == 0)
        res.P.add_simplex({anchor}, density);
      else
        res.P.add_cube(anchor, key.axes, eps, density);
    }
  }

  const double mt = mass(t).value;
  const double mbt = m > 0 ? mass(boundary(t)).value : 0.0;
  const double e = eps.get_d();
  res.rho_S = mt > 0 ? term_mass(res.S) / (e * mt) : 0.0;
  res.rho_R = mbt > 0 ? term_mass(res.R) / (e * mbt) : 0.0;
  if (opts.verify) {
    RationalChain residual = t - res.P - res.R;
    if (m + 1 <= n && !res.S.empty()) residual -= boundary(res.S);
    res.identity_verified = is_polyhedral_zero(residual);
    if (!res.identity_verified) throw std::logic_error("deformation identity failed");
  }
  return res;
}

struct ConstantsRow {
  int n = 0, m = 0;
  Rational eps;
  int runs = 0;
  double max_rho_R = 0, median_rho_R = 0;
  double max_rho_S = 0, median_rho_S = 0;
  bool all_verified = true;
};

/// Runs deform over a corpus for each grid size and tabulates ρ per (n, m, eps).
inline std::vector<ConstantsRow> empirical_constants(const std::vector<RationalChain>& corpus,
                                                     const std::vector<Rational>& grid_sizes, std::uint64_t seed,
                                                     const DeformOptions& opts = {}) {
  std::map<std::tuple<int, int, Rational>, std::pair<std::vector<double>, std::vector<double>>> acc;
  std::map<std::tuple<int, int, Rational>, bool> verified;
  for (const auto& eps : grid_sizes)
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const auto& t = corpus[i];
      auto r = deform(t, eps, seed + i, opts);
      auto key = std::make_tuple(t.ambient(), t.degree(), eps);
      acc[key].first.push_back(r.rho_R);
      acc[key].second.push_back(r.rho_S);
      auto it = verified.emplace(key, true).first;
      it->second = it->second && (r.identity_verified || !opts.verify);
    }
  auto median = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t k = v.size();
    return k % 2 ? v[k / 2] : 0.5 * (v[k / 2 - 1] + v[k / 2]);
  };
  std::vector<ConstantsRow> rows;
  for (auto& [key, vals] : acc) {
    ConstantsRow row;
    std::tie(row.n, row.m, row.eps) = key;
    row.runs = static_cast<int>(vals.first.size());
    row.max_rho_R = *std::max_element(vals.first.begin(), vals.first.end());
    row.max_rho_S = *std::max_element(vals.second.begin(), vals.second.end());
    row.median_rho_R = median(vals.first);
    row.median_rho_S = median(vals.second);
    row.all_verified = verified[key];
    rows.push_back(row);
  }
  return rows;
}

}  // namespace geomint
