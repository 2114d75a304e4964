/**
 * @file chain_ops.hpp
 * @brief Prism homotopies, support neighborhoods, maximal growth and overlap detection.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/lp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <string>
#include <vector>

namespace geomint {

template <class S>
struct HomotopyChains {
  Chain<S> U;  // sweep of the boundary, degree m
  Chain<S> V;  // sweep of the chain, degree m+1
};

namespace detail {

/// Staircase triangulation of the prism [v, v + x], signed so that
/// boundary(prism(s)) = translate(s) - s - prism(boundary(s)).
template <class S>
void add_prism(Chain<S>& out, const std::vector<Point<S>>& verts, const Point<S>& x, const S& coef) {
  const int k = static_cast<int>(verts.size()) - 1;
  for (int j = 0; j <= k; ++j) {
    std::vector<Point<S>> p;
    p.reserve(k + 2);
    for (int i = 0; i <= j; ++i) p.push_back(verts[i]);
    for (int i = j; i <= k; ++i) p.push_back(verts[i] + x);
    out.add_simplex(std::move(p), (j % 2 == 0) ? coef : S(-coef), Degenerate::Drop);
  }
}

template <class S>
Chain<S> prism(const Chain<S>& t, const Point<S>& x) {
  Chain<S> out(t.ambient(), t.degree() + 1);
  for (const auto& [cell, a] : t.terms()) add_prism(out, std::get<Simplex<S>>(cell).verts, x, a);
  return out;
}

}  // namespace detail

/**
 * @brief Chains U (degree m) and V (degree m+1) swept by y -> y + t x with
 * translate(T, x) - T = U - boundary(V).
 *
 * Requires m < n since V has degree m + 1.
 */
template <class S>
HomotopyChains<S> homotopy_chains(const Chain<S>& t, const Point<S>& x) {
  if (t.degree() >= t.ambient()) throw ChainError("homotopy chains need degree m < n");
  if (static_cast<int>(x.size()) != t.ambient()) throw ChainError("translation vector has wrong dimension");
  const Chain<S> s = simplicial(t);
  HomotopyChains<S> out{Chain<S>(t.ambient(), t.degree()), -detail::prism(s, x)};
  if (t.degree() > 0) out.U = detail::prism(boundary(s), x);
  return out;
}

// ---------------------------------------------------------------------------
// Distances to the support
// ---------------------------------------------------------------------------

/// Euclidean distance from x to the convex hull of `verts` (a nondegenerate simplex).
inline double point_simplex_distance(const std::vector<std::vector<double>>& verts, const std::vector<double>& x) {
  const std::size_t k = verts.size() - 1;
  const std::size_t n = x.size();
  auto dist_to = [&](const std::vector<double>& p) {
    double d = 0;
    for (std::size_t c = 0; c < n; ++c) d += (p[c] - x[c]) * (p[c] - x[c]);
    return std::sqrt(d);
  };
  if (k == 0) return dist_to(verts[0]);
  // least-squares projection onto the affine hull
  Matrix<double> g(k, std::vector<double>(k));
  std::vector<double> rhs(k), lam;
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      double s = 0;
      for (std::size_t c = 0; c < n; ++c) s += (verts[i + 1][c] - verts[0][c]) * (verts[j + 1][c] - verts[0][c]);
      g[i][j] = s;
    }
    double s = 0;
    for (std::size_t c = 0; c < n; ++c) s += (verts[i + 1][c] - verts[0][c]) * (x[c] - verts[0][c]);
    rhs[i] = s;
  }
  if (solve_linear(g, rhs, lam)) {
    double l0 = 1;
    bool inside = true;
    for (double l : lam) {
      l0 -= l;
      inside = inside && l >= 0;
    }
    if (inside && l0 >= 0) {
      std::vector<double> p = verts[0];
      for (std::size_t i = 0; i < k; ++i)
        for (std::size_t c = 0; c < n; ++c) p[c] += lam[i] * (verts[i + 1][c] - verts[0][c]);
      return dist_to(p);
    }
  }
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t drop = 0; drop <= k; ++drop) {
    std::vector<std::vector<double>> face;
    for (std::size_t i = 0; i <= k; ++i)
      if (i != drop) face.push_back(verts[i]);
    best = std::min(best, point_simplex_distance(face, x));
  }
  return best;
}

template <class S>
double distance_to_support(const Chain<S>& t, const std::vector<double>& x) {
  double best = std::numeric_limits<double>::infinity();
  const Chain<S> st = simplicial(t);
  for (const auto& [cell, a] : st.terms()) {
    std::vector<std::vector<double>> verts;
    for (const auto& v : std::get<Simplex<S>>(cell).verts) verts.push_back(to_doubles(v));
    best = std::min(best, point_simplex_distance(verts, x));
  }
  return best;
}

/// Membership predicate for N(T, R) minus the closed r-neighborhood of spt T.
template <class S>
std::function<bool(const std::vector<double>&)> support_neighborhood(const Chain<S>& t, double R, double r) {
  if (!(r >= 0) || !(r < R)) throw std::invalid_argument("support_neighborhood needs 0 <= r < R");
  Chain<S> s = simplicial(t);
  return [s = std::move(s), R, r](const std::vector<double>& x) {
    const double d = distance_to_support(s, x);
    return d < R && (r == 0 ? true : d > r);
  };
}

// ---------------------------------------------------------------------------
// Maximal growth
// ---------------------------------------------------------------------------

namespace detail {

/// Length of segment [a, b] inside the closed ball B(c, r).
inline double segment_ball_length(const std::vector<double>& a, const std::vector<double>& b,
                                  const std::vector<double>& c, double r) {
  double ee = 0, ed = 0, dd = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double e = b[i] - a[i], d = a[i] - c[i];
    ee += e * e;
    ed += e * d;
    dd += d * d;
  }
  const double disc = ed * ed - ee * (dd - r * r);
  if (disc <= 0 || ee == 0) return 0.0;
  const double sq = std::sqrt(disc);
  const double t0 = std::max(0.0, (-ed - sq) / ee), t1 = std::min(1.0, (-ed + sq) / ee);
  return t1 > t0 ? (t1 - t0) * std::sqrt(ee) : 0.0;
}

/// Signed area of disk(0, r) intersected with triangle (0, a, b) in the plane.
inline double disk_wedge_area(double ax, double ay, double bx, double by, double r) {
  auto sector = [r](double px, double py, double qx, double qy) {
    return 0.5 * r * r * std::atan2(px * qy - py * qx, px * qx + py * qy);
  };
  auto tri = [](double px, double py, double qx, double qy) { return 0.5 * (px * qy - py * qx); };
  const double dx = bx - ax, dy = by - ay;
  const double A = dx * dx + dy * dy, B = ax * dx + ay * dy, C = ax * ax + ay * ay - r * r;
  if (A == 0) return 0.0;
  const double disc = B * B - A * C;
  if (disc <= 0) return sector(ax, ay, bx, by);
  const double sq = std::sqrt(disc);
  const double t0 = std::clamp((-B - sq) / A, 0.0, 1.0), t1 = std::clamp((-B + sq) / A, 0.0, 1.0);
  const double px = ax + t0 * dx, py = ay + t0 * dy, qx = ax + t1 * dx, qy = ay + t1 * dy;
  return sector(ax, ay, px, py) + tri(px, py, qx, qy) + sector(qx, qy, bx, by);
}

/// Area of a triangle in R^n inside the ball B(c, r).
inline double triangle_ball_area(const std::vector<std::vector<double>>& v, const std::vector<double>& c, double r) {
  const std::size_t n = c.size();
  std::vector<double> e1(n), e2(n);
  for (std::size_t i = 0; i < n; ++i) {
    e1[i] = v[1][i] - v[0][i];
    e2[i] = v[2][i] - v[0][i];
  }
  const double l1 = norm2(e1);
  for (auto& x : e1) x /= l1;
  double p = 0;
  for (std::size_t i = 0; i < n; ++i) p += e1[i] * e2[i];
  for (std::size_t i = 0; i < n; ++i) e2[i] -= p * e1[i];
  const double l2 = norm2(e2);
  for (auto& x : e2) x /= l2;
  auto coords = [&](const std::vector<double>& y) {
    double a = 0, b = 0;
    for (std::size_t i = 0; i < n; ++i) {
      a += (y[i] - v[0][i]) * e1[i];
      b += (y[i] - v[0][i]) * e2[i];
    }
    return std::pair{a, b};
  };
  auto [cx, cy] = coords(c);
  double off = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double q = v[0][i] + cx * e1[i] + cy * e2[i] - c[i];
    off += q * q;
  }
  if (off >= r * r) return 0.0;
  const double rr = std::sqrt(r * r - off);
  double area = 0;
  for (int i = 0; i < 3; ++i) {
    auto [ax, ay] = coords(v[i]);
    auto [bx, by] = coords(v[(i + 1) % 3]);
    area += disk_wedge_area(ax - cx, ay - cy, bx - cx, by - cy, rr);
  }
  return std::abs(area);
}

/// H^k of a k-simplex inside a ball by recursive bisection (k >= 3).
inline double simplex_ball_measure(const std::vector<std::vector<double>>& v, const std::vector<double>& c, double r,
                                   int depth) {
  const double vol = std::sqrt(std::max(0.0, squared_volume(v)));
  double dmax = 0;
  bool all_in = true;
  for (const auto& p : v) {
    double d = 0;
    for (std::size_t i = 0; i < c.size(); ++i) d += (p[i] - c[i]) * (p[i] - c[i]);
    dmax = std::max(dmax, d);
    all_in = all_in && d <= r * r;
  }
  if (all_in) return vol;
  if (point_simplex_distance(v, c) > r) return 0.0;
  if (depth == 0) {
    std::vector<double> mid(c.size(), 0.0);
    for (const auto& p : v)
      for (std::size_t i = 0; i < c.size(); ++i) mid[i] += p[i] / v.size();
    double d = 0;
    for (std::size_t i = 0; i < c.size(); ++i) d += (mid[i] - c[i]) * (mid[i] - c[i]);
    return d <= r * r ? vol : 0.0;
  }
  std::size_t bi = 0, bj = 1;
  double best = -1;
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = i + 1; j < v.size(); ++j) {
      double d = 0;
      for (std::size_t k = 0; k < c.size(); ++k) d += (v[i][k] - v[j][k]) * (v[i][k] - v[j][k]);
      if (d > best) {
        best = d;
        bi = i;
        bj = j;
      }
    }
  std::vector<double> mid(c.size());
  for (std::size_t k = 0; k < c.size(); ++k) mid[k] = 0.5 * (v[bi][k] + v[bj][k]);
  auto left = v, right = v;
  left[bj] = mid;
  right[bi] = mid;
  return simplex_ball_measure(left, c, r, depth - 1) + simplex_ball_measure(right, c, r, depth - 1);
}

inline double cell_ball_measure(const std::vector<std::vector<double>>& v, const std::vector<double>& c, double r) {
  switch (v.size()) {
    case 1: {
      double d = 0;
      for (std::size_t i = 0; i < c.size(); ++i) d += (v[0][i] - c[i]) * (v[0][i] - c[i]);
      return d <= r * r ? 1.0 : 0.0;
    }
    case 2:
      return segment_ball_length(v[0], v[1], c, r);
    case 3:
      return triangle_ball_area(v, c, r);
    default:
      return simplex_ball_measure(v, c, r, 14);
  }
}

}  // namespace detail

/// \f$\|T\|(\bar B(c, r))\f$.
template <class S>
double ball_measure(const Chain<S>& t, const std::vector<double>& c, double r) {
  double total = 0;
  const Chain<S> st = simplicial(t);
  for (const auto& [cell, a] : st.terms()) {
    std::vector<std::vector<double>> verts;
    for (const auto& v : std::get<Simplex<S>>(cell).verts) verts.push_back(to_doubles(v));
    total += std::abs(to_double(a)) * detail::cell_ball_measure(verts, c, r);
  }
  return total;
}

struct ThetaOptions {
  int level = 4;      // centers: barycentric lattice with denominator 2^level on every simplex
  int radius_min = -6;  // radii 2^j for radius_min <= j <= radius_max
  int radius_max = 2;
};

struct ThetaEstimate {
  double value = 0;
  std::size_t samples = 0;
  std::vector<double> center;
  double radius = 0;
};

/**
 * @brief Sampled lower estimate of the maximal growth sup ||T||(B(x,r)) / r^m.
 * Center sets are nested in `level`, so the estimate is nondecreasing in it.
 */
template <class S>
ThetaEstimate theta_growth(const Chain<S>& t, const ThetaOptions& opts = {}) {
  if (t.empty()) throw ChainError("maximal growth of the zero chain is undefined");
  const Chain<S> s = simplicial(t);
  const int m = s.degree();
  const int denom = 1 << opts.level;
  std::vector<std::vector<double>> centers;
  for (const auto& [cell, a] : s.terms()) {
    std::vector<std::vector<double>> verts;
    for (const auto& v : std::get<Simplex<S>>(cell).verts) verts.push_back(to_doubles(v));
    std::vector<int> k(m + 1, 0);
    std::function<void(int, int)> rec = [&](int pos, int left) {
      if (pos == m) {
        k[pos] = left;
        std::vector<double> x(verts[0].size(), 0.0);
        for (int i = 0; i <= m; ++i)
          for (std::size_t c = 0; c < x.size(); ++c) x[c] += double(k[i]) / denom * verts[i][c];
        centers.push_back(std::move(x));
        return;
      }
      for (int v = 0; v <= left; ++v) {
        k[pos] = v;
        rec(pos + 1, left - v);
      }
    };
    rec(0, denom);
  }
  std::sort(centers.begin(), centers.end());
  centers.erase(std::unique(centers.begin(), centers.end()), centers.end());
  ThetaEstimate out;
  for (const auto& c : centers)
    for (int j = opts.radius_min; j <= opts.radius_max; ++j) {
      const double r = std::ldexp(1.0, j);
      const double v = ball_measure(s, c, r) / std::pow(r, m);
      ++out.samples;
      if (v > out.value) {
        out.value = v;
        out.center = c;
        out.radius = r;
      }
    }
  return out;
}

// ---------------------------------------------------------------------------
// Overlap detection
// ---------------------------------------------------------------------------

namespace detail {

/// Whether the relative interiors of two simplices spanning the same m-plane meet:
/// max t s.t. sum l_i a_i = sum u_j b_j, sum l = sum u = 1, l_i, u_j >= t is positive.
inline bool interiors_meet(const std::vector<Point<Rational>>& a, const std::vector<Point<Rational>>& b) {
  const int n = static_cast<int>(a[0].size());
  const int ka = static_cast<int>(a.size()), kb = static_cast<int>(b.size());
  const int t = ka + kb, nv = t + 1 + ka + kb;
  LpProblem<Rational> lp;
  lp.num_vars = nv;
  lp.c.assign(nv, Rational(0));
  lp.c[t] = -1;
  lp.upper.assign(nv, std::nullopt);
  lp.upper[t] = Rational(1);
  SparseRow<Rational> sa, sb;
  for (int i = 0; i < ka; ++i) sa.push_back({i, Rational(1)});
  for (int j = 0; j < kb; ++j) sb.push_back({ka + j, Rational(1)});
  lp.rows.push_back(sa);
  lp.b.push_back(1);
  lp.rows.push_back(sb);
  lp.b.push_back(1);
  for (int d = 0; d < n; ++d) {
    SparseRow<Rational> r;
    for (int i = 0; i < ka; ++i)
      if (a[i][d] != 0) r.push_back({i, a[i][d]});
    for (int j = 0; j < kb; ++j)
      if (b[j][d] != 0) r.push_back({ka + j, -b[j][d]});
    lp.rows.push_back(r);
    lp.b.push_back(0);
  }
  for (int i = 0; i < ka + kb; ++i) {
    lp.rows.push_back({{i, Rational(1)}, {t, Rational(-1)}, {t + 1 + i, Rational(-1)}});
    lp.b.push_back(0);
  }
  const auto res = lp_solve(lp);
  return res.status == LpStatus::Optimal && sgn(res.objective) < 0;
}

}  // namespace detail

/**
 * @brief Pairs of stored cells (described) whose supports overlap in positive
 * m-dimensional measure. Mass is computed from the stored cells, so such pairs
 * make mass an overestimate of the mass of the polyhedral chain.
 */
inline std::vector<std::pair<std::string, std::string>> find_overlaps(const RationalChain& t) {
  std::vector<std::pair<std::string, std::string>> out;
  if (t.degree() == 0) return out;
  std::vector<std::pair<Cell<Rational>, std::vector<Point<Rational>>>> cells;
  for (const auto& [cell, a] : t.terms()) {
    if (const auto* s = std::get_if<Simplex<Rational>>(&cell)) {
      cells.push_back({cell, s->verts});
    } else {
      for (auto& [verts, sign] : kuhn_simplices(std::get<CubeCell<Rational>>(cell))) cells.push_back({cell, verts});
    }
  }
  std::map<std::pair<Matrix<Rational>, Point<Rational>>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cells.size(); ++i) groups[detail::affine_hull_key(cells[i].second)].push_back(i);
  std::set<std::pair<std::string, std::string>> seen;
  for (const auto& [key, members] : groups)
    for (std::size_t x = 0; x < members.size(); ++x)
      for (std::size_t y = x + 1; y < members.size(); ++y) {
        const auto& [ca, va] = cells[members[x]];
        const auto& [cb, vb] = cells[members[y]];
        if (ca == cb) continue;  // Kuhn pieces of one cube
        bool boxes_meet = true;
        for (std::size_t d = 0; d < va[0].size() && boxes_meet; ++d) {
          Rational alo = va[0][d], ahi = alo, blo = vb[0][d], bhi = blo;
          for (const auto& v : va) alo = std::min(alo, v[d]), ahi = std::max(ahi, v[d]);
          for (const auto& v : vb) blo = std::min(blo, v[d]), bhi = std::max(bhi, v[d]);
          boxes_meet = ahi > blo && bhi > alo;
          if (alo == ahi && blo == bhi && alo == blo) boxes_meet = true;
        }
        if (!boxes_meet || !detail::interiors_meet(va, vb)) continue;
        std::pair<std::string, std::string> p{describe(ca), describe(cb)};
        if (seen.insert(p).second) out.push_back(std::move(p));
      }
  return out;
}

}  // namespace geomint
