/**
 * @file modulus.hpp
 * @brief p-modulus of finite chain families and capacity lower bounds over
 * piecewise-constant grid densities.
 */
#pragma once

#include "geomint/analysis.hpp"
#include "geomint/chain.hpp"
#include "geomint/clip.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <vector>

namespace geomint {

/// Regular grid over a rational box; cells are indexed like GridField (axis 0 fastest).
struct ModulusGrid {
  std::vector<Rational> lo, hi;
  std::vector<int> shape;

  static ModulusGrid unit_cube(int n, int cells) {
    return {std::vector<Rational>(n, Rational(0)), std::vector<Rational>(n, Rational(1)), std::vector<int>(n, cells)};
  }
  int dim() const { return static_cast<int>(lo.size()); }
  std::vector<Rational> spacing() const {
    std::vector<Rational> h(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) h[i] = (hi[i] - lo[i]) / shape[i];
    return h;
  }
  std::size_t cells() const {
    std::size_t c = 1;
    for (int s : shape) c *= s;
    return c;
  }
  GridField field() const {
    std::vector<double> l(lo.size()), u(lo.size());
    for (std::size_t i = 0; i < lo.size(); ++i) l[i] = lo[i].get_d(), u[i] = hi[i].get_d();
    return GridField(l, u, shape);
  }
};

/// Sparse mass measure of one chain over grid cells: (cell id, measure).
using CellMeasure = std::vector<std::pair<std::size_t, double>>;

/**
 * @brief ‖T‖(c) for every grid cell c, by exact clipping of the simplices of T
 * against the grid. A piece lying in a shared face is split equally among the
 * grid cells that contain it; mass outside the grid is dropped.
 */
inline CellMeasure cell_measure(const RationalChain& t, const ModulusGrid& grid) {
  const int n = grid.dim();
  if (t.ambient() != n) throw std::invalid_argument("chain and grid dimensions differ");
  const auto h = grid.spacing();
  const GridField layout = grid.field();
  std::map<std::size_t, double> acc;
  const RationalChain st = simplicial(t);
  for (const auto& [cell, a] : st.terms()) {
    const auto& verts = std::get<Simplex<Rational>>(cell).verts;
    const double weight = std::abs(a.get_d());
    for (const auto& piece : clip_to_grid(verts, grid.lo, h)) {
      const double vol = std::sqrt(std::max(0.0, squared_volume(piece).get_d()));
      if (vol == 0) continue;
      const CellLocation loc = locate_piece(piece, grid.lo, h);
      std::vector<std::size_t> owners;
      std::vector<int> idx(n);
      std::vector<long> cur = loc.first;
      while (true) {
        bool in = true;
        for (int i = 0; i < n; ++i) {
          in = in && cur[i] >= 0 && cur[i] < grid.shape[i];
          idx[i] = static_cast<int>(cur[i]);
        }
        if (in) owners.push_back(layout.flatten(idx));
        int i = 0;
        while (i < n && ++cur[i] > loc.last[i]) cur[i] = loc.first[i], ++i;
        if (i == n) break;
      }
      for (std::size_t o : owners) acc[o] += weight * vol / static_cast<double>(owners.size());
    }
  }
  return CellMeasure(acc.begin(), acc.end());
}

struct ModulusOptions {
  double gap_tol = 1e-9;
  int max_sweeps = 200000;
  int threads = 1;
};

enum class ModulusConvention { Finite, PlusInfinityEmptyAdmissible };

struct ModulusResult {
  double value = 0;
  double lower_bound = 0;  // dual objective
  double relative_gap = 0;
  std::vector<GridField> density;  // one field per exponent block
  std::vector<double> activity;    // ∫ f d‖T_i‖ for the reported density
  std::vector<double> multipliers;
  int iterations = 0;
  bool converged = false;
  ModulusConvention convention = ModulusConvention::Finite;
  bool finite() const { return convention == ModulusConvention::Finite; }
};

namespace detail {

struct DensityBlock {
  double exponent;
  double cell_volume;
  std::size_t offset;
};

/// min Σ_v w_v f_v^{p_v} s.t. Σ_v μ_iv f_v >= 1, by dual coordinate ascent with
/// the power-law inner minimizer f_v = (s_v / (p_v w_v))^{1/(p_v-1)}.
inline ModulusResult solve_modulus_program(const std::vector<DensityBlock>& blocks, std::size_t num_vars,
                                           const std::vector<CellMeasure>& rows, const ModulusGrid& grid,
                                           const ModulusOptions& opts) {
  ModulusResult out;
  const std::size_t k = rows.size();
  std::vector<double> p(num_vars), w(num_vars);
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const std::size_t end = b + 1 < blocks.size() ? blocks[b + 1].offset : num_vars;
    for (std::size_t v = blocks[b].offset; v < end; ++v) p[v] = blocks[b].exponent, w[v] = blocks[b].cell_volume;
  }
  for (const auto& r : rows) {
    double total = 0;
    for (const auto& [v, mu] : r) total += mu;
    if (!(total > 0)) {
      out.value = out.lower_bound = std::numeric_limits<double>::infinity();
      out.convention = ModulusConvention::PlusInfinityEmptyAdmissible;
      out.converged = true;
      return out;
    }
  }
  auto density = [&](std::size_t v, double s) {
    if (s <= 0) return 0.0;
    return std::pow(s / (p[v] * w[v]), 1.0 / (p[v] - 1.0));
  };
  std::vector<double> lambda(k, 0.0), s(num_vars, 0.0);
  std::vector<double> act(k);
  std::vector<double> f(num_vars);
  for (int sweep = 1; sweep <= opts.max_sweeps; ++sweep) {
    for (std::size_t i = 0; i < k; ++i) {
      const auto& r = rows[i];
      // phi(l) = activity of row i at multiplier l, with its derivative
      auto phi = [&](double li, double* slope) {
        double sum = 0, ds = 0;
        for (const auto& [v, mu] : r) {
          const double sv = s[v] + (li - lambda[i]) * mu;
          const double fv = density(v, sv);
          sum += mu * fv;
          if (fv > 0) ds += mu * mu * fv / ((p[v] - 1.0) * sv);
        }
        if (slope) *slope = ds;
        return sum;
      };
      double target;
      if (phi(0.0, nullptr) >= 1.0) {
        target = 0.0;
      } else {
        double lo = 0, hi = std::max(lambda[i], 1e-12);
        while (phi(hi, nullptr) < 1.0) lo = hi, hi *= 2;
        // safeguarded Newton inside the bracket [lo, hi]
        double x = lambda[i] > lo && lambda[i] < hi ? lambda[i] : 0.5 * (lo + hi);
        for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
          double slope = 0;
          const double g = phi(x, &slope) - 1.0;
          if (g == 0) {
            lo = hi = x;
            break;
          }
          (g < 0 ? lo : hi) = x;
          double next = slope > 0 ? x - g / slope : 0.5 * (lo + hi);
          if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
          if (std::abs(next - x) <= 1e-15 * x) {
            x = next;
            break;
          }
          x = next;
        }
        target = lo == hi ? lo : x;
      }
      const double delta = target - lambda[i];
      if (delta != 0)
        for (const auto& [v, mu] : r) s[v] += delta * mu;
      lambda[i] = target;
    }
    // resynchronize s to limit drift
    if (sweep % 64 == 0) {
      std::fill(s.begin(), s.end(), 0.0);
      for (std::size_t i = 0; i < k; ++i)
        for (const auto& [v, mu] : rows[i]) s[v] += lambda[i] * mu;
    }
    double cost = 0, dual = 0;
    for (std::size_t v = 0; v < num_vars; ++v) {
      f[v] = density(v, s[v]);
      cost += w[v] * std::pow(f[v], p[v]);
    }
    for (double l : lambda) dual += l;
    for (std::size_t v = 0; v < num_vars; ++v) dual -= (p[v] - 1.0) * w[v] * std::pow(f[v], p[v]);
    double min_act = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < k; ++i) {
      act[i] = 0;
      for (const auto& [v, mu] : rows[i]) act[i] += mu * f[v];
      min_act = std::min(min_act, act[i]);
    }
    out.iterations = sweep;
    if (!(min_act > 0)) continue;
    double primal = 0;
    for (std::size_t v = 0; v < num_vars; ++v) primal += w[v] * std::pow(f[v] / min_act, p[v]);
    out.value = primal;
    out.lower_bound = dual;
    out.relative_gap = (primal - dual) / std::max(primal, 1e-300);
    if (out.relative_gap <= opts.gap_tol) {
      out.converged = true;
      break;
    }
  }
  double min_act = *std::min_element(act.begin(), act.end());
  for (auto& a : act) a /= min_act;
  out.activity = act;
  out.multipliers = lambda;
  for (const auto& b : blocks) {
    GridField g = grid.field();
    for (std::size_t c = 0; c < g.size(); ++c) g.data()[c] = f[b.offset + c] / min_act;
    out.density.push_back(std::move(g));
  }
  return out;
}

inline std::vector<CellMeasure> measures(const std::vector<const RationalChain*>& chains, const ModulusGrid& grid,
                                         int threads) {
  std::vector<CellMeasure> out(chains.size());
  const int workers = std::max(1, std::min<int>(threads, static_cast<int>(chains.size())));
  if (workers == 1) {
    for (std::size_t i = 0; i < chains.size(); ++i) out[i] = cell_measure(*chains[i], grid);
    return out;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < workers; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < chains.size(); i += workers) out[i] = cell_measure(*chains[i], grid);
    });
  for (auto& th : pool) th.join();
  return out;
}

inline void check_exponent(double p) {
  if (!(p > 1) || !std::isfinite(p)) throw std::invalid_argument("modulus exponent must lie in (1, inf)");
}

}  // namespace detail

/// M_p of a finite family; +∞ (flagged) when some member has no mass in the grid.
inline ModulusResult p_modulus(const std::vector<RationalChain>& family, const ModulusGrid& grid, double p,
                               const ModulusOptions& opts = {}) {
  if (family.empty()) throw std::invalid_argument("p_modulus of an empty family");
  detail::check_exponent(p);
  std::vector<const RationalChain*> ptrs;
  for (const auto& t : family) ptrs.push_back(&t);
  const auto rows = detail::measures(ptrs, grid, opts.threads);
  const double vol = grid.field().cell_volume();
  return detail::solve_modulus_program({{p, vol, 0}}, grid.cells(), rows, grid, opts);
}

/**
 * @brief p-modulus of the given fillings: a lower bound for the capacity of
 * the cycle family. Every filling's boundary must equal one of the cycles.
 */
inline ModulusResult capacity_lower_bound(const std::vector<RationalChain>& cycles,
                                          const std::vector<RationalChain>& fillings, const ModulusGrid& grid, double p,
                                          const ModulusOptions& opts = {}) {
  for (std::size_t j = 0; j < fillings.size(); ++j) {
    const RationalChain b = boundary(fillings[j]);
    bool found = false;
    for (const auto& c : cycles) found = found || (c.degree() == b.degree() && equivalent(b, c));
    if (!found) throw std::invalid_argument("filling " + std::to_string(j) + " does not bound any listed cycle");
  }
  return p_modulus(fillings, grid, p, opts);
}

struct Decomposition {
  RationalChain R, S;
};

/**
 * @brief min ∫ f1^q + ∫ f2^p subject to ∫ f1 d‖R‖ + ∫ f2 d‖S‖ >= 1 for every
 * listed decomposition; each must satisfy R + ∂S = some target exactly.
 */
inline ModulusResult qp_capacity_lower_bound(const std::vector<RationalChain>& targets,
                                             const std::vector<Decomposition>& decomps, const ModulusGrid& grid,
                                             double q, double p, const ModulusOptions& opts = {}) {
  if (decomps.empty()) throw std::invalid_argument("qp_capacity_lower_bound of an empty family");
  detail::check_exponent(q);
  detail::check_exponent(p);
  for (std::size_t j = 0; j < decomps.size(); ++j) {
    const auto& d = decomps[j];
    if (d.S.degree() != d.R.degree() + 1) throw std::invalid_argument("decomposition degrees do not match");
    const RationalChain sum = d.R + boundary(d.S);
    bool found = false;
    for (const auto& t : targets) found = found || (t.degree() == sum.degree() && equivalent(sum, t));
    if (!found) throw std::invalid_argument("decomposition " + std::to_string(j) + " does not sum to a target");
  }
  std::vector<const RationalChain*> rs, ss;
  for (const auto& d : decomps) rs.push_back(&d.R), ss.push_back(&d.S);
  const auto mr = detail::measures(rs, grid, opts.threads);
  const auto ms = detail::measures(ss, grid, opts.threads);
  const std::size_t cells = grid.cells();
  std::vector<CellMeasure> rows(decomps.size());
  for (std::size_t i = 0; i < decomps.size(); ++i) {
    rows[i] = mr[i];
    for (const auto& [c, mu] : ms[i]) rows[i].emplace_back(cells + c, mu);
  }
  const double vol = grid.field().cell_volume();
  return detail::solve_modulus_program({{q, vol, 0}, {p, vol, cells}}, 2 * cells, rows, grid, opts);
}

}  // namespace geomint
