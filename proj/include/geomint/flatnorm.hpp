/**
 * @file flatnorm.hpp
 * @brief Finite cell complexes with integer boundary matrices, embedding of
 * chains into them, and the flat norm relative to a complex as an LP.
 */
#pragma once

#include "geomint/chain.hpp"
#include "geomint/comass.hpp"
#include "geomint/lp.hpp"

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace geomint {

/// Column-sparse integer matrix: column j lists (row, value).
struct SparseIntMatrix {
  int rows = 0;
  std::vector<std::vector<std::pair<int, int>>> cols;

  std::size_t nonzeros() const {
    std::size_t k = 0;
    for (const auto& c : cols) k += c.size();
    return k;
  }
  /// Exact product with another sparse matrix, as a map from (row, col) to value.
  std::map<std::pair<int, int>, long> times(const SparseIntMatrix& rhs) const {
    std::map<std::pair<int, int>, long> out;
    for (std::size_t j = 0; j < rhs.cols.size(); ++j)
      for (const auto& [k, v] : rhs.cols[j])
        for (const auto& [i, w] : cols[k]) {
          auto& e = out[{i, static_cast<int>(j)}];
          e += static_cast<long>(v) * w;
          if (e == 0) out.erase({i, static_cast<int>(j)});
        }
    return out;
  }
};

class NotRepresentable : public std::runtime_error {
 public:
  NotRepresentable(const std::string& what, std::vector<std::string> cells)
      : std::runtime_error(what), offending(std::move(cells)) {}
  std::vector<std::string> offending;
};

/// Finite complex of canonical cells with boundary matrices bd[k] : C_k -> C_{k-1}.
class ChainComplex {
 public:
  ChainComplex() = default;
  explicit ChainComplex(int n) : n_(n), cells_(n + 1), index_(n + 1), bd_(n + 1) {}

  int ambient() const { return n_; }
  int max_dim() const {
    int k = -1;
    for (int d = 0; d <= n_; ++d)
      if (!cells_[d].empty()) k = d;
    return k;
  }
  bool cubical() const { return eps_.has_value(); }
  const std::optional<Rational>& eps() const { return eps_; }
  const std::vector<Cell<Rational>>& cells(int k) const { return cells_.at(k); }
  std::size_t count(int k) const { return cells_.at(k).size(); }
  const SparseIntMatrix& boundary_matrix(int k) const { return bd_.at(k); }
  /// Vertices are stored as 0-simplices whichever way they were produced.
  static Cell<Rational> canonical(const Cell<Rational>& c) {
    if (const auto* q = std::get_if<CubeCell<Rational>>(&c); q && q->axes.empty()) return Simplex<Rational>{{q->anchor}};
    return c;
  }
  std::optional<int> find(const Cell<Rational>& raw) const {
    const Cell<Rational> c = canonical(raw);
    const int k = cell_dim(c);
    auto it = index_[k].find(c);
    if (it == index_[k].end()) return std::nullopt;
    return it->second;
  }
  double cell_mass(int k, int id) const { return cell_volume(cells_[k][id]); }
  /// Exact cell mass when it is rational (always for cubes).
  std::optional<Rational> exact_cell_mass(int k, int id) const {
    Rational root;
    if (is_perfect_square(cell_squared_volume(cells_[k][id]), &root)) return root;
    return std::nullopt;
  }

  int add_cell(const Cell<Rational>& raw) {
    const Cell<Rational> c = canonical(raw);
    const int k = cell_dim(c);
    auto it = index_[k].find(c);
    if (it != index_[k].end()) return it->second;
    const int id = static_cast<int>(cells_[k].size());
    cells_[k].push_back(c);
    index_[k].emplace(c, id);
    return id;
  }

  /// Builds bd[k] for all k from the cell boundaries; faces must be present.
  void finalize() {
    for (int k = 1; k <= n_; ++k) {
      bd_[k].rows = static_cast<int>(cells_[k - 1].size());
      bd_[k].cols.assign(cells_[k].size(), {});
      for (std::size_t j = 0; j < cells_[k].size(); ++j) {
        RationalChain single(n_, k);
        single.add_cell(cells_[k][j], 1);
        const RationalChain faces = boundary(single);
        for (const auto& [face, coef] : faces.terms()) {
          auto id = find(face);
          if (!id) throw std::logic_error("complex is missing a face: " + describe(face));
          if (coef.get_den() != 1) throw std::logic_error("non-integral boundary coefficient");
          bd_[k].cols[j].emplace_back(*id, static_cast<int>(coef.get_num().get_si()));
        }
      }
    }
  }
  void set_eps(const Rational& e) { eps_ = e; }

 private:
  int n_ = 0;
  std::vector<std::vector<Cell<Rational>>> cells_;
  std::vector<std::map<Cell<Rational>, int>> index_;
  std::vector<SparseIntMatrix> bd_;
  std::optional<Rational> eps_;
};

/**
 * @brief All axis-parallel grid cells of dimension <= max_dim in the box
 * [lo, hi] (edges multiples of eps, anchors on the eps-grid).
 */
inline ChainComplex build_cubical_complex(const std::vector<Rational>& lo, const std::vector<Rational>& hi,
                                          const Rational& eps, int max_dim) {
  const int n = static_cast<int>(lo.size());
  if (hi.size() != lo.size()) throw std::invalid_argument("box corners differ in dimension");
  if (!(eps > 0)) throw std::invalid_argument("grid size must be positive");
  if (max_dim < 0 || max_dim > n) throw std::invalid_argument("max_dim out of range");
  std::vector<int> counts(n);
  for (int i = 0; i < n; ++i) {
    Rational a = lo[i] / eps, b = (hi[i] - lo[i]) / eps;
    if (a.get_den() != 1 || b.get_den() != 1 || b < 0)
      throw std::invalid_argument("box is not commensurate with the grid size");
    counts[i] = static_cast<int>(b.get_num().get_si());
  }
  ChainComplex k(n);
  k.set_eps(eps);
  for (int d = 0; d <= max_dim; ++d) {
    for (const auto& axes : all_multi_indices(d, n)) {
      std::vector<int> extent(n);
      for (int i = 0; i < n; ++i) extent[i] = counts[i] + 1;
      for (int a : axes) extent[a] = counts[a];
      bool empty = false;
      for (int e : extent) empty = empty || e <= 0;
      if (empty) continue;
      std::vector<int> idx(n, 0);
      while (true) {
        Point<Rational> anchor(n);
        for (int i = 0; i < n; ++i) anchor[i] = lo[i] + eps * idx[i];
        if (d == 0)
          k.add_cell(Simplex<Rational>{{anchor}});
        else
          k.add_cell(CubeCell<Rational>{anchor, axes, eps});
        int i = 0;
        while (i < n && ++idx[i] == extent[i]) idx[i++] = 0;
        if (i == n) break;
      }
    }
  }
  k.finalize();
  return k;
}

/// Complex generated by the given simplices and all of their faces.
inline ChainComplex build_simplicial_complex(int n, const std::vector<Simplex<Rational>>& top) {
  ChainComplex k(n);
  std::vector<Simplex<Rational>> stack = top;
  std::map<Simplex<Rational>, bool> seen;
  while (!stack.empty()) {
    Simplex<Rational> s = std::move(stack.back());
    stack.pop_back();
    if (seen.count(s)) continue;
    seen[s] = true;
    std::sort(s.verts.begin(), s.verts.end());
    k.add_cell(s);
    if (s.verts.size() > 1)
      for (std::size_t i = 0; i < s.verts.size(); ++i) {
        Simplex<Rational> f;
        for (std::size_t j = 0; j < s.verts.size(); ++j)
          if (j != i) f.verts.push_back(s.verts[j]);
        stack.push_back(std::move(f));
      }
  }
  k.finalize();
  return k;
}

/// Sparse coefficient vector over the k-cells of a complex.
struct ChainVector {
  int dim = 0;
  std::map<int, Rational> coeffs;

  void add(int id, const Rational& v) {
    auto& c = coeffs[id];
    c += v;
    if (c == 0) coeffs.erase(id);
  }
  bool empty() const { return coeffs.empty(); }
  friend bool operator==(const ChainVector& a, const ChainVector& b) {
    return a.dim == b.dim && a.coeffs == b.coeffs;
  }
};

inline ChainVector apply_boundary(const ChainComplex& k, const ChainVector& v) {
  if (v.dim == 0) throw std::invalid_argument("boundary of a 0-chain vector");
  ChainVector out{v.dim - 1, {}};
  const auto& m = k.boundary_matrix(v.dim);
  for (const auto& [j, a] : v.coeffs)
    for (const auto& [i, s] : m.cols[j]) out.add(i, a * s);
  return out;
}

inline RationalChain to_chain(const ChainComplex& k, const ChainVector& v) {
  RationalChain out(k.ambient(), v.dim);
  for (const auto& [id, a] : v.coeffs) out.add_cell(k.cells(v.dim)[id], a);
  return out;
}

/**
 * @brief Coefficients of T over the cells of K. Cubes of side a multiple of the
 * grid size are subdivided; axis-parallel segments on grid lines are split
 * into grid edges.
 */
inline ChainVector embed_chain(const RationalChain& t, const ChainComplex& k) {
  ChainVector out{t.degree(), {}};
  std::vector<std::string> bad;
  auto place = [&](const Cell<Rational>& c, const Rational& a) {
    if (auto id = k.find(c)) {
      out.add(*id, a);
      return true;
    }
    return false;
  };
  for (const auto& [cell, a] : t.terms()) {
    if (place(cell, a)) continue;
    bool ok = false;
    if (k.cubical()) {
      const Rational eps = *k.eps();
      if (const auto* q = std::get_if<CubeCell<Rational>>(&cell)) {
        Rational ratio = q->eps / eps;
        if (ratio.get_den() == 1) {
          const int mult = static_cast<int>(ratio.get_num().get_si());
          const int d = q->dim();
          std::vector<int> idx(d, 0);
          ok = true;
          while (ok) {
            Point<Rational> anchor = q->anchor;
            for (int i = 0; i < d; ++i) anchor[q->axes[i]] += eps * idx[i];
            ok = place(CubeCell<Rational>{anchor, q->axes, eps}, a);
            int i = 0;
            while (i < d && ++idx[i] == mult) idx[i++] = 0;
            if (i == d) break;
          }
        }
      } else {
        const auto& s = std::get<Simplex<Rational>>(cell);
        if (s.verts.size() == 2) {
          // an axis-parallel segment covering whole grid edges
          const auto diff = s.verts[1] - s.verts[0];
          int axis = -1, nonzero = 0;
          for (std::size_t i = 0; i < diff.size(); ++i)
            if (diff[i] != 0) axis = static_cast<int>(i), ++nonzero;
          if (nonzero == 1 && diff[axis] > 0) {
            Rational steps = diff[axis] / eps;
            if (steps.get_den() == 1) {
              ok = true;
              for (long j = 0; ok && j < steps.get_num().get_si(); ++j) {
                Point<Rational> anchor = s.verts[0];
                anchor[axis] += eps * Rational(j);
                ok = place(CubeCell<Rational>{anchor, {axis}, eps}, a);
              }
            }
          }
        }
      }
    }
    if (!ok) bad.push_back(describe(cell));
  }
  if (!bad.empty()) throw NotRepresentable("NOT_REPRESENTABLE: chain has cells outside the complex", bad);
  return out;
}

struct FlatNormOptions {
  bool exact_lp = false;         // exact rational pivoting (small instances only)
  std::size_t exact_max_nonzeros = 5000;
  int rational_denominator = 1 << 20;  // bound used when snapping float LP output
};

struct FlatDecomposition {
  double value = 0;
  std::optional<Rational> exact_value;
  ChainVector R, S;
  LpStatus status = LpStatus::Optimal;
  double duality_gap = 0;
  double lp_objective = 0;
  bool integral = true;  // every coefficient of R and S is an integer
  bool exact_lp = false;
  int iterations = 0;
};

namespace detail {

/// Nearest fraction with denominator at most max_den (continued fractions).
inline Rational snap_rational(double x, long max_den) {
  if (std::abs(x) < 1e-12) return 0;
  const double rx = std::round(x);
  if (std::abs(x - rx) < 1e-9) return Rational(static_cast<long>(rx));
  mpz_class h0 = 0, h1 = 1, k0 = 1, k1 = 0;
  double frac = x;
  for (int iter = 0; iter < 64; ++iter) {
    const double a = std::floor(frac);
    mpz_class ai = static_cast<long>(a);
    mpz_class h2 = ai * h1 + h0, k2 = ai * k1 + k0;
    if (k2 > max_den) break;
    h0 = h1, h1 = h2, k0 = k1, k1 = k2;
    if (std::abs(frac - a) < 1e-12) break;
    frac = 1.0 / (frac - a);
    Rational approx(h1, k1);
    approx.canonicalize();
    if (std::abs(approx.get_d() - x) < 1e-12 * std::max(1.0, std::abs(x))) break;
  }
  Rational r(h1, k1);
  r.canonicalize();
  return r;
}

template <class T>
T cell_weight(const ChainComplex& k, int dim, int id) {
  if constexpr (ScalarTraits<T>::exact) {
    auto w = k.exact_cell_mass(dim, id);
    if (!w) throw std::invalid_argument("exact flat norm needs rational cell masses");
    return *w;
  } else {
    return k.cell_mass(dim, id);
  }
}

template <class T>
LpResult<T> flat_lp(const ChainVector& t, const ChainComplex& k) {
  const int m = t.dim;
  const int nr = static_cast<int>(k.count(m)), ns = static_cast<int>(k.count(m + 1));
  LpProblem<T> lp;
  lp.num_vars = 2 * nr + 2 * ns;
  lp.c.resize(lp.num_vars);
  for (int i = 0; i < nr; ++i) lp.c[i] = lp.c[nr + i] = cell_weight<T>(k, m, i);
  for (int j = 0; j < ns; ++j) lp.c[2 * nr + j] = lp.c[2 * nr + ns + j] = cell_weight<T>(k, m + 1, j);
  lp.rows.assign(nr, {});
  lp.b.assign(nr, T(0));
  for (int i = 0; i < nr; ++i) {
    lp.rows[i].emplace_back(i, T(1));
    lp.rows[i].emplace_back(nr + i, T(-1));
  }
  const auto& bd = k.boundary_matrix(m + 1);
  for (int j = 0; j < ns; ++j)
    for (const auto& [i, s] : bd.cols[j]) {
      lp.rows[i].emplace_back(2 * nr + j, T(s));
      lp.rows[i].emplace_back(2 * nr + ns + j, T(-s));
    }
  for (const auto& [i, a] : t.coeffs) {
    if constexpr (ScalarTraits<T>::exact)
      lp.b[i] = a;
    else
      lp.b[i] = a.get_d();
  }
  return lp_solve(lp);
}

}  // namespace detail

/**
 * @brief min M(R) + M(S) over R + dS = t with R, S supported on K.
 * The float LP's S is snapped to rationals and R recomputed exactly as
 * t - dS, so the decomposition identity holds with zero residual.
 */
inline FlatDecomposition flat_norm(const ChainVector& t, const ChainComplex& k, const FlatNormOptions& opts = {}) {
  const int m = t.dim;
  if (m + 1 > k.max_dim()) throw std::invalid_argument("complex lacks cells of dimension m+1");
  FlatDecomposition out;
  out.R = ChainVector{m, {}};
  out.S = ChainVector{m + 1, {}};
  if (t.empty()) {
    out.exact_value = Rational(0);
    return out;
  }
  const int nr = static_cast<int>(k.count(m)), ns = static_cast<int>(k.count(m + 1));
  std::size_t nnz = 2 * nr + 2 * k.boundary_matrix(m + 1).nonzeros();
  bool all_rational = true;
  for (int j = 0; j < ns && all_rational; ++j) all_rational = k.exact_cell_mass(m + 1, j).has_value();
  for (int i = 0; i < nr && all_rational; ++i) all_rational = k.exact_cell_mass(m, i).has_value();
  if (opts.exact_lp && all_rational && nnz <= opts.exact_max_nonzeros) {
    auto res = detail::flat_lp<Rational>(t, k);
    out.status = res.status;
    out.iterations = res.iterations;
    out.exact_lp = true;
    if (res.status != LpStatus::Optimal) return out;
    for (int j = 0; j < ns; ++j) out.S.add(j, res.x[2 * nr + j] - res.x[2 * nr + ns + j]);
    out.lp_objective = res.objective.get_d();
    out.duality_gap = res.relative_gap;
  } else {
    auto res = detail::flat_lp<double>(t, k);
    out.status = res.status;
    out.iterations = res.iterations;
    if (res.status != LpStatus::Optimal) return out;
    for (int j = 0; j < ns; ++j) {
      const double s = res.x[2 * nr + j] - res.x[2 * nr + ns + j];
      out.S.add(j, detail::snap_rational(s, opts.rational_denominator));
    }
    out.lp_objective = res.objective;
    out.duality_gap = res.relative_gap;
  }
  // exact R = t - dS
  out.R = t;
  const ChainVector ds = apply_boundary(k, out.S);
  for (const auto& [i, a] : ds.coeffs) out.R.add(i, -a);
  Rational exact = 0;
  double value = 0;
  bool exact_ok = true;
  auto accumulate = [&](const ChainVector& v) {
    for (const auto& [id, a] : v.coeffs) {
      if (a.get_den() != 1) out.integral = false;
      value += std::abs(a.get_d()) * k.cell_mass(v.dim, id);
      if (auto w = k.exact_cell_mass(v.dim, id))
        exact += abs(a) * *w;
      else
        exact_ok = false;
    }
  };
  accumulate(out.R);
  accumulate(out.S);
  if (exact_ok) {
    out.exact_value = exact;
    out.value = exact.get_d();
  } else {
    out.value = value;
  }
  return out;
}

/// Bounding box of spt T snapped outward to the eps-grid, plus `pad` cells.
inline std::pair<std::vector<Rational>, std::vector<Rational>> auto_box(const RationalChain& t, const Rational& eps,
                                                                        int pad = 1) {
  const int n = t.ambient();
  std::vector<Rational> lo(n), hi(n);
  bool first = true;
  for (const auto& [cell, a] : t.terms())
    for (const auto& v : cell_vertices(cell))
      for (int i = 0; i < n; ++i) {
        if (first || v[i] < lo[i]) lo[i] = v[i];
        if (first || v[i] > hi[i]) hi[i] = v[i];
        if (i == n - 1) first = false;
      }
  for (int i = 0; i < n; ++i) {
    mpz_class flo, chi;
    Rational a = lo[i] / eps, b = hi[i] / eps;
    mpz_fdiv_q(flo.get_mpz_t(), a.get_num().get_mpz_t(), a.get_den().get_mpz_t());
    mpz_cdiv_q(chi.get_mpz_t(), b.get_num().get_mpz_t(), b.get_den().get_mpz_t());
    lo[i] = Rational(flo - pad) * eps;
    hi[i] = Rational(chi + pad) * eps;
  }
  return {lo, hi};
}

}  // namespace geomint
