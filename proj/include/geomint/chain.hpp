/**
 * @file chain.hpp
 * @brief Polyhedral chains in R^n: canonical cells, chain algebra, boundary,
 * mass, push-forward and the refinement-aware zero test.
 *
 * A chain is a finite formal sum of oriented cells with coefficients in one
 * scalar mode (exact Rational or double). Cells are either simplices, stored
 * with lexicographically sorted vertices (the sorting parity is folded into
 * the coefficient), or axis-parallel grid cubes oriented by increasing axes.
 *
 * Two chains that differ only by subdivision have different canonical forms;
 * `is_polyhedral_zero` / `equivalent` decide equality as polyhedral chains.
 */
#pragma once

#include "geomint/linalg.hpp"

#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace geomint {

template <class S>
struct Simplex {
  std::vector<Point<S>> verts;

  int dim() const { return static_cast<int>(verts.size()) - 1; }
  friend bool operator<(const Simplex& a, const Simplex& b) { return a.verts < b.verts; }
  friend bool operator==(const Simplex& a, const Simplex& b) { return a.verts == b.verts; }
};

/// Axis-parallel cube [anchor, anchor + eps]^axes, oriented by e_axes[0] ^ e_axes[1] ^ ...
template <class S>
struct CubeCell {
  Point<S> anchor;
  std::vector<int> axes;  // 0-based, strictly increasing
  S eps;

  int dim() const { return static_cast<int>(axes.size()); }
  friend bool operator<(const CubeCell& a, const CubeCell& b) {
    if (a.axes != b.axes) return a.axes < b.axes;
    if (a.eps != b.eps) return a.eps < b.eps;
    return a.anchor < b.anchor;
  }
  friend bool operator==(const CubeCell& a, const CubeCell& b) {
    return a.axes == b.axes && a.eps == b.eps && a.anchor == b.anchor;
  }
};

template <class S>
using Cell = std::variant<Simplex<S>, CubeCell<S>>;

/// How to treat a simplex whose vertices are affinely dependent.
enum class Degenerate { Reject, Drop };

class ChainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class S>
bool is_degenerate(const std::vector<Point<S>>& verts) {
  const std::size_t k = verts.size() - 1;
  if (k == 0) return false;
  for (std::size_t i = 0; i < verts.size(); ++i)
    for (std::size_t j = i + 1; j < verts.size(); ++j)
      if (verts[i] == verts[j]) return true;
  if (k > verts[0].size()) return true;
  Matrix<S> e(k);
  for (std::size_t i = 0; i < k; ++i) e[i] = verts[i + 1] - verts[0];
  return matrix_rank(std::move(e)) < k;
}

template <class S>
class Chain {
 public:
  using Scalar = S;

  Chain() = default;
  Chain(int ambient, int degree) : n_(ambient), m_(degree) {
    if (degree < 0 || degree > ambient) throw ChainError("chain degree must lie in [0, n]");
  }

  int ambient() const { return n_; }
  int degree() const { return m_; }
  const std::map<Cell<S>, S>& terms() const { return terms_; }
  std::size_t size() const { return terms_.size(); }
  bool empty() const { return terms_.empty(); }

  /**
   * @brief Add coef * [verts] (oriented by vertex order).
   * Returns false when the simplex is degenerate and was dropped.
   */
  bool add_simplex(std::vector<Point<S>> verts, const S& coef, Degenerate policy = Degenerate::Reject) {
    if (static_cast<int>(verts.size()) != m_ + 1) throw ChainError("simplex has wrong number of vertices");
    for (const auto& v : verts)
      if (static_cast<int>(v.size()) != n_) throw ChainError("vertex has wrong ambient dimension");
    if (is_degenerate(verts)) {
      if (policy == Degenerate::Reject) throw ChainError("degenerate simplex");
      return false;
    }
    int sign = sort_with_sign(verts);
    add_cell(Simplex<S>{std::move(verts)}, sign > 0 ? coef : S(-coef));
    return true;
  }

  void add_cube(Point<S> anchor, std::vector<int> axes, const S& eps, const S& coef) {
    if (static_cast<int>(axes.size()) != m_) throw ChainError("cube has wrong number of axes");
    if (static_cast<int>(anchor.size()) != n_) throw ChainError("cube anchor has wrong dimension");
    if (!(eps > 0)) throw ChainError("cube side must be positive");
    for (std::size_t i = 0; i < axes.size(); ++i) {
      if (axes[i] < 0 || axes[i] >= n_) throw ChainError("cube axis out of range");
      if (i > 0 && axes[i] <= axes[i - 1]) throw ChainError("cube axes must be strictly increasing");
    }
    add_cell(CubeCell<S>{std::move(anchor), std::move(axes), eps}, coef);
  }

  /// Add an already-canonical cell; merges and drops zero coefficients.
  void add_cell(const Cell<S>& cell, const S& coef) {
    auto it = terms_.find(cell);
    if (it == terms_.end()) {
      if (!ScalarTraits<S>::is_zero(coef)) terms_.emplace(cell, coef);
      return;
    }
    it->second += coef;
    if (ScalarTraits<S>::is_zero(it->second)) terms_.erase(it);
  }

  Chain& operator+=(const Chain& o) {
    check_compatible(o);
    for (const auto& [c, a] : o.terms_) add_cell(c, a);
    return *this;
  }
  Chain& operator-=(const Chain& o) {
    check_compatible(o);
    for (const auto& [c, a] : o.terms_) add_cell(c, S(-a));
    return *this;
  }
  Chain& operator*=(const S& s) {
    if (ScalarTraits<S>::is_zero(s)) {
      terms_.clear();
      return *this;
    }
    std::map<Cell<S>, S> scaled_terms;
    for (const auto& [c, a] : terms_) {
      S v = a * s;
      if (!ScalarTraits<S>::is_zero(v)) scaled_terms.emplace(c, v);
    }
    terms_ = std::move(scaled_terms);
    return *this;
  }
  friend Chain operator+(Chain a, const Chain& b) { return a += b; }
  friend Chain operator-(Chain a, const Chain& b) { return a -= b; }
  friend Chain operator*(Chain a, const S& s) { return a *= s; }
  friend Chain operator*(const S& s, Chain a) { return a *= s; }
  friend Chain operator-(Chain a) { return a *= S(-1); }
  /// Equality of canonical forms (not refinement-aware, see `equivalent`).
  friend bool operator==(const Chain& a, const Chain& b) {
    return a.n_ == b.n_ && a.m_ == b.m_ && a.terms_ == b.terms_;
  }

  template <class T>
  Chain<T> cast() const {
    Chain<T> r(n_, m_);
    for (const auto& [cell, a] : terms_) {
      if (const auto* s = std::get_if<Simplex<S>>(&cell)) {
        Simplex<T> t;
        for (const auto& v : s->verts) t.verts.push_back(convert_point<T>(v));
        const T coef = convert_scalar<T>(a);
        const int sign = sort_with_sign(t.verts);
        r.add_cell(Cell<T>{std::move(t)}, sign > 0 ? coef : T(-coef));
      } else {
        const auto& q = std::get<CubeCell<S>>(cell);
        r.add_cell(Cell<T>{CubeCell<T>{convert_point<T>(q.anchor), q.axes, convert_scalar<T>(q.eps)}},
                   convert_scalar<T>(a));
      }
    }
    return r;
  }

 private:
  template <class T>
  static T convert_scalar(const S& v) {
    if constexpr (std::is_same_v<T, S>)
      return v;
    else if constexpr (std::is_same_v<S, Rational>)
      return ScalarTraits<T>::from_rational(v);
    else
      return ScalarTraits<T>::from_double(v);
  }
  template <class T>
  static Point<T> convert_point(const Point<S>& p) {
    Point<T> r(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) r[i] = convert_scalar<T>(p[i]);
    return r;
  }
  void check_compatible(const Chain& o) const {
    if (o.terms_.empty()) return;
    if (o.n_ != n_ || o.m_ != m_) throw ChainError("chains of different dimension or degree");
  }

  int n_ = 0;
  int m_ = 0;
  std::map<Cell<S>, S> terms_;
};

using RationalChain = Chain<Rational>;
using FloatChain = Chain<double>;

// ---------------------------------------------------------------------------
// Cubes as simplices
// ---------------------------------------------------------------------------

/**
 * @brief Kuhn triangulation of an oriented cube: one simplex per permutation
 * of its axes, with coefficient sign(permutation).
 */
template <class S>
std::vector<std::pair<std::vector<Point<S>>, int>> kuhn_simplices(const CubeCell<S>& q) {
  const int k = q.dim();
  std::vector<int> perm(k);
  for (int i = 0; i < k; ++i) perm[i] = i;
  std::vector<std::pair<std::vector<Point<S>>, int>> out;
  do {
    std::vector<Point<S>> verts{q.anchor};
    Point<S> cur = q.anchor;
    for (int i = 0; i < k; ++i) {
      cur[q.axes[perm[i]]] += q.eps;
      verts.push_back(cur);
    }
    std::vector<int> p = perm;
    int sign = sort_with_sign(p);
    out.emplace_back(std::move(verts), sign);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

/// The same chain with every cube replaced by its Kuhn triangulation.
template <class S>
Chain<S> simplicial(const Chain<S>& t) {
  Chain<S> r(t.ambient(), t.degree());
  for (const auto& [cell, a] : t.terms()) {
    if (std::holds_alternative<Simplex<S>>(cell)) {
      r.add_cell(cell, a);
      continue;
    }
    for (auto& [verts, sign] : kuhn_simplices(std::get<CubeCell<S>>(cell)))
      r.add_simplex(std::move(verts), sign > 0 ? a : S(-a));
  }
  return r;
}

/// Vertices of any cell (cube corners for cubes).
template <class S>
std::vector<Point<S>> cell_vertices(const Cell<S>& cell) {
  if (const auto* s = std::get_if<Simplex<S>>(&cell)) return s->verts;
  const auto& q = std::get<CubeCell<S>>(cell);
  std::vector<Point<S>> out;
  const int k = q.dim();
  for (int mask = 0; mask < (1 << k); ++mask) {
    Point<S> p = q.anchor;
    for (int i = 0; i < k; ++i)
      if (mask & (1 << i)) p[q.axes[i]] += q.eps;
    out.push_back(std::move(p));
  }
  return out;
}

template <class S>
int cell_dim(const Cell<S>& cell) {
  return std::visit([](const auto& c) { return c.dim(); }, cell);
}

// ---------------------------------------------------------------------------
// Boundary
// ---------------------------------------------------------------------------

template <class S>
Chain<S> boundary(const Chain<S>& t) {
  if (t.degree() == 0) throw ChainError("boundary of a 0-chain is undefined; use is_cycle");
  Chain<S> r(t.ambient(), t.degree() - 1);
  for (const auto& [cell, a] : t.terms()) {
    if (const auto* s = std::get_if<Simplex<S>>(&cell)) {
      const int k = s->dim();
      for (int i = 0; i <= k; ++i) {
        std::vector<Point<S>> face;
        face.reserve(k);
        for (int j = 0; j <= k; ++j)
          if (j != i) face.push_back(s->verts[j]);
        // faces of a sorted simplex stay sorted
        r.add_cell(Simplex<S>{std::move(face)}, (i % 2 == 0) ? a : S(-a));
      }
    } else {
      const auto& q = std::get<CubeCell<S>>(cell);
      const int k = q.dim();
      for (int i = 0; i < k; ++i) {
        std::vector<int> axes;
        for (int j = 0; j < k; ++j)
          if (j != i) axes.push_back(q.axes[j]);
        Point<S> shifted = q.anchor;
        shifted[q.axes[i]] += q.eps;
        const S sgn_i = (i % 2 == 0) ? a : S(-a);
        r.add_cell(CubeCell<S>{shifted, axes, q.eps}, sgn_i);
        r.add_cell(CubeCell<S>{q.anchor, axes, q.eps}, S(-sgn_i));
      }
    }
  }
  return r;
}

inline bool is_polyhedral_zero(const Chain<Rational>& t);

template <class S>
bool is_cycle(const Chain<S>& t) {
  if (t.degree() == 0) {
    S sum = 0;
    for (const auto& [cell, a] : t.terms()) sum += a;
    return ScalarTraits<S>::is_zero(sum);
  }
  // A formal boundary may be polyhedrally zero without cancelling key-wise
  // (e.g. after subdivision), so exact mode uses the refinement-aware test.
  Chain<S> b = boundary(t);
  if (b.empty()) return true;
  if constexpr (ScalarTraits<S>::exact) {
    return is_polyhedral_zero(b);
  } else {
    return is_polyhedral_zero(b.template cast<Rational>());
  }
}

// ---------------------------------------------------------------------------
// Mass
// ---------------------------------------------------------------------------

/// Mass of a chain: exact when every cell volume is rational, else a certified enclosure.
struct Mass {
  double value = 0.0;
  Interval bounds;
  bool exact = true;
  std::optional<Rational> exact_value;
};

template <class S>
S cell_squared_volume(const Cell<S>& cell) {
  if (const auto* s = std::get_if<Simplex<S>>(&cell)) return squared_volume(s->verts);
  const auto& q = std::get<CubeCell<S>>(cell);
  S v = 1;
  for (int i = 0; i < q.dim(); ++i) v *= q.eps * q.eps;
  return v;
}

template <class S>
double cell_volume(const Cell<S>& cell) {
  return std::sqrt(std::max(0.0, to_double(cell_squared_volume(cell))));
}

template <class S>
Mass mass(const Chain<S>& t) {
  Mass out;
  if constexpr (ScalarTraits<S>::exact) {
    Rational exact_sum = 0;
    Interval inexact{0, 0};
    bool all_exact = true;
    for (const auto& [cell, a] : t.terms()) {
      Rational v2 = cell_squared_volume(cell);
      Rational root;
      Rational w = abs(a);
      if (is_perfect_square(v2, &root)) {
        exact_sum += w * root;
      } else {
        all_exact = false;
        Interval iv = sqrt_interval(v2);
        // |a| * [lo, hi], with outward rounding for the product
        double wl = w.get_d(), wh = w.get_d();
        if (Rational(wl) > w) wl = std::nextafter(wl, 0.0);
        if (Rational(wh) < w) wh = std::nextafter(wh, 1e308);
        inexact += Interval{std::nextafter(wl * iv.lo, 0.0), std::nextafter(wh * iv.hi, 1e308)};
      }
    }
    double e = exact_sum.get_d();
    out.exact = all_exact;
    if (all_exact) {
      out.exact_value = exact_sum;
      out.value = e;
      out.bounds = {e, e};
    } else {
      out.bounds = {std::nextafter(e + inexact.lo, 0.0), std::nextafter(e + inexact.hi, 1e308)};
      out.value = e + 0.5 * (inexact.lo + inexact.hi);
    }
  } else {
    double sum = 0;
    for (const auto& [cell, a] : t.terms()) sum += std::abs(a) * cell_volume(cell);
    out.exact = false;
    out.value = sum;
    out.bounds = {sum, sum};
  }
  return out;
}

// ---------------------------------------------------------------------------
// Push-forward by affine maps
// ---------------------------------------------------------------------------

template <class S>
struct AffineMap {
  Matrix<S> linear;  // n x n
  Point<S> offset;

  Point<S> operator()(const Point<S>& x) const {
    Point<S> y = offset;
    for (std::size_t i = 0; i < y.size(); ++i)
      for (std::size_t j = 0; j < x.size(); ++j) y[i] += linear[i][j] * x[j];
    return y;
  }

  static AffineMap translation(const Point<S>& x) {
    const std::size_t n = x.size();
    Matrix<S> id(n, std::vector<S>(n, S(0)));
    for (std::size_t i = 0; i < n; ++i) id[i][i] = 1;
    return {std::move(id), x};
  }
  static AffineMap scaling(std::size_t n, const S& factor) {
    Matrix<S> d(n, std::vector<S>(n, S(0)));
    for (std::size_t i = 0; i < n; ++i) d[i][i] = factor;
    return {std::move(d), Point<S>(n, S(0))};
  }
};

template <class S>
struct PushforwardResult {
  Chain<S> chain;
  int dropped_degenerate = 0;
};

namespace detail {

/// If `map` is lambda*Id with lambda > 0, returns lambda.
template <class S>
std::optional<S> uniform_positive_scale(const AffineMap<S>& map) {
  const std::size_t n = map.linear.size();
  S lambda = map.linear[0][0];
  if (!(lambda > 0)) return std::nullopt;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (map.linear[i][j] != (i == j ? lambda : S(0))) return std::nullopt;
  return lambda;
}

template <class S>
bool is_integer_multiple(const S& value, const S& eps) {
  if constexpr (ScalarTraits<S>::exact) {
    Rational q = value / eps;
    return q.get_den() == 1;
  } else {
    double q = value / eps;
    return std::abs(q - std::round(q)) <= 1e-12 * std::max(1.0, std::abs(q));
  }
}

}  // namespace detail

/**
 * @brief Image chain under an affine map. Cubes stay cubes under positive
 * homotheties that keep them on a grid; otherwise they are triangulated.
 * Collapsed simplices are dropped and counted.
 */
template <class S>
PushforwardResult<S> pushforward(const Chain<S>& t, const AffineMap<S>& map) {
  PushforwardResult<S> out{Chain<S>(t.ambient(), t.degree()), 0};
  const auto lambda = detail::uniform_positive_scale(map);
  for (const auto& [cell, a] : t.terms()) {
    if (const auto* q = std::get_if<CubeCell<S>>(&cell)) {
      if (lambda) {
        S eps = q->eps * *lambda;
        Point<S> anchor = map(q->anchor);
        bool on_grid = true;
        for (const auto& c : anchor) on_grid = on_grid && detail::is_integer_multiple(c, eps);
        if (on_grid) {
          out.chain.add_cell(CubeCell<S>{std::move(anchor), q->axes, eps}, a);
          continue;
        }
      }
      for (auto& [verts, sign] : kuhn_simplices(*q)) {
        for (auto& v : verts) v = map(v);
        if (!out.chain.add_simplex(std::move(verts), sign > 0 ? a : S(-a), Degenerate::Drop))
          ++out.dropped_degenerate;
      }
      continue;
    }
    std::vector<Point<S>> verts = std::get<Simplex<S>>(cell).verts;
    for (auto& v : verts) v = map(v);
    if (!out.chain.add_simplex(std::move(verts), a, Degenerate::Drop)) ++out.dropped_degenerate;
  }
  return out;
}

template <class S>
Chain<S> translate(const Chain<S>& t, const Point<S>& x) {
  if (static_cast<int>(x.size()) != t.ambient()) throw ChainError("translation vector has wrong dimension");
  Chain<S> r(t.ambient(), t.degree());
  for (const auto& [cell, a] : t.terms()) {
    if (const auto* s = std::get_if<Simplex<S>>(&cell)) {
      Simplex<S> moved = *s;
      for (auto& v : moved.verts) v = v + x;
      // exact translation preserves vertex order; float rounding may not
      const int sign = sort_with_sign(moved.verts);
      r.add_cell(Cell<S>{std::move(moved)}, sign > 0 ? a : S(-a));
      continue;
    }
    const auto& q = std::get<CubeCell<S>>(cell);
    Point<S> anchor = q.anchor + x;
    bool on_grid = true;
    for (const auto& c : anchor) on_grid = on_grid && detail::is_integer_multiple(c, q.eps);
    if (on_grid) {
      r.add_cell(CubeCell<S>{std::move(anchor), q.axes, q.eps}, a);
    } else {
      for (auto& [verts, sign] : kuhn_simplices(q)) {
        for (auto& v : verts) v = v + x;
        r.add_simplex(std::move(verts), sign > 0 ? a : S(-a));
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Refinement-aware zero test
// ---------------------------------------------------------------------------

namespace detail {

/// Canonical description of the affine hull of a nondegenerate simplex.
inline std::pair<Matrix<Rational>, Point<Rational>> affine_hull_key(const std::vector<Point<Rational>>& verts) {
  const std::size_t k = verts.size() - 1;
  Matrix<Rational> d(k);
  for (std::size_t i = 0; i < k; ++i) d[i] = verts[i + 1] - verts[0];
  auto pivots = rref(d);
  Point<Rational> base = verts[0];
  for (std::size_t r = 0; r < d.size(); ++r) {
    Rational f = base[pivots[r]];
    for (std::size_t j = 0; j < base.size(); ++j) base[j] -= f * d[r][j];
  }
  return {std::move(d), std::move(base)};
}

}  // namespace detail

/**
 * @brief Decide whether a chain is zero as a polyhedral chain, i.e. its
 * coefficient density vanishes almost everywhere.
 *
 * Cells are grouped by affine hull; a compactly supported top-dimensional
 * chain inside one m-plane vanishes iff its boundary does, which recurses
 * down to 0-chains where canonical merging is decisive.
 */
inline bool is_polyhedral_zero(const Chain<Rational>& t) {
  Chain<Rational> s = simplicial(t);
  if (s.empty()) return true;
  if (s.degree() == 0) return false;
  std::map<std::pair<Matrix<Rational>, Point<Rational>>, Chain<Rational>> groups;
  for (const auto& [cell, a] : s.terms()) {
    const auto& simplex = std::get<Simplex<Rational>>(cell);
    auto key = detail::affine_hull_key(simplex.verts);
    auto it = groups.find(key);
    if (it == groups.end()) it = groups.emplace(std::move(key), Chain<Rational>(s.ambient(), s.degree())).first;
    it->second.add_cell(cell, a);
  }
  for (const auto& [key, group] : groups)
    if (!is_polyhedral_zero(boundary(group))) return false;
  return true;
}

/// Equality as polyhedral chains (invariant under subdivision and re-gluing).
inline bool equivalent(const Chain<Rational>& a, const Chain<Rational>& b) { return is_polyhedral_zero(a - b); }

template <class S>
std::string describe(const Cell<S>& cell) {
  std::ostringstream os;
  auto point = [&](const Point<S>& p) {
    os << '(';
    for (std::size_t i = 0; i < p.size(); ++i) os << (i ? "," : "") << p[i];
    os << ')';
  };
  if (const auto* s = std::get_if<Simplex<S>>(&cell)) {
    os << "simplex[";
    for (std::size_t i = 0; i < s->verts.size(); ++i) {
      if (i) os << ' ';
      point(s->verts[i]);
    }
    os << ']';
  } else {
    const auto& q = std::get<CubeCell<S>>(cell);
    os << "cube[anchor=";
    point(q.anchor);
    os << " axes=";
    for (std::size_t i = 0; i < q.axes.size(); ++i) os << (i ? "," : "") << q.axes[i] + 1;
    os << " eps=" << q.eps << ']';
  }
  return os.str();
}

}  // namespace geomint
