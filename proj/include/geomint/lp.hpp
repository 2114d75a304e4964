/**
 * @file lp.hpp
 * @brief Two-phase tableau simplex for min c'x s.t. Ax = b, l <= x <= u.
 *
 * Templated on the field: double for general use, Rational for exact solves of
 * small instances. Pricing is Dantzig's rule, switching to Bland's rule after a
 * run of degenerate pivots; ratio-test ties go to the smallest basic column
 * index, so solves are deterministic.
 */
#pragma once

#include "geomint/rational.hpp"

#include <cmath>
#include <stdexcept>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace geomint {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline std::string to_string(LpStatus s) {
  switch (s) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    default: return "iteration_limit";
  }
}

/// Sparse row: (column, value) pairs.
template <class T>
using SparseRow = std::vector<std::pair<int, T>>;

template <class T>
struct LpProblem {
  int num_vars = 0;
  std::vector<T> c;
  std::vector<SparseRow<T>> rows;  // A, one entry per equality constraint
  std::vector<T> b;
  std::vector<std::optional<T>> lower;  // nullopt: -inf (default 0 when empty)
  std::vector<std::optional<T>> upper;  // nullopt: +inf

  std::size_t nonzeros() const {
    std::size_t k = 0;
    for (const auto& r : rows) k += r.size();
    return k;
  }
};

template <class T>
struct LpResult {
  LpStatus status = LpStatus::Optimal;
  std::vector<T> x;
  std::vector<T> y;  // duals of the equality rows
  T objective = 0;
  T dual_objective = 0;
  double relative_gap = 0;
  int iterations = 0;
};

namespace detail {

template <class T>
bool lp_zero(const T& v) {
  if constexpr (ScalarTraits<T>::exact)
    return sgn(v) == 0;
  else
    return std::abs(v) <= 1e-11;
}
template <class T>
bool lp_negative(const T& v) {
  if constexpr (ScalarTraits<T>::exact)
    return sgn(v) < 0;
  else
    return v < -1e-9;
}
template <class T>
bool lp_positive_pivot(const T& v) {
  if constexpr (ScalarTraits<T>::exact)
    return sgn(v) > 0;
  else
    return v > 1e-9;
}

/// Dense tableau in canonical form with respect to `basis`.
template <class T>
class Tableau {
 public:
  Tableau(std::vector<std::vector<T>> a, std::vector<T> rhs, std::vector<int> basis)
      : a_(std::move(a)), rhs_(std::move(rhs)), basis_(std::move(basis)) {}

  std::size_t rows() const { return a_.size(); }
  std::size_t cols() const { return a_.empty() ? 0 : a_[0].size(); }
  const std::vector<int>& basis() const { return basis_; }
  const std::vector<T>& rhs() const { return rhs_; }
  const std::vector<std::vector<T>>& matrix() const { return a_; }

  /// Reduced costs d_j = c_j - c_B' B^-1 A_j, computed from the current tableau.
  std::vector<T> reduced_costs(const std::vector<T>& cost) const {
    std::vector<T> d = cost;
    for (std::size_t i = 0; i < rows(); ++i) {
      const T cb = cost[basis_[i]];
      if (lp_zero(cb)) continue;
      for (std::size_t j = 0; j < cols(); ++j)
        if (!lp_zero(a_[i][j])) d[j] -= cb * a_[i][j];
    }
    return d;
  }

  /// Optimizes `cost` over columns allowed by `enterable`; returns the status.
  LpStatus optimize(const std::vector<T>& cost, const std::vector<bool>& enterable, int& iterations, int max_iter) {
    std::vector<T> d = reduced_costs(cost);
    int degenerate_run = 0;
    while (true) {
      if (iterations >= max_iter) return LpStatus::IterationLimit;
      const bool bland = degenerate_run > 50;
      int enter = -1;
      T best = 0;
      for (std::size_t j = 0; j < cols(); ++j) {
        if (!enterable[j] || !lp_negative(d[j])) continue;
        if (bland) {
          enter = static_cast<int>(j);
          break;
        }
        if (enter < 0 || d[j] < best) {
          enter = static_cast<int>(j);
          best = d[j];
        }
      }
      if (enter < 0) return LpStatus::Optimal;
      int leave = -1;
      T ratio = 0;
      for (std::size_t i = 0; i < rows(); ++i) {
        const T& p = a_[i][enter];
        if (!lp_positive_pivot(p)) continue;
        T q = rhs_[i] / p;
        if (leave < 0 || q < ratio || (q == ratio && basis_[i] < basis_[leave])) {
          leave = static_cast<int>(i);
          ratio = q;
        }
      }
      if (leave < 0) return LpStatus::Unbounded;
      degenerate_run = lp_zero(ratio) ? degenerate_run + 1 : 0;
      pivot(leave, enter, d);
      ++iterations;
    }
  }

  void pivot(int r, int c, std::vector<T>& d) {
    const T p = a_[r][c];
    std::vector<int> nz;
    for (std::size_t j = 0; j < cols(); ++j) {
      if (lp_zero(a_[r][j])) {
        a_[r][j] = 0;
        continue;
      }
      a_[r][j] /= p;
      nz.push_back(static_cast<int>(j));
    }
    rhs_[r] /= p;
    for (std::size_t i = 0; i < rows(); ++i) {
      if (static_cast<int>(i) == r) continue;
      const T f = a_[i][c];
      if (lp_zero(f)) continue;
      for (int j : nz) a_[i][j] -= f * a_[r][j];
      a_[i][c] = 0;
      rhs_[i] -= f * rhs_[r];
      if constexpr (!ScalarTraits<T>::exact)
        if (std::abs(rhs_[i]) < 1e-13) rhs_[i] = 0;
    }
    const T f = d[c];
    if (!lp_zero(f))
      for (int j : nz) d[j] -= f * a_[r][j];
    d[c] = 0;
    basis_[r] = c;
  }

  /// Moves artificial columns out of the basis where possible (after phase 1).
  void drive_out(const std::vector<bool>& artificial, std::vector<T>& d) {
    for (std::size_t i = 0; i < rows(); ++i) {
      if (!artificial[basis_[i]]) continue;
      for (std::size_t j = 0; j < cols(); ++j)
        if (!artificial[j] && !lp_zero(a_[i][j])) {
          pivot(static_cast<int>(i), static_cast<int>(j), d);
          break;
        }
    }
  }

 private:
  std::vector<std::vector<T>> a_;
  std::vector<T> rhs_;
  std::vector<int> basis_;
};

}  // namespace detail

/**
 * @brief Solves min c'x s.t. Ax = b, lower <= x <= upper.
 * Lower bounds are shifted out, free variables split, finite upper bounds
 * become extra equality rows with slacks.
 */
template <class T>
LpResult<T> lp_solve(const LpProblem<T>& prob, int max_iter = 200000) {
  const int nv = prob.num_vars;
  auto lower_of = [&](int j) -> std::optional<T> {
    if (prob.lower.empty()) return T(0);
    return prob.lower[j];
  };
  auto upper_of = [&](int j) -> std::optional<T> {
    if (prob.upper.empty()) return std::nullopt;
    return prob.upper[j];
  };
  // internal columns: for each original var, a nonnegative part (and a negative part when free)
  std::vector<int> pos_col(nv), neg_col(nv, -1);
  std::vector<T> shift(nv, T(0));
  int ncols = 0;
  for (int j = 0; j < nv; ++j) {
    pos_col[j] = ncols++;
    auto lo = lower_of(j);
    if (lo)
      shift[j] = *lo;
    else
      neg_col[j] = ncols++;
  }
  std::vector<std::pair<int, T>> upper_rows;  // (var, u - l)
  for (int j = 0; j < nv; ++j) {
    auto up = upper_of(j);
    if (!up) continue;
    if (neg_col[j] >= 0) throw std::invalid_argument("free variables with an upper bound are not supported");
    upper_rows.emplace_back(j, *up - shift[j]);
  }
  const int slack_base = ncols;
  ncols += static_cast<int>(upper_rows.size());
  const std::size_t m = prob.rows.size() + upper_rows.size();
  const int art_base = ncols;
  const int total_cols = ncols + static_cast<int>(m);

  std::vector<std::vector<T>> a(m, std::vector<T>(total_cols, T(0)));
  std::vector<T> rhs(m, T(0));
  for (std::size_t i = 0; i < prob.rows.size(); ++i) {
    rhs[i] = prob.b[i];
    for (const auto& [j, v] : prob.rows[i]) {
      a[i][pos_col[j]] += v;
      if (neg_col[j] >= 0) a[i][neg_col[j]] -= v;
      rhs[i] -= v * shift[j];
    }
  }
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    const std::size_t i = prob.rows.size() + k;
    a[i][pos_col[upper_rows[k].first]] = 1;
    a[i][slack_base + k] = 1;
    rhs[i] = upper_rows[k].second;
  }
  std::vector<T> sign(m, T(1));
  for (std::size_t i = 0; i < m; ++i)
    if (detail::lp_negative(rhs[i]) || (!ScalarTraits<T>::exact && rhs[i] < 0)) {
      sign[i] = -1;
      rhs[i] = -rhs[i];
      for (auto& v : a[i]) v = -v;
    }
  for (std::size_t i = 0; i < m; ++i) a[i][art_base + i] = 1;

  std::vector<T> cost(total_cols, T(0));
  for (int j = 0; j < nv; ++j) {
    cost[pos_col[j]] = prob.c[j];
    if (neg_col[j] >= 0) cost[neg_col[j]] = -prob.c[j];
  }

  // initial basis: a natural unit column per row where one exists, else the artificial
  std::vector<int> basis(m, -1);
  std::vector<bool> used(total_cols, false);
  {
    std::vector<int> count(ncols, 0);
    std::vector<int> row_of(ncols, -1);
    for (std::size_t i = 0; i < m; ++i)
      for (int j = 0; j < ncols; ++j)
        if (!detail::lp_zero(a[i][j])) {
          ++count[j];
          row_of[j] = static_cast<int>(i);
        }
    for (int j = 0; j < ncols; ++j) {
      if (count[j] != 1) continue;
      const int i = row_of[j];
      if (basis[i] >= 0 || !(a[i][j] == T(1))) continue;
      basis[i] = j;
      used[j] = true;
    }
  }
  std::vector<bool> artificial(total_cols, false);
  bool need_phase1 = false;
  for (std::size_t i = 0; i < m; ++i) {
    artificial[art_base + i] = true;
    if (basis[i] < 0) {
      basis[i] = art_base + static_cast<int>(i);
      need_phase1 = true;
    }
  }
  detail::Tableau<T> tab(std::move(a), std::move(rhs), basis);
  LpResult<T> res;
  std::vector<bool> enterable(total_cols, true);
  if (need_phase1) {
    std::vector<T> c1(total_cols, T(0));
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis()[i] >= art_base) c1[art_base + i] = 1;
    for (int j = art_base; j < total_cols; ++j) enterable[j] = false;
    res.status = tab.optimize(c1, enterable, res.iterations, max_iter);
    if (res.status == LpStatus::IterationLimit) return res;
    T infeas = 0;
    for (std::size_t i = 0; i < m; ++i)
      if (tab.basis()[i] >= art_base) infeas += tab.rhs()[i];
    if constexpr (ScalarTraits<T>::exact) {
      if (sgn(infeas) != 0) {
        res.status = LpStatus::Infeasible;
        return res;
      }
    } else if (infeas > 1e-9) {
      res.status = LpStatus::Infeasible;
      return res;
    }
    auto d = tab.reduced_costs(c1);
    tab.drive_out(artificial, d);
  }
  for (int j = art_base; j < total_cols; ++j) enterable[j] = false;
  res.status = tab.optimize(cost, enterable, res.iterations, max_iter);
  if (res.status != LpStatus::Optimal) return res;

  std::vector<T> xi(total_cols, T(0));
  for (std::size_t i = 0; i < m; ++i) xi[tab.basis()[i]] = tab.rhs()[i];
  res.x.assign(nv, T(0));
  for (int j = 0; j < nv; ++j) {
    res.x[j] = xi[pos_col[j]] + shift[j];
    if (neg_col[j] >= 0) res.x[j] -= xi[neg_col[j]];
  }
  res.objective = 0;
  for (int j = 0; j < nv; ++j) res.objective += prob.c[j] * res.x[j];
  // duals from the artificial columns: d_art_i = -sign_i * y_i
  const auto d = tab.reduced_costs(cost);
  std::vector<T> y(m);
  for (std::size_t i = 0; i < m; ++i) y[i] = -d[art_base + i] * sign[i];
  res.y.assign(y.begin(), y.begin() + prob.rows.size());
  T dual = 0;
  for (std::size_t i = 0; i < prob.rows.size(); ++i) dual += prob.b[i] * y[i];
  for (std::size_t k = 0; k < upper_rows.size(); ++k) {
    const int j = upper_rows[k].first;
    dual += y[prob.rows.size() + k] * (upper_rows[k].second + shift[j]);
  }
  // lower-bound shifts contribute through the reduced costs of nonnegative parts
  for (int j = 0; j < nv; ++j)
    if (neg_col[j] < 0) dual += d[pos_col[j]] * shift[j];
  res.dual_objective = dual;
  const double po = to_double(res.objective), du = to_double(dual);
  res.relative_gap = std::abs(po - du) / std::max(1.0, std::abs(po));
  return res;
}

}  // namespace geomint
