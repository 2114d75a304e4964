/**
 * @file clip.hpp
 * @brief Exact splitting of simplices by axis-parallel hyperplanes.
 *
 * A simplex with vertices on both strict sides of a hyperplane is cut along
 * one crossing edge a-b at the crossing point p into two children: one with b
 * replaced by p, one with a replaced by p. Both keep the parent's vertex order
 * and hence its orientation, and together they form the parent as a chain.
 */
#pragma once

#include "geomint/linalg.hpp"
#include "geomint/rational.hpp"

#include <vector>

namespace geomint {

using RationalSimplex = std::vector<Point<Rational>>;

/// Pieces of s on each closed side of {x[axis] = value}.
inline void split_simplex(const RationalSimplex& s, int axis, const Rational& value, std::vector<RationalSimplex>& below,
                          std::vector<RationalSimplex>& above) {
  std::vector<RationalSimplex> stack{s};
  while (!stack.empty()) {
    RationalSimplex cur = std::move(stack.back());
    stack.pop_back();
    int lo_vertex = -1, hi_vertex = -1;
    for (std::size_t i = 0; i < cur.size(); ++i) {
      const auto& c = cur[i][axis];
      if (c < value && lo_vertex < 0) lo_vertex = static_cast<int>(i);
      if (c > value && hi_vertex < 0) hi_vertex = static_cast<int>(i);
    }
    if (hi_vertex < 0) {
      below.push_back(std::move(cur));
      continue;
    }
    if (lo_vertex < 0) {
      above.push_back(std::move(cur));
      continue;
    }
    const auto& a = cur[lo_vertex];
    const auto& b = cur[hi_vertex];
    const Rational t = (value - a[axis]) / (b[axis] - a[axis]);
    Point<Rational> p(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) p[i] = a[i] + t * (b[i] - a[i]);
    p[axis] = value;
    RationalSimplex c1 = cur, c2 = cur;
    c1[hi_vertex] = p;
    c2[lo_vertex] = std::move(p);
    stack.push_back(std::move(c1));
    stack.push_back(std::move(c2));
  }
}

/**
 * @brief Splits s along every hyperplane x[axis] = origin[axis] + j*h[axis]
 * so that each piece lies in one closed grid cell.
 */
inline std::vector<RationalSimplex> clip_to_grid(const RationalSimplex& s, const Point<Rational>& origin,
                                                 const std::vector<Rational>& h) {
  std::vector<RationalSimplex> pieces{s};
  for (std::size_t axis = 0; axis < origin.size(); ++axis) {
    std::vector<RationalSimplex> next;
    for (auto& piece : pieces) {
      Rational mn = piece[0][axis], mx = mn;
      for (const auto& v : piece) {
        if (v[axis] < mn) mn = v[axis];
        if (v[axis] > mx) mx = v[axis];
      }
      // grid lines strictly inside (mn, mx)
      Rational k = (mn - origin[axis]) / h[axis];
      mpz_class j;
      mpz_fdiv_q(j.get_mpz_t(), k.get_num().get_mpz_t(), k.get_den().get_mpz_t());
      std::vector<RationalSimplex> work{std::move(piece)};
      for (j += 1;; j += 1) {
        const Rational line = origin[axis] + Rational(j) * h[axis];
        if (!(line < mx)) break;
        if (!(line > mn)) continue;
        std::vector<RationalSimplex> keep;
        for (auto& w : work) split_simplex(w, static_cast<int>(axis), line, next, keep);
        work = std::move(keep);
      }
      for (auto& w : work) next.push_back(std::move(w));
    }
    pieces = std::move(next);
  }
  return pieces;
}

/**
 * @brief Grid cell(s) of a piece that lies in one closed cell: index ranges
 * per axis. A coordinate range [j, j] means the piece lies in the grid plane
 * between cells j-1 and j.
 */
struct CellLocation {
  std::vector<long> first, last;  // inclusive candidate cell indices per axis
};

inline CellLocation locate_piece(const RationalSimplex& piece, const Point<Rational>& origin,
                                 const std::vector<Rational>& h) {
  const std::size_t n = origin.size();
  CellLocation loc{std::vector<long>(n), std::vector<long>(n)};
  for (std::size_t axis = 0; axis < n; ++axis) {
    Rational mn = piece[0][axis], mx = mn;
    for (const auto& v : piece) {
      if (v[axis] < mn) mn = v[axis];
      if (v[axis] > mx) mx = v[axis];
    }
    Rational k = (mn - origin[axis]) / h[axis];
    mpz_class j;
    mpz_fdiv_q(j.get_mpz_t(), k.get_num().get_mpz_t(), k.get_den().get_mpz_t());
    const long base = j.get_si();
    if (mn == mx && k.get_den() == 1) {
      loc.first[axis] = base - 1;
      loc.last[axis] = base;
    } else {
      loc.first[axis] = loc.last[axis] = base;
    }
  }
  return loc;
}

}  // namespace geomint
