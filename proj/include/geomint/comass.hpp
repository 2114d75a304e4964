/**
 * @file comass.hpp
 * @brief Multi-indices, covectors and the comass norm.
 */
#pragma once

#include "geomint/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace geomint {

/// Strictly increasing 0-based axis list.
using MultiIndex = std::vector<int>;

/// All strictly increasing maps {1..m} -> {1..n}, in lexicographic order.
inline std::vector<MultiIndex> all_multi_indices(int m, int n) {
  std::vector<MultiIndex> out;
  MultiIndex cur;
  auto rec = [&](auto&& self, int start) -> void {
    if (static_cast<int>(cur.size()) == m) {
      out.push_back(cur);
      return;
    }
    for (int j = start; j < n; ++j) {
      cur.push_back(j);
      self(self, j + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
  return out;
}

/// Inserts axis j into alpha; returns the sorted index and j's 0-based position,
/// or nothing when j already occurs.
inline std::optional<std::pair<MultiIndex, int>> insert_index(const MultiIndex& alpha, int j) {
  MultiIndex beta;
  int pos = -1;
  for (int a : alpha) {
    if (a == j) return std::nullopt;
    if (pos < 0 && a > j) {
      pos = static_cast<int>(beta.size());
      beta.push_back(j);
    }
    beta.push_back(a);
  }
  if (pos < 0) {
    pos = static_cast<int>(beta.size());
    beta.push_back(j);
  }
  return std::make_pair(beta, pos);
}

/// An m-covector on R^n in the basis dx^alpha.
class Covector {
 public:
  Covector() = default;
  Covector(int n, int m) : n_(n), m_(m), indices_(all_multi_indices(m, n)), values_(indices_.size(), 0.0) {}

  int ambient() const { return n_; }
  int degree() const { return m_; }
  std::size_t size() const { return values_.size(); }
  const MultiIndex& index(std::size_t i) const { return indices_[i]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double& operator[](const MultiIndex& a) { return values_[locate(a)]; }
  double operator[](const MultiIndex& a) const { return values_[locate(a)]; }

  double euclidean_norm() const {
    double s = 0;
    for (double v : values_) s += v * v;
    return std::sqrt(s);
  }

 private:
  std::size_t locate(const MultiIndex& a) const {
    auto it = std::lower_bound(indices_.begin(), indices_.end(), a);
    if (it == indices_.end() || *it != a) throw std::out_of_range("multi-index not valid for this covector");
    return static_cast<std::size_t>(it - indices_.begin());
  }

  int n_ = 0;
  int m_ = 0;
  std::vector<MultiIndex> indices_;
  std::vector<double> values_;
};

struct ComassOptions {
  int restarts = 32;
  int sample_frames = 4096;
  double grad_tol = 1e-10;
  double confidence_tol = 1e-6;
  std::uint64_t seed = 0x5eed;
};

struct ComassResult {
  double value = 0;
  double sampled_lower = 0;  // best value over random frames (equals value for closed forms)
  bool closed_form = true;
  bool low_confidence = false;
};

namespace detail {

/// <nu, v_1 ^ ... ^ v_m> for the columns of V (n x m), and its Euclidean gradient.
inline double frame_pairing(const Covector& nu, const Matrix<double>& v, Matrix<double>* grad) {
  const int m = nu.degree();
  const int n = nu.ambient();
  if (grad) grad->assign(n, std::vector<double>(m, 0.0));
  double f = 0;
  for (std::size_t k = 0; k < nu.size(); ++k) {
    const double c = nu.values()[k];
    if (c == 0) continue;
    const MultiIndex& a = nu.index(k);
    Matrix<double> sub(m, std::vector<double>(m));
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) sub[i][j] = v[a[i]][j];
    f += c * determinant(sub);
    if (!grad) continue;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) {
        Matrix<double> minor;
        for (int r = 0; r < m; ++r) {
          if (r == i) continue;
          std::vector<double> row;
          for (int s = 0; s < m; ++s)
            if (s != j) row.push_back(sub[r][s]);
          minor.push_back(std::move(row));
        }
        const double cof = ((i + j) % 2 ? -1.0 : 1.0) * (m == 1 ? 1.0 : determinant(minor));
        (*grad)[a[i]][j] += c * cof;
      }
  }
  return f;
}

/// Orthonormalizes the columns of V in place (modified Gram-Schmidt).
inline bool orthonormalize(Matrix<double>& v) {
  const std::size_t n = v.size(), m = v[0].size();
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < j; ++k) {
      double d = 0;
      for (std::size_t i = 0; i < n; ++i) d += v[i][j] * v[i][k];
      for (std::size_t i = 0; i < n; ++i) v[i][j] -= d * v[i][k];
    }
    double nr = 0;
    for (std::size_t i = 0; i < n; ++i) nr += v[i][j] * v[i][j];
    nr = std::sqrt(nr);
    if (nr < 1e-300) return false;
    for (std::size_t i = 0; i < n; ++i) v[i][j] /= nr;
  }
  return true;
}

inline Matrix<double> random_frame(int n, int m, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  Matrix<double> v(n, std::vector<double>(m));
  do {
    for (auto& row : v)
      for (auto& x : row) x = g(rng);
  } while (!orthonormalize(v));
  return v;
}

/// Block coordinate ascent on orthonormal frames: the pairing is linear in each
/// column, so each column is replaced by its normalized partial gradient
/// projected off the other columns. Stops on the Riemannian gradient norm.
inline double stiefel_ascent(const Covector& nu, Matrix<double> v, const ComassOptions& opts) {
  const int n = nu.ambient(), m = nu.degree();
  Matrix<double> g;
  double f = frame_pairing(nu, v, &g);
  for (int iter = 0; iter < 20000; ++iter) {
    // Riemannian gradient norm: G - V sym(V^T G)
    double rn = 0;
    for (int i = 0; i < n; ++i)
      for (int b = 0; b < m; ++b) {
        double r = g[i][b];
        for (int a = 0; a < m; ++a) {
          double vg = 0, gv = 0;
          for (int k = 0; k < n; ++k) {
            vg += v[k][a] * g[k][b];
            gv += g[k][a] * v[k][b];
          }
          r -= v[i][a] * 0.5 * (vg + gv);
        }
        rn += r * r;
      }
    if (std::sqrt(rn) < opts.grad_tol) break;
    const double before = f;
    for (int j = 0; j < m; ++j) {
      std::vector<double> col(n);
      for (int i = 0; i < n; ++i) col[i] = g[i][j];
      for (int a = 0; a < m; ++a) {
        if (a == j) continue;
        double d = 0;
        for (int i = 0; i < n; ++i) d += col[i] * v[i][a];
        for (int i = 0; i < n; ++i) col[i] -= d * v[i][a];
      }
      double nr = 0;
      for (double x : col) nr += x * x;
      nr = std::sqrt(nr);
      if (nr < 1e-300) continue;
      for (int i = 0; i < n; ++i) v[i][j] = col[i] / nr;
      f = frame_pairing(nu, v, &g);
    }
    if (f <= before) break;
  }
  return f;
}

}  // namespace detail

/**
 * @brief Comass: sup of <nu, xi> over unit simple m-vectors xi.
 * Closed form when every m-covector is simple (m <= 1 or m >= n-1);
 * otherwise multi-start ascent over orthonormal frames, checked against
 * a random-frame lower bound.
 */
inline ComassResult comass(const Covector& nu, const ComassOptions& opts = {}) {
  const int m = nu.degree(), n = nu.ambient();
  ComassResult out;
  if (m <= 1 || m >= n - 1) {
    out.value = nu.euclidean_norm();
    out.sampled_lower = out.value;
    return out;
  }
  out.closed_form = false;
  double norm = nu.euclidean_norm();
  if (norm == 0) return out;
  std::mt19937_64 rng(opts.seed);
  double best = 0;
  for (int k = 0; k < opts.restarts; ++k)
    best = std::max(best, detail::stiefel_ascent(nu, detail::random_frame(n, m, rng), opts));
  double sampled = 0;
  for (int k = 0; k < opts.sample_frames; ++k)
    sampled = std::max(sampled, std::abs(detail::frame_pairing(nu, detail::random_frame(n, m, rng), nullptr)));
  out.value = best;
  out.sampled_lower = sampled;
  out.low_confidence = sampled > best + opts.confidence_tol;
  return out;
}

}  // namespace geomint
