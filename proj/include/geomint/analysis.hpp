/**
 * @file analysis.hpp
 * @brief Grid densities, truncated Riesz potentials, the dyadic maximal
 * function, and the empirical continuity and Riesz-lemma experiments.
 */
#pragma once

#include "geomint/chain_ops.hpp"
#include "geomint/cochains.hpp"
#include "geomint/forms.hpp"
#include "geomint/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <vector>

namespace geomint {

/// Nonnegative samples at the cell centers of a regular grid over a box.
class GridField {
 public:
  GridField() = default;
  GridField(std::vector<double> lo, std::vector<double> hi, std::vector<int> shape)
      : lo_(std::move(lo)), hi_(std::move(hi)), shape_(std::move(shape)) {
    if (lo_.size() != hi_.size() || lo_.size() != shape_.size()) throw std::invalid_argument("grid dimension mismatch");
    std::size_t total = 1;
    for (std::size_t i = 0; i < shape_.size(); ++i) {
      if (shape_[i] <= 0 || !(hi_[i] > lo_[i])) throw std::invalid_argument("degenerate grid");
      total *= shape_[i];
    }
    data_.assign(total, 0.0);
  }

  static GridField sample(const std::vector<double>& lo, const std::vector<double>& hi, const std::vector<int>& shape,
                          const FieldFn& f) {
    GridField g(lo, hi, shape);
    for (std::size_t k = 0; k < g.data_.size(); ++k) {
      const double v = f(g.center(k));
      if (!(v >= 0) || !std::isfinite(v)) throw std::invalid_argument("grid field samples must be finite and nonnegative");
      g.data_[k] = v;
    }
    return g;
  }

  std::size_t dim() const { return shape_.size(); }
  const std::vector<double>& lo() const { return lo_; }
  const std::vector<double>& hi() const { return hi_; }
  const std::vector<int>& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }
  double cell_size(std::size_t axis) const { return (hi_[axis] - lo_[axis]) / shape_[axis]; }
  double cell_volume() const {
    double v = 1;
    for (std::size_t i = 0; i < dim(); ++i) v *= cell_size(i);
    return v;
  }

  std::vector<int> unflatten(std::size_t k) const {
    std::vector<int> idx(dim());
    for (std::size_t i = 0; i < dim(); ++i) {
      idx[i] = static_cast<int>(k % shape_[i]);
      k /= shape_[i];
    }
    return idx;
  }
  std::size_t flatten(const std::vector<int>& idx) const {
    std::size_t k = 0;
    for (std::size_t i = dim(); i-- > 0;) k = k * shape_[i] + idx[i];
    return k;
  }
  std::vector<double> center(std::size_t k) const {
    auto idx = unflatten(k);
    std::vector<double> x(dim());
    for (std::size_t i = 0; i < dim(); ++i) x[i] = lo_[i] + (idx[i] + 0.5) * cell_size(i);
    return x;
  }
  bool inside(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < dim(); ++i)
      if (x[i] < lo_[i] || x[i] > hi_[i]) return false;
    return true;
  }

  /// Piecewise-constant value (0 outside the box).
  double cell_value(const std::vector<double>& x) const {
    if (!inside(x)) return 0.0;
    std::vector<int> idx(dim());
    for (std::size_t i = 0; i < dim(); ++i)
      idx[i] = std::clamp(static_cast<int>(std::floor((x[i] - lo_[i]) / cell_size(i))), 0, shape_[i] - 1);
    return data_[flatten(idx)];
  }

  /// Multilinear interpolation between cell centers (constant near the faces, 0 outside).
  double operator()(const std::vector<double>& x) const {
    if (!inside(x)) return 0.0;
    const std::size_t n = dim();
    std::vector<int> base(n);
    std::vector<double> frac(n);
    for (std::size_t i = 0; i < n; ++i) {
      double t = (x[i] - lo_[i]) / cell_size(i) - 0.5;
      t = std::clamp(t, 0.0, static_cast<double>(shape_[i] - 1));
      base[i] = std::min(static_cast<int>(std::floor(t)), std::max(0, shape_[i] - 2));
      frac[i] = shape_[i] == 1 ? 0.0 : t - base[i];
    }
    double acc = 0;
    std::vector<int> idx(n);
    for (int mask = 0; mask < (1 << n); ++mask) {
      double w = 1;
      for (std::size_t i = 0; i < n; ++i) {
        const bool up = mask & (1 << i);
        if (up && shape_[i] == 1) {
          w = 0;
          break;
        }
        idx[i] = base[i] + (up ? 1 : 0);
        w *= up ? frac[i] : 1 - frac[i];
      }
      if (w != 0) acc += w * data_[flatten(idx)];
    }
    return acc;
  }

  FieldFn as_field() const {
    return [self = *this](const std::vector<double>& x) { return self(x); };
  }

 private:
  std::vector<double> lo_, hi_;
  std::vector<int> shape_;
  std::vector<double> data_;
};

// ---------------------------------------------------------------------------
// Truncated Riesz potential
// ---------------------------------------------------------------------------

struct RieszOptions {
  int radial_panels = 0;  // 0: about two panels per grid cell along the radius
  int angular = 0;        // 0: chosen from the grid resolution
  int max_angular = 512;
};

/**
 * @brief I_r(u)(y) = int_{B(y,r)} u(x) |x-y|^{1-n} dx in polar form
 * int_{S^{n-1}} int_0^r u(y + s theta) ds dtheta, which has no singularity.
 */
inline double riesz_potential(const GridField& u, double r, const std::vector<double>& y, RieszOptions opts = {}) {
  if (!(r > 0)) throw std::invalid_argument("Riesz potential radius must be positive");
  if (y.size() != u.dim() || !u.inside(y)) throw std::invalid_argument("Riesz potential evaluated outside the grid box");
  const std::size_t n = u.dim();
  double h = u.cell_size(0);
  for (std::size_t i = 1; i < n; ++i) h = std::min(h, u.cell_size(i));
  if (opts.radial_panels <= 0) opts.radial_panels = std::clamp(static_cast<int>(std::ceil(2 * r / h)), 8, 256);
  std::vector<double> gx, gw;
  std::vector<double> sx, sw;
  for (int p = 0; p < opts.radial_panels; ++p) {
    gauss_legendre(4, r * p / opts.radial_panels, r * (p + 1) / opts.radial_panels, gx, gw);
    sx.insert(sx.end(), gx.begin(), gx.end());
    sw.insert(sw.end(), gw.begin(), gw.end());
  }
  auto ray = [&](const std::vector<double>& theta) {
    double acc = 0;
    std::vector<double> x(n);
    for (std::size_t k = 0; k < sx.size(); ++k) {
      for (std::size_t i = 0; i < n; ++i) x[i] = y[i] + sx[k] * theta[i];
      acc += sw[k] * u(x);
    }
    return acc;
  };
  switch (n) {
    case 1:
      return ray({1.0}) + ray({-1.0});
    case 2: {
      int na = opts.angular > 0 ? opts.angular
                                : std::clamp(static_cast<int>(std::ceil(4 * M_PI * r / h)), 64, opts.max_angular);
      double acc = 0;
      for (int k = 0; k < na; ++k) {
        const double t = 2 * M_PI * (k + 0.5) / na;
        acc += ray({std::cos(t), std::sin(t)});
      }
      return acc * 2 * M_PI / na;
    }
    case 3: {
      int na = opts.angular > 0 ? opts.angular
                                : std::clamp(static_cast<int>(std::ceil(4 * M_PI * r / h)), 32, opts.max_angular / 4);
      std::vector<double> cz, cw;
      gauss_legendre(std::max(8, na / 2), -1.0, 1.0, cz, cw);
      double acc = 0;
      for (std::size_t j = 0; j < cz.size(); ++j) {
        const double sz = std::sqrt(std::max(0.0, 1 - cz[j] * cz[j]));
        for (int k = 0; k < na; ++k) {
          const double t = 2 * M_PI * (k + 0.5) / na;
          acc += cw[j] * (2 * M_PI / na) * ray({sz * std::cos(t), sz * std::sin(t), cz[j]});
        }
      }
      return acc;
    }
    default:
      throw std::invalid_argument("Riesz potential implemented for n <= 3");
  }
}

// ---------------------------------------------------------------------------
// Maximal function
// ---------------------------------------------------------------------------

/// Grid offsets (in cells) within Euclidean distance r of the origin.
inline std::vector<std::vector<int>> ball_stencil(const GridField& u, double r) {
  const std::size_t n = u.dim();
  std::vector<int> reach(n);
  for (std::size_t i = 0; i < n; ++i) reach[i] = static_cast<int>(std::floor(r / u.cell_size(i) + 1e-12));
  std::vector<std::vector<int>> out;
  std::vector<int> o(n);
  for (std::size_t i = 0; i < n; ++i) o[i] = -reach[i];
  while (true) {
    double d = 0;
    for (std::size_t i = 0; i < n; ++i) d += (o[i] * u.cell_size(i)) * (o[i] * u.cell_size(i));
    if (d <= r * r * (1 + 1e-12)) out.push_back(o);
    std::size_t k = 0;
    while (k < n && ++o[k] > reach[k]) o[k] = -reach[k], ++k;
    if (k == n) break;
  }
  return out;
}

/**
 * @brief Restricted maximal function: at each cell center, the largest average
 * of u over discrete balls of the given radii (and the center cell alone).
 * Cells outside the grid count as zero; averages divide by the full stencil size.
 */
inline GridField maximal_function(const GridField& u, const std::vector<double>& radii) {
  for (double v : u.data())
    if (v < 0) throw std::invalid_argument("maximal function needs a nonnegative field");
  GridField out = u;
  const std::size_t n = u.dim();
  const auto& shape = u.shape();
  // prefix sums along axis 0
  std::vector<double> prefix(u.size() + u.size() / shape[0], 0.0);
  const std::size_t rows = u.size() / shape[0];
  for (std::size_t row = 0; row < rows; ++row)
    for (int i = 0; i < shape[0]; ++i)
      prefix[row * (shape[0] + 1) + i + 1] = prefix[row * (shape[0] + 1) + i] + u.data()[row * shape[0] + i];
  for (double r : radii) {
    // group the stencil by its offsets in axes 1..n-1: contiguous range along axis 0
    std::map<std::vector<int>, int> half;
    std::size_t count = 0;
    for (const auto& o : ball_stencil(u, r)) {
      std::vector<int> outer(o.begin() + 1, o.end());
      half[outer] = std::max(half[outer], std::abs(o[0]));
      ++count;
    }
    for (std::size_t k = 0; k < u.size(); ++k) {
      const auto idx = u.unflatten(k);
      double sum = 0;
      for (const auto& [outer, w] : half) {
        std::size_t row = 0;
        bool ok = true;
        for (std::size_t i = n; i-- > 1;) {
          const int c = idx[i] + outer[i - 1];
          if (c < 0 || c >= shape[i]) {
            ok = false;
            break;
          }
          row = row * shape[i] + c;
        }
        if (!ok) continue;
        const int a = std::max(0, idx[0] - w), b = std::min(shape[0] - 1, idx[0] + w);
        if (a > b) continue;
        sum += prefix[row * (shape[0] + 1) + b + 1] - prefix[row * (shape[0] + 1) + a];
      }
      out.data()[k] = std::max(out.data()[k], sum / count);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuity of averages
// ---------------------------------------------------------------------------

/// Inputs of the two-term continuity bound (constant taken as 1).
struct ContinuityBound {
  double p = 4, q = 4;
  double g_norm_p = 0;   // ||g||_p of an upper gradient
  double h_norm_q = 0;   // ||h||_q of an upper norm
  double theta_m = 0;    // maximal growth of T
  double theta_dm = 0;   // maximal growth of its boundary
  double mass_t = 0, mass_dt = 0;
  int n = 0, m = 0;

  double operator()(double r) const {
    double b = std::pow(theta_m, 1 / p) * std::pow(r, 1 + (m - n) / p) * std::pow(mass_t, (p - 1) / p) * g_norm_p;
    if (m >= 1 && mass_dt > 0)
      b += std::pow(theta_dm, 1 / q) * std::pow(r, 1 + (m - 1 - n) / q) * std::pow(mass_dt, (q - 1) / q) * h_norm_q;
    return b;
  }
};

/// Axis-aligned bounding box of spt T grown by `pad`.
template <class S>
Box support_box(const Chain<S>& t, double pad) {
  Box b{std::vector<double>(t.ambient(), std::numeric_limits<double>::infinity()),
        std::vector<double>(t.ambient(), -std::numeric_limits<double>::infinity())};
  for (const auto& [cell, a] : t.terms())
    for (const auto& v : cell_vertices(cell))
      for (int i = 0; i < t.ambient(); ++i) {
        b.lo[i] = std::min(b.lo[i], to_double(v[i]) - pad);
        b.hi[i] = std::max(b.hi[i], to_double(v[i]) + pad);
      }
  return b;
}

/**
 * @brief Bound inputs for X^omega on T: comass norms of omega and d omega over the
 * support box of T grown by r_max (the only region the averages see), and
 * sampled maximal growth of T and its boundary.
 */
inline ContinuityBound continuity_bound(const PolyForm& omega, const RationalChain& t, double p, double q, double r_max,
                                        const NormOptions& norm_opts = {}, const ThetaOptions& theta_opts = {}) {
  ContinuityBound b;
  b.p = p;
  b.q = q;
  b.n = t.ambient();
  b.m = t.degree();
  const Box box = support_box(t, r_max);
  b.h_norm_q = lq_norm(omega, q, box, norm_opts).value;
  b.g_norm_p = lq_norm_d(omega, p, box, norm_opts).value;
  b.theta_m = theta_growth(t, theta_opts).value;
  b.mass_t = mass(t).value;
  if (t.degree() >= 1) {
    RationalChain dt = boundary(t);
    if (!dt.empty()) {
      b.theta_dm = theta_growth(dt, theta_opts).value;
      b.mass_dt = mass(dt).value;
    }
  }
  return b;
}

struct ContinuityRow {
  double r = 0, difference = 0, std_error = 0, bound = 0;
};

struct ContinuityReport {
  std::vector<ContinuityRow> rows;
  double exact_value = 0;
  double slope = 0;          // least-squares slope of log difference vs log r
  bool all_zero = false;     // every difference at round-off level
  bool monotone = true;      // differences shrink with r up to two standard errors
  bool within_bound = true;  // every difference below the bound
};

inline ContinuityReport continuity_experiment(const Cochain& x, const RationalChain& t, const std::vector<double>& radii,
                                              const SamplerOptions& sampler = {},
                                              const std::optional<ContinuityBound>& bound = std::nullopt) {
  const CochainValue base = x(t);
  if (base.infinite || !std::isfinite(base.value)) throw CochainError("continuity experiment needs a finite X(T)");
  ContinuityReport rep;
  rep.exact_value = base.value;
  const double floor = 1e-13 * std::max(1.0, std::abs(base.value));
  for (double r : radii) {
    CochainValue v = average_value(x, t, r, sampler);
    ContinuityRow row{r, std::abs(v.value - base.value), v.error, bound ? (*bound)(r) : 0.0};
    if (bound && row.difference > row.bound) rep.within_bound = false;
    rep.rows.push_back(row);
  }
  std::vector<std::pair<double, double>> pts;
  rep.all_zero = true;
  for (const auto& row : rep.rows)
    if (row.difference > floor) {
      rep.all_zero = false;
      pts.emplace_back(std::log(row.r), std::log(row.difference));
    }
  if (pts.size() >= 2) {
    double mx = 0, my = 0;
    for (auto [a, b] : pts) mx += a, my += b;
    mx /= pts.size();
    my /= pts.size();
    double sxy = 0, sxx = 0;
    for (auto [a, b] : pts) sxy += (a - mx) * (b - my), sxx += (a - mx) * (a - mx);
    rep.slope = sxy / sxx;
  }
  std::vector<ContinuityRow> sorted = rep.rows;
  std::sort(sorted.begin(), sorted.end(), [](const auto& a, const auto& b) { return a.r > b.r; });
  for (std::size_t i = 1; i < sorted.size(); ++i)
    if (sorted[i].difference > sorted[i - 1].difference + 2 * (sorted[i].std_error + sorted[i - 1].std_error) + floor)
      rep.monotone = false;
  return rep;
}

// ---------------------------------------------------------------------------
// Riesz-potential lemma check
// ---------------------------------------------------------------------------

struct RieszReport {
  double lhs = 0, lhs_error = 0, rhs = 0;
  double margin() const { return rhs - lhs; }
  bool holds(double factor = 1.05) const { return lhs <= rhs * factor + 1e-12; }
};

/**
 * @brief Compares the ball average over x of int u d||S_x|| (S_x the sweep of T
 * along x) with (n-1)^-1 |B(0,1)|^-1 int I_r(u) d||T||.
 */
inline RieszReport riesz_lemma_check(const RationalChain& t, const GridField& u, double r,
                                     const SamplerOptions& sampler = {}, const RieszOptions& ropts = {}) {
  const int n = t.ambient();
  if (n < 2) throw std::invalid_argument("Riesz lemma check needs n >= 2");
  for (double v : u.data())
    if (v < 0) throw std::invalid_argument("Riesz lemma check needs u >= 0");
  const FieldFn uf = u.as_field();
  const FloatChain tf = simplicial(t).cast<double>();
  QuadratureOptions q;
  q.abs_tol = 1e-7;
  q.max_depth = 10;
  q.rule_order = 2;
  const int pairs = std::max(1, sampler.samples / (2 * sampler.replicates));
  std::vector<double> means;
  for (int rep = 0; rep < sampler.replicates; ++rep) {
    double acc = 0;
    for (const auto& y : qmc_ball_points(n, pairs, sampler.seed, rep))
      for (double sign : {1.0, -1.0}) {
        Point<double> x(n);
        for (int d = 0; d < n; ++d) x[d] = sign * r * y[d];
        acc += integrate_measure(homotopy_chains(tf, x).V, uf, q).value;
      }
    means.push_back(acc / (2.0 * pairs));
  }
  RieszReport out;
  for (double m : means) out.lhs += m;
  out.lhs /= means.size();
  double var = 0;
  for (double m : means) var += (m - out.lhs) * (m - out.lhs);
  out.lhs_error = means.size() > 1 ? std::sqrt(var / (means.size() - 1) / means.size()) : 0.0;
  const double ball = std::pow(M_PI, n / 2.0) / std::tgamma(n / 2.0 + 1);
  QuadratureOptions qr;
  qr.abs_tol = 1e-6;
  qr.max_depth = 4;
  qr.rule_order = 2;
  const double integral =
      integrate_measure(t, [&](const std::vector<double>& y) { return riesz_potential(u, r, y, ropts); }, qr).value;
  out.rhs = integral / ((n - 1) * ball);
  return out;
}

}  // namespace geomint
