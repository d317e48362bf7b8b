#pragma once
// Slice-based instrumentation for the lower-bound argument: almost diagonal
// slices in direction xi = (1/4, 1), the sets of almost affine slices (C) and
// of slices with close boundary values (P), and the exterior path bound.

#include <cmath>
#include <stdexcept>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "scaling_lab/energy.hpp"
#include "scaling_lab/field.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

struct SliceDirection {
  static constexpr double xi1 = 0.25;
  static constexpr double xi2 = 1.0;
};

struct SliceProfile {
  double x1 = 0.0;
  std::vector<double> s, v, dv;  // dv by finite differences on the sample grid
};

inline Point slice_point(double x1, double s) {
  return {x1 + s * SliceDirection::xi1, s * SliceDirection::xi2};
}

/// v(s) = u((x1, 0) + s xi) . xi / (xi1 xi2), sampled at n equispaced s in [0, 1].
inline SliceProfile slice(const PiecewiseField& f, double L, double x1, int n = 512) {
  if (n < 16) throw std::invalid_argument("slice needs at least 16 samples");
  if (!(x1 > 0.0 && x1 < 2.0 * L - SliceDirection::xi1)) throw std::domain_error("slice base point out of range");
  constexpr double pre = 1.0 / (SliceDirection::xi1 * SliceDirection::xi2);
  SliceProfile sp;
  sp.x1 = x1;
  sp.s.resize(n);
  sp.v.resize(n);
  sp.dv.resize(n);
  for (int i = 0; i < n; ++i) {
    const double s = static_cast<double>(i) / (n - 1);
    const auto u = eval_field(f, slice_point(x1, s));
    sp.s[i] = s;
    sp.v[i] = pre * (u[0] * SliceDirection::xi1 + u[1] * SliceDirection::xi2);
  }
  const double ds = 1.0 / (n - 1);
  for (int i = 0; i < n; ++i) {
    const int a = std::max(0, i - 1), b = std::min(n - 1, i + 1);
    sp.dv[i] = (sp.v[b] - sp.v[a]) / ((b - a) * ds);
  }
  return sp;
}

/// Directional derivative of the slice from the analytic gradient.
inline double slice_derivative(const PiecewiseField& f, double x1, double s) {
  const Mat2 g = eval_gradient(f, slice_point(x1, s));
  constexpr double r = SliceDirection::xi1 / SliceDirection::xi2;
  return r * g[0] + g[1] + g[2] + g[3] / r;
}

/// Largest value over samples of min{|v' - theta|, |v' + 1 - theta|} - 5 |e(u) - K|,
/// which is <= 0 whenever the slope estimate holds.
inline double slice_slope_excess(const PiecewiseField& f, double x1, double theta, int n = 512) {
  const WellSet K{theta};
  double worst = -INFINITY;
  for (int i = 0; i < n; ++i) {
    const double s = (i + 0.5) / n;
    const Point x = slice_point(x1, s);
    const double d = slice_derivative(f, x1, s);
    const double lhs = std::min(std::fabs(d - theta), std::fabs(d + 1.0 - theta));
    const double mis = std::sqrt(K.dist2(strain(eval_gradient(f, x))));
    worst = std::max(worst, lhs - 5.0 * mis);
  }
  return worst;
}

struct SliceSets {
  std::vector<double> x1;
  std::vector<bool> C_mask, P_mask;
  std::vector<double> endpoint_gap;
  double p_measure = 0.0;
  double c_measure = 0.0;
};

/// Sup-deviation of a slice from the best of the two admissible slopes.
inline double affine_deviation(const SliceProfile& sp, double theta) {
  double da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < sp.s.size(); ++i) {
    const double base = sp.v[i] - sp.v[0];
    da = std::max(da, std::fabs(base - sp.s[i] * theta));
    db = std::max(db, std::fabs(base - sp.s[i] * (theta - 1.0)));
  }
  return std::min(da, db);
}

/// Classifies slices with base points on a midpoint grid of (0, L - xi1).
inline SliceSets classify_slices(const PiecewiseField& f, const Params& p, int grid_n = 2048, int samples = 512) {
  validate(p);
  if (grid_n < 1) throw std::invalid_argument("grid_n must be positive");
  const double span = p.L - SliceDirection::xi1;
  SliceSets out;
  out.x1.resize(grid_n);
  out.C_mask.assign(grid_n, false);
  out.P_mask.assign(grid_n, false);
  out.endpoint_gap.resize(grid_n);
  std::vector<char> c(grid_n, 0), pm(grid_n, 0);
  parallel_for(grid_n, [&](std::size_t k) {
    const double x1 = (k + 0.5) * span / grid_n;
    out.x1[k] = x1;
    const SliceProfile sp = slice(f, p.L, x1, samples);
    c[k] = affine_deviation(sp, p.theta) < p.theta / 16.0;
    const auto top = eval_field(f, slice_point(x1, 1.0)), bottom = eval_field(f, {x1, 0.0});
    const double gap = std::hypot(top[0] - bottom[0], top[1] - bottom[1]);
    out.endpoint_gap[k] = gap;
    pm[k] = gap <= std::ldexp(p.theta, -7);
  }, 16);
  std::size_t nc = 0, np = 0;
  for (int k = 0; k < grid_n; ++k) {
    out.C_mask[k] = c[k];
    out.P_mask[k] = pm[k];
    nc += c[k];
    np += pm[k];
  }
  out.p_measure = span * static_cast<double>(np) / grid_n;
  out.c_measure = span * static_cast<double>(nc) / grid_n;
  return out;
}

/// Vertices of the exterior arc from (x1 + xi1, 1) around the corner to (x1, 0).
inline std::vector<Point> exterior_path(double x1) {
  const double a = x1 + SliceDirection::xi1;
  return {{a, 1.0}, {a, 1.0 + x1}, {-x1, 1.0 + x1}, {-x1, -x1}, {x1, -x1}, {x1, 0.0}};
}

/// Line integral of |grad u|^2 along the exterior arc (adaptive Gauss-Kronrod
/// per straight segment).
inline double path_energy(const PiecewiseField& f, double x1, double rel_tol = 1e-10) {
  const auto v = exterior_path(x1);
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    const Point a = v[i], b = v[i + 1];
    const double len = norm(b - a);
    if (!(len > 0.0)) continue;
    auto g = [&](double t) {
      const Mat2 m = eval_gradient(f, lerp(a, b, t));
      return m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3];
    };
    total += len * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, 20, rel_tol);
  }
  return total;
}

struct PathSample {
  double x1 = 0.0;
  double endpoint_gap = 0.0;
  double path_integral = 0.0;  // mu times the line integral
  double path_bound = 0.0;     // mu gap^2 / (8 (1 + x1))
};

struct BulkBoundTerms {
  double log_term = 0.0;
  double p_term = 0.0;
  double p_measure = 0.0;
  std::vector<PathSample> path_energy_samples;
};

/// Lower-bound ingredients: the logarithmic austenite term driven by the
/// measure of P, the interior term min{eps, theta^2} |P|, and path samples.
inline BulkBoundTerms bulk_bound_terms(const PiecewiseField& f, const Params& p, int grid_n = 2048,
                                       int path_samples = 16) {
  const SliceSets sets = classify_slices(f, p, grid_n);
  BulkBoundTerms out;
  out.p_measure = sets.p_measure;
  const double L1 = p.L + 1.0 - SliceDirection::xi1;
  out.log_term = p.mu * p.theta * p.theta * std::log(L1 / (sets.p_measure + 1.0));
  out.p_term = std::min(p.eps, p.theta * p.theta) * sets.p_measure;

  std::vector<std::size_t> picks;
  const std::size_t stride = std::max<std::size_t>(1, sets.x1.size() / std::max(1, path_samples));
  for (std::size_t k = stride / 2; k < sets.x1.size() && static_cast<int>(picks.size()) < path_samples; k += stride)
    if (!sets.P_mask[k]) picks.push_back(k);
  out.path_energy_samples.resize(picks.size());
  parallel_for(picks.size(), [&](std::size_t i) {
    const std::size_t k = picks[i];
    PathSample ps;
    ps.x1 = sets.x1[k];
    ps.endpoint_gap = sets.endpoint_gap[k];
    ps.path_integral = p.mu * path_energy(f, ps.x1);
    ps.path_bound = p.mu * ps.endpoint_gap * ps.endpoint_gap / (8.0 * (1.0 + ps.x1));
    out.path_energy_samples[i] = ps;
  }, 1);
  return out;
}

}  // namespace scaling_lab
