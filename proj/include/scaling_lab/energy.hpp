#pragma once
// Energies of piecewise fields: two-well martensite term inside the nucleus,
// austenite term outside it (with far-field truncation), and the total
// variation of the gradient inside the nucleus.

#include <atomic>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/field.hpp"
#include "scaling_lab/numerics.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

enum class TailMode { analytic, fitted };
enum class Functional { I, J };  // I: full gradient outside; J: symmetrized gradient outside

struct QuadratureSpec {
  int order = 8;
  std::size_t max_cells = 200'000'000;
  double truncation_radius = 0.0;  // 0 selects 32 max(L, 1)
  TailMode tail_mode = TailMode::analytic;
  Functional functional = Functional::I;

  double radius_for(double L) const { return truncation_radius > 0.0 ? truncation_radius : 32.0 * std::max(L, 1.0); }
};

struct EnergyBreakdown {
  double elastic_martensite = 0.0;
  double elastic_austenite = 0.0;
  double surface = 0.0;
  double tail_estimate = 0.0;
  double total = 0.0;
  /// Largest fitted decay exponent of |grad u|^2 (fitted tail mode only).
  std::optional<double> fitted_exponent;
};

/// The two strain wells theta e1.e2 and -(1 - theta) e1.e2 (symmetric products).
struct WellSet {
  double theta = 0.5;

  Mat2 well_plus() const { return {0.0, 0.5 * theta, 0.5 * theta, 0.0}; }
  Mat2 well_minus() const { return {0.0, -0.5 * (1.0 - theta), -0.5 * (1.0 - theta), 0.0}; }

  /// Squared distance of a symmetric strain to the nearer well.
  double dist2(const Mat2& e) const {
    const Mat2 a = e - well_plus(), b = e - well_minus();
    double da = 0.0, db = 0.0;
    for (int i = 0; i < 4; ++i) {
      da += a[i] * a[i];
      db += b[i] * b[i];
    }
    return std::min(da, db);
  }
};

/// Symmetric part of a displacement gradient.
inline Mat2 strain(const Mat2& m) {
  const double off = 0.5 * (m[1] + m[2]);
  return {m[0], off, off, m[3]};
}

/// Integrands, written in terms of grad u = (d1, d2) of the scalar field.
struct Density {
  enum Kind {
    two_well,        // d1^2 + min{(d2 - t)^2, (d2 + 1 - t)^2} / 2  (= dist^2(e(u), K))
    two_well_full,   // d1^2 + min{(d2 - t)^2, (d2 + 1 - t)^2}
    gradient,        // d1^2 + d2^2
    symmetrized,     // d1^2 + d2^2 / 2  (= |e(u)|^2)
    d1_squared,      // d1^2
  };
  Kind kind = gradient;
  double theta = 0.5;

  double operator()(const std::array<double, 2>& g) const {
    const double d1 = g[0] * g[0];
    switch (kind) {
      case two_well:
      case two_well_full: {
        const double a = g[1] - theta, b = g[1] + 1.0 - theta;
        const double m = std::min(a * a, b * b);
        return d1 + (kind == two_well ? 0.5 * m : m);
      }
      case gradient: return d1 + g[1] * g[1];
      case symmetrized: return d1 + 0.5 * g[1] * g[1];
      case d1_squared: return d1;
    }
    return 0.0;
  }
  /// Value of d2 where the two wells swap, if the density has one.
  std::optional<double> watershed() const {
    if (kind == two_well || kind == two_well_full) return theta - 0.5;
    return std::nullopt;
  }
};

inline Density austenite_density(Functional fn) {
  return {fn == Functional::I ? Density::gradient : Density::symmetrized, 0.0};
}

enum class Part { inside, outside, everywhere };

struct PieceIntegral {
  double value = 0.0;
  double tail = 0.0;
  std::optional<double> exponent;
};

namespace detail {

inline Polygon rect_polygon(double x0, double x1, double y0, double y1) {
  return {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
}

/// Convex pieces of poly lying inside or outside the closed rectangle r.
inline std::vector<Polygon> split_by_rect(const Polygon& poly, const std::optional<Rect>& r, Part part) {
  std::vector<Polygon> out;
  auto keep = [&](Polygon p) {
    if (p.size() >= 3 && signed_area(p) > 0.0) out.push_back(std::move(p));
  };
  if (part == Part::everywhere) {
    keep(poly);
    return out;
  }
  if (!r) {
    if (part == Part::outside) keep(poly);
    return out;
  }
  if (part == Part::inside) {
    keep(clip_box(poly, r->x0, r->x1, r->y0, r->y1));
    return out;
  }
  const double inf = INFINITY;
  keep(clip_box(poly, -inf, r->x0, -inf, inf));
  keep(clip_box(poly, r->x1, inf, -inf, inf));
  keep(clip_box(poly, r->x0, r->x1, -inf, r->y0));
  keep(clip_box(poly, r->x0, r->x1, r->y1, inf));
  return out;
}

inline Point centroid(const Polygon& p) {
  Point c;
  for (const Point& v : p) c = c + v;
  return (1.0 / static_cast<double>(p.size())) * c;
}

struct CellBudget {
  std::size_t limit;
  std::atomic<std::size_t> used{0};
  void take(std::size_t n) {
    if (used.fetch_add(n) + n > limit) throw std::length_error("quadrature cell budget exceeded");
  }
};

/// Integrates dens(grad) over a convex polygon given in the piece's local frame.
inline double integrate_polygon_part(const Piece& pc, const Polygon& part, const Density& dens, int order,
                                     CellBudget& budget) {
  auto grad = [&](Point x) { return expr_grad(pc.expr, pc.p, x); };
  auto f = [&](Point x) { return dens(grad(x)); };
  if (pc.is_constant_gradient()) {
    budget.take(1);
    return signed_area(part) * dens(grad(centroid(part)));
  }
  if (pc.expr == ExprKind::bilinear) {
    // d2 = c2 + c3 x1, so the well switch is a vertical line; split there.
    std::vector<Polygon> parts{part};
    if (const auto ws = dens.watershed()) {
      const double xs = pc.p[4] + (*ws - pc.p[2]) / pc.p[3];
      Polygon l = clip_halfplane(part, {1, 0}, xs), r = clip_halfplane(part, {-1, 0}, -xs);
      parts.clear();
      if (l.size() >= 3) parts.push_back(std::move(l));
      if (r.size() >= 3) parts.push_back(std::move(r));
    }
    double s = 0.0;
    for (const Polygon& q : parts) {
      budget.take(1);
      s += integrate_convex(q, f, std::max(order, 2));
    }
    return s;
  }
  budget.take(8);
  return integrate_convex_adaptive(part, f, 16, 1e-9, 12);
}

/// Radial cell boundaries covering [a, b]: the kinks, then dyadic refinement
/// so that every cell not touching r = 0 has outer/inner ratio at most 2.
inline std::vector<double> radial_cells(double a, double b, std::vector<double> kinks) {
  std::vector<double> stops;
  for (double k : kinks)
    if (k > a && k < b) stops.push_back(k);
  stops.push_back(b);
  std::sort(stops.begin(), stops.end());
  std::vector<double> pts{a};
  for (double k : stops) {
    double r = pts.back();
    if (r == 0.0) {
      r = k / 16.0;
      pts.push_back(r);
    }
    while (2.0 * r < k) {
      r *= 2.0;
      pts.push_back(r);
    }
    pts.push_back(k);
  }
  return pts;
}

/// Polar quadrature over the part of a sector piece with r_in <= r <= r_hi.
inline double integrate_sector(const Piece& pc, double r_lo, double r_hi, const Density& dens, int order,
                               CellBudget& budget) {
  const double cx = pc.g[0], cy = pc.g[1], cut = pc.g[5];
  const bool upper = pc.g[4] > 0;
  const double rc = cut - cx;
  const auto rads = radial_cells(r_lo, r_hi, {rc > r_lo && rc < r_hi ? rc : r_lo});
  const GaussRule& g = gauss_rule(order);
  const double pi = std::numbers::pi;
  std::vector<double> parts;
  for (std::size_t k = 0; k + 1 < rads.size(); ++k) {
    const double a = rads[k], b = rads[k + 1];
    if (!(b > a)) continue;
    budget.take(1);
    // Past the cut radius the angular limit behaves like sqrt(r - rc); the
    // substitution r = a + (b - a) s^2 removes that singularity.
    const bool graded = a == rc;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double s = 0.5 * (g.x[i] + 1.0);
      const double r = graded ? a + (b - a) * s * s : a + (b - a) * s;
      const double jac = graded ? 2.0 * s : 1.0;
      double lo = upper ? 0.0 : pi, hi = upper ? pi : 2.0 * pi;
      if (rc < r) {
        const double c = std::acos(std::clamp(rc / r, -1.0, 1.0));
        if (upper) lo = c;
        else hi = 2.0 * pi - c;
      }
      if (!(hi > lo)) continue;
      double inner = 0.0;
      for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double phi = 0.5 * (lo + hi) + 0.5 * (hi - lo) * g.x[j];
        const Point x{cx + r * std::cos(phi), cy + r * std::sin(phi)};
        inner += g.w[j] * dens(expr_grad(pc.expr, pc.p, x));
      }
      acc += g.w[i] * jac * r * inner * 0.5 * (hi - lo);
    }
    parts.push_back(acc * 0.5 * (b - a));
  }
  return pairwise_sum(parts);
}

/// Strip boxes depend on x1 only; integrate over radius r = -(x1 + shift).
inline double integrate_strip(const Piece& pc, double r_lo, double r_hi, const Density& dens, int order,
                              CellBudget& budget) {
  const double shift = pc.p[4], height = pc.g[3] - pc.g[2];
  const auto rads = radial_cells(r_lo, r_hi, {});
  std::vector<double> parts;
  for (std::size_t k = 0; k + 1 < rads.size(); ++k) {
    budget.take(1);
    parts.push_back(integrate_interval(rads[k], rads[k + 1], [&](double r) {
      return dens(expr_grad(pc.expr, pc.p, Point{-r - shift, 0.5 * (pc.g[2] + pc.g[3])}));
    }, order));
  }
  return height * pairwise_sum(parts);
}

inline double polar_tail_constant(bool upper) {
  const double pi = std::numbers::pi;
  return (upper ? 7.0 * pi / 48.0 : pi / 48.0) + 1.0 / (4.0 * pi);
}

/// Decay fit from the integrals over two consecutive dyadic shells [R/4, R/2]
/// and [R/2, R] of a dim-dimensional region; returns {tail beyond R, power
/// of r in the density}.
inline std::pair<double, double> fitted_tail(double s1, double s2, int dim) {
  if (!(s1 > 0.0)) return {0.0, -INFINITY};
  const double ratio = s2 / s1;
  const double expo = std::log2(ratio) - dim;
  if (!(ratio < 1.0)) throw FieldError("fitted far-field decay is not integrable");
  return {s2 * ratio / (1.0 - ratio), expo};
}

}  // namespace detail

/// Integral of dens(grad u) over the part of one piece selected by `part`,
/// truncated at distance R from the far-field centre of unbounded pieces.
inline PieceIntegral integrate_piece(const Piece& pc, const std::optional<Rect>& nucleus, Part part,
                                     const Density& dens, const QuadratureSpec& q, double R,
                                     detail::CellBudget& budget) {
  PieceIntegral out;
  if (pc.expr == ExprKind::zero && dens(std::array<double, 2>{0.0, 0.0}) == 0.0) return out;
  std::optional<Rect> rect = nucleus;
  if (rect && pc.mirrored) rect = Rect{2.0 * pc.axis - rect->x1, 2.0 * pc.axis - rect->x0, rect->y0, rect->y1};

  auto finite_polygon = [&](const Polygon& poly) {
    std::vector<double> vals;
    for (const Polygon& pp : detail::split_by_rect(poly, rect, part))
      vals.push_back(detail::integrate_polygon_part(pc, pp, dens, q.order, budget));
    out.value = pairwise_sum(vals);
  };

  switch (pc.region) {
    case RegionKind::polygon: finite_polygon(pc.local_polygon()); break;
    case RegionKind::half_plane_tail: {
      const double x0 = pc.g[0], x1 = pc.g[1], y0 = pc.g[2], y1 = pc.g[3];
      const bool finite = std::isfinite(x0) && std::isfinite(x1) && std::isfinite(y0) && std::isfinite(y1);
      if (finite && pc.expr != ExprKind::exterior_strip) {
        finite_polygon(detail::rect_polygon(x0, x1, y0, y1));
        break;
      }
      std::vector<double> vals;
      if (part != Part::outside && rect) {
        // bounded overlap with the nucleus
        const double a0 = std::max(x0, rect->x0), a1 = std::min(x1, rect->x1);
        const double b0 = std::max(y0, rect->y0), b1 = std::min(y1, rect->y1);
        if (a1 > a0 && b1 > b0) {
          finite_polygon(detail::rect_polygon(a0, a1, b0, b1));
          vals.push_back(out.value);
        }
      }
      out.value = pairwise_sum(vals);
      if (part == Part::inside) break;
      if (pc.expr == ExprKind::zero) {
        if (dens(std::array<double, 2>{0.0, 0.0}) != 0.0) throw FieldError("unbounded piece with nonzero density");
        break;
      }
      if (pc.expr != ExprKind::exterior_strip) throw FieldError("unbounded piece without a known far-field form");
      if (rect && x1 > rect->x0 && x0 < rect->x1 && y1 > rect->y0 && y0 < rect->y1)
        throw FieldError("far-field strip overlaps the nucleus");
      const double shift = pc.p[4], Lbar = pc.p[2], th = pc.p[3];
      const double r_lo = -(x1 + shift), r_hi = -(x0 + shift);
      if (std::isfinite(r_hi)) {
        out.value = detail::integrate_strip(pc, r_lo, r_hi, dens, q.order, budget);
        break;
      }
      const double Reff = std::max(R, (q.tail_mode == TailMode::fitted ? 4.0 : 2.0) * std::max(Lbar, r_lo));
      out.value = detail::integrate_strip(pc, r_lo, Reff, dens, q.order, budget);
      if (q.tail_mode == TailMode::analytic) {
        out.tail = th * th * Lbar / (32.0 * Reff * Reff) * (y1 - y0);
      } else {
        const double s1 = detail::integrate_strip(pc, Reff / 4.0, Reff / 2.0, dens, q.order, budget);
        const double s2 = detail::integrate_strip(pc, Reff / 2.0, Reff, dens, q.order, budget);
        const auto [tail, expo] = detail::fitted_tail(s1, s2, 1);
        out.tail = tail;
        out.exponent = expo;
      }
      break;
    }
    case RegionKind::annular_sector: {
      if (part == Part::inside || pc.expr == ExprKind::zero) break;
      if (pc.expr != ExprKind::exterior_polar) throw FieldError("sector piece without a polar far-field form");
      const double r_in = pc.g[2], r_out = pc.g[3], Lbar = pc.p[2], th = pc.p[3];
      if (std::isfinite(r_out)) {
        out.value = detail::integrate_sector(pc, r_in, r_out, dens, q.order, budget);
        break;
      }
      const double Reff = std::max(R, (q.tail_mode == TailMode::fitted ? 4.0 : 2.0) * std::max(Lbar, r_in));
      out.value = detail::integrate_sector(pc, r_in, Reff, dens, q.order, budget);
      if (q.tail_mode == TailMode::analytic) {
        out.tail = th * th * Lbar * detail::polar_tail_constant(pc.g[4] > 0) / Reff;
      } else {
        const double s1 = detail::integrate_sector(pc, Reff / 4.0, Reff / 2.0, dens, q.order, budget);
        const double s2 = detail::integrate_sector(pc, Reff / 2.0, Reff, dens, q.order, budget);
        const auto [tail, expo] = detail::fitted_tail(s1, s2, 2);
        out.tail = tail;
        out.exponent = expo;
      }
      break;
    }
  }
  return out;
}

/// Sum of integrate_piece over all pieces, with deterministic reduction.
inline PieceIntegral integrate_field(const PiecewiseField& f, Part part, const Density& dens,
                                     const QuadratureSpec& q, double R) {
  if (q.order < 1) throw std::invalid_argument("quadrature order must be >= 1");
  detail::CellBudget budget{q.max_cells};
  std::vector<PieceIntegral> per(f.pieces.size());
  parallel_for(f.pieces.size(), [&](std::size_t i) {
    per[i] = integrate_piece(f.pieces[i], f.nucleus, part, dens, q, R, budget);
  }, 64);
  std::vector<double> v(per.size()), t(per.size());
  PieceIntegral out;
  for (std::size_t i = 0; i < per.size(); ++i) {
    v[i] = per[i].value;
    t[i] = per[i].tail;
    if (per[i].exponent && (!out.exponent || *per[i].exponent > *out.exponent)) out.exponent = per[i].exponent;
  }
  out.value = pairwise_sum(v);
  out.tail = pairwise_sum(t);
  return out;
}

/// Two-well energy of e(u) over the nucleus.
inline double elastic_martensite(const PiecewiseField& f, double theta, const QuadratureSpec& q = {}) {
  if (!f.nucleus) return 0.0;
  return integrate_field(f, Part::inside, {Density::two_well, theta}, q, INFINITY).value;
}

struct AusteniteEnergy {
  double value = 0.0;
  double tail_estimate = 0.0;
  std::optional<double> fitted_exponent;
};

/// mu times the elastic energy outside the nucleus, truncated at the
/// quadrature radius; the remainder is bounded by tail_estimate.
inline AusteniteEnergy elastic_austenite(const PiecewiseField& f, double mu, const QuadratureSpec& q = {},
                                         double L = 0.5) {
  const double R = q.radius_for(L);
  const auto r = integrate_field(f, Part::outside, austenite_density(q.functional), q, R);
  return {mu * r.value, mu * r.tail, r.exponent};
}

namespace detail {

/// Integral over t in [0, 1] of |a + t d| for vectors a, d.
inline double integrate_linear_norm(std::array<double, 2> a, std::array<double, 2> d) {
  const double nd = std::hypot(d[0], d[1]), na = std::hypot(a[0], a[1]);
  if (nd <= 1e-9 * na || nd == 0.0) return std::hypot(a[0] + 0.5 * d[0], a[1] + 0.5 * d[1]);
  const double s = (a[0] * d[0] + a[1] * d[1]) / nd;
  const double p = std::fabs(a[0] * d[1] - a[1] * d[0]) / nd;
  auto F = [&](double u) {
    if (p == 0.0) return 0.5 * u * std::fabs(u);
    return 0.5 * (u * std::hypot(u, p) + p * p * std::asinh(u / p));
  };
  return (F(s + nd) - F(s)) / nd;
}

/// Frobenius norm of the Hessian of a piece expression at a local point.
inline double hessian_norm(const Piece& pc, Point x) {
  if (pc.expr == ExprKind::bilinear) return std::numbers::sqrt2 * std::fabs(pc.p[3]);
  const double hx = 1e-5 * std::max(1.0, std::fabs(x.x1)), hy = 1e-5 * std::max(1.0, std::fabs(x.x2));
  const auto gxp = expr_grad(pc.expr, pc.p, {x.x1 + hx, x.x2}), gxm = expr_grad(pc.expr, pc.p, {x.x1 - hx, x.x2});
  const auto gyp = expr_grad(pc.expr, pc.p, {x.x1, x.x2 + hy}), gym = expr_grad(pc.expr, pc.p, {x.x1, x.x2 - hy});
  const double h11 = (gxp[0] - gxm[0]) / (2 * hx), h21 = (gxp[1] - gxm[1]) / (2 * hx);
  const double h12 = (gyp[0] - gym[0]) / (2 * hy), h22 = (gyp[1] - gym[1]) / (2 * hy);
  return std::sqrt(h11 * h11 + h12 * h12 + h21 * h21 + h22 * h22);
}

}  // namespace detail

/// Total variation of grad u inside the nucleus carried by the jump set.
inline double jump_variation(const PiecewiseField& f) {
  const auto js = jump_set(f);
  std::vector<double> v(js.size());
  for (std::size_t i = 0; i < js.size(); ++i) {
    const JumpSegment& s = js[i];
    const std::array<double, 2> a{s.jump_a[0], s.jump_a[1]};
    const std::array<double, 2> d{s.jump_b[0] - s.jump_a[0], s.jump_b[1] - s.jump_a[1]};
    v[i] = s.length() * detail::integrate_linear_norm(a, d);
  }
  return pairwise_sum(v);
}

/// Absolutely continuous part of |D^2 u| inside the nucleus.
inline double bulk_variation(const PiecewiseField& f) {
  if (!f.nucleus) return 0.0;
  std::vector<double> per(f.pieces.size(), 0.0);
  parallel_for(f.pieces.size(), [&](std::size_t i) {
    const Piece& pc = f.pieces[i];
    if (pc.region != RegionKind::polygon || pc.is_constant_gradient()) return;
    std::optional<Rect> rect = f.nucleus;
    if (pc.mirrored) rect = Rect{2.0 * pc.axis - rect->x1, 2.0 * pc.axis - rect->x0, rect->y0, rect->y1};
    double s = 0.0;
    for (const Polygon& pp : detail::split_by_rect(pc.local_polygon(), rect, Part::inside)) {
      if (pc.expr == ExprKind::bilinear) s += signed_area(pp) * detail::hessian_norm(pc, {});
      else s += integrate_convex_adaptive(pp, [&](Point x) { return detail::hessian_norm(pc, x); }, 16, 1e-9, 12);
    }
    per[i] = s;
  }, 64);
  return pairwise_sum(per);
}

/// eps |D^2 u| over the nucleus: jumps across interfaces plus the smooth part.
inline double surface_exact(const PiecewiseField& f, double eps) {
  return eps * (jump_variation(f) + bulk_variation(f));
}

inline EnergyBreakdown total_energy(const PiecewiseField& f, const Params& p, const QuadratureSpec& q = {}) {
  validate(p);
  EnergyBreakdown e;
  e.elastic_martensite = elastic_martensite(f, p.theta, q);
  const auto a = elastic_austenite(f, p.mu, q, p.L);
  e.elastic_austenite = a.value;
  e.tail_estimate = a.tail_estimate;
  e.fitted_exponent = a.fitted_exponent;
  e.surface = surface_exact(f, p.eps);
  e.total = e.elastic_martensite + e.elastic_austenite + e.surface;
  return e;
}

/// Energy of the construction chosen for p divided by the scaling law.
inline double energy_ratio(const Params& p, const QuadratureSpec& q = {}, const BuildOptions& opt = {}) {
  const auto [f, regime] = build_best(p, opt);
  (void)regime;
  return total_energy(f, p, q).total / eval_scaling(p).total;
}

}  // namespace scaling_lab
