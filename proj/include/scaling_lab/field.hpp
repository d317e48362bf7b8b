#pragma once
// Piecewise closed-form scalar displacement fields u = (u1, 0) on the plane.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <map>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "scaling_lab/numerics.hpp"

namespace scaling_lab {

enum class RegionKind : std::uint8_t { polygon, annular_sector, half_plane_tail };

// laminate_tip: the rational branch of the boundary laminate cell.
// corner_fan: the rational branch next to the nucleus corner in the corner laminate.
// exterior_polar / exterior_strip: the far-field flow, in its two half-planes
// and in the collapsed strip left of the nucleus.
enum class ExprKind : std::uint8_t { zero, bilinear, laminate_tip, corner_fan, exterior_polar, exterior_strip };

inline const char* region_name(RegionKind k) {
  switch (k) {
    case RegionKind::polygon: return "polygon";
    case RegionKind::annular_sector: return "annular_sector";
    case RegionKind::half_plane_tail: return "half_plane_tail";
  }
  return "?";
}

inline const char* expr_name(ExprKind k) {
  switch (k) {
    case ExprKind::zero: return "zero";
    case ExprKind::bilinear: return "bilinear";
    case ExprKind::laminate_tip: return "laminate_tip";
    case ExprKind::corner_fan: return "corner_fan";
    case ExprKind::exterior_polar: return "exterior_polar";
    case ExprKind::exterior_strip: return "exterior_strip";
  }
  return "?";
}

/// Expression kind plus its parameters:
///   bilinear        c0 + c1 x1 + c2 x2 + c3 x1 x2
///   laminate_tip    {theta, h, N, y0}
///   corner_fan      {theta, gamma}
///   exterior_polar  {alpha, beta, Lbar, theta, cx, cy, half}   half = +1 upper, -1 lower
///   exterior_strip  {alpha, beta, Lbar, theta, shift}           radius = -(x1 + shift)
struct Expr {
  ExprKind kind = ExprKind::zero;
  std::array<double, 8> p{};

  static Expr zero() { return {}; }
  static Expr bilinear(double c0, double c1, double c2, double c3 = 0.0) {
    return {ExprKind::bilinear, {c0, c1, c2, c3}};
  }
  static Expr affine(double c0, double c1, double c2) { return bilinear(c0, c1, c2, 0.0); }
  /// c0 + c1 X + c2 Y + c3 X Y with X = x1 - o1, Y = x2 - o2; avoids
  /// cancellation when the values are small next to the coefficients.
  static Expr affine_at(Point o, double c0, double c1, double c2) {
    return {ExprKind::bilinear, {c0, c1, c2, 0.0, o.x1, o.x2}};
  }
};

/// Geometry layout in g:
///   polygon          up to 6 counterclockwise vertices (x, y pairs), convex
///   annular_sector   {cx, cy, r_in, r_out, half, cut, has_exclusion}; the
///                    half-annulus on one side of the horizontal through the
///                    centre, intersected with x1 <= cut. A zero sector may
///                    carry an excluded convex quadrilateral in p.
///   half_plane_tail  {x0, x1, y0, y1}, bounds may be infinite
struct Piece {
  RegionKind region = RegionKind::polygon;
  ExprKind expr = ExprKind::zero;
  std::uint8_t nverts = 0;
  bool mirrored = false;
  double axis = 0.0;
  std::array<double, 12> g{};
  std::array<double, 8> p{};

  Point vertex(int i) const { return {g[2 * i], g[2 * i + 1]}; }
  Polygon local_polygon() const {
    Polygon poly(nverts);
    for (int i = 0; i < nverts; ++i) poly[i] = vertex(i);
    return poly;
  }
  /// Vertices in plane coordinates (mirror applied, orientation kept CCW).
  Polygon polygon() const {
    Polygon poly = local_polygon();
    if (mirrored) {
      for (Point& v : poly) v.x1 = 2.0 * axis - v.x1;
      std::reverse(poly.begin(), poly.end());
    }
    return poly;
  }
  Point to_local(Point x) const { return mirrored ? Point{2.0 * axis - x.x1, x.x2} : x; }
  bool is_constant_gradient() const {
    return expr == ExprKind::zero || (expr == ExprKind::bilinear && p[3] == 0.0);
  }
};

inline Piece polygon_piece(const Polygon& poly, const Expr& e) {
  if (poly.size() < 3 || poly.size() > 6) throw std::invalid_argument("polygon piece needs 3..6 vertices");
  if (!(signed_area(poly) > 0.0)) throw std::invalid_argument("polygon piece must be counterclockwise");
  Piece pc;
  pc.region = RegionKind::polygon;
  pc.nverts = static_cast<std::uint8_t>(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) {
    pc.g[2 * i] = poly[i].x1;
    pc.g[2 * i + 1] = poly[i].x2;
  }
  pc.expr = e.kind;
  pc.p = e.p;
  return pc;
}

inline Piece sector_piece(Point c, double r_in, double r_out, int half, double cut, const Expr& e,
                          const Polygon* exclusion = nullptr) {
  if (!(r_out > r_in) || r_in < 0.0) throw std::invalid_argument("bad sector radii");
  Piece pc;
  pc.region = RegionKind::annular_sector;
  pc.g = {c.x1, c.x2, r_in, r_out, static_cast<double>(half), cut, 0.0};
  pc.expr = e.kind;
  pc.p = e.p;
  if (exclusion) {
    if (e.kind != ExprKind::zero || exclusion->size() != 4)
      throw std::invalid_argument("sector exclusion needs a zero expression and a quadrilateral");
    pc.g[6] = 1.0;
    for (int i = 0; i < 4; ++i) {
      pc.p[2 * i] = (*exclusion)[i].x1;
      pc.p[2 * i + 1] = (*exclusion)[i].x2;
    }
  }
  return pc;
}

inline Piece box_piece(double x0, double x1, double y0, double y1, const Expr& e) {
  if (!(x1 > x0) || !(y1 > y0)) throw std::invalid_argument("empty box piece");
  Piece pc;
  pc.region = RegionKind::half_plane_tail;
  pc.g = {x0, x1, y0, y1};
  pc.expr = e.kind;
  pc.p = e.p;
  return pc;
}

// ---------------------------------------------------------------------------
// Closed forms.

/// Radial profile of the far-field flow: 0, ramp, 1, then sqrt(Lbar / r).
inline double exterior_profile(double a, double b, double Lbar, double r) {
  if (r <= a) return 0.0;
  if (r <= b) return (r - a) / (b - a);
  if (r <= Lbar) return 1.0;
  return std::sqrt(Lbar / r);
}

inline double exterior_profile_slope(double a, double b, double Lbar, double r) {
  if (r <= a) return 0.0;
  if (r <= b) return 1.0 / (b - a);
  if (r <= Lbar) return 0.0;
  return -0.5 * std::sqrt(Lbar) * std::pow(r, -1.5);
}

/// Polar angle in (0, 2 pi) with the branch cut along the positive axis;
/// the half flag decides the side points on the cut are attributed to.
inline double polar_angle(double dx, double dy, int half) {
  if (half > 0) return std::atan2(dy > 0.0 ? dy : +0.0, dx);
  return 2.0 * std::numbers::pi + std::atan2(dy < 0.0 ? dy : -0.0, dx);
}

inline double expr_value(ExprKind k, const std::array<double, 8>& p, Point x) {
  switch (k) {
    case ExprKind::zero: return 0.0;
    case ExprKind::bilinear: {
      const double X = x.x1 - p[4], Y = x.x2 - p[5];
      return std::fma(std::fma(p[3], X, p[2]), Y, std::fma(p[1], X, p[0]));
    }
    case ExprKind::laminate_tip: {
      const double th = p[0], h = p[1], N = p[2], X = x.x1, Y = x.x2 - p[3];
      return (1.0 - N * Y) * th * (1.0 - h) * (N * X + 1.0) / (N * (h - (1.0 - h) * N * X));
    }
    case ExprKind::corner_fan: return p[0] * (1.0 + x.x1 / p[1]) * x.x2 / (1.0 - x.x1);
    case ExprKind::exterior_polar: {
      const double dx = x.x1 - p[4], dy = x.x2 - p[5];
      const double r = std::hypot(dx, dy);
      const double gr = exterior_profile(p[0], p[1], p[2], r);
      if (gr == 0.0) return 0.0;
      const double phi = polar_angle(dx, dy, p[6] > 0 ? 1 : -1);
      return (1.0 - phi / (2.0 * std::numbers::pi)) * p[3] * gr;
    }
    case ExprKind::exterior_strip:
      return 0.5 * p[3] * exterior_profile(p[0], p[1], p[2], -(x.x1 + p[4]));
  }
  return 0.0;
}

inline std::array<double, 2> expr_grad(ExprKind k, const std::array<double, 8>& p, Point x) {
  switch (k) {
    case ExprKind::zero: return {0.0, 0.0};
    case ExprKind::bilinear: return {p[1] + p[3] * (x.x2 - p[5]), p[2] + p[3] * (x.x1 - p[4])};
    case ExprKind::laminate_tip: {
      const double th = p[0], h = p[1], N = p[2], X = x.x1, Y = x.x2 - p[3];
      const double D = h - (1.0 - h) * N * X;
      return {(1.0 - N * Y) * th * (1.0 - h) / (D * D), -th * (1.0 - h) * (N * X + 1.0) / D};
    }
    case ExprKind::corner_fan: {
      const double th = p[0], ga = p[1], s = 1.0 - x.x1;
      return {th * x.x2 * (1.0 + 1.0 / ga) / (s * s), th * (1.0 + x.x1 / ga) / s};
    }
    case ExprKind::exterior_polar: {
      const double dx = x.x1 - p[4], dy = x.x2 - p[5];
      const double r = std::hypot(dx, dy);
      if (r <= p[0]) return {0.0, 0.0};
      const double phi = polar_angle(dx, dy, p[6] > 0 ? 1 : -1);
      const double w = 1.0 - phi / (2.0 * std::numbers::pi);
      const double ur = w * p[3] * exterior_profile_slope(p[0], p[1], p[2], r);
      const double uphi = -p[3] * exterior_profile(p[0], p[1], p[2], r) / (2.0 * std::numbers::pi * r);
      const double er1 = dx / r, er2 = dy / r;
      return {ur * er1 - uphi * er2, ur * er2 + uphi * er1};
    }
    case ExprKind::exterior_strip:
      return {-0.5 * p[3] * exterior_profile_slope(p[0], p[1], p[2], -(x.x1 + p[4])), 0.0};
  }
  return {0.0, 0.0};
}

inline double piece_value(const Piece& pc, Point x) { return expr_value(pc.expr, pc.p, pc.to_local(x)); }

inline std::array<double, 2> piece_grad(const Piece& pc, Point x) {
  auto gr = expr_grad(pc.expr, pc.p, pc.to_local(x));
  if (pc.mirrored) gr[0] = -gr[0];
  return gr;
}

inline Mat2 piece_gradient_matrix(const Piece& pc, Point x) {
  const auto gr = piece_grad(pc, x);
  return {gr[0], gr[1], 0.0, 0.0};
}

// ---------------------------------------------------------------------------
// Containment and bounding boxes.

struct Box {
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  void add(Point p) {
    x0 = std::min(x0, p.x1);
    x1 = std::max(x1, p.x1);
    y0 = std::min(y0, p.x2);
    y1 = std::max(y1, p.x2);
  }
  void add(const Box& b) {
    x0 = std::min(x0, b.x0);
    x1 = std::max(x1, b.x1);
    y0 = std::min(y0, b.y0);
    y1 = std::max(y1, b.y1);
  }
  bool finite() const { return std::isfinite(x0) && std::isfinite(x1) && std::isfinite(y0) && std::isfinite(y1); }
  bool contains(Point p, double tol) const {
    return p.x1 >= x0 - tol && p.x1 <= x1 + tol && p.x2 >= y0 - tol && p.x2 <= y1 + tol;
  }
  Point center() const { return {0.5 * (x0 + x1), 0.5 * (y0 + y1)}; }
};

inline double point_tol(Point x) { return 1e-12 * std::max({1.0, std::fabs(x.x1), std::fabs(x.x2)}); }

inline bool convex_contains(const Polygon& poly, Point x, double tol) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point a = poly[i], b = poly[(i + 1) % n];
    if (cross(b - a, x - a) < -tol * norm(b - a)) return false;
  }
  return true;
}

/// Closed quadrilateral removed from a zero sector (local coordinates).
inline Polygon sector_exclusion(const Piece& pc) {
  Polygon q(4);
  for (int i = 0; i < 4; ++i) q[i] = {pc.p[2 * i], pc.p[2 * i + 1]};
  return q;
}

inline bool piece_contains(const Piece& pc, Point x) {
  const double tol = point_tol(x);
  const Point y = pc.to_local(x);
  switch (pc.region) {
    case RegionKind::polygon: return convex_contains(pc.local_polygon(), y, tol);
    case RegionKind::half_plane_tail:
      return y.x1 >= pc.g[0] - tol && y.x1 <= pc.g[1] + tol && y.x2 >= pc.g[2] - tol && y.x2 <= pc.g[3] + tol;
    case RegionKind::annular_sector: {
      const double dx = y.x1 - pc.g[0], dy = y.x2 - pc.g[1];
      if (pc.g[4] > 0 ? dy < -tol : dy > tol) return false;
      if (y.x1 > pc.g[5] + tol) return false;
      const double r = std::hypot(dx, dy);
      if (r < pc.g[2] - tol || r > pc.g[3] + tol) return false;
      if (pc.g[6] != 0.0 && convex_contains(sector_exclusion(pc), y, tol)) return false;
      return true;
    }
  }
  return false;
}

inline Box piece_box(const Piece& pc) {
  Box b;
  switch (pc.region) {
    case RegionKind::polygon:
      for (int i = 0; i < pc.nverts; ++i) b.add(pc.vertex(i));
      break;
    case RegionKind::half_plane_tail: b = {pc.g[0], pc.g[1], pc.g[2], pc.g[3]}; break;
    case RegionKind::annular_sector: {
      const double cx = pc.g[0], cy = pc.g[1], ro = pc.g[3];
      b.x0 = cx - ro;
      b.x1 = std::min(cx + ro, pc.g[5]);
      if (pc.g[4] > 0) {
        b.y0 = cy;
        b.y1 = cy + ro;
      } else {
        b.y0 = cy - ro;
        b.y1 = cy;
      }
      break;
    }
  }
  if (pc.mirrored) b = {2.0 * pc.axis - b.x1, 2.0 * pc.axis - b.x0, b.y0, b.y1};
  return b;
}

// ---------------------------------------------------------------------------
// Bounding-volume hierarchy for point location.

class PieceIndex {
 public:
  explicit PieceIndex(const std::vector<Piece>& pieces) {
    std::vector<std::uint32_t> bounded;
    boxes_.resize(pieces.size());
    for (std::uint32_t i = 0; i < pieces.size(); ++i) {
      boxes_[i] = piece_box(pieces[i]);
      if (boxes_[i].finite())
        bounded.push_back(i);
      else
        unbounded_.push_back(i);
    }
    order_ = std::move(bounded);
    if (!order_.empty()) build(0, static_cast<std::uint32_t>(order_.size()));
  }

  template <class Pred>
  std::optional<std::uint32_t> find(Point x, Pred&& accept) const {
    const double tol = point_tol(x);
    if (!nodes_.empty()) {
      std::uint32_t stack[128];
      int sp = 0;
      stack[sp++] = 0;
      while (sp > 0) {
        const Node& nd = nodes_[stack[--sp]];
        if (!nd.box.contains(x, tol)) continue;
        if (nd.count > 0) {
          for (std::uint32_t k = nd.first; k < nd.first + nd.count; ++k)
            if (boxes_[order_[k]].contains(x, tol) && accept(order_[k])) return order_[k];
        } else {
          stack[sp++] = nd.right;
          stack[sp++] = nd.first;  // left child visited first
        }
      }
    }
    for (std::uint32_t i : unbounded_)
      if (boxes_[i].contains(x, tol) && accept(i)) return i;
    return std::nullopt;
  }

 private:
  struct Node {
    Box box;
    std::uint32_t first = 0, right = 0, count = 0;  // leaf: [first, first+count); inner: children first, right
  };

  std::uint32_t build(std::uint32_t lo, std::uint32_t hi) {
    const std::uint32_t id = static_cast<std::uint32_t>(nodes_.size());
    nodes_.emplace_back();
    Box bb, cb;
    for (std::uint32_t k = lo; k < hi; ++k) {
      bb.add(boxes_[order_[k]]);
      cb.add(boxes_[order_[k]].center());
    }
    nodes_[id].box = bb;
    if (hi - lo <= 4) {
      nodes_[id].first = lo;
      nodes_[id].count = hi - lo;
      return id;
    }
    const bool split_x = (cb.x1 - cb.x0) >= (cb.y1 - cb.y0);
    const std::uint32_t mid = lo + (hi - lo) / 2;
    std::nth_element(order_.begin() + lo, order_.begin() + mid, order_.begin() + hi,
                     [&](std::uint32_t a, std::uint32_t b) {
                       const Point ca = boxes_[a].center(), cbp = boxes_[b].center();
                       return split_x ? (ca.x1 < cbp.x1 || (ca.x1 == cbp.x1 && a < b))
                                      : (ca.x2 < cbp.x2 || (ca.x2 == cbp.x2 && a < b));
                     });
    const std::uint32_t l = build(lo, mid);
    const std::uint32_t r = build(mid, hi);
    nodes_[id].first = l;
    nodes_[id].right = r;
    nodes_[id].count = 0;
    return id;
  }

  std::vector<Box> boxes_;
  std::vector<std::uint32_t> order_, unbounded_;
  std::vector<Node> nodes_;
};

// ---------------------------------------------------------------------------

struct Rect {
  double x0, x1, y0, y1;
  bool contains_open(Point p, double tol = 0.0) const {
    return p.x1 > x0 + tol && p.x1 < x1 - tol && p.x2 > y0 + tol && p.x2 < y1 - tol;
  }
  double area() const { return (x1 - x0) * (y1 - y0); }
};

struct JumpSegment {
  Point a, b;
  Mat2 jump_a{}, jump_b{};  // gradient difference at a and b; affine in between

  double length() const { return norm(b - a); }
  Mat2 jump_at(double t) const {
    Mat2 m;
    for (int i = 0; i < 4; ++i) m[i] = jump_a[i] + t * (jump_b[i] - jump_a[i]);
    return m;
  }
};

struct PiecewiseField {
  std::string name;
  std::vector<Piece> pieces;
  std::optional<double> mirror_axis;
  /// Region carrying the martensite energy and the surface term; the nucleus
  /// (0, 2L) x (0, 1) for composite constructions.
  std::optional<Rect> nucleus;
  std::map<std::string, double> params_used;

  /// Builds the point-location index; call after the last piece is added.
  void finalize() { index_ = std::make_shared<const PieceIndex>(pieces); }
  bool finalized() const { return static_cast<bool>(index_); }

  std::optional<std::uint32_t> locate(Point x) const {
    require_index();
    return index_->find(x, [&](std::uint32_t i) { return piece_contains(pieces[i], x); });
  }
  std::optional<std::uint32_t> locate_excluding(Point x, std::uint32_t skip) const {
    require_index();
    return index_->find(x, [&](std::uint32_t i) { return i != skip && piece_contains(pieces[i], x); });
  }

 private:
  void require_index() const {
    if (!index_) throw std::logic_error("field used before finalize()");
  }
  std::shared_ptr<const PieceIndex> index_;
};

struct FieldError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::array<double, 2> eval_field(const PiecewiseField& f, Point x) {
  const auto i = f.locate(x);
  if (!i) {
    std::ostringstream os;
    os << "point (" << x.x1 << ", " << x.x2 << ") lies in no region of field " << f.name;
    throw FieldError(os.str());
  }
  return {piece_value(f.pieces[*i], x), 0.0};
}

/// Gradient of u = (u1, 0) at x. On interfaces the piece containing a point
/// displaced by 1e-9 times the piece scale in a fixed generic direction answers.
inline Mat2 eval_gradient(const PiecewiseField& f, Point x) {
  auto i = f.locate(x);
  if (!i) throw FieldError("gradient requested outside the field");
  const Box b = piece_box(f.pieces[*i]);
  double diam = b.finite() ? std::hypot(b.x1 - b.x0, b.y1 - b.y0) : 1.0;
  diam = std::max(diam, 1e-300);
  const Point shifted = x + (1e-9 * diam) * Point{0.8, 0.6};
  if (auto j = f.locate(shifted)) i = j;
  return piece_gradient_matrix(f.pieces[*i], x);
}

// ---------------------------------------------------------------------------
// Jump set.

namespace detail {

struct EdgeRec {
  double angle, offset, s0, s1;
  std::uint32_t piece;
  bool left;  // piece lies to the left of the canonical direction
};

/// Clips segment [a, b] to the closed rectangle; false if nothing remains.
inline bool clip_segment(Point& a, Point& b, const Rect& r) {
  double t0 = 0.0, t1 = 1.0;
  const Point d = b - a;
  const double p[4] = {-d.x1, d.x1, -d.x2, d.x2};
  const double q[4] = {a.x1 - r.x0, r.x1 - a.x1, a.x2 - r.y0, r.y1 - a.x2};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return false;
    } else {
      const double t = q[i] / p[i];
      if (p[i] < 0.0)
        t0 = std::max(t0, t);
      else
        t1 = std::min(t1, t);
    }
  }
  if (t1 <= t0) return false;
  const Point a0 = a;
  a = a0 + t0 * d;
  b = a0 + t1 * d;
  return true;
}

}  // namespace detail

/// Gradient discontinuities inside the open nucleus: every stretch of a line
/// where two polygon pieces meet with different gradients, including the
/// mirror seam. Pieces must have been finalized.
inline std::vector<JumpSegment> jump_set(const PiecewiseField& f) {
  std::vector<JumpSegment> out;
  if (!f.nucleus) return out;
  const Rect nuc = *f.nucleus;
  const double scale = std::max({1.0, nuc.x1 - nuc.x0, nuc.y1 - nuc.y0});
  const double tol = 1e-10 * scale;

  std::vector<detail::EdgeRec> edges;
  for (std::uint32_t i = 0; i < f.pieces.size(); ++i) {
    const Piece& pc = f.pieces[i];
    if (pc.region != RegionKind::polygon) continue;
    const Box bb = piece_box(pc);
    if (bb.x1 <= nuc.x0 || bb.x0 >= nuc.x1 || bb.y1 <= nuc.y0 || bb.y0 >= nuc.y1) continue;
    const Polygon poly = pc.polygon();
    for (std::size_t k = 0; k < poly.size(); ++k) {
      Point a = poly[k], b = poly[(k + 1) % poly.size()];
      if (!detail::clip_segment(a, b, nuc)) continue;
      const Point mid = 0.5 * (a + b);
      if (!nuc.contains_open(mid, tol)) continue;  // on the nucleus boundary
      Point d = b - a;
      const double len = norm(d);
      if (len <= tol) continue;
      d = (1.0 / len) * d;
      bool left = true;
      if (d.x1 < -1e-12 || (std::fabs(d.x1) <= 1e-12 && d.x2 < 0.0)) {
        d = -1.0 * d;
        left = false;
      }
      const double offset = cross(d, a);
      double s0 = dot(d, a), s1 = dot(d, b);
      if (s0 > s1) std::swap(s0, s1);
      edges.push_back({std::atan2(d.x2, d.x1), offset, s0, s1, i, left});
    }
  }
  std::sort(edges.begin(), edges.end(), [](const auto& x, const auto& y) {
    if (x.angle != y.angle) return x.angle < y.angle;
    return x.offset < y.offset;
  });

  // Cluster by angle, then by offset, with tolerances.
  std::size_t i = 0;
  while (i < edges.size()) {
    std::size_t j = i + 1;
    while (j < edges.size() && edges[j].angle - edges[j - 1].angle <= 1e-10) ++j;
    std::vector<detail::EdgeRec> grp(edges.begin() + i, edges.begin() + j);
    std::sort(grp.begin(), grp.end(), [](const auto& x, const auto& y) { return x.offset < y.offset; });
    std::size_t a = 0;
    while (a < grp.size()) {
      std::size_t b = a + 1;
      while (b < grp.size() && grp[b].offset - grp[b - 1].offset <= tol) ++b;
      std::vector<detail::EdgeRec> L, R;
      for (std::size_t k = a; k < b; ++k) (grp[k].left ? L : R).push_back(grp[k]);
      auto by_s = [](const auto& x, const auto& y) { return x.s0 < y.s0 || (x.s0 == y.s0 && x.piece < y.piece); };
      std::sort(L.begin(), L.end(), by_s);
      std::sort(R.begin(), R.end(), by_s);
      const double ang = grp[a].angle, off = grp[a].offset;
      const Point d{std::cos(ang), std::sin(ang)};
      const Point nrm{-d.x2, d.x1};
      std::size_t p = 0, q = 0;
      while (p < L.size() && q < R.size()) {
        const double lo = std::max(L[p].s0, R[q].s0), hi = std::min(L[p].s1, R[q].s1);
        if (hi - lo > tol) {
          const Point pa = lo * d + off * nrm, pb = hi * d + off * nrm;
          const Piece& pl = f.pieces[L[p].piece];
          const Piece& pr = f.pieces[R[q].piece];
          JumpSegment js{pa, pb, piece_gradient_matrix(pl, pa) - piece_gradient_matrix(pr, pa),
                         piece_gradient_matrix(pl, pb) - piece_gradient_matrix(pr, pb)};
          const double ref = 1e-12 * std::max(1.0, frobenius(piece_gradient_matrix(pl, pa)));
          if (frobenius(js.jump_a) > ref || frobenius(js.jump_b) > ref) out.push_back(js);
        }
        if (L[p].s1 < R[q].s1)
          ++p;
        else
          ++q;
      }
      a = b;
    }
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Continuity check.

/// Largest |u_piece - u_neighbour| over sample points on every interface.
/// Neighbours are found through a point displaced slightly outward; boundary
/// points of a partial field without a neighbour are skipped. Infinite edges
/// are sampled over the window |x| <= window.
inline double check_continuity(const PiecewiseField& f, int samples_per_edge, double window = 64.0) {
  if (samples_per_edge < 2) throw std::invalid_argument("samples_per_edge must be >= 2");
  std::vector<double> worst(f.pieces.size(), 0.0);
  auto probe = [&](std::uint32_t self, Point x, Point outward, double scale) {
    const Point y = x + (1e-9 * scale) * outward;
    const auto nb = f.locate_excluding(y, self);
    if (!nb) return 0.0;
    return std::fabs(piece_value(f.pieces[self], x) - piece_value(f.pieces[*nb], x));
  };
  auto clampw = [&](double v) { return std::clamp(v, -window, window); };

  parallel_for(f.pieces.size(), [&](std::size_t idx) {
    const auto self = static_cast<std::uint32_t>(idx);
    const Piece& pc = f.pieces[idx];
    double w = 0.0;
    auto sample_segment = [&](Point a, Point b, Point outward) {
      const double len = norm(b - a);
      if (!(len > 0.0)) return;
      for (int k = 0; k < samples_per_edge; ++k) {
        const double t = static_cast<double>(k) / (samples_per_edge - 1);
        w = std::max(w, probe(self, lerp(a, b, t), outward, std::max(len, 1e-6)));
      }
    };
    switch (pc.region) {
      case RegionKind::polygon: {
        const Polygon poly = pc.polygon();
        for (std::size_t k = 0; k < poly.size(); ++k) {
          const Point a = poly[k], b = poly[(k + 1) % poly.size()];
          const Point d = b - a;
          const double len = norm(d);
          sample_segment(a, b, (1.0 / len) * Point{d.x2, -d.x1});
        }
        break;
      }
      case RegionKind::half_plane_tail: {
        const double x0 = clampw(pc.g[0]), x1 = clampw(pc.g[1]), y0 = clampw(pc.g[2]), y1 = clampw(pc.g[3]);
        auto mp = [&](Point q) { return pc.mirrored ? Point{2.0 * pc.axis - q.x1, q.x2} : q; };
        auto mo = [&](Point o) { return pc.mirrored ? Point{-o.x1, o.x2} : o; };
        if (std::isfinite(pc.g[0])) sample_segment(mp({x0, y0}), mp({x0, y1}), mo({-1, 0}));
        if (std::isfinite(pc.g[1])) sample_segment(mp({x1, y0}), mp({x1, y1}), mo({1, 0}));
        if (std::isfinite(pc.g[2])) sample_segment(mp({x0, y0}), mp({x1, y0}), {0, -1});
        if (std::isfinite(pc.g[3])) sample_segment(mp({x0, y1}), mp({x1, y1}), {0, 1});
        break;
      }
      case RegionKind::annular_sector: {
        const double cx = pc.g[0], cy = pc.g[1], half = pc.g[4], cut = pc.g[5];
        auto mp = [&](Point q) { return pc.mirrored ? Point{2.0 * pc.axis - q.x1, q.x2} : q; };
        auto mo = [&](Point o) { return pc.mirrored ? Point{-o.x1, o.x2} : o; };
        // Samples are taken in plane coordinates; excluded points are not on this piece's boundary.
        auto sample_segment_sector = [&](Point a, Point b, Point outward) {
          for (int k = 0; k < samples_per_edge; ++k) {
            const Point x = lerp(a, b, static_cast<double>(k) / (samples_per_edge - 1));
            if (!piece_contains(pc, x)) continue;
            w = std::max(w, probe(self, x, outward, std::max(norm(b - a), 1e-6)));
          }
        };
        for (double r : {pc.g[2], pc.g[3]}) {
          if (!(r > 0.0) || !std::isfinite(r) || r > window) continue;
          const double sgn = (r == pc.g[2]) ? -1.0 : 1.0;
          for (int k = 0; k < samples_per_edge; ++k) {
            const double phi = std::numbers::pi * k / (samples_per_edge - 1);
            const Point u{std::cos(phi), half * std::sin(phi)};
            const Point q{cx + r * u.x1, cy + r * u.x2};
            if (q.x1 > cut || !piece_contains(pc, mp(q))) continue;
            w = std::max(w, probe(self, mp(q), mo(sgn * u), std::max(r, 1e-6)));
          }
        }
        // Straight sides along the horizontal through the centre.
        const double ro = std::min(pc.g[3], window);
        const Point o{0.0, -half};
        if (pc.g[2] < ro) {
          sample_segment_sector(mp({cx - ro, cy}), mp({cx - pc.g[2], cy}), mo(o));
          const double right = std::min(cx + ro, cut);
          if (cx + pc.g[2] < right) sample_segment_sector(mp({cx + pc.g[2], cy}), mp({right, cy}), mo(o));
        }
        break;
      }
    }
    worst[idx] = w;
  });
  return worst.empty() ? 0.0 : *std::max_element(worst.begin(), worst.end());
}

// ---------------------------------------------------------------------------

/// Reflects f about x1 = L. The result equals f for x1 <= L and f(2L - x1, x2)
/// beyond; the seam jump appears in jump_set through the mirrored pieces.
inline PiecewiseField mirror_extend(const PiecewiseField& f, double L) {
  if (f.mirror_axis) throw std::invalid_argument("field is already mirrored");
  PiecewiseField m;
  m.name = f.name;
  m.nucleus = f.nucleus;
  m.params_used = f.params_used;
  m.mirror_axis = L;
  m.pieces.reserve(2 * f.pieces.size());
  for (const Piece& pc : f.pieces) {
    const Box b = piece_box(pc);
    if (b.x1 > L + 1e-9 * std::max(1.0, std::fabs(L)))
      throw std::invalid_argument("mirror_extend: a piece extends beyond x1 = L");
    m.pieces.push_back(pc);
  }
  for (const Piece& pc : f.pieces) {
    Piece q = pc;
    q.mirrored = true;
    q.axis = L;
    m.pieces.push_back(q);
  }
  m.finalize();
  return m;
}

// ---------------------------------------------------------------------------
// Text serialization: one piece per line.

inline void write_field(std::ostream& os, const PiecewiseField& f) {
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  os << "field " << (f.name.empty() ? "-" : f.name) << "\n";
  if (f.nucleus) os << "nucleus " << num(f.nucleus->x0) << ' ' << num(f.nucleus->x1) << ' ' << num(f.nucleus->y0) << ' ' << num(f.nucleus->y1) << "\n";
  if (f.mirror_axis) os << "mirror " << num(*f.mirror_axis) << "\n";
  for (const auto& [k, v] : f.params_used) os << "param " << k << ' ' << num(v) << "\n";
  for (const Piece& pc : f.pieces) {
    os << "piece " << region_name(pc.region) << ' ' << expr_name(pc.expr) << ' ' << int(pc.mirrored) << ' '
       << num(pc.axis) << ' ' << int(pc.nverts) << " g";
    for (double v : pc.g) os << ' ' << num(v);
    os << " p";
    for (double v : pc.p) os << ' ' << num(v);
    os << "\n";
  }
}

inline PiecewiseField read_field(std::istream& is) {
  PiecewiseField f;
  std::string line;
  auto region_of = [](const std::string& s) {
    for (auto k : {RegionKind::polygon, RegionKind::annular_sector, RegionKind::half_plane_tail})
      if (s == region_name(k)) return k;
    throw std::invalid_argument("unknown region kind " + s);
  };
  auto expr_of = [](const std::string& s) {
    for (auto k : {ExprKind::zero, ExprKind::bilinear, ExprKind::laminate_tip, ExprKind::corner_fan,
                   ExprKind::exterior_polar, ExprKind::exterior_strip})
      if (s == expr_name(k)) return k;
    throw std::invalid_argument("unknown expression kind " + s);
  };
  auto num = [](const std::string& s) { return std::strtod(s.c_str(), nullptr); };
  std::vector<Piece> pieces;
  std::optional<double> mirror;
  while (std::getline(is, line)) {
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "field") {
      ls >> f.name;
      if (f.name == "-") f.name.clear();
    } else if (tag == "nucleus") {
      std::string a, b, c, d;
      ls >> a >> b >> c >> d;
      f.nucleus = Rect{num(a), num(b), num(c), num(d)};
    } else if (tag == "mirror") {
      std::string a;
      ls >> a;
      mirror = num(a);
    } else if (tag == "param") {
      std::string k, v;
      ls >> k >> v;
      f.params_used[k] = num(v);
    } else if (tag == "piece") {
      std::string rk, ek, tok;
      int mir = 0, nv = 0;
      Piece pc;
      ls >> rk >> ek >> mir >> tok;
      pc.region = region_of(rk);
      pc.expr = expr_of(ek);
      pc.mirrored = mir != 0;
      pc.axis = num(tok);
      ls >> nv >> tok;
      pc.nverts = static_cast<std::uint8_t>(nv);
      for (double& v : pc.g) {
        ls >> tok;
        v = num(tok);
      }
      ls >> tok;
      for (double& v : pc.p) {
        ls >> tok;
        v = num(tok);
      }
      if (!ls) throw std::invalid_argument("truncated piece line");
      pieces.push_back(pc);
    } else {
      throw std::invalid_argument("unknown record " + tag);
    }
  }
  f.pieces = std::move(pieces);
  f.mirror_axis = mirror;
  f.finalize();
  return f;
}

}  // namespace scaling_lab
