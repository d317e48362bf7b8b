#pragma once
// Explicit upper-bound constructions: the four building blocks and the
// composite test functions, one per regime.

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "scaling_lab/field.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

enum class ConstructionKind {
  ExteriorFlow,
  BoundaryLaminate,
  BranchCell,
  InterpWedge,
  U1Constant,
  U2Affine,
  U3LinearInterp,
  U4SingleLaminate,
  U5TruncatedBranching,
  U6CornerLaminate,
  P26aBranching,
  P26bLaminate,
  P26cTwoScale,
};

inline constexpr std::array kAllKinds = {
    ConstructionKind::ExteriorFlow,     ConstructionKind::BoundaryLaminate,
    ConstructionKind::BranchCell,       ConstructionKind::InterpWedge,
    ConstructionKind::U1Constant,       ConstructionKind::U2Affine,
    ConstructionKind::U3LinearInterp,   ConstructionKind::U4SingleLaminate,
    ConstructionKind::U5TruncatedBranching, ConstructionKind::U6CornerLaminate,
    ConstructionKind::P26aBranching,    ConstructionKind::P26bLaminate,
    ConstructionKind::P26cTwoScale,
};

inline std::string_view kind_name(ConstructionKind k) {
  switch (k) {
    case ConstructionKind::ExteriorFlow: return "ExteriorFlow";
    case ConstructionKind::BoundaryLaminate: return "BoundaryLaminate";
    case ConstructionKind::BranchCell: return "BranchCell";
    case ConstructionKind::InterpWedge: return "InterpWedge";
    case ConstructionKind::U1Constant: return "U1Constant";
    case ConstructionKind::U2Affine: return "U2Affine";
    case ConstructionKind::U3LinearInterp: return "U3LinearInterp";
    case ConstructionKind::U4SingleLaminate: return "U4SingleLaminate";
    case ConstructionKind::U5TruncatedBranching: return "U5TruncatedBranching";
    case ConstructionKind::U6CornerLaminate: return "U6CornerLaminate";
    case ConstructionKind::P26aBranching: return "P26aBranching";
    case ConstructionKind::P26bLaminate: return "P26bLaminate";
    case ConstructionKind::P26cTwoScale: return "P26cTwoScale";
  }
  return "?";
}

/// Accepts the CamelCase names and snake_case spellings, case-insensitively.
inline std::optional<ConstructionKind> parse_kind(std::string_view s) {
  auto norm = [](std::string_view v) {
    std::string out;
    for (char c : v)
      if (c != '_' && c != '-') out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
  };
  const std::string key = norm(s);
  for (ConstructionKind k : kAllKinds)
    if (norm(kind_name(k)) == key) return k;
  return std::nullopt;
}

inline bool is_building_block(ConstructionKind k) {
  return k == ConstructionKind::ExteriorFlow || k == ConstructionKind::BoundaryLaminate ||
         k == ConstructionKind::BranchCell || k == ConstructionKind::InterpWedge;
}

/// Affine ramp with iota(a) = 0 and iota(b) = 1.
inline double iota(double a, double b, double t) {
  if (!(a < b)) throw std::invalid_argument("iota needs a < b");
  return (t - a) / (b - a);
}

/// Parameters of the four building blocks.
struct InternalParams {
  double theta = 0.5;
  double alpha = 1.0, beta = 2.0, Lbar = 2.0;  // exterior flow
  int N = 1;                                    // laminate / branching period count
  double h = 0.25;                              // minority width
  double ell = 1.0;                             // branching depth
  double beta_tilde = 1.0;                      // wedge width
};

struct BuildOptions {
  /// Upper bound on pieces before mirroring. Branching depth is reduced to fit.
  std::size_t max_pieces = 1'000'000;
};

/// Smallest integer >= x, forgiving relative rounding noise of order 1e-12.
inline long long ceil_tolerant(double x) {
  const double c = std::ceil(x * (1.0 - 1e-12));
  return std::max(1LL, static_cast<long long>(c));
}

namespace detail {

class Builder {
 public:
  explicit Builder(double clip = INFINITY, std::size_t budget = SIZE_MAX) : clip_(clip), budget_(budget) {}

  void poly(Polygon p, const Expr& e) {
    double xmax = -INFINITY;
    for (const Point& v : p) xmax = std::max(xmax, v.x1);
    if (xmax > clip_) p = clip_halfplane(p, {1, 0}, clip_);
    Polygon q;
    for (const Point& v : p)
      if (q.empty() || v.x1 != q.back().x1 || v.x2 != q.back().x2) q.push_back(v);
    while (q.size() > 1 && q.front().x1 == q.back().x1 && q.front().x2 == q.back().x2) q.pop_back();
    if (q.size() < 3 || !(signed_area(q) > 0.0)) return;
    push(polygon_piece(q, e));
  }
  void rect(double x0, double x1, double y0, double y1, const Expr& e) {
    poly({{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}, e);
  }
  void box(double x0, double x1, double y0, double y1, const Expr& e) {
    x1 = std::min(x1, clip_);
    if (!(x1 > x0) || !(y1 > y0)) return;
    push(box_piece(x0, x1, y0, y1, e));
  }
  void sector(Point c, double r_in, double r_out, int half, const Expr& e, const Polygon* excl = nullptr) {
    if (!(r_out > r_in) || clip_ <= c.x1 - r_out) return;
    push(sector_piece(c, r_in, r_out, half, clip_, e, excl));
  }
  /// Zero upper and lower half-planes over x1 <= clip.
  void zero_halves() {
    box(-INFINITY, INFINITY, 1.0, INFINITY, Expr::zero());
    box(-INFINITY, INFINITY, -INFINITY, 0.0, Expr::zero());
  }

  double clip() const { return clip_; }
  std::size_t room() const { return budget_ > pieces.size() ? budget_ - pieces.size() : 0; }

  std::vector<Piece> pieces;

 private:
  void push(const Piece& pc) {
    if (pieces.size() >= budget_) throw std::length_error("construction exceeds the piece budget");
    pieces.push_back(pc);
  }
  double clip_;
  std::size_t budget_;
};

struct ExteriorSpec {
  double alpha, beta, Lbar, theta;
  double x_iface;      // interface abscissa of the collapsed strip
  double strip_start;  // strip pieces occupy x1 <= strip_start
  const Polygon* upper_exclusion = nullptr;
};

/// Far-field flow around the nucleus; zero on both nucleus edges and on the
/// interface, ramp then theta on the top edge, square-root decay at infinity.
inline void add_exterior(Builder& b, const ExteriorSpec& s) {
  const double radii[5] = {0.0, s.alpha, s.beta, s.Lbar, INFINITY};
  const Expr up{ExprKind::exterior_polar, {s.alpha, s.beta, s.Lbar, s.theta, s.x_iface, 1.0, 1.0}};
  const Expr lo{ExprKind::exterior_polar, {s.alpha, s.beta, s.Lbar, s.theta, s.x_iface, 0.0, -1.0}};
  const Expr strip{ExprKind::exterior_strip, {s.alpha, s.beta, s.Lbar, s.theta, -s.x_iface}};
  for (int k = 0; k < 4; ++k) {
    const double ri = radii[k], ro = radii[k + 1];
    if (!(ro > ri)) continue;
    const bool inner = k == 0;
    b.sector({s.x_iface, 1.0}, ri, ro, +1, inner ? Expr::zero() : up, inner ? s.upper_exclusion : nullptr);
    b.sector({s.x_iface, 0.0}, ri, ro, -1, inner ? Expr::zero() : lo);
    const double xl = s.x_iface - ro, xr = std::min(s.x_iface - ri, s.strip_start);
    if (xr > xl) b.box(xl, xr, 0.0, 1.0, inner ? Expr::zero() : strip);
  }
}

/// Boundary laminate on (-1/N, 0] x [0, 1]: triangles with theta*Y below the
/// diagonal, the rational tip above, one period per 1/N.
inline void add_boundary_laminate(Builder& b, int N, double h, double theta) {
  const double w = 1.0 / N;
  for (int m = 0; m < N; ++m) {
    const double y0 = static_cast<double>(m) / N, y1 = static_cast<double>(m + 1) / N;
    const double yk = y0 + (1.0 - h) / N;
    b.poly({{-w, y0}, {0.0, y0}, {0.0, yk}}, Expr::affine_at({0.0, y0}, 0.0, 0.0, theta));
    b.poly({{-w, y0}, {0.0, yk}, {0.0, y1}, {-w, y1}}, Expr{ExprKind::laminate_tip, {theta, h, double(N), y0}});
  }
}

/// Single laminate theta*x2 / (1-theta)(1-x2) on [x0, x1] x [0, 1].
inline void add_laminate(Builder& b, double x0, double x1, double theta) {
  if (!(x1 > x0)) return;
  b.rect(x0, x1, 0.0, 1.0 - theta, Expr::affine(0.0, 0.0, theta));
  b.rect(x0, x1, 1.0 - theta, 1.0, Expr::affine_at({0.0, 1.0}, 0.0, 0.0, -(1.0 - theta)));
}

/// Wedge interpolation on [x0, x0 + bt] x [y0, y0 + theta], shifted by `offset`.
inline void add_wedge(Builder& b, double x0, double y0, double bt, double theta, double offset) {
  const double x1 = x0 + bt, y1 = y0 + theta;
  b.poly({{x0, y0}, {x1, y0}, {x1, y1}}, Expr::affine_at({x0, y0}, offset, 0.0, theta));
  const double s = theta / bt;
  b.poly({{x0, y0}, {x1, y1}, {x0, y1}},
         Expr::affine_at({x0, y0}, offset, s, -(1.0 - theta)));
}

struct BranchSpec {
  double h, ell, theta;
  int N;
  double y_top;  // top edge of the cell; the cell spans [y_top - h/N, y_top]
};

inline int branch_depth(double ell, int N, double theta) {
  // largest k with 2^-k theta/N <= 3^-k ell
  const double r = ell * N / theta;
  if (r < 1.0) return 0;
  int k = static_cast<int>(std::floor(std::log(r) / std::log(1.5)));
  while (k > 0 && std::ldexp(theta / N, -k) > std::pow(3.0, -k) * ell) --k;
  while (std::ldexp(theta / N, -(k + 1)) <= std::pow(3.0, -(k + 1)) * ell) ++k;
  return k;
}

/// Pieces needed by `cells` branching cells refined to depth k.
inline double branch_piece_count(double ell, double clip, int k, double cells) {
  double n = 2.0 * std::ldexp(1.0, k);
  double li = ell;
  for (int i = 0; i < k; ++i) {
    const double next = li / 3.0;
    if (next < clip) n += 4.0 * std::ldexp(1.0, i);
    li = next;
  }
  return n * cells;
}

/// Depth to use for `cells` cells within the builder's remaining budget.
inline int branch_depth_within(const Builder& b, double ell, int N, double theta, double cells) {
  int k = branch_depth(ell, N, theta);
  while (k > 0 && branch_piece_count(ell, b.clip(), k, cells) > static_cast<double>(b.room())) --k;
  if (branch_piece_count(ell, b.clip(), k, cells) > static_cast<double>(b.room()))
    throw std::length_error("branching construction exceeds the piece budget at depth 0");
  return k;
}

/// Self-similar branching cell refined to depth k, followed by the bilinear
/// interpolation to the background on (0, ell_k).
inline void add_branch_cell(Builder& b, const BranchSpec& s, int k) {
  const double H = s.h / s.N;
  const double y_bot = s.y_top - H;
  const double th = s.theta;
  const double cbg = th * (1.0 - s.h) / s.h;
  auto ylev = [&](double q) { return y_bot + H * q; };  // q dyadic, so shared levels agree exactly
  auto Ubg = [&](double y) { return cbg * (s.y_top - y); };

  double xr = s.ell;
  for (int i = 0; i < k; ++i) {
    const double xl = xr / 3.0;
    const double P = std::ldexp(1.0, i);
    if (xl < b.clip()) {
      const double hi = H / P, thi = (th / s.N) / P;
      const double a0 = std::min(hi / 2, hi - thi), a1 = hi / 2 - thi / 2;
      const double b0 = std::max(hi / 2, hi - thi), b1 = hi - thi / 2;
      const double D = xr - xl;
      const double LA1 = -(a1 - a0) / D, LA0 = a0 + (a1 - a0) * xr / D;
      const double LB1 = -(b1 - b0) / D, LB0 = b0 + (b1 - b0) * xr / D;
      const auto periods = static_cast<long long>(P);
      for (long long m = 0; m < periods; ++m) {
        const double yp = ylev(m / P), ytp = ylev((m + 1) / P), ymid = ylev((2 * m + 1) / (2 * P));
        const double yAr = a0 == hi / 2 ? ymid : yp + a0, yAl = yp + a1;
        const double yBr = b0 == hi / 2 ? ymid : yp + b0, yBl = yp + b1;
        const double Up = Ubg(yp);
        const double K = Up - th * yp;
        b.poly({{xl, yp}, {xr, yp}, {xr, yAr}, {xl, yAl}}, Expr::affine(K, 0.0, th));
        b.poly({{xl, yAl}, {xr, yAr}, {xr, ymid}, {xl, ymid}}, Expr::affine(K + yp + LA0, LA1, th - 1.0));
        b.poly({{xl, ymid}, {xr, ymid}, {xr, yBr}, {xl, yBl}}, Expr::affine(K - hi / 2 + LA0, LA1, th));
        b.poly({{xl, yBl}, {xr, yBr}, {xr, ytp}, {xl, ytp}},
               Expr::affine(K - hi / 2 + LA0 + yp + LB0, LA1 + LB1, th - 1.0));
      }
    }
    xr = xl;
  }

  // Bilinear blend on (0, ell_k) between the level-k trace and the background.
  const double lk = xr, P = std::ldexp(1.0, k);
  const double hk = H / P, thk = (th / s.N) / P;
  const auto periods = static_cast<long long>(P);
  for (long long m = 0; m < periods; ++m) {
    const double yp = ylev(m / P), ytp = ylev((m + 1) / P);
    const double ys = yp + (hk - thk);
    const double Up = Ubg(yp);
    // u = B(Y) + (x1/lk)(A(Y) - B(Y)), Y = x2 - yp, B(Y) = Up - cbg Y.
    const double s1 = (th + cbg) / lk;
    b.poly({{0.0, yp}, {lk, yp}, {lk, ys}, {0.0, ys}}, Expr::bilinear(Up + cbg * yp, -s1 * yp, -cbg, s1));
    const double g = 1.0 - th - cbg;
    b.poly({{0.0, ys}, {lk, ys}, {lk, ytp}, {0.0, ytp}},
           Expr::bilinear(Up + cbg * yp, ((hk - thk) + g * yp) / lk, -cbg, -g / lk));
  }
}

inline PiecewiseField finish(Builder& b, std::string name, std::map<std::string, double> params, double L) {
  PiecewiseField half;
  half.name = std::move(name);
  half.pieces = std::move(b.pieces);
  half.params_used = std::move(params);
  half.nucleus = Rect{0.0, 2.0 * L, 0.0, 1.0};
  return mirror_extend(half, L);
}

inline void require_params(const Params& p) { validate(p); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Building blocks.

inline void check_exterior(double alpha, double beta, double Lbar) {
  if (!(Lbar >= 0.5) || !(alpha >= 1.0) || !(alpha < beta) || !(beta <= Lbar))
    throw std::invalid_argument("exterior flow needs 1 <= alpha < beta <= Lbar, Lbar >= 1/2");
}

/// Far-field flow on ((-inf, Lbar] x R) minus the nucleus (0, Lbar) x (0, 1).
inline PiecewiseField build_exterior_flow(double alpha, double beta, double Lbar, double theta) {
  check_exterior(alpha, beta, Lbar);
  detail::Builder b(Lbar);
  detail::add_exterior(b, {alpha, beta, Lbar, theta, 0.0, 0.0});
  PiecewiseField f;
  f.name = "ExteriorFlow";
  f.pieces = std::move(b.pieces);
  f.nucleus = Rect{0.0, Lbar, 0.0, 1.0};
  f.params_used = {{"alpha", alpha}, {"beta", beta}, {"Lbar", Lbar}, {"theta", theta}};
  f.finalize();
  return f;
}

/// Boundary laminate on (-inf, 0] x [0, 1], vanishing for x1 <= -1/N.
inline PiecewiseField build_boundary_laminate(int N, double h, double theta) {
  if (N < 1 || !(h > 0.0 && h <= 0.5) || !(theta >= 0.0 && theta <= 0.5))
    throw std::invalid_argument("boundary laminate needs N >= 1, h in (0, 1/2], theta in [0, 1/2]");
  detail::Builder b;
  detail::add_boundary_laminate(b, N, h, theta);
  b.box(-INFINITY, -1.0 / N, 0.0, 1.0, Expr::zero());
  PiecewiseField f;
  f.name = "BoundaryLaminate";
  f.pieces = std::move(b.pieces);
  f.params_used = {{"N", double(N)}, {"h", h}, {"theta", theta}};
  f.finalize();
  return f;
}

/// Branching cell on (0, ell) x (1 - h/N, 1).
inline PiecewiseField build_branch_cell(double h, double ell, int N, double theta,
                                        const BuildOptions& opt = {}) {
  if (!(theta > 0.0 && theta <= 0.5) || N < 1 || !(h >= theta && h <= 1.0) || !(ell >= theta))
    throw std::invalid_argument("branch cell needs theta in (0, 1/2], N >= 1, h in [theta, 1], ell >= theta");
  detail::Builder b(INFINITY, opt.max_pieces);
  const int k = detail::branch_depth(ell, N, theta);
  const int ku = detail::branch_depth_within(b, ell, N, theta, 1.0);
  detail::add_branch_cell(b, {h, ell, theta, N, 1.0}, ku);
  PiecewiseField f;
  f.name = "BranchCell";
  f.pieces = std::move(b.pieces);
  f.nucleus = Rect{0.0, ell, 1.0 - h / N, 1.0};
  f.params_used = {{"h", h}, {"ell", ell}, {"N", double(N)}, {"theta", theta}, {"k", double(k)}, {"k_used", double(ku)}};
  f.finalize();
  return f;
}

/// Two-branch wedge on [0, bt] x [0, theta].
inline PiecewiseField build_interp_wedge(double beta_tilde, double theta) {
  if (!(beta_tilde > 0.0) || !(theta > 0.0 && theta <= 0.5))
    throw std::invalid_argument("wedge needs beta_tilde > 0 and theta in (0, 1/2]");
  detail::Builder b;
  detail::add_wedge(b, 0.0, 0.0, beta_tilde, theta, 0.0);
  PiecewiseField f;
  f.name = "InterpWedge";
  f.pieces = std::move(b.pieces);
  f.nucleus = Rect{0.0, beta_tilde, 0.0, theta};
  f.params_used = {{"beta_tilde", beta_tilde}, {"theta", theta}};
  f.finalize();
  return f;
}

inline PiecewiseField build_block(ConstructionKind kind, const InternalParams& ip, const BuildOptions& opt = {}) {
  switch (kind) {
    case ConstructionKind::ExteriorFlow: return build_exterior_flow(ip.alpha, ip.beta, ip.Lbar, ip.theta);
    case ConstructionKind::BoundaryLaminate: return build_boundary_laminate(ip.N, ip.h, ip.theta);
    case ConstructionKind::BranchCell: return build_branch_cell(ip.h, ip.ell, ip.N, ip.theta, opt);
    case ConstructionKind::InterpWedge: return build_interp_wedge(ip.beta_tilde, ip.theta);
    default: throw std::invalid_argument("not a building-block construction");
  }
}

// ---------------------------------------------------------------------------
// Composite test functions. Each builds the half x1 <= L and mirrors it.

namespace detail {

using ParamMap = std::map<std::string, double>;

inline PiecewiseField build_u1(const Params& p, std::string trail) {
  Builder b(p.L);
  b.box(-INFINITY, INFINITY, -INFINITY, INFINITY, Expr::zero());
  return finish(b, trail + "U1Constant", {}, p.L);
}

inline PiecewiseField build_u2(const Params& p, std::string trail, const BuildOptions& opt) {
  const double th = p.theta, L = p.L;
  Builder b(L, opt.max_pieces);
  b.rect(0.0, L, 0.0, 1.0, Expr::affine(0.0, 0.0, th));
  b.rect(-1.0, 0.0, 0.0, 1.0, Expr::bilinear(0.0, 0.0, th, th));
  b.rect(-2.0, -1.0, 0.0, 1.0, Expr::zero());
  add_exterior(b, {1.0, 2.0, L + 2.0, th, -2.0, -2.0});
  return finish(b, trail + "U2Affine", {{"alpha", 1.0}, {"beta", 2.0}, {"Lbar", L + 2.0}, {"shift", 2.0}}, L);
}

inline PiecewiseField build_u3(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, th = p.theta, L = p.L;
  if (mu <= 1.0) return build_u2(p, trail + "U3LinearInterp(a)->", opt);
  if (mu >= L / 3.0) return build_u1(p, trail + "U3LinearInterp(b)->");
  Builder b(L, opt.max_pieces);
  b.rect(0.0, mu, 0.0, 1.0, Expr::zero());
  b.rect(mu, 2.0 * mu, 0.0, 1.0, Expr::bilinear(0.0, 0.0, -th, th / mu));
  b.rect(2.0 * mu, L, 0.0, 1.0, Expr::affine(0.0, 0.0, th));
  add_exterior(b, {mu, 2.0 * mu, L, th, 0.0, 0.0});
  return finish(b, trail + "U3LinearInterp(c)", {{"alpha", mu}, {"beta", 2.0 * mu}, {"Lbar", L}}, L);
}

inline PiecewiseField build_u4(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  const double ratio = mu * th * th / eps;
  if (ratio <= 1.0) return build_u2(p, trail + "U4SingleLaminate(a)->", opt);
  Builder b(L, opt.max_pieces);
  add_boundary_laminate(b, 1, th, th);
  if (ratio >= L) {
    add_laminate(b, 0.0, L, th);
    b.box(-INFINITY, -1.0, 0.0, 1.0, Expr::zero());
    b.zero_halves();
    return finish(b, trail + "U4SingleLaminate(b)", {{"N", 1.0}, {"h", th}}, L);
  }
  const double alpha = ratio;
  const bool small = mu * th * th <= std::sqrt(eps) * std::pow(th, 1.5);
  const double bt = small ? std::pow(th, 1.5) / std::sqrt(eps) : alpha;
  const double beta = alpha + bt;
  const double Lbar = std::max(L + 1.0, beta + 1.0);
  b.rect(0.0, L, 0.0, 1.0 - th, Expr::affine(0.0, 0.0, th));
  b.rect(0.0, alpha, 1.0 - th, 1.0, Expr::affine_at({0.0, 1.0}, 0.0, 0.0, -(1.0 - th)));
  add_wedge(b, alpha, 1.0 - th, bt, th, th * (1.0 - th));
  b.rect(alpha + bt, L, 1.0 - th, 1.0, Expr::affine(0.0, 0.0, th));
  add_exterior(b, {alpha + 1.0, beta + 1.0, Lbar, th, -1.0, -1.0});
  return finish(b, trail + "U4SingleLaminate(c)",
                {{"N", 1.0}, {"h", th}, {"alpha", alpha}, {"beta", beta}, {"Lbar", Lbar}, {"beta_tilde", bt}, {"shift", 1.0}}, L);
}

inline PiecewiseField build_u5(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  if (mu * th * th / eps <= 1.0) return build_u2(p, trail + "U5TruncatedBranching(a)->", opt);
  if (mu * mu * th * th / eps < th) return build_u4(p, trail + "U5TruncatedBranching(b)->", opt);
  const double h = std::min(1.0, mu * mu * th * th / eps);
  const double ell = mu * th * th / eps;
  Builder b(L, opt.max_pieces);
  const double xb = std::min(ell, L);
  b.rect(0.0, xb, 0.0, 1.0 - h, Expr::affine(0.0, 0.0, th));
  add_boundary_laminate(b, 1, h, th);
  ParamMap pm{{"N", 1.0}, {"h", h}, {"ell", ell}};
  std::string name = trail + "U5TruncatedBranching(c)";
  if (ell >= L / 2.0) {
    add_laminate(b, ell, L, th);
    b.box(-INFINITY, -1.0, 0.0, 1.0, Expr::zero());
    b.zero_halves();
  } else {
    const double bt = ell, beta = 2.0 * ell + 1.0, Lbar = std::max(2.0 * ell + 1.0, L + 1.0);
    b.rect(ell, L, 0.0, 1.0 - th, Expr::affine(0.0, 0.0, th));
    add_wedge(b, ell, 1.0 - th, bt, th, th * (1.0 - th));
    b.rect(ell + bt, L, 1.0 - th, 1.0, Expr::affine(0.0, 0.0, th));
    add_exterior(b, {ell + 1.0, beta, Lbar, th, -1.0, -1.0});
    pm.insert({{"alpha", ell + 1.0}, {"beta", beta}, {"Lbar", Lbar}, {"beta_tilde", bt}, {"shift", 1.0}});
  }
  const int k = branch_depth(ell, 1, th);
  const int ku = branch_depth_within(b, ell, 1, th, 1.0);
  add_branch_cell(b, {h, ell, th, 1, 1.0}, ku);
  pm["k"] = k;
  pm["k_used"] = ku;
  return finish(b, name, std::move(pm), L);
}

inline PiecewiseField build_u6(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  if (eps >= mu * th * th) return build_u2(p, trail + "U6CornerLaminate(a)->", opt);
  if (th <= eps) return build_u3(p, trail + "U6CornerLaminate(b)->", opt);
  if (th / mu >= L) return build_u2(p, trail + "U6CornerLaminate(c)->", opt);
  if (mu * mu * th <= eps) return build_u2(p, trail + "U6CornerLaminate(d)->", opt);

  const double g = std::max(0.25, th / (mu * std::log(3.0 + th / mu)));
  if (!(g >= 0.25)) throw std::logic_error("corner laminate needs gamma >= 1/4");
  const double bt = 3.0 * mu * th * th / eps, alpha = bt, beta = 2.0 * alpha, Lbar = std::max(beta, L);
  if (!(3.0 * g <= alpha)) throw std::logic_error("corner laminate: 3 gamma > alpha");

  Builder b(L, opt.max_pieces);
  // Corner region R_gamma.
  b.poly({{0, 0}, {g, 0}, {g, 1 - th}, {0, 1}}, Expr::affine(0.0, 0.0, th));
  b.poly({{0, 1}, {g, 1 - th}, {g, 1}}, Expr::affine_at({0.0, 1.0}, th, -th / g, -(1 - th)));
  b.poly({{0, 1}, {g, 1}, {0, 1 + g}}, Expr::affine_at({0.0, 1.0}, th, -th / g, -th / g));
  b.poly({{0, 1}, {0, 1 + g}, {-g, 1 + g}}, Expr::affine_at({0.0, 1.0}, th, 0.0, -th / g));
  b.poly({{-g, 0}, {0, 0}, {0, 1}, {-g, 1 + g}}, Expr{ExprKind::corner_fan, {th, g}});
  // Nucleus.
  b.rect(g, g + alpha + bt, 0.0, 1.0 - th, Expr::affine(0.0, 0.0, th));
  b.rect(g, g + alpha, 1.0 - th, 1.0, Expr::affine_at({0.0, 1.0}, 0.0, 0.0, -(1.0 - th)));
  add_wedge(b, g + alpha, 1.0 - th, bt, th, th * (1.0 - th));
  b.rect(g + alpha + bt, L, 0.0, 1.0, Expr::affine(0.0, 0.0, th));
  // Exterior flow anchored at x1 = gamma; the corner pieces sit inside its zero core.
  const Polygon excl{{-g, 1}, {g, 1}, {0, 1 + g}, {-g, 1 + g}};
  add_exterior(b, {alpha, beta, Lbar, th, g, -g, &excl});
  return finish(b, trail + "U6CornerLaminate(e)",
                {{"gamma", g}, {"beta_tilde", bt}, {"alpha", alpha}, {"beta", beta}, {"Lbar", Lbar}, {"shift", -g}}, L);
}

inline PiecewiseField build_p26b_with(const Params& p, std::string name, long long N, const BuildOptions& opt) {
  const double th = p.theta, L = p.L;
  Builder b(L, opt.max_pieces);
  if (static_cast<double>(N) * 4.0 > static_cast<double>(b.room()))
    throw std::length_error("laminate period count exceeds the piece budget");
  const int n = static_cast<int>(N);
  add_boundary_laminate(b, n, th, th);
  for (int m = 0; m < n; ++m) {
    const double y0 = static_cast<double>(m) / n, y1 = static_cast<double>(m + 1) / n;
    const double yk = y0 + (1.0 - th) / n;
    b.rect(0.0, L, y0, yk, Expr::affine_at({0.0, y0}, 0.0, 0.0, th));
    b.rect(0.0, L, yk, y1, Expr::affine_at({0.0, y1}, 0.0, 0.0, -(1.0 - th)));
  }
  b.box(-INFINITY, -1.0 / n, 0.0, 1.0, Expr::zero());
  b.zero_halves();
  return finish(b, std::move(name), {{"N", double(N)}, {"h", th}}, L);
}

inline PiecewiseField build_p26a(const Params& p, std::string trail, const BuildOptions& opt) {
  const double th = p.theta, eps = p.eps, L = p.L;
  const long long N = ceil_tolerant(std::cbrt(th * th / eps) / std::cbrt(L * L));
  Builder b(L, opt.max_pieces);
  const int n = static_cast<int>(std::min<long long>(N, 1LL << 30));
  const int k = branch_depth(L, n, th);
  const int ku = branch_depth_within(b, L, n, th, n);
  for (int m = 0; m < n; ++m) add_branch_cell(b, {1.0, L, th, n, static_cast<double>(m + 1) / n}, ku);
  b.box(-INFINITY, 0.0, 0.0, 1.0, Expr::zero());
  b.zero_halves();
  return finish(b, trail + "P26aBranching", {{"N", double(N)}, {"h", 1.0}, {"ell", L}, {"k", double(k)}, {"k_used", double(ku)}}, L);
}

inline PiecewiseField build_p26b(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  const long long N = ceil_tolerant(std::sqrt(mu * th * th * std::log(3.0 + 1.0 / (th * th)) / (eps * L)));
  return build_p26b_with(p, trail + "P26bLaminate", N, opt);
}

inline PiecewiseField build_p26c(const Params& p, std::string trail, const BuildOptions& opt) {
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  const double hraw = std::pow(mu, 1.5) / std::sqrt(eps) * th * std::sqrt(L);
  if (hraw <= th) return build_p26b(p, trail + "P26cTwoScale(b)->", opt);
  const double h = std::min(1.0, hraw);
  const long long N =
      ceil_tolerant(std::sqrt(mu * th * th * std::log(3.0 + eps / (mu * mu * mu * th * th * L)) / (eps * L)));
  Builder b(L, opt.max_pieces);
  const int n = static_cast<int>(std::min<long long>(N, 1LL << 30));
  if (static_cast<double>(n) * 4.0 > static_cast<double>(b.room()))
    throw std::length_error("two-scale period count exceeds the piece budget");
  add_boundary_laminate(b, n, h, th);
  for (int m = 0; m < n; ++m) {
    const double y0 = static_cast<double>(m) / n;
    b.rect(0.0, L, y0, y0 + (1.0 - h) / n, Expr::affine_at({0.0, y0}, 0.0, 0.0, th));
  }
  const int k = branch_depth(L, n, th);
  const int ku = branch_depth_within(b, L, n, th, n);
  for (int m = 0; m < n; ++m) add_branch_cell(b, {h, L, th, n, static_cast<double>(m + 1) / n}, ku);
  b.box(-INFINITY, -1.0 / n, 0.0, 1.0, Expr::zero());
  b.zero_halves();
  return finish(b, trail + "P26cTwoScale",
                {{"N", double(N)}, {"h", h}, {"ell", L}, {"k", double(k)}, {"k_used", double(ku)}}, L);
}

}  // namespace detail

/// Builds a composite test function with the internal parameters of its
/// proof, following the case splits (and their fallbacks) literally. The
/// field name records the path taken, e.g. "U5TruncatedBranching(b)->U4SingleLaminate(c)".
inline PiecewiseField build_composite(ConstructionKind kind, const Params& p, const BuildOptions& opt = {}) {
  detail::require_params(p);
  switch (kind) {
    case ConstructionKind::U1Constant: return detail::build_u1(p, "");
    case ConstructionKind::U2Affine: return detail::build_u2(p, "", opt);
    case ConstructionKind::U3LinearInterp: return detail::build_u3(p, "", opt);
    case ConstructionKind::U4SingleLaminate: return detail::build_u4(p, "", opt);
    case ConstructionKind::U5TruncatedBranching: return detail::build_u5(p, "", opt);
    case ConstructionKind::U6CornerLaminate: return detail::build_u6(p, "", opt);
    case ConstructionKind::P26aBranching: return detail::build_p26a(p, "", opt);
    case ConstructionKind::P26bLaminate: return detail::build_p26b(p, "", opt);
    case ConstructionKind::P26cTwoScale: return detail::build_p26c(p, "", opt);
    default: throw std::invalid_argument("building blocks need internal parameters; use build_block");
  }
}

inline ConstructionKind construction_for(RegimeId r) {
  switch (r) {
    case RegimeId::Constant: return ConstructionKind::U1Constant;
    case RegimeId::Affine: return ConstructionKind::U2Affine;
    case RegimeId::LinearInterpolation: return ConstructionKind::U3LinearInterp;
    case RegimeId::SingleTruncatedBranching: return ConstructionKind::U5TruncatedBranching;
    case RegimeId::CornerLaminate: return ConstructionKind::U6CornerLaminate;
    case RegimeId::Branching: return ConstructionKind::P26aBranching;
    case RegimeId::Laminate: return ConstructionKind::P26bLaminate;
    case RegimeId::TwoScaleBranching: return ConstructionKind::P26cTwoScale;
  }
  throw std::invalid_argument("unknown regime");
}

/// Composite construction for the regime attaining the scaling minimum.
inline std::pair<PiecewiseField, RegimeId> build_best(const Params& p, const BuildOptions& opt = {}) {
  const RegimeId r = eval_scaling(p).argmin;
  return {build_composite(construction_for(r), p, opt), r};
}

}  // namespace scaling_lab
