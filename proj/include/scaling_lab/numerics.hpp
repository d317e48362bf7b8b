#pragma once
// Small numerical toolbox shared by the field, energy and oracle modules.

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <map>
#include <mutex>
#include <span>
#include <stdexcept>
#include <thread>
#include <vector>

#include <boost/math/special_functions/legendre.hpp>

namespace scaling_lab {

struct Point {
  double x1 = 0.0, x2 = 0.0;
};

inline Point operator+(Point a, Point b) { return {a.x1 + b.x1, a.x2 + b.x2}; }
inline Point operator-(Point a, Point b) { return {a.x1 - b.x1, a.x2 - b.x2}; }
inline Point operator*(double s, Point a) { return {s * a.x1, s * a.x2}; }
inline double cross(Point a, Point b) { return a.x1 * b.x2 - a.x2 * b.x1; }
inline double dot(Point a, Point b) { return a.x1 * b.x1 + a.x2 * b.x2; }
inline double norm(Point a) { return std::hypot(a.x1, a.x2); }
inline Point lerp(Point a, Point b, double t) { return a + t * (b - a); }

// 2x2 matrices are stored row-major: {m11, m12, m21, m22}.
using Mat2 = std::array<double, 4>;

inline double frobenius(const Mat2& m) {
  return std::sqrt(m[0] * m[0] + m[1] * m[1] + m[2] * m[2] + m[3] * m[3]);
}

inline Mat2 operator-(const Mat2& a, const Mat2& b) {
  return {a[0] - b[0], a[1] - b[1], a[2] - b[2], a[3] - b[3]};
}

// ---------------------------------------------------------------------------
// Gauss-Legendre rules on [-1, 1].

struct GaussRule {
  std::vector<double> x, w;
};

inline const GaussRule& gauss_rule(int n) {
  if (n < 1 || n > 128) throw std::invalid_argument("Gauss order out of range");
  static std::mutex mu;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  GaussRule r;
  for (double z : boost::math::legendre_p_zeros<double>(n)) {
    const double dp = boost::math::legendre_p_prime(n, z);
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.x.push_back(z);
    r.w.push_back(w);
    if (z != 0.0) {
      r.x.push_back(-z);
      r.w.push_back(w);
    }
  }
  return cache.emplace(n, std::move(r)).first->second;
}

/// Sum with a fixed binary-tree association, so results do not depend on how
/// the terms were produced.
inline double pairwise_sum(std::span<const double> v) {
  if (v.empty()) return 0.0;
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

inline unsigned worker_count() {
  unsigned n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("SCALING_LAB_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min<unsigned>(n, static_cast<unsigned>(cap));
  }
  return n;
}

/// Runs body(i) for i in [0, n). Each index is handled exactly once; callers
/// write into per-index slots so the outcome is independent of scheduling.
template <class F>
void parallel_for(std::size_t n, F&& body, std::size_t grain = 256) {
  const unsigned nt = worker_count();
  if (nt <= 1 || n <= grain) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr err;
  std::mutex err_mu;
  auto work = [&] {
    try {
      for (;;) {
        const std::size_t start = next.fetch_add(grain);
        if (start >= n) break;
        const std::size_t stop = std::min(n, start + grain);
        for (std::size_t i = start; i < stop; ++i) body(i);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(err_mu);
      if (!err) err = std::current_exception();
      next.store(n);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < nt; ++t) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  if (err) std::rethrow_exception(err);
}

// ---------------------------------------------------------------------------
// Convex polygons (counterclockwise vertex lists).

using Polygon = std::vector<Point>;

inline double signed_area(const Polygon& p) {
  double a = 0.0;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) a += cross(p[i], p[(i + 1) % n]);
  return 0.5 * a;
}

/// Keeps the part of p where dot(n, x) <= c.
inline Polygon clip_halfplane(const Polygon& p, Point n, double c) {
  Polygon out;
  const std::size_t m = p.size();
  for (std::size_t i = 0; i < m; ++i) {
    const Point a = p[i], b = p[(i + 1) % m];
    const double da = dot(n, a) - c, db = dot(n, b) - c;
    if (da <= 0.0) out.push_back(a);
    if ((da < 0.0 && db > 0.0) || (da > 0.0 && db < 0.0)) out.push_back(lerp(a, b, da / (da - db)));
  }
  return out;
}

inline Polygon clip_box(Polygon p, double x0, double x1, double y0, double y1) {
  if (std::isfinite(x1)) p = clip_halfplane(p, {1, 0}, x1);
  if (p.size() >= 3 && std::isfinite(x0)) p = clip_halfplane(p, {-1, 0}, -x0);
  if (p.size() >= 3 && std::isfinite(y1)) p = clip_halfplane(p, {0, 1}, y1);
  if (p.size() >= 3 && std::isfinite(y0)) p = clip_halfplane(p, {0, -1}, -y0);
  if (p.size() < 3) p.clear();
  return p;
}

/// Splits a convex polygon into vertical slabs between consecutive vertex
/// abscissae and integrates f over each slab with an n x n tensor Gauss rule
/// on the map (s, t) -> (x(s), lo(x) + t (hi(x) - lo(x))). Exact for
/// polynomial integrands of degree <= 2n - 2.
template <class F>
double integrate_convex(const Polygon& poly, F&& f, int order) {
  if (poly.size() < 3) return 0.0;
  const GaussRule& g = gauss_rule(order);
  std::vector<double> xs;
  for (const Point& v : poly) xs.push_back(v.x1);
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());

  std::vector<double> parts;
  const std::size_t m = poly.size();
  for (std::size_t k = 0; k + 1 < xs.size(); ++k) {
    const double a = xs[k], b = xs[k + 1];
    // Non-vertical edges spanning [a, b]; for a convex polygon the lowest and
    // highest of them at the slab midpoint bound the slab.
    const double xm = 0.5 * (a + b);
    double lo0 = 0, lo1 = 0, hi0 = 0, hi1 = 0, lom = INFINITY, him = -INFINITY;
    for (std::size_t i = 0; i < m; ++i) {
      const Point p = poly[i], q = poly[(i + 1) % m];
      if (p.x1 == q.x1 || std::min(p.x1, q.x1) > a || std::max(p.x1, q.x1) < b) continue;
      auto y = [&](double x) { return p.x2 + (q.x2 - p.x2) * (x - p.x1) / (q.x1 - p.x1); };
      const double ym = y(xm);
      if (ym < lom) {
        lom = ym;
        lo0 = y(a);
        lo1 = y(b);
      }
      if (ym > him) {
        him = ym;
        hi0 = y(a);
        hi1 = y(b);
      }
    }
    if (!(him > lom)) continue;
    double acc = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
      const double s = 0.5 * (g.x[i] + 1.0);
      const double x = a + s * (b - a);
      const double lo = lo0 + s * (lo1 - lo0), hi = hi0 + s * (hi1 - hi0);
      const double hgt = hi - lo;
      if (!(hgt > 0.0)) continue;
      double inner = 0.0;
      for (std::size_t j = 0; j < g.x.size(); ++j) {
        const double t = 0.5 * (g.x[j] + 1.0);
        inner += g.w[j] * f(Point{x, lo + t * hgt});
      }
      acc += g.w[i] * inner * 0.5 * hgt;
    }
    parts.push_back(acc * 0.5 * (b - a));
  }
  return pairwise_sum(parts);
}

/// Integrates over a convex polygon, bisecting along x1 until two successive
/// estimates agree to rel_tol (relative to the running magnitude).
template <class F>
double integrate_convex_adaptive(const Polygon& poly, F&& f, int order, double rel_tol,
                                 int max_depth = 30) {
  struct Job {
    Polygon p;
    double whole;
    int depth;
  };
  auto split = [](const Polygon& p) {
    double xmin = INFINITY, xmax = -INFINITY;
    for (const Point& v : p) {
      xmin = std::min(xmin, v.x1);
      xmax = std::max(xmax, v.x1);
    }
    const double xm = 0.5 * (xmin + xmax);
    Polygon l = clip_halfplane(p, {1, 0}, xm);
    Polygon r = clip_halfplane(p, {-1, 0}, -xm);
    if (l.size() < 3) l.clear();
    if (r.size() < 3) r.clear();
    return std::pair{l, r};
  };
  const double first = integrate_convex(poly, f, order);
  std::vector<Job> stack{{poly, first, 0}};
  std::vector<double> done;
  const double scale = std::fabs(first);
  while (!stack.empty()) {
    Job j = std::move(stack.back());
    stack.pop_back();
    auto [l, r] = split(j.p);
    const double il = integrate_convex(l, f, order), ir = integrate_convex(r, f, order);
    const double err = std::fabs(il + ir - j.whole);
    if (err <= rel_tol * std::max(scale, std::fabs(il + ir)) || j.depth >= max_depth) {
      done.push_back(il + ir);
    } else {
      stack.push_back({std::move(l), il, j.depth + 1});
      stack.push_back({std::move(r), ir, j.depth + 1});
    }
  }
  std::sort(done.begin(), done.end());
  return pairwise_sum(done);
}

/// Integrates g over [a, b] with an n-point rule.
template <class F>
double integrate_interval(double a, double b, F&& g, int order) {
  const GaussRule& r = gauss_rule(order);
  double s = 0.0;
  for (std::size_t i = 0; i < r.x.size(); ++i) s += r.w[i] * g(0.5 * (a + b) + 0.5 * (b - a) * r.x[i]);
  return 0.5 * (b - a) * s;
}

}  // namespace scaling_lab
