#pragma once
// Finite-difference direct minimization of the energy on the nucleus plus an
// austenite collar. Gives numerical probes of the minimal energy that can be
// compared with the constructions and the scaling law.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/field.hpp"
#include "scaling_lab/numerics.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

/// Nucleus (0, width) x (0, height) split into n1 x n2 cells, surrounded by a
/// collar of at least `collar` on every side at the same spacing.
struct Grid {
  int n1 = 64, n2 = 64;
  double collar = 1.0;
  double width = 1.0, height = 1.0;

  double h1() const { return width / n1; }
  double h2() const { return height / n2; }
  int c1() const { return static_cast<int>(std::ceil(collar / h1() - 1e-9)); }
  int c2() const { return static_cast<int>(std::ceil(collar / h2() - 1e-9)); }
  int cells1() const { return n1 + 2 * c1(); }
  int cells2() const { return n2 + 2 * c2(); }
  int nodes1() const { return cells1() + 1; }
  int nodes2() const { return cells2() + 1; }
  std::size_t node_count() const { return static_cast<std::size_t>(nodes1()) * nodes2(); }
  std::size_t cell_count() const { return static_cast<std::size_t>(cells1()) * cells2(); }
  Point node(int i, int j) const { return {(i - c1()) * h1(), (j - c2()) * h2()}; }
  bool in_nucleus(int ci, int cj) const { return ci >= c1() && ci < c1() + n1 && cj >= c2() && cj < c2() + n2; }

  void check() const {
    if (n1 < 8 || n2 < 8) throw std::invalid_argument("grid needs at least 8 cells per direction");
    if (!(collar >= 1.0)) throw std::invalid_argument("collar must be at least 1");
    if (!(width > 0.0 && height > 0.0)) throw std::invalid_argument("grid extent must be positive");
  }
};

inline Grid make_grid(const Params& p, int n1, int n2, double collar = 1.0) {
  Grid g{n1, n2, collar, 2.0 * p.L, 1.0};
  g.check();
  return g;
}

enum class BoundaryCondition { free_outer, zero_outer };

struct DiscreteField {
  Grid grid;
  BoundaryCondition bc = BoundaryCondition::zero_outer;
  std::vector<double> u1, u2;  // node values, row-major with i fastest

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * grid.nodes1() + i; }
  bool pinned(int i, int j) const {
    return bc == BoundaryCondition::zero_outer &&
           (i == 0 || j == 0 || i == grid.nodes1() - 1 || j == grid.nodes2() - 1);
  }
  void apply_bc() {
    for (int j = 0; j < grid.nodes2(); ++j)
      for (int i = 0; i < grid.nodes1(); ++i)
        if (pinned(i, j)) u1[index(i, j)] = u2[index(i, j)] = 0.0;
  }
};

inline DiscreteField zero_field(const Grid& g, BoundaryCondition bc) {
  g.check();
  return {g, bc, std::vector<double>(g.node_count(), 0.0), std::vector<double>(g.node_count(), 0.0)};
}

/// Nodal interpolant of a displacement given as a function of the position.
inline DiscreteField interpolate(const std::function<std::array<double, 2>(Point)>& u, const Grid& g,
                                 BoundaryCondition bc) {
  DiscreteField df = zero_field(g, bc);
  parallel_for(static_cast<std::size_t>(g.nodes2()), [&](std::size_t j) {
    for (int i = 0; i < g.nodes1(); ++i) {
      const auto v = u(g.node(i, static_cast<int>(j)));
      df.u1[df.index(i, static_cast<int>(j))] = v[0];
      df.u2[df.index(i, static_cast<int>(j))] = v[1];
    }
  }, 1);
  df.apply_bc();
  return df;
}

inline DiscreteField interpolate(const PiecewiseField& f, const Grid& g, BoundaryCondition bc) {
  return interpolate([&](Point x) { return eval_field(f, x); }, g, bc);
}

namespace detail {

struct CellGrad {
  double a11, a12, a21, a22;  // d1 u1, d2 u1, d1 u2, d2 u2
};

inline double huber(double r, double delta) { return r <= delta ? 0.5 * r * r / delta : r - 0.5 * delta; }

/// Energy of nodal values x = (u1, u2) and optionally its gradient.
class DiscreteEnergy {
 public:
  DiscreteEnergy(const Grid& g, const Params& p, BoundaryCondition bc) : g_(g), p_(p), bc_(bc) {
    g_.check();
    validate(p_);
    n1_ = g_.cells1();
    n2_ = g_.cells2();
    G_.resize(g_.cell_count());
    dG_.resize(g_.cell_count());
    dD_.resize(g_.cell_count());
    row_.resize(n2_);
  }

  std::size_t size() const { return 2 * g_.node_count(); }

  bool pinned(std::size_t k) const {
    if (bc_ != BoundaryCondition::zero_outer) return false;
    const std::size_t m = k % g_.node_count();
    const int i = static_cast<int>(m % g_.nodes1()), j = static_cast<int>(m / g_.nodes1());
    return i == 0 || j == 0 || i == g_.nodes1() - 1 || j == g_.nodes2() - 1;
  }

  double operator()(const std::vector<double>& x, double delta, std::vector<double>* grad) {
    const double h1 = g_.h1(), h2 = g_.h2(), area = h1 * h2;
    const std::size_t nn = g_.node_count();
    const int w = g_.nodes1();
    const double th = p_.theta, mu = p_.mu, eps = p_.eps;
    const bool want = grad != nullptr;

    parallel_for(static_cast<std::size_t>(n2_), [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      for (int i = 0; i < n1_; ++i) {
        const std::size_t k00 = static_cast<std::size_t>(j) * w + i, k10 = k00 + 1, k01 = k00 + w, k11 = k01 + 1;
        auto d1 = [&](std::size_t off) { return (x[off + k10] - x[off + k00] + x[off + k11] - x[off + k01]) / (2 * h1); };
        auto d2 = [&](std::size_t off) { return (x[off + k01] - x[off + k00] + x[off + k11] - x[off + k10]) / (2 * h2); };
        G_[cell(i, j)] = {d1(0), d2(0), d1(nn), d2(nn)};
      }
    }, 8);

    parallel_for(static_cast<std::size_t>(n2_), [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      double bulk = 0.0, tv = 0.0;
      for (int i = 0; i < n1_; ++i) {
        const CellGrad& c = G_[cell(i, j)];
        CellGrad& d = dG_[cell(i, j)];
        if (g_.in_nucleus(i, j)) {
          const double s = c.a12 + c.a21;
          const double ea = s - th, eb = s + 1.0 - th;
          const double m = std::min(ea * ea, eb * eb);
          bulk += c.a11 * c.a11 + c.a22 * c.a22 + 0.5 * m;
          // at an exact tie take the minimal-norm element of the two branch slopes
          const double ds = ea * ea < eb * eb ? ea : (eb * eb < ea * ea ? eb : 0.5 * (ea + eb));
          d = {2 * c.a11, ds, ds, 2 * c.a22};
          std::array<double, 8> D{};
          if (g_.in_nucleus(i + 1, j)) {
            const CellGrad& r = G_[cell(i + 1, j)];
            D[0] = (r.a11 - c.a11) / h1, D[1] = (r.a12 - c.a12) / h1, D[2] = (r.a21 - c.a21) / h1, D[3] = (r.a22 - c.a22) / h1;
          }
          if (g_.in_nucleus(i, j + 1)) {
            const CellGrad& u = G_[cell(i, j + 1)];
            D[4] = (u.a11 - c.a11) / h2, D[5] = (u.a12 - c.a12) / h2, D[6] = (u.a21 - c.a21) / h2, D[7] = (u.a22 - c.a22) / h2;
          }
          double r2 = 0.0;
          for (double v : D) r2 += v * v;
          const double r = std::sqrt(r2);
          tv += delta > 0.0 ? huber(r, delta) : r;
          if (want) {
            // d huber(|D|) / dD = D / delta near zero, D / |D| beyond
            const double scale = delta > 0.0 && r <= delta ? 1.0 / delta : (r > 0.0 ? 1.0 / r : 0.0);
            for (int q = 0; q < 8; ++q) dD_[cell(i, j)][q] = scale * D[q];
          }
        } else {
          bulk += mu * (c.a11 * c.a11 + c.a12 * c.a12 + c.a21 * c.a21 + c.a22 * c.a22);
          d = {2 * mu * c.a11, 2 * mu * c.a12, 2 * mu * c.a21, 2 * mu * c.a22};
          if (want) dD_[cell(i, j)] = {};
        }
      }
      row_[j] = area * (bulk + eps * tv);
    }, 8);
    const double E = pairwise_sum(row_);
    if (!want) return E;

    // Chain rule through the difference operator: dE/dG_c for every cell.
    parallel_for(static_cast<std::size_t>(n2_), [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      for (int i = 0; i < n1_; ++i) {
        CellGrad& d = dG_[cell(i, j)];
        if (!g_.in_nucleus(i, j)) {
          scale_cell(d, area);
          continue;
        }
        const auto& own = dD_[cell(i, j)];
        double t11 = -(own[0] / h1 + own[4] / h2), t12 = -(own[1] / h1 + own[5] / h2);
        double t21 = -(own[2] / h1 + own[6] / h2), t22 = -(own[3] / h1 + own[7] / h2);
        if (g_.in_nucleus(i - 1, j)) {
          const auto& l = dD_[cell(i - 1, j)];
          t11 += l[0] / h1, t12 += l[1] / h1, t21 += l[2] / h1, t22 += l[3] / h1;
        }
        if (g_.in_nucleus(i, j - 1)) {
          const auto& b = dD_[cell(i, j - 1)];
          t11 += b[4] / h2, t12 += b[5] / h2, t21 += b[6] / h2, t22 += b[7] / h2;
        }
        d = {d.a11 + eps * t11, d.a12 + eps * t12, d.a21 + eps * t21, d.a22 + eps * t22};
        scale_cell(d, area);
      }
    }, 8);

    grad->assign(size(), 0.0);
    parallel_for(static_cast<std::size_t>(g_.nodes2()), [&](std::size_t jj) {
      const int j = static_cast<int>(jj);
      for (int i = 0; i < w; ++i) {
        double s1 = 0.0, s2 = 0.0;
        // node (i, j) is corner (di, dj) of cell (i - di, j - dj)
        for (int dj = 0; dj <= 1; ++dj)
          for (int di = 0; di <= 1; ++di) {
            const int ci = i - di, cj = j - dj;
            if (ci < 0 || cj < 0 || ci >= n1_ || cj >= n2_) continue;
            const CellGrad& d = dG_[cell(ci, cj)];
            const double w1 = (di ? 1.0 : -1.0) / (2 * h1), w2 = (dj ? 1.0 : -1.0) / (2 * h2);
            s1 += d.a11 * w1 + d.a12 * w2;
            s2 += d.a21 * w1 + d.a22 * w2;
          }
        const std::size_t k = static_cast<std::size_t>(j) * w + i;
        (*grad)[k] = s1;
        (*grad)[nn + k] = s2;
      }
    }, 8);
    for (std::size_t k = 0; k < grad->size(); ++k)
      if (pinned(k)) (*grad)[k] = 0.0;
    return E;
  }

 private:
  std::size_t cell(int i, int j) const { return static_cast<std::size_t>(j) * n1_ + i; }
  static void scale_cell(CellGrad& d, double s) {
    d.a11 *= s, d.a12 *= s, d.a21 *= s, d.a22 *= s;
  }

  Grid g_;
  Params p_;
  BoundaryCondition bc_;
  int n1_, n2_;
  std::vector<CellGrad> G_, dG_;
  std::vector<std::array<double, 8>> dD_;
  std::vector<double> row_;
};

inline std::vector<double> pack(const DiscreteField& df) {
  std::vector<double> x(df.u1);
  x.insert(x.end(), df.u2.begin(), df.u2.end());
  return x;
}

inline void unpack(const std::vector<double>& x, DiscreteField& df) {
  const std::size_t n = df.u1.size();
  std::copy(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n), df.u1.begin());
  std::copy(x.begin() + static_cast<std::ptrdiff_t>(n), x.end(), df.u2.begin());
}

}  // namespace detail

/// Discrete energy: two-well misfit in nucleus cells, mu |grad u|^2 in collar
/// cells, eps times the (Huber-smoothed when smoothing > 0) norm of the
/// forward differences of cell gradients between nucleus cells.
inline double discrete_energy(const DiscreteField& df, const Params& p, const Grid& g, double smoothing = 0.0) {
  if (df.u1.size() != g.node_count() || df.u2.size() != g.node_count() || g.n1 != df.grid.n1 ||
      g.n2 != df.grid.n2)
    throw std::invalid_argument("discrete field does not match the grid");
  detail::DiscreteEnergy E(g, p, df.bc);
  return E(detail::pack(df), smoothing, nullptr);
}

struct SolveOptions {
  int budget = 2000;        // total accepted iterations over all smoothing stages
  double tol = 1e-6;        // residual that ends a smoothing stage
  int stage_iterations = 400;  // a stage also ends after this many iterations
  int memory = 6;
  BoundaryCondition bc = BoundaryCondition::zero_outer;
};

struct SolveReport {
  double energy = 0.0;  // exact (smoothing 0) energy of the returned field
  double smoothing = 0.0;
  int iterations = 0;
  double residual = 0.0;
  bool budget_exhausted = false;
  std::vector<double> energy_trace;  // exact energy of the best iterate after each accepted step
};

/// Residual: largest gradient entry over free nodes, per unit cell area.
inline double residual_norm(const std::vector<double>& g, double area) {
  double m = 0.0;
  for (double v : g) m = std::max(m, std::fabs(v));
  return m / area;
}

/// L-BFGS on the Huber-smoothed energy, halving the smoothing whenever a stage
/// converges, down to eps * 1e-3. Returns the iterate with the lowest exact energy.
inline std::pair<DiscreteField, SolveReport> minimize_from(DiscreteField init, const Params& p,
                                                           const SolveOptions& opt = {}) {
  const Grid g = init.grid;
  init.bc = opt.bc;
  init.apply_bc();
  detail::DiscreteEnergy E(g, p, opt.bc);
  const double area = g.h1() * g.h2();
  std::vector<double> x = detail::pack(init), grad, xn, gn;

  SolveReport rep;
  std::vector<double> best = x;
  double best_e = E(x, 0.0, nullptr);
  rep.energy_trace.push_back(best_e);

  const double stop = p.eps * 1e-3;
  double delta = std::max(1.0 / std::min(g.h1(), g.h2()), 2.0 * stop);
  std::vector<std::vector<double>> S, Y;
  std::vector<double> rho;

  auto dot = [](const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
  };

  for (;;) {
    double f = E(x, delta, &grad);
    rep.residual = residual_norm(grad, area);
    int stage_it = 0;
    S.clear(), Y.clear(), rho.clear();
    while (rep.residual >= opt.tol && stage_it < opt.stage_iterations) {
      if (rep.iterations >= opt.budget) {
        rep.budget_exhausted = true;
        break;
      }
      // two-loop recursion
      std::vector<double> d(grad);
      std::vector<double> alpha(S.size());
      for (std::size_t k = S.size(); k-- > 0;) {
        alpha[k] = rho[k] * dot(S[k], d);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] -= alpha[k] * Y[k][i];
      }
      double gamma = 1.0;
      if (!S.empty()) gamma = dot(S.back(), Y.back()) / dot(Y.back(), Y.back());
      else gamma = 1.0 / std::max(1.0, rep.residual);
      for (double& v : d) v *= gamma;
      for (std::size_t k = 0; k < S.size(); ++k) {
        const double b = rho[k] * dot(Y[k], d);
        for (std::size_t i = 0; i < d.size(); ++i) d[i] += (alpha[k] - b) * S[k][i];
      }
      for (double& v : d) v = -v;
      double slope = dot(grad, d);
      if (!(slope < 0.0)) {
        S.clear(), Y.clear(), rho.clear();
        d = grad;
        for (double& v : d) v *= -1.0 / std::max(1.0, rep.residual);
        slope = dot(grad, d);
      }
      double t = 1.0, fn = 0.0;
      bool ok = false;
      xn.resize(x.size());
      for (int ls = 0; ls < 60; ++ls) {
        for (std::size_t i = 0; i < x.size(); ++i) xn[i] = x[i] + t * d[i];
        fn = E(xn, delta, &gn);
        if (fn <= f + 1e-4 * t * slope) {
          ok = true;
          break;
        }
        t *= 0.5;
      }
      if (!ok) {
        if (S.empty()) break;  // stalled even along steepest descent
        S.clear(), Y.clear(), rho.clear();
        continue;
      }
      std::vector<double> s(x.size()), y(x.size());
      for (std::size_t i = 0; i < x.size(); ++i) {
        s[i] = xn[i] - x[i];
        y[i] = gn[i] - grad[i];
      }
      const double sy = dot(s, y);
      if (sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y))) {
        if (static_cast<int>(S.size()) == opt.memory) {
          S.erase(S.begin()), Y.erase(Y.begin()), rho.erase(rho.begin());
        }
        S.push_back(std::move(s)), Y.push_back(std::move(y)), rho.push_back(1.0 / sy);
      }
      x.swap(xn);
      grad.swap(gn);
      f = fn;
      ++rep.iterations;
      ++stage_it;
      rep.residual = residual_norm(grad, area);
      const double exact = E(x, 0.0, nullptr);
      if (exact < best_e) {
        best_e = exact;
        best = x;
      }
      rep.energy_trace.push_back(best_e);
    }
    rep.smoothing = delta;
    if (rep.budget_exhausted || delta <= stop) break;
    delta *= 0.5;
  }

  DiscreteField out = init;
  detail::unpack(best, out);
  rep.energy = best_e;
  return {std::move(out), rep};
}

enum class InitKind { zero, best_construction, random };

inline DiscreteField initial_field(const Params& p, const Grid& g, InitKind kind, std::uint64_t seed,
                                   BoundaryCondition bc) {
  switch (kind) {
    case InitKind::zero: return zero_field(g, bc);
    case InitKind::best_construction: return interpolate(build_best(p).first, g, bc);
    case InitKind::random: {
      DiscreteField df = zero_field(g, bc);
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(-p.theta, p.theta);
      for (double& v : df.u1) v = U(rng);
      for (double& v : df.u2) v = U(rng);
      df.apply_bc();
      return df;
    }
  }
  throw std::invalid_argument("unknown init kind");
}

inline std::pair<DiscreteField, SolveReport> minimize(const Params& p, const Grid& g, InitKind init,
                                                      std::uint64_t seed = 0, const SolveOptions& opt = {}) {
  return minimize_from(initial_field(p, g, init, seed, opt.bc), p, opt);
}

struct Bracket {
  double lower_probe = 0.0, upper_probe = 0.0;
  SolveReport lower, upper;
};

/// upper: best of zero and construction starts with the outer ring pinned;
/// lower: the free-boundary problem started from the upper minimizer.
inline Bracket bracket(const Params& p, const Grid& g, SolveOptions opt = {}) {
  opt.bc = BoundaryCondition::zero_outer;
  auto [fz, rz] = minimize(p, g, InitKind::zero, 0, opt);
  auto [fb, rb] = minimize(p, g, InitKind::best_construction, 0, opt);
  const bool use_b = rb.energy < rz.energy;
  Bracket br;
  br.upper = use_b ? rb : rz;
  br.upper_probe = br.upper.energy;
  DiscreteField start = use_b ? fb : fz;
  opt.bc = BoundaryCondition::free_outer;
  start.bc = BoundaryCondition::free_outer;
  auto [fl, rl] = minimize_from(std::move(start), p, opt);
  br.lower = rl;
  br.lower_probe = rl.energy;
  return br;
}

struct RefinementRow {
  Grid grid;
  double lower_probe = 0.0, upper_probe = 0.0;
};

inline std::vector<RefinementRow> refinement_study(const Params& p, const std::vector<Grid>& grids,
                                                   const SolveOptions& opt = {}) {
  std::vector<RefinementRow> rows;
  for (const Grid& g : grids) {
    const Bracket b = bracket(p, g, opt);
    rows.push_back({g, b.lower_probe, b.upper_probe});
  }
  return rows;
}

}  // namespace scaling_lab
