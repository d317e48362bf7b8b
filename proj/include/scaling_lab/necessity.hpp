#pragma once
// Parameter sequences showing that every regime (and every scaling inside a
// regime) is needed in the scaling law.

#include <array>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scaling_lab/iterated_log.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

enum class Claim { ratio_diverges, ratio_vanishes };

/// ln q = sum_k c[k] T_k + d, with T_0 the case's base variable.
struct LogMap {
  std::array<double, kTiers> c{};
  double d = 0.0;
};

struct NecessityCase {
  std::string_view id;
  RegimeId target;
  Claim claim;
  int dropped;  // index of the scaling left out of the target; -1 for whole-regime cases
  int depth;    // j = T_depth, i.e. j = X, ln X or ln ln X
  double j_lo, j_hi;
  LogMap mu, eps, theta, L;
};

namespace detail {
inline const double kLn2 = std::log(2.0);
inline const double kLn4 = std::log(4.0);

inline LogMap lm(std::array<double, kTiers> c, double d = 0.0) { return {c, d}; }
inline LogMap half() { return {{}, -kLn2}; }
}  // namespace detail

// Base variable X is L for every case except 1, 6a and 6b, where it is the
// sequence index itself.
inline const std::vector<NecessityCase>& necessity_cases() {
  using detail::half;
  using detail::kLn2;
  using detail::kLn4;
  using detail::lm;
  using R = RegimeId;
  using C = Claim;
  static const std::vector<NecessityCase> cases = {
      {"1", R::Constant, C::ratio_diverges, -1, 0, 10.0, 1e6,
       lm({0, 1}), lm({0, 1}), half(), half()},
      {"2", R::Affine, C::ratio_diverges, -1, 0, 100.0, 1e6,
       half(), lm({1}), half(), lm({0, 1})},
      {"3a", R::LinearInterpolation, C::ratio_vanishes, 0, 2, 10.0, 3e3,
       lm({0, 1, -1}), lm({0, 1, -1}, -kLn2), half(), lm({0, 1})},
      {"3b", R::LinearInterpolation, C::ratio_vanishes, 1, 2, 10.0, 1e4,
       lm({0, 1, -1}), lm({0, 1, -1, 2}, -kLn2), half(), lm({0, 1})},
      {"4a", R::SingleTruncatedBranching, C::ratio_vanishes, 2, 1, 1e3, 1e12,
       lm({0, -1}), lm({0, -2, 1}, -kLn4), half(), lm({0, 1})},
      {"4b", R::SingleTruncatedBranching, C::ratio_vanishes, 0, 2, 10.0, 1e4,
       lm({0, -0.5}), lm({0, -1.5, 1}, -kLn4), half(), lm({0, 1})},
      {"4c", R::SingleTruncatedBranching, C::ratio_vanishes, 1, 2, 100.0, 1e7,
       lm({0, -1, -0.2, 1}), lm({0, -2, -1, 5}), lm({0, 0, -0.4}), lm({0, 1})},
      {"5a", R::CornerLaminate, C::ratio_vanishes, 1, 2, 100.0, 1e7,
       lm({0, -2, -1}), lm({0, -7, -1, 4}), lm({0, -2}), lm({0, 1})},
      {"5b", R::CornerLaminate, C::ratio_vanishes, 0, 2, 10.0, 1e5,
       lm({0, -2}), lm({0, -7, 1}), lm({0, -2}), lm({0, 1})},
      {"6a", R::Branching, C::ratio_vanishes, 0, 0, 1e3, 1e12,
       half(), lm({0, -1}), half(), half()},
      {"6b", R::Branching, C::ratio_vanishes, 1, 0, 1e3, 1e40,
       half(), lm({0, -1}), half(), lm({0, 2.0 / 3.0})},
      {"7a", R::Laminate, C::ratio_vanishes, 0, 0, 10.0, 1e8,
       lm({-1, 2}), lm({-1, -2}), lm({0, -1}), lm({0, 1})},
      {"7b", R::Laminate, C::ratio_vanishes, 1, 1, 100.0, 1e20,
       lm({0, -1.5}), lm({0, -2.5, -0.5}), lm({0, 0, -0.5}), lm({0, 1})},
      {"8a", R::TwoScaleBranching, C::ratio_vanishes, 0, 0, 20.0, 1e6,
       lm({0, -2.5}), lm({0, -8.5, 1}), lm({0, -1}), lm({0, 1})},
      {"8b", R::TwoScaleBranching, C::ratio_vanishes, 1, 1, 100.0, 1e14,
       lm({0, -1, -1}), lm({0, -2, -0.6}), lm({0, 0, -0.2}), lm({0, 1})},
  };
  return cases;
}

inline const NecessityCase& find_necessity_case(std::string_view id) {
  for (const auto& c : necessity_cases())
    if (c.id == id) return c;
  throw std::invalid_argument("unknown necessity case: " + std::string(id));
}

/// Smallest admissible j: every logarithm taken along the tower has argument
/// at least e, i.e. T_k >= 1 for the deepest tier a map uses.
inline double necessity_min_j(const NecessityCase& nc) {
  int deepest = 0;
  for (const LogMap* m : {&nc.mu, &nc.eps, &nc.theta, &nc.L})
    for (int k = 0; k < kTiers; ++k)
      if (m->c[k] != 0.0) deepest = std::max(deepest, k);
  if (deepest <= nc.depth) return 1.0;
  double jmin = std::exp(1.0);
  for (int k = nc.depth + 1; k < deepest; ++k) jmin = std::exp(jmin);
  return jmin;
}

struct SequenceScales {
  Tower tower;
  // Scales hold a pointer to tower; keep this object where it was built.
  std::array<Scale, 4> logs;  // mu, eps, theta, L

  SequenceScales() = default;
  SequenceScales(const SequenceScales&) = delete;
  SequenceScales& operator=(const SequenceScales&) = delete;
};

inline void build_sequence(const NecessityCase& nc, double j, SequenceScales& out) {
  if (!(j >= necessity_min_j(nc)))
    throw std::domain_error("j below the minimum for necessity case " + std::string(nc.id));
  out.tower = make_tower(nc.depth, j);
  const LogMap* maps[4] = {&nc.mu, &nc.eps, &nc.theta, &nc.L};
  for (int i = 0; i < 4; ++i) {
    Scale s = Scale::constant(maps[i]->d, &out.tower);
    s.c = maps[i]->c;
    out.logs[i] = s;
  }
}

/// Natural logs of the parameters at index j. Entries are +-inf when the
/// tower overflows doubles; the ratio below never needs them numerically.
inline LogParams necessity_sequence(const NecessityCase& nc, double j) {
  SequenceScales s;
  build_sequence(nc, j, s);
  return {s.logs[0].value(), s.logs[1].value(), s.logs[2].value(), s.logs[3].value()};
}

struct NecessityPoint {
  double j = 0.0;
  LogParams lp;
  double log_ratio = 0.0;
  RegimeId argmin = RegimeId::Constant;
};

inline NecessityPoint necessity_point(const NecessityCase& nc, double j) {
  SequenceScales s;
  build_sequence(nc, j, s);
  const auto& [m, e, t, l] = s.logs;

  std::array<Scale, kRegimeCount> values;
  for (RegimeId r : kAllRegimes) values[ordinal(r)] = log_regime_value(r, m, e, t, l);
  int best = 0;
  for (int i = 1; i < kRegimeCount; ++i)
    if (compare(values[i], values[best]) < 0) best = i;

  NecessityPoint pt;
  pt.j = j;
  pt.lp = {m.value(), e.value(), t.value(), l.value()};
  pt.argmin = static_cast<RegimeId>(best);

  const int target = ordinal(nc.target);
  if (nc.claim == Claim::ratio_diverges) {
    std::optional<Scale> others;
    for (int i = 0; i < kRegimeCount; ++i) {
      if (i == target) continue;
      if (!others || compare(values[i], *others) < 0) others = values[i];
    }
    pt.log_ratio = (*others - values[target]).value();
  } else {
    const auto terms = regime_terms(nc.target, m, e, t, l);
    std::optional<Scale> reduced;
    for (int i = 0; i < static_cast<int>(terms.size()); ++i) {
      if (i == nc.dropped) continue;
      reduced = reduced ? lse(*reduced, terms[i]) : terms[i];
    }
    pt.log_ratio = (*reduced - values[best]).value();
  }
  return pt;
}

inline double necessity_ratio(const NecessityCase& nc, double j) {
  return necessity_point(nc, j).log_ratio;
}

struct NecessityReport {
  const NecessityCase* nc = nullptr;
  std::vector<NecessityPoint> points;
  bool monotone = false;
  bool magnitude = false;
  bool pass() const { return monotone && magnitude; }
};

inline std::vector<double> necessity_grid(double j_lo, double j_hi, int n) {
  if (n < 2 || !(j_hi > j_lo)) throw std::invalid_argument("bad j grid");
  std::vector<double> js(n);
  const double a = std::log(j_lo), b = std::log(j_hi);
  for (int i = 0; i < n; ++i) js[i] = std::exp(a + (b - a) * i / (n - 1));
  js.front() = j_lo;
  js.back() = j_hi;
  return js;
}

/// Evaluates the case on a geometric j grid; passes when the log ratio moves
/// strictly in the claimed direction and ends beyond ln(10^3).
inline NecessityReport run_necessity(const NecessityCase& nc, int n = 16,
                                     std::optional<double> j_hi = std::nullopt) {
  NecessityReport rep;
  rep.nc = &nc;
  const double hi = j_hi.value_or(nc.j_hi);
  for (double j : necessity_grid(nc.j_lo, hi, n)) rep.points.push_back(necessity_point(nc, j));
  const double sign = nc.claim == Claim::ratio_diverges ? 1.0 : -1.0;
  rep.monotone = true;
  for (std::size_t i = 1; i < rep.points.size(); ++i)
    if (!(sign * (rep.points[i].log_ratio - rep.points[i - 1].log_ratio) > 0.0))
      rep.monotone = false;
  rep.magnitude = sign * rep.points.back().log_ratio > std::log(1e3);
  return rep;
}

}  // namespace scaling_lab
