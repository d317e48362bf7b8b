#pragma once
// Logarithms of quantities that live on an iterated-exponential scale.
//
// A Scale represents ln q = sum_k c_k T_k + d where T_0 = X is a base
// variable and T_k = ln T_{k-1}. The tower values are plain doubles and may be
// +inf; because coefficients are kept separately, differences of Scales cancel
// exactly before any tower value is looked at.

#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

inline constexpr int kTiers = 6;

struct Tower {
  std::array<double, kTiers> T{};
  int depth = 0;  // j = T[depth]
  double j = 0.0;
};

/// Tower with T[depth] = j; shallower tiers by exp, deeper ones by ln.
inline Tower make_tower(int depth, double j) {
  if (depth < 0 || depth >= kTiers) throw std::invalid_argument("tower depth out of range");
  Tower tw;
  tw.depth = depth;
  tw.j = j;
  tw.T[depth] = j;
  for (int k = depth - 1; k >= 0; --k) tw.T[k] = std::exp(tw.T[k + 1]);
  for (int k = depth + 1; k < kTiers; ++k)
    tw.T[k] = tw.T[k - 1] > 0.0 ? std::log(tw.T[k - 1])
                                : std::numeric_limits<double>::quiet_NaN();
  return tw;
}

struct Scale {
  std::array<double, kTiers> c{};
  double d = 0.0;
  const Tower* tower = nullptr;

  static Scale constant(double v, const Tower* tw) {
    Scale s;
    s.d = v;
    s.tower = tw;
    return s;
  }
  static Scale tier(int k, const Tower* tw) {
    Scale s;
    s.c[k] = 1.0;
    s.tower = tw;
    return s;
  }

  /// Numerical value of ln q; +-inf when a tier with nonzero coefficient
  /// overflowed. The shallowest such tier dominates every deeper one.
  double value() const {
    double sum = d;
    for (int k = 0; k < kTiers; ++k) {
      if (c[k] == 0.0) continue;
      if (tower == nullptr) throw std::logic_error("Scale without tower");
      const double t = tower->T[k];
      if (std::isnan(t)) throw std::domain_error("iterated log undefined at this j");
      if (std::isinf(t)) return std::copysign(std::numeric_limits<double>::infinity(), c[k]);
      sum += c[k] * t;
    }
    return sum;
  }

  /// Index of the first nonzero coefficient, or kTiers if none.
  int leading_tier() const {
    for (int k = 0; k < kTiers; ++k)
      if (c[k] != 0.0) return k;
    return kTiers;
  }

  Scale& operator+=(const Scale& o) {
    for (int k = 0; k < kTiers; ++k) c[k] += o.c[k];
    d += o.d;
    if (!tower) tower = o.tower;
    return *this;
  }
  Scale& operator-=(const Scale& o) {
    for (int k = 0; k < kTiers; ++k) c[k] -= o.c[k];
    d -= o.d;
    if (!tower) tower = o.tower;
    return *this;
  }
  Scale& operator*=(double f) {
    for (double& ck : c) ck *= f;
    d *= f;
    return *this;
  }
};

inline Scale operator+(Scale a, const Scale& b) { return a += b; }
inline Scale operator-(Scale a, const Scale& b) { return a -= b; }
inline Scale operator*(Scale a, double f) { return a *= f; }

/// Sign of (a - b), decided from the exact coefficient difference.
inline int compare(const Scale& a, const Scale& b) {
  const double v = (a - b).value();
  return (v > 0.0) - (v < 0.0);
}

inline Scale lse(const Scale& a, const Scale& b) {
  const double dv = (a - b).value();
  if (std::isnan(dv)) throw std::domain_error("lse of incomparable scales");
  Scale r = dv >= 0.0 ? a : b;
  r.d += std::log1p(std::exp(-std::fabs(dv)));
  if (!r.tower) r.tower = a.tower ? a.tower : b.tower;
  return r;
}

/// ln ln(3 + e^A). Computed numerically while the value of A is finite; once
/// A overflows, ln A = T_{m+1} + ln c_m where m is the dominating tier.
inline Scale log_ln3p(const Scale& a) {
  const double v = a.value();
  if (v != std::numeric_limits<double>::infinity())
    return Scale::constant(log_ln3p(v), a.tower);
  const int m = a.leading_tier();
  if (m + 1 >= kTiers || a.c[m] <= 0.0)
    throw std::domain_error("tower too shallow for symbolic logarithm");
  Scale r = Scale::tier(m + 1, a.tower);
  r.d = std::log(a.c[m]);
  return r;
}

}  // namespace scaling_lab
