#pragma once
// Closed-form scaling function for the rectangular nucleus problem, its
// eight regimes, and the regime-reduction inequalities.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace scaling_lab {

struct Params {
  double mu = 1.0;
  double eps = 1.0;
  double theta = 0.5;
  double L = 0.5;
};

struct LogParams {
  double log_mu = 0.0;
  double log_eps = 0.0;
  double log_theta = -std::log(2.0);
  double log_L = -std::log(2.0);
};

enum class RegimeId : int {
  Constant = 0,
  Affine,
  LinearInterpolation,
  SingleTruncatedBranching,
  CornerLaminate,
  Branching,
  Laminate,
  TwoScaleBranching
};

inline constexpr int kRegimeCount = 8;

inline constexpr std::array<RegimeId, kRegimeCount> kAllRegimes = {
    RegimeId::Constant,        RegimeId::Affine,
    RegimeId::LinearInterpolation, RegimeId::SingleTruncatedBranching,
    RegimeId::CornerLaminate,  RegimeId::Branching,
    RegimeId::Laminate,        RegimeId::TwoScaleBranching};

inline std::string_view regime_name(RegimeId r) {
  switch (r) {
    case RegimeId::Constant: return "constant";
    case RegimeId::Affine: return "affine";
    case RegimeId::LinearInterpolation: return "linear_interpolation";
    case RegimeId::SingleTruncatedBranching: return "single_truncated_branching";
    case RegimeId::CornerLaminate: return "corner_laminate";
    case RegimeId::Branching: return "branching";
    case RegimeId::Laminate: return "laminate";
    case RegimeId::TwoScaleBranching: return "two_scale_branching";
  }
  return "unknown";
}

inline RegimeId parse_regime(std::string_view s) {
  for (RegimeId r : kAllRegimes)
    if (regime_name(r) == s) return r;
  throw std::invalid_argument("unknown regime: " + std::string(s));
}

inline int ordinal(RegimeId r) { return static_cast<int>(r); }

inline void validate(const Params& p) {
  if (!(p.mu > 0.0) || !std::isfinite(p.mu))
    throw std::domain_error("mu must be positive and finite");
  if (!(p.eps > 0.0) || !std::isfinite(p.eps))
    throw std::domain_error("eps must be positive and finite");
  if (!(p.theta > 0.0) || !(p.theta <= 0.5))
    throw std::domain_error("theta must lie in (0, 1/2]");
  if (!(p.L >= 0.5) || !std::isfinite(p.L))
    throw std::domain_error("L must be at least 1/2");
}

inline void validate(const LogParams& lp) {
  constexpr double kTol = 1e-15;
  const double half = -std::log(2.0);
  if (std::isnan(lp.log_mu) || std::isnan(lp.log_eps) ||
      std::isnan(lp.log_theta) || std::isnan(lp.log_L))
    throw std::domain_error("log parameters must not be NaN");
  if (lp.log_theta > half + kTol)
    throw std::domain_error("log_theta exceeds ln(1/2)");
  if (lp.log_L < half - kTol)
    throw std::domain_error("log_L below ln(1/2)");
}

inline LogParams to_log(const Params& p) {
  return {std::log(p.mu), std::log(p.eps), std::log(p.theta), std::log(p.L)};
}

// ---------------------------------------------------------------------------
// Log-space arithmetic on plain doubles. The regime formulas below are written
// against this small vocabulary so that the same code also runs on the
// symbolic iterated-log numbers used for the asymptotic sequences.

/// ln(e^a + e^b) without overflow.
inline double lse(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  const double lo = std::min(a, b);
  if (hi == std::numeric_limits<double>::infinity()) return hi;
  return hi + std::log1p(std::exp(lo - hi));
}

/// Given a = ln X, returns ln(ln(3 + X)).
inline double log_ln3p(double a) {
  if (a == std::numeric_limits<double>::infinity()) return a;
  const double v = a > 0.0 ? a + std::log1p(3.0 * std::exp(-a))
                           : std::log(3.0 + std::exp(a));
  return std::log(v);
}

/// Log-values of the individual scalings whose sum makes up one regime, in
/// the order they are written in the scaling law. Arguments are natural logs.
template <class T>
std::vector<T> regime_terms(RegimeId r, const T& m, const T& e, const T& t,
                            const T& l) {
  switch (r) {
    case RegimeId::Constant:
      return {t * 2.0 + l};
    case RegimeId::Affine:
      return {m + t * 2.0 + log_ln3p(l)};
    case RegimeId::LinearInterpolation:
      return {m + t * 2.0 + log_ln3p(l - m), e + t};
    case RegimeId::SingleTruncatedBranching:
      return {m + t * 2.0 + log_ln3p(e + l - m - t * 2.0),
              m + t * 2.0 + log_ln3p(e - m * 2.0 - t * 2.0),
              e * 0.5 + t * 1.5};
    case RegimeId::CornerLaminate:
      return {m + t * 2.0 + log_ln3p(e + l - m - t * 2.0),
              m + t * 2.0 + log_ln3p(t - m)};
    case RegimeId::Branching:
      return {e * (2.0 / 3.0) + t * (2.0 / 3.0) + l * (1.0 / 3.0), e + l};
    case RegimeId::Laminate:
      return {m * 0.5 + e * 0.5 + t + l * 0.5 + log_ln3p(t * -2.0) * 0.5,
              e + l};
    case RegimeId::TwoScaleBranching:
      return {m * 0.5 + e * 0.5 + t + l * 0.5 +
                  log_ln3p(e - m * 3.0 - t * 2.0 - l) * 0.5,
              e + l};
  }
  throw std::logic_error("unreachable regime");
}

template <class T>
T lse_all(const std::vector<T>& xs) {
  T acc = xs.front();
  for (std::size_t i = 1; i < xs.size(); ++i) acc = lse(acc, xs[i]);
  return acc;
}

template <class T>
T log_regime_value(RegimeId r, const T& m, const T& e, const T& t, const T& l) {
  return lse_all(regime_terms(r, m, e, t, l));
}

// ---------------------------------------------------------------------------
// Linear-space evaluation.

inline double ln3p(double x) { return std::log(3.0 + x); }

inline double regime_value(const Params& p, RegimeId r) {
  validate(p);
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  const double mt2 = mu * th * th;
  switch (r) {
    case RegimeId::Constant:
      return th * th * L;
    case RegimeId::Affine:
      return mt2 * ln3p(L);
    case RegimeId::LinearInterpolation:
      return mt2 * ln3p(L / mu) + eps * th;
    case RegimeId::SingleTruncatedBranching:
      return mt2 * ln3p(eps * L / mt2) + mt2 * ln3p(eps / (mu * mu * th * th)) +
             std::sqrt(eps) * std::pow(th, 1.5);
    case RegimeId::CornerLaminate:
      return mt2 * ln3p(eps * L / mt2) + mt2 * ln3p(th / mu);
    case RegimeId::Branching:
      return std::cbrt(eps * eps * th * th * L) + eps * L;
    case RegimeId::Laminate:
      return std::sqrt(mu * eps * L) * th * std::sqrt(ln3p(1.0 / (th * th))) +
             eps * L;
    case RegimeId::TwoScaleBranching:
      return std::sqrt(mu * eps * L) * th *
                 std::sqrt(ln3p(eps / (mu * mu * mu * th * th * L))) +
             eps * L;
  }
  throw std::logic_error("unreachable regime");
}

struct ScalingResult {
  std::array<double, kRegimeCount> values{};
  double total = 0.0;
  RegimeId argmin = RegimeId::Constant;

  double value(RegimeId r) const { return values[ordinal(r)]; }
};

/// Same as ScalingResult but every entry is a natural log.
struct LogScalingResult {
  std::array<double, kRegimeCount> log_values{};
  double log_total = 0.0;
  RegimeId argmin = RegimeId::Constant;
};

namespace detail {
template <class Array>
int first_argmin(const Array& v) {
  int best = 0;
  for (int i = 1; i < static_cast<int>(v.size()); ++i)
    if (v[i] < v[best]) best = i;
  return best;
}
}  // namespace detail

inline ScalingResult eval_scaling(const Params& p) {
  validate(p);
  ScalingResult out;
  for (RegimeId r : kAllRegimes) out.values[ordinal(r)] = regime_value(p, r);
  const int k = detail::first_argmin(out.values);
  out.argmin = static_cast<RegimeId>(k);
  out.total = out.values[k];
  return out;
}

inline LogScalingResult eval_scaling_log(const LogParams& lp) {
  validate(lp);
  LogScalingResult out;
  for (RegimeId r : kAllRegimes)
    out.log_values[ordinal(r)] =
        log_regime_value(r, lp.log_mu, lp.log_eps, lp.log_theta, lp.log_L);
  const int k = detail::first_argmin(out.log_values);
  out.argmin = static_cast<RegimeId>(k);
  out.log_total = out.log_values[k];
  return out;
}

inline double reduced_scaling(const Params& p, const std::set<RegimeId>& excluded) {
  if (excluded.size() >= static_cast<std::size_t>(kRegimeCount))
    throw std::invalid_argument("cannot exclude every regime");
  const ScalingResult s = eval_scaling(p);
  double best = std::numeric_limits<double>::infinity();
  for (RegimeId r : kAllRegimes)
    if (!excluded.count(r)) best = std::min(best, s.value(r));
  return best;
}

// ---------------------------------------------------------------------------
// Regime-reduction inequalities. Each check is reported only when its
// hypothesis holds. slack is ln(rhs/lhs) for an inequality lhs <= rhs, so it
// is nonnegative exactly when the inequality holds.

struct ReductionCheck {
  std::string id;
  bool holds = false;
  double slack = 0.0;
};

inline std::vector<ReductionCheck> regime_reduction_check(const Params& p) {
  validate(p);
  const double mu = p.mu, eps = p.eps, th = p.theta, L = p.L;
  const double t2 = th * th, mt2 = mu * t2;
  const ScalingResult s = eval_scaling(p);
  std::vector<ReductionCheck> out;

  auto le = [&out](std::string id, double lhs, double rhs) {
    const double slack = std::log(rhs) - std::log(lhs);
    out.push_back({std::move(id), lhs <= rhs * (1.0 + 1e-12), slack});
  };
  auto dominant = [&out, &s](std::string id, RegimeId target) {
    double other = std::numeric_limits<double>::infinity();
    for (RegimeId r : kAllRegimes)
      if (r != target) other = std::min(other, s.value(r));
    out.push_back({std::move(id), s.argmin == target,
                   std::log(other) - std::log(s.value(target))});
  };

  const double branching_lead = std::cbrt(eps * eps * t2 * L);
  const double laminate_lead = std::sqrt(mu * eps * L) * th;

  if (eps >= std::min(t2, mt2)) {
    if (mu < 1.0) {
      le("i.a.affine_below_interp", mt2 * ln3p(L), mt2 * ln3p(L / mu));
      le("i.a.log_argument", L, eps * L / mt2);
      le("i.a.laminate_cost", mt2 * L, eps * L);
      dominant("i.a.affine_dominant", RegimeId::Affine);
    } else {
      le("i.b.laminate_cost", t2 * L, eps * L);
      le("i.b.log_argument", L / mu, eps * L / mt2);
    }
  }
  if (eps <= std::min(t2, mt2)) {
    le("ii.constant_irrelevant", branching_lead + eps * L, 4.0 * t2 * L);
    le("ii.interp_irrelevant",
       std::min(s.value(RegimeId::Affine),
                s.value(RegimeId::SingleTruncatedBranching)),
       4.0 * mt2 * ln3p(L / mu));
    if (mu <= 1.0) {
      le("ii.affine_below_interp", mt2 * ln3p(L), mt2 * ln3p(L / mu));
    } else {
      le("ii.root_term", std::sqrt(eps) * std::pow(th, 1.5), mt2);
      le("ii.log_argument", eps * L / mt2, L / mu);
      le("ii.truncation_argument", eps / (mu * mt2), 1.0);
    }
    if (eps >= t2 / (L * L)) {
      le("ii.a.laminate_beats_branching", branching_lead, eps * L);
      le("ii.a.truncation_reduces", std::sqrt(eps / (mu * mt2)), eps * L / mt2);
    }
    if (eps <= t2 / (L * L)) {
      if (mu >= 1.0) {
        le("ii.b.branching_lead", eps * L, branching_lead);
        dominant("ii.b.branching_dominant", RegimeId::Branching);
      } else if (mu >= 1.0 / L) {
        le("ii.b.two_scale_log", eps / (mu * mu * mt2 * L), 1.0 / t2);
      } else if (eps <= std::pow(mu, 1.5) * t2 / std::sqrt(L)) {
        le("ii.b.small_eps_branching", eps * L, branching_lead);
        le("ii.b.small_eps_laminate", eps * L, laminate_lead);
      } else {
        le("ii.b.log_range", eps * L / mt2, eps / (mu * mt2));
      }
    }
  }
  return out;
}

}  // namespace scaling_lab
