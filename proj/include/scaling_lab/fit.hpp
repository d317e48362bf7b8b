#pragma once
// Log-log slope of construction energies along one parameter axis.

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/energy.hpp"
#include "scaling_lab/scaling.hpp"

namespace scaling_lab {

/// The requested regime is not the argmin somewhere on the fit range.
struct RegimeDominanceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline double& param_ref(Params& p, std::string_view axis) {
  if (axis == "mu") return p.mu;
  if (axis == "eps") return p.eps;
  if (axis == "theta") return p.theta;
  if (axis == "L") return p.L;
  throw std::invalid_argument("unknown parameter axis: " + std::string(axis));
}

struct LineFit {
  double slope = 0.0, intercept = 0.0, rms = 0.0;
};

inline LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) throw std::invalid_argument("least squares needs two or more points");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) mx += x[i], my += y[i];
  mx /= n, my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    r2 += r * r;
  }
  f.rms = std::sqrt(r2 / n);
  return f;
}

struct FitReport {
  RegimeId regime = RegimeId::Constant;
  std::string axis;
  double slope = 0.0;     // measured, from construction energies
  double expected = 0.0;  // same fit applied to the regime's closed form
  double residual = 0.0;  // RMS of the log-log fit
  std::vector<double> values, energies;
};

/// Fits ln E(build_best) against ln(axis) on n geometric points of [lo, hi].
inline FitReport fit_slope(RegimeId regime, std::string_view axis, double lo, double hi, Params fixed,
                           int n = 8, const QuadratureSpec& q = {}, const BuildOptions& opt = {}) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw std::invalid_argument("fit range must satisfy 0 < lo < hi, n >= 2");
  FitReport rep;
  rep.regime = regime;
  rep.axis = std::string(axis);
  std::vector<double> lx, le, lr;
  for (int i = 0; i < n; ++i) {
    const double v = std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * i / (n - 1));
    Params p = fixed;
    param_ref(p, axis) = v;
    validate(p);
    const ScalingResult s = eval_scaling(p);
    if (s.argmin != regime)
      throw RegimeDominanceError("regime " + std::string(regime_name(regime)) + " is not the argmin at " +
                                 rep.axis + " = " + std::to_string(v));
    const double E = total_energy(build_composite(construction_for(regime), p, opt), p, q).total;
    rep.values.push_back(v);
    rep.energies.push_back(E);
    lx.push_back(std::log(v));
    le.push_back(std::log(E));
    lr.push_back(std::log(s.value(regime)));
  }
  const LineFit m = least_squares(lx, le);
  rep.slope = m.slope;
  rep.residual = m.rms;
  rep.expected = least_squares(lx, lr).slope;
  return rep;
}

}  // namespace scaling_lab
