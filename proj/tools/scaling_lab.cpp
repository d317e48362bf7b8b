// scaling_lab: command-line front end. Every subcommand writes CSV to stdout.
//
// Exit codes: 0 success, 2 usage or domain error, 3 regime not dominant on a
// fit range, 1 anything else.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/diagnostics.hpp"
#include "scaling_lab/energy.hpp"
#include "scaling_lab/fit.hpp"
#include "scaling_lab/necessity.hpp"
#include "scaling_lab/oracle.hpp"
#include "scaling_lab/scaling.hpp"

namespace sl = scaling_lab;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17e", v);
  return buf;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

void add_params(CLI::App* sub, sl::Params& p, bool required) {
  auto* a = sub->add_option("--mu", p.mu, "modulus ratio mu");
  auto* b = sub->add_option("--eps", p.eps, "surface energy constant eps");
  auto* c = sub->add_option("--theta", p.theta, "volume fraction theta in (0, 1/2]");
  auto* d = sub->add_option("--L", p.L, "half-length of the nucleus, >= 1/2");
  if (required)
    for (auto* o : {a, b, c, d}) o->required();
}

std::vector<std::string> regime_header() {
  std::vector<std::string> h;
  for (sl::RegimeId r : sl::kAllRegimes) h.emplace_back(sl::regime_name(r));
  return h;
}

std::vector<std::string> scaling_row(const sl::Params& p, const sl::ScalingResult& s) {
  std::vector<std::string> row{num(p.mu), num(p.eps), num(p.theta), num(p.L), num(s.total),
                               std::string(sl::regime_name(s.argmin))};
  for (double v : s.values) row.push_back(num(v));
  return row;
}

/// Inserts `--key value` pairs from a key = value file after the subcommand
/// name, skipping keys already given on the command line.
std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::vector<std::string> out;
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw UsageError("--config needs a path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      out.push_back(args[i]);
    }
  }
  if (path.empty()) return out;
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file " + path);
  std::set<std::string> given;
  for (const auto& a : out)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') == std::string::npos ? std::string::npos : a.find('=') - 2));
  std::vector<std::string> extra;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) throw UsageError("bad config line: " + line);
      continue;
    }
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r"), b = s.find_last_not_of(" \t\r");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    const std::string key = trim(line.substr(0, eq)), val = trim(line.substr(eq + 1));
    if (key.empty()) throw UsageError("bad config line: " + line);
    if (given.count(key)) continue;
    extra.push_back("--" + key);
    if (val != "true") extra.push_back(val);
  }
  // subcommand is the first positional token
  std::size_t at = out.size();
  for (std::size_t i = 0; i < out.size(); ++i)
    if (out[i].rfind("-", 0) != 0) {
      at = i + 1;
      break;
    }
  out.insert(out.begin() + static_cast<std::ptrdiff_t>(at), extra.begin(), extra.end());
  return out;
}

struct Axis {
  std::string name;
  double lo = 0, hi = 0;
  int count = 0;
};

Axis parse_axis(const std::string& s) {
  // name:lo:hi:count
  std::vector<std::string> parts;
  std::stringstream ss(s);
  for (std::string t; std::getline(ss, t, ':');) parts.push_back(t);
  if (parts.size() != 4) throw UsageError("axis must be name:lo:hi:count, got " + s);
  Axis a;
  a.name = parts[0];
  try {
    a.lo = std::stod(parts[1]);
    a.hi = std::stod(parts[2]);
    a.count = std::stoi(parts[3]);
  } catch (const std::exception&) {
    throw UsageError("axis bounds must be numbers: " + s);
  }
  sl::Params probe;
  (void)sl::param_ref(probe, a.name);
  if (!(a.lo > 0.0) || !(a.hi > a.lo) || a.count < 2) throw UsageError("axis needs 0 < lo < hi and count >= 2");
  return a;
}

double axis_value(const Axis& a, int i) {
  if (i == 0) return a.lo;
  if (i == a.count - 1) return a.hi;
  return std::exp(std::log(a.lo) + (std::log(a.hi) - std::log(a.lo)) * i / (a.count - 1));
}

sl::QuadratureSpec quad_from(int order, double radius, const std::string& tail, const std::string& functional) {
  sl::QuadratureSpec q;
  q.order = order;
  q.truncation_radius = radius;
  if (tail == "analytic") q.tail_mode = sl::TailMode::analytic;
  else if (tail == "fitted") q.tail_mode = sl::TailMode::fitted;
  else throw UsageError("--tail must be analytic or fitted");
  if (functional == "I") q.functional = sl::Functional::I;
  else if (functional == "J") q.functional = sl::Functional::J;
  else throw UsageError("--functional must be I or J");
  return q;
}

sl::PiecewiseField build_named(const std::string& kind, const sl::Params& p, const sl::BuildOptions& opt) {
  if (kind == "best") return sl::build_best(p, opt).first;
  const auto k = sl::parse_kind(kind);
  if (!k || sl::is_building_block(*k)) throw UsageError("unknown construction kind: " + kind);
  return sl::build_composite(*k, p, opt);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy scaling laboratory for a martensitic nucleus in austenite"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  sl::Params p;
  std::size_t max_pieces = sl::BuildOptions{}.max_pieces;

  // eval
  auto* eval = app.add_subcommand("eval", "closed-form scaling function");
  add_params(eval, p, true);

  // sweep
  auto* sweep = app.add_subcommand("sweep", "regime map over two log-spaced axes");
  add_params(sweep, p, false);
  std::string ax1, ax2;
  bool with_energy = false;
  sweep->add_option("--axis1", ax1, "outer axis name:lo:hi:count")->required();
  sweep->add_option("--axis2", ax2, "inner axis name:lo:hi:count")->required();
  sweep->add_flag("--with-energy", with_energy, "add construction energy and ratio");

  // energy
  auto* energy = app.add_subcommand("energy", "energy breakdown of a construction");
  add_params(energy, p, true);
  std::string kind = "best", dump, tail = "analytic", functional = "I";
  int order = 8;
  double radius = 0.0;
  energy->add_option("--kind", kind, "construction kind or 'best'");
  energy->add_option("--dump-field", dump, "write the field to this file");
  energy->add_option("--order", order, "Gauss points per direction")->check(CLI::Range(1, 64));
  energy->add_option("--radius", radius, "truncation radius (0: 32 max(L, 1))");
  energy->add_option("--tail", tail, "analytic or fitted");
  energy->add_option("--functional", functional, "I or J");
  energy->add_option("--max-pieces", max_pieces, "piece budget before mirroring");

  // necessity
  auto* nec = app.add_subcommand("necessity", "regime-necessity sequences");
  std::string case_id;
  double jmax = 0.0;
  int npts = 16;
  nec->add_option("case,--case", case_id, "case id or 'all'");
  nec->add_option("--jmax", jmax, "largest sequence index (default: per case)");
  nec->add_option("--n", npts, "grid points")->check(CLI::Range(2, 100000));

  // oracle
  auto* orc = app.add_subcommand("oracle", "finite-difference direct minimization");
  add_params(orc, p, true);
  int n1 = 64, n2 = 64;
  double collar = 1.0;
  std::string init = "best", bc = "zero";
  std::uint64_t seed = 0;
  sl::SolveOptions sopt;
  bool do_bracket = false;
  orc->add_option("--n1", n1, "nucleus cells along x1");
  orc->add_option("--n2", n2, "nucleus cells along x2");
  orc->add_option("--collar", collar, "austenite collar width");
  orc->add_option("--init", init, "zero, best or random");
  orc->add_option("--seed", seed, "seed for random init");
  orc->add_option("--budget", sopt.budget, "iteration budget");
  orc->add_option("--tol", sopt.tol, "stage residual tolerance");
  orc->add_option("--bc", bc, "zero or free outer boundary");
  orc->add_flag("--bracket", do_bracket, "report lower and upper probes");

  // diagnose
  auto* diag = app.add_subcommand("diagnose", "slice classification and path bounds");
  add_params(diag, p, true);
  int grid_n = 2048, samples = 512, path_samples = 16;
  diag->add_option("--kind", kind, "construction kind or 'best'");
  diag->add_option("--grid", grid_n, "slices on (0, L - 1/4)")->check(CLI::Range(1, 1 << 20));
  diag->add_option("--samples", samples, "points per slice")->check(CLI::Range(16, 1 << 20));
  diag->add_option("--path-samples", path_samples, "slices with a path integral");

  // fit
  auto* fit = app.add_subcommand("fit", "log-log slope of construction energies");
  add_params(fit, p, false);
  std::string regime, axis;
  double lo = 0, hi = 0;
  int nfit = 8;
  fit->add_option("--regime", regime, "regime name")->required();
  fit->add_option("--axis", axis, "mu, eps, theta or L")->required();
  fit->add_option("--lo", lo, "range start")->required();
  fit->add_option("--hi", hi, "range end")->required();
  fit->add_option("--n", nfit, "points")->check(CLI::Range(2, 1000));

  try {
    std::vector<std::string> args(argv + 1, argv + argc);
    args = expand_config(std::move(args));
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    sl::BuildOptions bopt;
    bopt.max_pieces = max_pieces;
    std::ostringstream out;

    if (*eval) {
      const auto s = sl::eval_scaling(p);
      auto h = std::vector<std::string>{"mu", "eps", "theta", "L", "total", "argmin"};
      for (auto& r : regime_header()) h.push_back(r);
      out << join(h) << "\n" << join(scaling_row(p, s)) << "\n";
    } else if (*sweep) {
      const Axis a1 = parse_axis(ax1), a2 = parse_axis(ax2);
      if (a1.name == a2.name) throw UsageError("the two sweep axes must differ");
      auto h = std::vector<std::string>{"mu", "eps", "theta", "L", "total", "argmin"};
      for (auto& r : regime_header()) h.push_back(r);
      if (with_energy) h.insert(h.end(), {"energy", "ratio"});
      const std::size_t rows = static_cast<std::size_t>(a1.count) * a2.count;
      for (int i = 0; i < a1.count; ++i)
        for (int j = 0; j < a2.count; ++j) {
          sl::Params q = p;
          sl::param_ref(q, a1.name) = axis_value(a1, i);
          sl::param_ref(q, a2.name) = axis_value(a2, j);
          sl::validate(q);
        }
      std::vector<std::string> lines(rows);
      sl::parallel_for(rows, [&](std::size_t k) {
        sl::Params q = p;
        sl::param_ref(q, a1.name) = axis_value(a1, static_cast<int>(k / a2.count));
        sl::param_ref(q, a2.name) = axis_value(a2, static_cast<int>(k % a2.count));
        const auto s = sl::eval_scaling(q);
        auto row = scaling_row(q, s);
        if (with_energy) {
          const double E = sl::total_energy(sl::build_best(q, bopt).first, q).total;
          row.push_back(num(E));
          row.push_back(num(E / s.total));
        }
        lines[k] = join(row);
      }, 1);
      out << join(h) << "\n";
      for (const auto& l : lines) out << l << "\n";
    } else if (*energy) {
      sl::validate(p);
      const auto q = quad_from(order, radius, tail, functional);
      const sl::PiecewiseField f = build_named(kind, p, bopt);
      if (!dump.empty()) {
        std::ofstream os(dump);
        if (!os) throw UsageError("cannot write " + dump);
        sl::write_field(os, f);
      }
      const auto e = sl::total_energy(f, p, q);
      const double I = sl::eval_scaling(p).total;
      out << "kind,mu,eps,theta,L,elastic_mart,elastic_aust,surface,tail,total,scaling_total,ratio\n";
      out << join({f.name, num(p.mu), num(p.eps), num(p.theta), num(p.L), num(e.elastic_martensite),
                   num(e.elastic_austenite), num(e.surface), num(e.tail_estimate), num(e.total), num(I),
                   num(e.total / I)})
          << "\n";
    } else if (*nec) {
      if (case_id.empty()) throw UsageError("necessity needs a case id or 'all'");
      std::vector<const sl::NecessityCase*> cases;
      if (case_id == "all") {
        for (const auto& c : sl::necessity_cases()) cases.push_back(&c);
      } else {
        try {
          cases.push_back(&sl::find_necessity_case(case_id));
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      }
      out << "case,j,log_mu,log_eps,log_theta,log_L,log_ratio,verdict\n";
      for (const auto* c : cases) {
        std::optional<double> hi_j;
        if (jmax > 0.0) {
          if (!(jmax > c->j_lo)) throw UsageError("--jmax must exceed the case's first index");
          hi_j = jmax;
        }
        const auto rep = sl::run_necessity(*c, npts, hi_j);
        const char* verdict = rep.pass() ? "pass" : "fail";
        for (const auto& pt : rep.points)
          out << join({std::string(c->id), num(pt.j), num(pt.lp.log_mu), num(pt.lp.log_eps), num(pt.lp.log_theta),
                       num(pt.lp.log_L), num(pt.log_ratio), verdict})
              << "\n";
      }
    } else if (*orc) {
      const sl::Grid g = sl::make_grid(p, n1, n2, collar);
      sl::InitKind ik;
      if (init == "zero") ik = sl::InitKind::zero;
      else if (init == "best" || init == "best_construction") ik = sl::InitKind::best_construction;
      else if (init == "random") ik = sl::InitKind::random;
      else throw UsageError("--init must be zero, best or random");
      if (bc == "zero") sopt.bc = sl::BoundaryCondition::zero_outer;
      else if (bc == "free") sopt.bc = sl::BoundaryCondition::free_outer;
      else throw UsageError("--bc must be zero or free");
      const double I = sl::eval_scaling(p).total;
      if (do_bracket) {
        const auto b = sl::bracket(p, g, sopt);
        out << "n1,n2,lower_probe,upper_probe,scaling_total,lower_iterations,upper_iterations\n";
        out << join({std::to_string(n1), std::to_string(n2), num(b.lower_probe), num(b.upper_probe), num(I),
                     std::to_string(b.lower.iterations), std::to_string(b.upper.iterations)})
            << "\n";
      } else {
        const auto [df, rep] = sl::minimize(p, g, ik, seed, sopt);
        out << "n1,n2,energy,scaling_total,smoothing,iterations,residual,budget_exhausted\n";
        out << join({std::to_string(n1), std::to_string(n2), num(rep.energy), num(I), num(rep.smoothing),
                     std::to_string(rep.iterations), num(rep.residual), rep.budget_exhausted ? "1" : "0"})
            << "\n";
      }
    } else if (*diag) {
      sl::validate(p);
      const sl::PiecewiseField f = build_named(kind, p, bopt);
      const auto sets = sl::classify_slices(f, p, grid_n, samples);
      std::map<std::size_t, sl::PathSample> paths;
      {
        const auto bt = sl::bulk_bound_terms(f, p, grid_n, path_samples);
        for (const auto& ps : bt.path_energy_samples)
          for (std::size_t k = 0; k < sets.x1.size(); ++k)
            if (sets.x1[k] == ps.x1) paths[k] = ps;
      }
      out << "x1,in_C,in_P,endpoint_gap,path_integral,path_bound\n";
      for (std::size_t k = 0; k < sets.x1.size(); ++k) {
        std::string pi, pb;
        if (auto it = paths.find(k); it != paths.end()) {
          pi = num(it->second.path_integral);
          pb = num(it->second.path_bound);
        }
        out << join({num(sets.x1[k]), sets.C_mask[k] ? "1" : "0", sets.P_mask[k] ? "1" : "0",
                     num(sets.endpoint_gap[k]), pi, pb})
            << "\n";
      }
    } else if (*fit) {
      sl::RegimeId r;
      try {
        r = sl::parse_regime(regime);
      } catch (const std::invalid_argument& e) {
        throw UsageError(e.what());
      }
      const auto rep = sl::fit_slope(r, axis, lo, hi, p, nfit, {}, bopt);
      out << "regime,axis,slope,expected,residual\n";
      out << join({std::string(sl::regime_name(r)), rep.axis, num(rep.slope), num(rep.expected), num(rep.residual)})
          << "\n";
    }
    std::cout << out.str();
    return 0;
  } catch (const sl::RegimeDominanceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
