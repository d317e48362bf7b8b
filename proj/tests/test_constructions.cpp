#include <catch_amalgamated.hpp>

#include <cmath>

#include "scaling_lab/constructions.hpp"

using namespace scaling_lab;
using Catch::Approx;

TEST_CASE("iota ramp") {
  CHECK(iota(0, 1, 0.25) == 0.25);
  CHECK(iota(1, 2, 1) == 0.0);
  CHECK(iota(1, 3, 2) == 0.5);
  CHECK_THROWS_AS(iota(1, 1, 0), std::invalid_argument);
}

TEST_CASE("exterior flow traces") {
  const double alpha = 1.0, beta = 2.0, Lbar = 3.0, th = 0.5;
  const PiecewiseField f = build_exterior_flow(alpha, beta, Lbar, th);
  for (double x1 : {2.01, 2.5, 2.99, 3.0}) CHECK(eval_field(f, {x1, 1.0})[0] == Approx(th).margin(1e-13));
  for (double x1 : {0.0, 0.5, 1.5, 2.5, 3.0}) CHECK(eval_field(f, {x1, 0.0})[0] == Approx(0.0).margin(1e-13));
  // between alpha and beta the top trace ramps
  CHECK(eval_field(f, {1.5, 1.0})[0] == Approx(th * 0.5).margin(1e-13));
  CHECK(check_continuity(f, 50) < 1e-12);
  CHECK_THROWS_AS(build_exterior_flow(2.0, 1.0, 3.0, th), std::invalid_argument);
}

TEST_CASE("boundary laminate values") {
  const int N = 4;
  const double h = 0.25, th = 0.5;
  const PiecewiseField f = build_boundary_laminate(N, h, th);
  const double x2 = (1.0 - h) / (2.0 * N);
  CHECK(eval_field(f, {0.0, x2})[0] == Approx(th * x2).margin(1e-14));
  for (double y : {0.1, 0.5, 0.9}) CHECK(eval_field(f, {-1.0 / N - 0.1, y})[0] == 0.0);
  CHECK(check_continuity(f, 50) < 1e-12);
  CHECK_THROWS_AS(build_boundary_laminate(0, h, th), std::invalid_argument);
  CHECK_THROWS_AS(build_boundary_laminate(N, 0.7, th), std::invalid_argument);
}

TEST_CASE("branch cell is continuous and respects the piece budget") {
  const PiecewiseField f = build_branch_cell(1.0, 1.0, 4, 0.5);
  CHECK(check_continuity(f, 20) < 1e-12);
  CHECK(f.params_used.at("k_used") <= f.params_used.at("k"));
  BuildOptions tight;
  tight.max_pieces = f.pieces.size() / 4;
  const PiecewiseField g = build_branch_cell(1.0, 1.0, 4, 0.5, tight);
  CHECK(g.pieces.size() <= tight.max_pieces);
  CHECK(g.params_used.at("k_used") < f.params_used.at("k_used"));
}

TEST_CASE("composite internal parameters") {
  const PiecewiseField a = build_composite(ConstructionKind::P26aBranching, {0.5, 1e-3, 0.5, 0.5});
  CHECK(a.params_used.at("N") == 10.0);

  const double mu = 1e-4, th = 1e-4;
  const Params p6{mu, 4.6e-14, th, 100.0};
  const PiecewiseField u6 = build_composite(ConstructionKind::U6CornerLaminate, p6);
  const double gamma = std::max(0.25, th / (mu * std::log(4.0)));
  CHECK(gamma == Approx(0.721).margin(1e-3));
  CHECK(u6.params_used.at("gamma") == Approx(gamma).epsilon(1e-12));
  CHECK(u6.params_used.at("beta_tilde") == Approx(3.0 * mu * th * th / p6.eps).epsilon(1e-12));

  const PiecewiseField u1 = build_composite(ConstructionKind::U1Constant, {3, 3, 0.3, 2});
  for (const Piece& pc : u1.pieces) CHECK(pc.expr == ExprKind::zero);
}

TEST_CASE("best construction follows the scaling argmin") {
  auto [f1, r1] = build_best({1e3, 1e3, 0.5, 0.5});
  CHECK(r1 == RegimeId::Constant);
  CHECK(f1.name == "U1Constant");
  auto [f2, r2] = build_best({0.5, 1e-3, 0.5, 0.5});
  CHECK(r2 == RegimeId::Branching);
  CHECK(f2.name.find("P26aBranching") != std::string::npos);
  auto [f3, r3] = build_best({0.25, 1.0, 0.5, 2.0});
  CHECK(r3 == RegimeId::Affine);
  CHECK(f3.name.find("U2Affine") != std::string::npos);
}

TEST_CASE("kind names round-trip") {
  for (ConstructionKind k : kAllKinds) CHECK(parse_kind(kind_name(k)) == k);
  CHECK(parse_kind("p26a_branching") == ConstructionKind::P26aBranching);
  CHECK_FALSE(parse_kind("nothing").has_value());
  CHECK_THROWS_AS(build_composite(ConstructionKind::InterpWedge, {1, 1, 0.5, 1}), std::invalid_argument);
}

TEST_CASE("composites are continuous and decay far away", "[property]") {
  const double mus[] = {1e-3, 0.3, 5.0};
  const double epss[] = {1e-6, 1e-2, 2.0};
  const double thetas[] = {0.05, 0.5};
  const double Ls[] = {0.5, 3.0};
  for (ConstructionKind k : kAllKinds) {
    if (is_building_block(k)) continue;
    for (double mu : mus)
      for (double eps : epss)
        for (double th : thetas)
          for (double L : Ls) {
            const Params p{mu, eps, th, L};
            BuildOptions opt;
            opt.max_pieces = 20000;
            const PiecewiseField f = build_composite(k, p, opt);
            INFO(f.name << " mu=" << mu << " eps=" << eps << " theta=" << th << " L=" << L);
            REQUIRE(f.mirror_axis.has_value());
            CHECK(check_continuity(f, 6) <= 1e-11 * std::max(1.0, L));
            // the exterior flow decays like r^{-1/2}
            const double Lbar = f.params_used.count("Lbar") ? f.params_used.at("Lbar") : L;
            CHECK(std::fabs(eval_field(f, {L, -1e4})[0]) <= th * std::sqrt(4.0 * (Lbar + L) / 1e4));
            // even in x1 about the mirror axis
            const Point x{0.37 * L, 0.61};
            CHECK(eval_field(f, x)[0] == Approx(eval_field(f, {2.0 * L - x.x1, x.x2})[0]).margin(1e-13));
          }
  }
}
