#include <catch_amalgamated.hpp>

#include <cmath>
#include <sstream>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/field.hpp"

using namespace scaling_lab;
using Catch::Approx;

namespace {

PiecewiseField single_affine(double theta) {
  PiecewiseField f;
  f.name = "affine";
  f.pieces.push_back(box_piece(-INFINITY, INFINITY, -INFINITY, INFINITY, Expr::affine(0.0, 0.0, theta)));
  f.finalize();
  return f;
}

}  // namespace

TEST_CASE("evaluation of simple fields") {
  const Params p{0.25, 1.0, 0.5, 2.0};
  const PiecewiseField u2 = build_composite(ConstructionKind::U2Affine, p);
  const auto v = eval_field(u2, {0.3, 0.5});
  CHECK(v[0] == Approx(0.25).margin(1e-15));
  CHECK(v[1] == 0.0);
  const Mat2 g = eval_gradient(u2, {0.3, 0.5});
  CHECK(g[0] == Approx(0.0).margin(1e-15));
  CHECK(g[1] == Approx(0.5).margin(1e-15));
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);

  const PiecewiseField zero = build_composite(ConstructionKind::U1Constant, p);
  for (Point x : {Point{0.1, 0.2}, Point{-30.0, 7.0}, Point{3.9, -100.0}}) {
    CHECK(eval_field(zero, x) == std::array<double, 2>{0.0, 0.0});
    CHECK(frobenius(eval_gradient(zero, x)) == 0.0);
  }
}

TEST_CASE("wedge branches") {
  const PiecewiseField w = build_interp_wedge(1.0, 0.5);
  // below the diagonal x2 <= (theta / bt) x1 the field is theta x2
  CHECK(eval_field(w, {0.5, 0.2})[0] == Approx(0.1).margin(1e-15));
  const Mat2 up = eval_gradient(w, {0.2, 0.4});
  CHECK(up[0] == Approx(0.5).margin(1e-14));
  CHECK(up[1] == Approx(-0.5).margin(1e-14));
}

TEST_CASE("wedge jump set is the diagonal") {
  const double bt = 1.0, th = 0.5;
  const auto js = jump_set(build_interp_wedge(bt, th));
  REQUIRE(js.size() == 1);
  const Point a = js[0].a, b = js[0].b;
  const bool forward = a.x1 < b.x1;
  const Point lo = forward ? a : b, hi = forward ? b : a;
  CHECK(lo.x1 == Approx(0.0).margin(1e-14));
  CHECK(lo.x2 == Approx(0.0).margin(1e-14));
  CHECK(hi.x1 == Approx(bt).margin(1e-14));
  CHECK(hi.x2 == Approx(th).margin(1e-14));
  CHECK(frobenius(js[0].jump_a) == Approx(std::sqrt(1.0 + th * th / (bt * bt))).epsilon(1e-14));
  CHECK(frobenius(js[0].jump_b) == Approx(std::sqrt(1.0 + th * th / (bt * bt))).epsilon(1e-14));
}

TEST_CASE("zero field has no jumps") {
  CHECK(jump_set(build_composite(ConstructionKind::U1Constant, {1, 1, 0.5, 0.5})).empty());
}

TEST_CASE("continuity check") {
  CHECK(check_continuity(single_affine(0.5), 50) == 0.0);

  const double th = 1e-4;
  const Params p6{1e-4, 4.6e-14, th, 100.0};
  const PiecewiseField u6 = build_composite(ConstructionKind::U6CornerLaminate, p6);
  CHECK(check_continuity(u6, 100) < 1e-12 * th);

  PiecewiseField bad = build_interp_wedge(1.0, 0.5);
  bad.pieces[0].p[0] += 1.0;
  bad.finalize();
  CHECK(check_continuity(bad, 20) >= 1.0);
}

TEST_CASE("mirror extension") {
  PiecewiseField half;
  half.name = "zero";
  half.pieces.push_back(box_piece(-INFINITY, 1.0, -INFINITY, INFINITY, Expr::zero()));
  half.nucleus = Rect{0.0, 2.0, 0.0, 1.0};
  half.finalize();
  const PiecewiseField z = mirror_extend(half, 1.0);
  CHECK(eval_field(z, {1.7, 0.3})[0] == 0.0);
  CHECK(jump_set(z).empty());

  PiecewiseField aff;
  aff.pieces.push_back(box_piece(-INFINITY, 1.0, -INFINITY, INFINITY, Expr::affine(0.0, 0.0, 0.5)));
  aff.nucleus = Rect{0.0, 2.0, 0.0, 1.0};
  aff.finalize();
  const PiecewiseField m = mirror_extend(aff, 1.0);
  for (double x1 : {0.2, 0.9, 1.3, 1.95}) CHECK(eval_field(m, {x1, 0.6})[0] == Approx(0.3).margin(1e-15));
  double seam = 0.0;
  for (const auto& s : jump_set(m)) seam = std::max({seam, frobenius(s.jump_a), frobenius(s.jump_b)});
  CHECK(seam < 1e-14);

  CHECK_THROWS_AS(mirror_extend(m, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(mirror_extend(single_affine(0.5), 1.0), std::invalid_argument);
}

TEST_CASE("branching seam jump is bounded") {
  const Params p{0.5, 1e-3, 0.5, 0.5};
  const PiecewiseField f = build_composite(ConstructionKind::P26aBranching, p);
  double worst = 0.0;
  for (int i = 1; i < 200; ++i) {
    const double x2 = i / 200.0;
    const Mat2 a = eval_gradient(f, {p.L - 1e-9, x2}), b = eval_gradient(f, {p.L + 1e-9, x2});
    worst = std::max(worst, frobenius(a - b));
  }
  CHECK(worst <= 4.0);
}

TEST_CASE("evaluation outside every piece throws") {
  const PiecewiseField w = build_interp_wedge(1.0, 0.5);
  CHECK_THROWS_AS(eval_field(w, {5.0, 5.0}), FieldError);
  CHECK_THROWS_AS(eval_gradient(w, {-1.0, 0.1}), FieldError);
}

TEST_CASE("text round trip") {
  const PiecewiseField f = build_composite(ConstructionKind::U3LinearInterp, {0.5, 1.0, 0.5, 1.5});
  std::stringstream ss;
  write_field(ss, f);
  const PiecewiseField g = read_field(ss);
  CHECK(g.name == f.name);
  CHECK(g.pieces.size() == f.pieces.size());
  CHECK(g.mirror_axis == f.mirror_axis);
  for (Point x : {Point{0.3, 0.4}, Point{-2.0, 3.0}, Point{2.5, -0.5}, Point{2.9, 0.99}})
    CHECK(eval_field(g, x)[0] == Approx(eval_field(f, x)[0]).margin(1e-15));
}

TEST_CASE("polar angle keeps signed zeros on the right branch") {
  CHECK(polar_angle(1.0, 0.0, 1) == 0.0);
  CHECK(polar_angle(1.0, -0.0, 1) == 0.0);
  CHECK(polar_angle(1.0, 0.0, -1) == Approx(2.0 * std::numbers::pi));
  CHECK(polar_angle(-1.0, 0.0, -1) == Approx(std::numbers::pi));
}
