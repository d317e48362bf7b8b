#include <catch_amalgamated.hpp>

#include <cmath>

#include "scaling_lab/constructions.hpp"
#include "scaling_lab/diagnostics.hpp"

using namespace scaling_lab;
using Catch::Approx;

TEST_CASE("slices of the affine and zero fields") {
  const Params p{0.25, 1.0, 0.5, 2.0};
  const PiecewiseField u2 = build_composite(ConstructionKind::U2Affine, p);
  for (double x1 : {0.1, 1.0, 2.5}) {
    const SliceProfile sp = slice(u2, p.L, x1, 64);
    for (std::size_t i = 0; i < sp.s.size(); ++i) CHECK(sp.v[i] == Approx(p.theta * sp.s[i]).margin(1e-14));
  }
  const PiecewiseField z = build_composite(ConstructionKind::U1Constant, p);
  const SliceProfile sz = slice(z, p.L, 0.7, 64);
  for (double v : sz.v) CHECK(v == 0.0);
  CHECK_THROWS_AS(slice(z, p.L, 0.0, 64), std::domain_error);
  CHECK_THROWS_AS(slice(z, p.L, 4.0, 64), std::domain_error);
}

TEST_CASE("classification of the affine and zero fields") {
  const Params p{0.25, 1.0, 0.5, 2.0};
  const SliceSets a = classify_slices(build_composite(ConstructionKind::U2Affine, p), p, 256, 128);
  for (std::size_t k = 0; k < a.x1.size(); ++k) {
    CHECK(a.C_mask[k]);
    CHECK_FALSE(a.P_mask[k]);
  }
  CHECK(a.c_measure == Approx(p.L - 0.25).epsilon(1e-14));
  CHECK(a.p_measure == 0.0);

  const SliceSets z = classify_slices(build_composite(ConstructionKind::U1Constant, p), p, 256, 128);
  for (std::size_t k = 0; k < z.x1.size(); ++k) {
    CHECK_FALSE(z.C_mask[k]);
    CHECK(z.P_mask[k]);
  }
  CHECK(z.p_measure == Approx(p.L - 0.25).epsilon(1e-14));
}

TEST_CASE("zero field bound terms") {
  const Params p{0.25, 1.0, 0.5, 2.0};
  const BulkBoundTerms t = bulk_bound_terms(build_composite(ConstructionKind::U1Constant, p), p, 256);
  CHECK(t.p_measure == Approx(p.L - 0.25).epsilon(1e-14));
  CHECK(t.log_term == Approx(0.0).margin(1e-15));
  CHECK(t.path_energy_samples.empty());
}

TEST_CASE("path bound holds on the affine composite") {
  const Params p{0.25, 1.0, 0.5, 2.0};
  const BulkBoundTerms t = bulk_bound_terms(build_composite(ConstructionKind::U2Affine, p), p, 256, 16);
  REQUIRE(t.path_energy_samples.size() == 16);
  for (const PathSample& s : t.path_energy_samples) CHECK(s.path_integral >= s.path_bound * (1 - 1e-6));
}

TEST_CASE("C and P are disjoint and slopes obey the slice estimate", "[property]") {
  const Params ps[] = {{0.5, 1e-3, 0.5, 0.5}, {0.25, 1.0, 0.5, 2.0}, {5, 1e-2, 0.3, 3}, {0.05, 1e-5, 0.05, 4},
                       {1e-3, 1e-6, 0.1, 1.0}};
  for (const Params& p : ps) {
    const PiecewiseField f = build_best(p).first;
    INFO(f.name);
    const SliceSets s = classify_slices(f, p, 128, 256);
    for (std::size_t k = 0; k < s.x1.size(); ++k) CHECK_FALSE((s.C_mask[k] && s.P_mask[k]));
    for (double x1 : {0.13, 0.5 * (p.L - 0.25), p.L - 0.3})
      if (x1 > 0.0) CHECK(slice_slope_excess(f, x1, p.theta, 256) <= 1e-12);
  }
}

TEST_CASE("corner laminate instrumentation regression") {
  const Params p{1e-4, 4.6e-14, 1e-4, 100.0};
  const auto [f, r] = build_best(p);
  REQUIRE(r == RegimeId::CornerLaminate);
  const BulkBoundTerms t = bulk_bound_terms(f, p, 512, 8);
  const double E = total_energy(f, p).total;
  const double C = (t.log_term + t.p_term) / E;
  CHECK(C >= 0.0);
  CHECK(C == Approx(0.15370369350414104).epsilon(1e-6));
}
