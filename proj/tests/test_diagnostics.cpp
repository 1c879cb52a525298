#include <algorithm>
#include <cmath>
#include <numbers>

#include "doctest.h"
#include "test_support.hpp"
#include "wpart/diagnostics.hpp"
#include "wpart/error.hpp"

using namespace wpart;

namespace {

constexpr double kPi = std::numbers::pi;

// Three sectors split by rays at 90, 210 and 330 degrees from the center.
Partition tripod(const GridPtr& g, Point center) {
  std::vector<int> labels(g->size());
  for (CellIndex c = 0; c < g->size(); ++c) {
    const Point x = g->center(c);
    double deg = std::atan2(x.y - center.y, x.x - center.x) * 180.0 / kPi;
    if (deg < 0.0) deg += 360.0;
    if (deg >= 90.0 && deg < 210.0)
      labels[c] = 2;
    else if (deg >= 210.0 && deg < 330.0)
      labels[c] = 3;
    else
      labels[c] = 1;
  }
  return Partition(g, 3, std::move(labels));
}

Partition shifted_halves(const GridPtr& g, int split) {
  std::vector<int> labels(g->size());
  for (CellIndex c = 0; c < g->size(); ++c) labels[c] = g->col(c) < split ? 1 : 2;
  return Partition(g, 2, std::move(labels));
}

}  // namespace

TEST_CASE("interior region and admissibility") {
  auto g = make_grid(64, 64, 1.0 / 64);
  const Region r = interior_region(*g);
  CHECK(r.x0 == doctest::Approx(4.0 / 64));
  CHECK(r.x1 == doctest::Approx(60.0 / 64));
  const Region big = interior_region(*make_grid(400, 400, 1.0 / 400));
  CHECK(big.x0 == doctest::Approx(0.05));
  CHECK(admissible(r, *g, {0.5, 0.5}, 0.25, 1.0));
  CHECK_FALSE(admissible(r, *g, {0.5, 0.5}, 1.0 / 64, 1.0));  // below 2h
  CHECK_FALSE(admissible(r, *g, {0.1, 0.5}, 0.25, 1.0));      // ball leaves the region
  CHECK_FALSE(admissible(r, *g, {0.01, 0.5}, 0.03, 1.0));     // center outside
}

TEST_CASE("ahlfors_scan") {
  auto g = make_grid(64, 64, 1.0 / 64);
  const double h = g->h();
  const Region region = interior_region(*g);

  SUBCASE("straight interface: chord of length 2r") {
    const Partition p = test::vertical_halves(g);
    const InterfaceIndex index(p);
    const std::vector<Point> x{{0.5, 32.5 * h}};
    const std::vector<double> r{16 * h};
    const auto s = ahlfors_scan(index, *g, x, r, {region, 1.0, 0});
    REQUIRE(s.samples.size() == 1);
    // 33 unit faces have their midpoint within 16h of a face midpoint.
    CHECK(s.samples[0].face_count_ratio == doctest::Approx(33.0 / 16.0));
    CHECK(s.samples[0].ratio == doctest::Approx(33.0 / 16.0));
    CHECK(s.min_ratio >= 1.8);
    CHECK(s.max_ratio <= 2.2);
  }
  SUBCASE("tripod junction: three radii") {
    auto g2 = make_grid(128, 128, 1.0 / 128);
    const Partition p = tripod(g2, {0.5, 0.5});
    const InterfaceIndex index(p);
    const std::vector<Point> x{{0.5, 0.5}};
    const std::vector<double> r{8.0 / 128, 16.0 / 128, 32.0 / 128};
    const auto s = ahlfors_scan(index, *g2, x, r, {interior_region(*g2), 1.0, 0});
    REQUIRE(s.samples.size() == 3);
    for (const auto& sample : s.samples) CHECK(sample.ratio == doctest::Approx(3.0).epsilon(0.1));
  }
  SUBCASE("invariant under translation by one cell") {
    const std::vector<double> r{8 * h, 16 * h};
    const InterfaceIndex a(shifted_halves(g, 32));
    const InterfaceIndex b(shifted_halves(g, 33));
    const std::vector<Point> xa{{32 * h, 30.5 * h}};
    const std::vector<Point> xb{{33 * h, 30.5 * h}};
    const auto sa = ahlfors_scan(a, *g, xa, r, {region, 1.0, 0});
    const auto sb = ahlfors_scan(b, *g, xb, r, {region, 1.0, 0});
    REQUIRE(sa.samples.size() == sb.samples.size());
    for (std::size_t k = 0; k < sa.samples.size(); ++k) CHECK(sa.samples[k].ratio == sb.samples[k].ratio);
  }
  SUBCASE("per-phase scan sees only that phase's boundary") {
    const Partition p = tripod(g, {0.5, 0.5});
    const InterfaceIndex index(p);
    const std::vector<Point> x{{0.5, 0.5}};
    const std::vector<double> r{16 * h};
    const auto s = ahlfors_scan(index, *g, x, r, {region, 1.0, 1});
    REQUIRE(s.samples.size() == 1);
    CHECK(s.samples[0].ratio == doctest::Approx(2.0).epsilon(0.1));
  }
  SUBCASE("empty interface is an error") {
    const InterfaceIndex index(Partition(g, 2));
    const std::vector<Point> x{{0.5, 0.5}};
    const std::vector<double> r{0.1};
    CHECK_THROWS_AS(ahlfors_scan(index, *g, x, r, {region, 1.0, 0}), PreconditionError);
  }
}

TEST_CASE("condition_b") {
  auto g = make_grid(64, 64, 1.0 / 64);
  const double h = g->h();

  SUBCASE("straight interface: half-ball radii") {
    const auto s = condition_b_at(test::vertical_halves(g), {0.5, 0.5}, 0.25);
    CHECK_FALSE(s.one_phase);
    CHECK(s.first_radius <= 0.25);
    CHECK(s.first_phase != s.second_phase);
    // Exact half-ball value is r/2, less the offset of the nearest cell center.
    CHECK(s.second_radius >= 0.125 - h);
  }
  SUBCASE("single-phase ball") {
    const auto s = condition_b_at(test::vertical_halves(g), {0.2, 0.5}, 0.1);
    CHECK(s.one_phase);
    CHECK(s.first_phase == 1);
  }
  SUBCASE("radii are monotone in r") {
    const Partition p = tripod(g, {0.5, 0.5});
    for (Point x : {Point{0.5, 0.5}, Point{0.5, 0.7}, Point{0.4, 0.45}}) {
      double prev1 = 0.0, prev2 = 0.0;
      for (double r = 2 * h; r <= 0.3; r += 3 * h) {
        const auto s = condition_b_at(p, x, r);
        CHECK(s.first_radius >= prev1 - 1e-12);
        CHECK(s.second_radius >= prev2 - 1e-12);
        CHECK(s.first_radius <= r);
        prev1 = s.first_radius;
        prev2 = s.second_radius;
      }
    }
  }
  SUBCASE("scan reports the worst normalized second radius") {
    const Partition p = test::vertical_halves(g);
    const InterfaceIndex index(p);
    const auto points = sample_midpoints(index.faces(), 64);
    const auto s = condition_b_scan(p, points, 16 * h, interior_region(*g));
    CHECK_FALSE(s.samples.empty());
    CHECK(s.one_phase_count == 0);
    CHECK(s.min_normalized_second >= 0.25);
  }
}

TEST_CASE("isoperimetry_scan") {
  auto g = make_grid(64, 64, 1.0 / 64);
  const Region region = interior_region(*g, 0.0);

  SUBCASE("empty Z is skipped") {
    const std::vector<Ball> balls{{{0.2, 0.5}, 0.05}};
    const auto s = isoperimetry_scan(Partition(g, 2, 1), balls, 1.0, region);
    // Phase 2 is absent from the ball and produces no sample.
    REQUIRE(s.samples.size() == 1);
    CHECK(s.samples[0].phase == 1);
  }
  SUBCASE("half-ball in a half-plane phase: ratio at most 1") {
    const Partition p = test::vertical_halves(g);
    for (double r : {4.0 / 64, 8.0 / 64, 16.0 / 64}) {
      const std::vector<Ball> balls{{{0.5, 0.5}, r}};
      const auto s = isoperimetry_scan(p, balls, 1.0, region);
      REQUIRE(s.samples.size() == 2);
      for (const auto& smp : s.samples) {
        CHECK_FALSE(smp.zero_perimeter);
        CHECK(smp.ratio > 0.0);
        CHECK(smp.ratio <= 1.0);
        // The relative boundary is a staircase arc, whose length is the l1 length 4r.
        CHECK(smp.perimeter == doctest::Approx(4.0 * r).epsilon(0.15));
      }
    }
  }
  SUBCASE("a whole small phase inside the ball is flagged") {
    std::vector<int> labels(g->size(), 1);
    labels[g->index(32, 32)] = 2;
    labels[g->index(33, 32)] = 2;
    const std::vector<Ball> balls{{{0.5, 0.5}, 0.1}};
    const auto s = isoperimetry_scan(Partition(g, 2, labels), balls, 1.0, region);
    // Phase 2 lies entirely inside; phase 1 still meets its own cells outside the ball.
    CHECK(s.flagged == 1);
  }
  SUBCASE("v0 filter and region") {
    const Partition p = test::vertical_halves(g);
    const std::vector<Ball> balls{{{0.5, 0.5}, 0.25}, {{0.02, 0.5}, 0.1}};
    const auto s = isoperimetry_scan(p, balls, 0.01, interior_region(*g));
    CHECK(s.samples.empty());
    CHECK(s.skipped == 3);
  }
}

TEST_CASE("junction_scan") {
  SUBCASE("no three-label vertex") {
    auto g = make_grid(16, 16, 1.0);
    CHECK(junction_scan(test::vertical_halves(g)).empty());
  }
  SUBCASE("rasterized 120 degree tripod") {
    auto g = make_grid(128, 128, 1.0 / 128);
    const auto js = junction_scan(tripod(g, {0.5, 0.5}));
    REQUIRE_FALSE(js.empty());
    for (const auto& j : js) {
      CHECK(j.angles[0] + j.angles[1] + j.angles[2] == doctest::Approx(360.0).epsilon(1e-9));
      for (double a : j.angles) CHECK(std::abs(a - 120.0) <= 8.0);
    }
  }
  SUBCASE("T junction reads 90/90/180") {
    auto g = make_grid(32, 32, 1.0);
    std::vector<int> labels(g->size());
    for (CellIndex c = 0; c < g->size(); ++c) labels[c] = g->row(c) < 16 ? 3 : (g->col(c) < 16 ? 1 : 2);
    const auto js = junction_scan(Partition(g, 3, labels));
    REQUIRE(js.size() == 1);
    std::array<double, 3> a = js[0].angles;
    std::sort(a.begin(), a.end());
    CHECK(a[0] == doctest::Approx(90.0));
    CHECK(a[1] == doctest::Approx(90.0));
    CHECK(a[2] == doctest::Approx(180.0));
  }
}

TEST_CASE("gauge exponent") {
  CHECK(gauge_exponent(1.0, 0.5) == 0.5);
  CHECK(gauge_exponent(0.75, 1.0) == 0.5);
  CHECK(gauge_exponent(1.0, 1.0) == 1.0);
  for (double alpha = 0.55; alpha <= 1.0; alpha += 0.05)
    for (double beta = 0.05; beta <= 1.0; beta += 0.05) CHECK(gauge_exponent(alpha, beta) > 0.0);
}

TEST_CASE("sample_midpoints is a deterministic capped subsample") {
  auto g = make_grid(32, 32, 1.0);
  const auto faces = extract_interface(test::vertical_halves(g));
  CHECK(sample_midpoints(faces, 1000).size() == faces.size());
  const auto few = sample_midpoints(faces, 5);
  CHECK(few.size() <= 5);
  CHECK(few.front().y == faces.front().midpoint.y);
}

TEST_CASE("full_report") {
  auto g = make_grid(64, 64, 1.0 / 64);
  const ScalarField a(g, 1.0);
  EnergySpec spec;
  WeightSpec w;

  SUBCASE("single phase: empty sections") {
    const auto r = full_report(Partition(g, 2), a, spec, w);
    CHECK(r.nontrivial_phases == 1);
    CHECK(r.interface_faces == 0);
    CHECK_FALSE(r.ahlfors.has_value());
    CHECK_FALSE(r.condition_b.has_value());
    CHECK(r.junctions.empty());
    CHECK(r.errors.empty());
    CHECK_FALSE(r.gamma.has_value());
  }
  SUBCASE("gauge from declared exponents") {
    spec.bulk.alpha = 0.75;
    w.beta = 1.0;
    const auto r = full_report(test::vertical_halves(g), a, spec, w);
    REQUIRE(r.gamma.has_value());
    CHECK(*r.gamma == 0.5);
  }
  SUBCASE("straight interface report is well formed") {
    const auto r = full_report(test::vertical_halves(g), a, spec, w);
    CHECK(r.nontrivial_phases == 2);
    REQUIRE(r.ahlfors.has_value());
    CHECK(r.ahlfors->min_ratio <= r.ahlfors->max_ratio);
    CHECK(r.ahlfors->min_ratio >= 1.5);
    CHECK(r.ahlfors->max_ratio <= 3.5);
    CHECK(r.per_phase_ahlfors.size() == 2);
    REQUIRE(r.condition_b.has_value());
    for (const auto& s : r.condition_b->samples) CHECK(s.second_radius <= s.r);
    REQUIRE(r.isoperimetry.has_value());
    for (const auto& s : r.isoperimetry->samples) CHECK((s.ratio >= 0.0 && std::isfinite(s.ratio)));
  }
  SUBCASE("toggles switch sections off") {
    DiagnosticsOptions o;
    o.ahlfors = false;
    o.isoperimetry = false;
    const auto r = full_report(test::vertical_halves(g), a, spec, w, o);
    CHECK_FALSE(r.ahlfors.has_value());
    CHECK_FALSE(r.isoperimetry.has_value());
    CHECK(r.condition_b.has_value());
  }
}
