#include <doctest.h>

#include <cmath>
#include <numbers>

#include "ocm/errors.hpp"
#include "ocm/router.hpp"

using namespace ocm;
using namespace ocm::route;

namespace {

FacetLayout custom(FacetId id, std::vector<Port> ports) {
  FacetLayout f;
  f.facet = id;
  f.pattern = FacetPattern::Custom;
  f.ports = std::move(ports);
  return f;
}

RoutePlan default_plan() {
  auto [in, out] = make_facets(49, 50.0, 7, 7, 40.0);
  return generate_paths(in, out, assign(in, out), RouteConstraints{});
}

std::size_t count_kind(const ValidationReport& r, const std::string& kind) {
  return static_cast<std::size_t>(
      std::count_if(r.violations.begin(), r.violations.end(), [&](const Violation& v) { return v.kind == kind; }));
}

}  // namespace

TEST_CASE("facets") {
  auto [in, out] = make_facets(49, 50.0, 7, 7, 40.0);
  CHECK(in.size() == 49);
  CHECK(out.size() == 49);
  CHECK(in.ports.front().x_um == doctest::Approx(-1200.0));
  CHECK(in.ports.back().x_um == doctest::Approx(1200.0));
  // square lattice: every site has a neighbour at exactly one pitch
  for (std::size_t s = 0; s < 49; ++s) {
    double nearest = 1e9;
    for (std::size_t t = 0; t < 49; ++t)
      if (s != t) nearest = std::min(nearest, std::hypot(out.ports[s].x_um - out.ports[t].x_um, out.ports[s].y_um - out.ports[t].y_um));
    CHECK(nearest == doctest::Approx(40.0));
  }
  CHECK(out.ports[0].x_um == doctest::Approx(-120.0));
  CHECK(out.ports[0].y_um == doctest::Approx(120.0));
  CHECK(out.ports[48].x_um == doctest::Approx(120.0));
  CHECK(out.ports[48].y_um == doctest::Approx(-120.0));

  auto [i1, o1] = make_facets(1, 50.0, 7, 7, 40.0);
  CHECK(i1.ports[0].x_um == 0.0);
  CHECK(o1.ports[0].x_um == 0.0);
  CHECK(o1.ports[0].y_um == 0.0);

  auto [i100, o100] = make_facets(100, 127.0, 10, 10, 50.0);
  CHECK(i100.ports.back().x_um - i100.ports.front().x_um == doctest::Approx(99 * 127.0));
  CHECK((i100.ports.back().x_um - i100.ports.front().x_um) * 1e-3 == doctest::Approx(12.573));

  CHECK_THROWS_AS(make_facets(50, 50.0, 7, 7, 40.0), Error);
}

TEST_CASE("capacity") {
  CHECK(capacity(10000.0, 50.0, 1000.0) == 4000);
  CHECK(capacity(10000.0, 50.0, 50.0) == 200);
  CHECK(capacity(20000.0, 40.0, 800.0) == 10000);
  for (const double k : {2.0, 3.0, 10.0}) CHECK(capacity(k * 10000.0, k * 50.0, k * 1000.0) == 4000);
  // floor, not round
  CHECK(capacity(10049.0, 50.0, 1049.0) == 4000);
  CHECK_THROWS_AS(capacity(0.0, 50.0, 1000.0), Error);
}

TEST_CASE("raised-cosine closed form") {
  const double d = 3000.0, l = 10.0;
  CHECK(raised_cosine_max_curvature(d, l) == doctest::Approx(3.0 * std::numbers::pi * std::numbers::pi / 200.0));
  CHECK(raised_cosine_max_curvature(0.0, l) == 0.0);
}

TEST_CASE("3 mm lateral transition over 10 mm: accepted exactly per the closed form") {
  // Full-chip lateral window so the transition spans the 10 mm.
  PathSchedule sched;
  sched.y_begin = 0.0;
  sched.y_end = 0.01;
  sched.x_begin = 0.0;
  sched.x_end = 1.0;
  const FacetLayout in = custom(FacetId::Input, {{0.0, 0.0}});
  const FacetLayout out = custom(FacetId::Output, {{3000.0, 0.0}});
  // x(z) = D/2 (1 - cos(pi z / L)); x'' peaks at D pi^2 / (2 L^2) where x' = 0.
  const double r_analytic = 2.0 * 10.0 * 10.0 / (3.0 * std::numbers::pi * std::numbers::pi);
  CHECK(r_analytic == doctest::Approx(6.7547).epsilon(1e-4));

  RouteConstraints c;
  c.chip_length_mm = 10.0;
  c.r_min_mm = 5.0;
  const RoutePlan ok = generate_paths(in, out, {0}, c, sched);
  CHECK(ok.min_bend_radius_mm == doctest::Approx(r_analytic).epsilon(1e-3));
  CHECK(validate(ok, c).ok());

  c.r_min_mm = r_analytic * 0.999;
  CHECK_NOTHROW(generate_paths(in, out, {0}, c, sched));
  c.r_min_mm = r_analytic * 1.001;
  try {
    (void)generate_paths(in, out, {0}, c, sched);
    FAIL("expected rejection");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    CHECK(std::string(e.what()).find("0") != std::string::npos);
  }
  // the default staged windows are shorter and reject this displacement at r_min = 5 mm
  c.r_min_mm = 5.0;
  CHECK_THROWS_AS(generate_paths(in, out, {0}, c), Error);
}

TEST_CASE("straight-through channel") {
  const FacetLayout in = custom(FacetId::Input, {{10.0, -5.0}});
  const FacetLayout out = custom(FacetId::Output, {{10.0, -5.0}});
  const RoutePlan p = generate_paths(in, out, {0}, RouteConstraints{});
  CHECK(std::isinf(p.min_bend_radius_mm));
  CHECK(p.paths[0].length_mm == doctest::Approx(15.0).epsilon(1e-12));
  CHECK(validate(p, RouteConstraints{}).ok());
}

TEST_CASE("default 49-channel plan") {
  const RoutePlan plan = default_plan();
  const RouteConstraints c;
  REQUIRE(plan.paths.size() == 49);
  CHECK(plan.min_clearance_um >= 30.0);
  CHECK(plan.min_bend_radius_mm >= c.r_min_mm);

  for (std::size_t k = 0; k < 49; ++k) {
    const auto& pts = plan.paths[k].points;
    const Port& a = plan.input.ports[k];
    const Port& b = plan.output.ports[plan.assignment[k]];
    CHECK(std::abs(pts.front().x_um - a.x_um) <= 1e-3);
    CHECK(std::abs(pts.front().y_um - a.y_um) <= 1e-3);
    CHECK(std::abs(pts.back().x_um - b.x_um) <= 1e-3);
    CHECK(std::abs(pts.back().y_um - b.y_um) <= 1e-3);
    CHECK(pts.front().z_mm == 0.0);
    CHECK(pts.back().z_mm == doctest::Approx(c.chip_length_mm));
    double worst_turn = 0.0;
    for (std::size_t i = 1; i < pts.size(); ++i) {
      const double dz = pts[i].z_mm - pts[i - 1].z_mm;
      CHECK(dz > 0.0);
      CHECK(dz <= 0.050 + 1e-9);
      if (i + 1 < pts.size()) {
        // tangent continuity: direction change bounded by curvature * step
        const double s1 = (pts[i].x_um - pts[i - 1].x_um) * 1e-3 / dz;
        const double s2 = (pts[i + 1].x_um - pts[i].x_um) * 1e-3 / (pts[i + 1].z_mm - pts[i].z_mm);
        const double t1 = (pts[i].y_um - pts[i - 1].y_um) * 1e-3 / dz;
        const double t2 = (pts[i + 1].y_um - pts[i].y_um) * 1e-3 / (pts[i + 1].z_mm - pts[i].z_mm);
        worst_turn = std::max(worst_turn, std::hypot(s2 - s1, t2 - t1));
      }
    }
    CHECK(worst_turn <= 0.050 / c.r_min_mm * 1.05 + 1e-6);
  }
  const ValidationReport r = validate(plan, c);
  CHECK(r.ok());
  CHECK(r.measured_min_clearance_um == doctest::Approx(plan.min_clearance_um).epsilon(1e-9));
}

TEST_CASE("assignment modes produce valid permutations and plans") {
  auto [in, out] = make_facets(49, 50.0, 7, 7, 40.0);
  AssignOptions xt;
  xt.mode = CostMode::CrosstalkWeighted;
  xt.d0_um = 8.0;
  xt.max_passes = 2;
  const Assignment a = assign(in, out, xt);
  std::vector<std::size_t> s = a;
  std::sort(s.begin(), s.end());
  for (std::size_t i = 0; i < 49; ++i) CHECK(s[i] == i);
  CHECK(a == assign(in, out, xt));

  AssignOptions rep;
  rep.repair = RouteConstraints{};
  rep.max_passes = 2;
  const Assignment b = assign(in, out, rep);
  CHECK(validate(generate_paths(in, out, b, RouteConstraints{}), RouteConstraints{}).ok());
}

TEST_CASE("repair on a tied assignment yields a valid plan") {
  // both assignments cost the same
  const FacetLayout in = custom(FacetId::Input, {{0.0, 0.0}, {100.0, 0.0}});
  const FacetLayout out = custom(FacetId::Output, {{50.0, 40.0}, {50.0, -40.0}});
  RouteConstraints c;
  AssignOptions rep;
  rep.repair = c;
  const Assignment a = assign(in, out, rep);
  const RoutePlan p = generate_paths(in, out, a, c);
  CHECK(validate(p, c).ok());
}

TEST_CASE("generation errors") {
  RouteConstraints c;
  // crossing channels collide
  const FacetLayout in = custom(FacetId::Input, {{0.0, 0.0}, {50.0, 0.0}});
  const FacetLayout out = custom(FacetId::Output, {{0.0, 0.0}, {50.0, 0.0}});
  try {
    (void)generate_paths(in, out, {1, 0}, c);
    FAIL("expected clearance error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Validation);
    const std::string msg = e.what();
    CHECK(msg.find("0") != std::string::npos);
    CHECK(msg.find("z =") != std::string::npos);
  }
  // depth beyond the writing limit
  auto [i2, o2] = make_facets(4, 50.0, 4, 1, 400.0);
  CHECK_THROWS_AS(generate_paths(i2, o2, {0, 1, 2, 3}, c), Error);
  CHECK_THROWS_AS(generate_paths(in, out, {0, 0}, c), Error);
}

TEST_CASE("validator") {
  auto [in, out] = make_facets(5, 50.0, 1, 5, 50.0);
  RoutePlan plan = straight_plan(in, 15.0);
  RouteConstraints c;
  CHECK(validate(plan, c).ok());

  c.d_min_um = 60.0;
  const ValidationReport r = validate(plan, c);
  CHECK(count_kind(r, "clearance") == 4);
  for (const auto& v : r.violations) CHECK(v.channel_b == v.channel_a + 1);

  c.d_min_um = 30.0;
  RoutePlan tampered = plan;
  tampered.min_clearance_um = 75.0;
  CHECK(count_kind(validate(tampered, c), "stored-statistic") >= 1);

  RoutePlan bent = default_plan();
  RouteConstraints strict;
  strict.r_min_mm = 1e4;
  CHECK(count_kind(validate(bent, strict), "curvature") >= 1);
  bent.min_bend_radius_mm = 1e9;
  CHECK(count_kind(validate(bent, RouteConstraints{}), "stored-statistic") >= 1);

  RoutePlan moved = default_plan();
  moved.paths[3].points.back().x_um += 0.5;
  CHECK(count_kind(validate(moved, RouteConstraints{}), "endpoint") >= 1);

  RoutePlan backwards = default_plan();
  std::swap(backwards.paths[2].points[5], backwards.paths[2].points[6]);
  CHECK(count_kind(validate(backwards, RouteConstraints{}), "monotonic-z") >= 1);
}

TEST_CASE("discrete curvature of a circle") {
  const double r = 20.0;  // mm
  const double t = 0.01;
  const PathPoint a{r * 1e3 * (1 - std::cos(-t)), 0.0, r * std::sin(-t)};
  const PathPoint b{0.0, 0.0, 0.0};
  const PathPoint d{r * 1e3 * (1 - std::cos(t)), 0.0, r * std::sin(t)};
  CHECK(discrete_curvature(a, b, d) == doctest::Approx(1.0 / r).epsilon(1e-9));
  CHECK(discrete_curvature({0, 0, 0}, {0, 0, 1}, {0, 0, 2}) == 0.0);
}
