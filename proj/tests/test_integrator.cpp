#include "nemvis/field_gen.hpp"
#include "nemvis/integrator.hpp"
#include "nemvis/seeding.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace nemvis;

namespace {

SeedPoint seedAt(Vec2 p) { return {p, 0, 0.0, DirectionConstraint::both, std::nullopt}; }

// Outward seed whose initial direction is +dir.
SeedPoint seedToward(Vec2 p, Vec2 dir) { return {p, 0, 0.0, DirectionConstraint::outward, Vec2(p - dir)}; }

TraceParams params(double h, double maxLen) {
  TraceParams t;
  t.step = h;
  t.max_arclength = maxLen;
  t.loop_eps = 0.5 * h;
  return t;
}

double polylineLength(const Hyperstreamline& l) {
  double s = 0.0;
  for (std::size_t k = 1; k < l.samples.size(); ++k) s += (l.samples[k].position - l.samples[k - 1].position).norm();
  return s;
}

struct TwoDefectRun {
  GeneratedField gen;
  TopologicalTemplate tmpl;
  std::vector<SeedPoint> seeds;
  TraceParams tp;
};

TwoDefectRun twoDefectRun() {
  ScenarioOptions o;
  o.nx = o.ny = 128;
  TwoDefectRun r{generate_scenario(Scenario::two_defect_circle, o), {}, {}, {}};
  const double ln = r.gen.params.nematic_length();
  r.tmpl = build_template(r.gen.field, build_graph(detect_defects(r.gen.field)), 2.5 * ln);
  r.tmpl.params.spacing = 2 * ln;
  r.seeds = seed_template(r.tmpl, r.gen.field, {2 * ln, 2.5 * ln, 2.0});
  r.tp = TraceParams::defaults(r.gen.field);
  r.tp.vertex_circles = vertex_circles(r.tmpl);
  return r;
}

}  // namespace

TEST_CASE("uniform field gives a straight chord") {
  const TensorField f = testing::uniform_square(65, 0.0);
  const TraceParams tp = TraceParams::defaults(f);
  const auto line = trace(f, seedAt(Vec2(0.5, 0.37)), tp);
  REQUIRE(line.samples.size() > 10);
  CHECK(line.start_cause == Termination::domain_exit);
  CHECK(line.end_cause == Termination::domain_exit);
  CHECK_FALSE(line.closed);
  double dev = 0.0;
  for (const auto& s : line.samples) dev = std::max(dev, std::abs(s.position.y() - 0.37));
  CHECK(dev < 1e-9);
  CHECK(std::abs(line.samples.front().position.x()) < 1e-9);
  CHECK(std::abs(line.samples.back().position.x() - 1.0) < 1e-9);
  // Fixed spacing everywhere except the two clipped end steps.
  for (std::size_t k = 2; k + 1 < line.samples.size(); ++k)
    CHECK((line.samples[k].position - line.samples[k - 1].position).norm() == doctest::Approx(tp.step).epsilon(1e-9));
  CHECK(line.samples.back().s == doctest::Approx(polylineLength(line)).epsilon(1e-12));
  for (const auto& s : line.samples) {
    CHECK(s.cross_axis.norm() == doctest::Approx(1.0));
    CHECK(std::abs(s.cross_axis.x()) < 1e-12);
    CHECK(s.color == s.lam_n);
  }
}

TEST_CASE("rotation field closes a circle") {
  const double r = 0.5;
  const auto src = testing::rotation_source(Vec2(0, 0), 0.05, 2.0);
  const auto line = trace(src, seedAt(Vec2(r, 0)), params(r / 100, 20.0));
  CHECK(line.closed);
  CHECK(line.end_cause == Termination::closed_loop);
  CHECK(polylineLength(line) == doctest::Approx(2 * M_PI * r).epsilon(0.005));
  CHECK((line.samples.front().position - line.samples.back().position).norm() == 0.0);
  double worst = 0.0;
  for (const auto& s : line.samples) worst = std::max(worst, std::abs(s.position.norm() - r));
  CHECK(worst < 1e-4 * r);
}

TEST_CASE("outward seed returning to its own circle is not a loop") {
  const auto src = testing::rotation_source(Vec2(0, 0), 0.05, 2.0);
  TraceParams tp = params(0.005, 20.0);
  tp.vertex_circles = {{Vec2(0, 0), 0.5}};
  const SeedPoint seed{Vec2(0.5, 0), 0, 0.0, DirectionConstraint::outward, Vec2(0, 0)};
  const auto line = trace(src, seed, tp);
  CHECK_FALSE(line.closed);
  CHECK(line.end_cause == Termination::vertex_circle);
  CHECK(line.start_cause == Termination::none);
}

TEST_CASE("RK2 endpoint error is second order") {
  const double r = 0.5, len = 1.0;
  const auto src = testing::rotation_source(Vec2(0, 0), 0.05, 2.0);
  const Vec2 exact = r * Vec2(std::cos(len / r), std::sin(len / r));
  std::vector<double> err;
  for (int n : {10, 20, 40, 80}) {
    const auto line = trace(src, seedToward(Vec2(r, 0), Vec2(0, 1)), params(len / n, len));
    REQUIRE(line.end_cause == Termination::max_length);
    CHECK(line.samples.back().s == doctest::Approx(len).epsilon(1e-12));
    err.push_back((line.samples.back().position - exact).norm());
  }
  for (std::size_t k = 1; k < err.size(); ++k) CHECK(err[k - 1] / err[k] >= 3.5);
}

TEST_CASE("max length ends both halves exactly") {
  const TensorField f = testing::uniform_square(65, 0.0);
  const auto line = trace(f, seedAt(Vec2(0.5, 0.5)), params(0.01, 0.234));
  CHECK(line.start_cause == Termination::max_length);
  CHECK(line.end_cause == Termination::max_length);
  CHECK(line.samples.front().position.x() == doctest::Approx(0.5 - 0.234).epsilon(1e-12));
  CHECK(line.samples.back().position.x() == doctest::Approx(0.5 + 0.234).epsilon(1e-12));
}

TEST_CASE("vertex circles stop traces on their boundary") {
  const TensorField f = testing::uniform_square(65, 0.0);
  TraceParams tp = params(0.01, 10.0);
  tp.vertex_circles = {{Vec2(0.8, 0.5), 0.1}, {Vec2(0.15, 0.52), 0.05}};
  const auto line = trace(f, seedAt(Vec2(0.5, 0.5)), tp);
  CHECK(line.end_cause == Termination::vertex_circle);
  CHECK(line.start_cause == Termination::vertex_circle);
  CHECK(line.samples.back().position.x() == doctest::Approx(0.7).epsilon(1e-12));
  CHECK((line.samples.front().position - tp.vertex_circles[1].center).norm() == doctest::Approx(0.05).epsilon(1e-12));
}

TEST_CASE("seed diagnostics") {
  const TensorField f = testing::uniform_square(33, 0.0);
  const TraceParams tp = TraceParams::defaults(f);
  SUBCASE("outside the domain") {
    const auto l = trace(f, seedAt(Vec2(1.5, 0.5)), tp);
    CHECK(l.empty());
    CHECK_FALSE(l.diagnostic.empty());
  }
  SUBCASE("degenerate seed") {
    const TensorSource iso = [](const Vec2&) { return std::optional<AlignmentTensor>(AlignmentTensor{}); };
    const auto l = trace(iso, seedAt(Vec2(0.5, 0.5)), tp);
    CHECK(l.empty());
    CHECK(l.diagnostic.find("degenerate") != std::string::npos);
  }
  SUBCASE("inside a vertex circle") {
    TraceParams t2 = tp;
    t2.vertex_circles = {{Vec2(0.5, 0.5), 0.1}};
    CHECK(trace(f, seedAt(Vec2(0.52, 0.5)), t2).empty());
    CHECK_FALSE(trace(f, seedAt(Vec2(0.6, 0.5)), t2).empty());  // on the circle is allowed
  }
  SUBCASE("invalid parameters") {
    TraceParams bad = tp;
    bad.stop_cl = 1.0;
    CHECK_THROWS_AS(trace(f, seedAt(Vec2(0.5, 0.5)), bad), std::invalid_argument);
    bad = tp;
    bad.step = 0.0;
    CHECK_THROWS_AS(trace(f, seedAt(Vec2(0.5, 0.5)), bad), std::invalid_argument);
  }
  SUBCASE("no seeds") { CHECK(trace_all(f, {}, tp).empty()); }
}

TEST_CASE("traces stop at degenerate regions") {
  // Order fades to zero for x > 0.7.
  const TensorSource src = [](const Vec2& p) -> std::optional<AlignmentTensor> {
    if (p.x() < 0 || p.x() > 1 || p.y() < 0 || p.y() > 1) return std::nullopt;
    return testing::planar(std::max(0.0, 0.8 * (0.7 - p.x()) / 0.7), 0.0);
  };
  const auto l = trace(src, seedAt(Vec2(0.3, 0.5)), params(0.01, 5.0));
  CHECK(l.end_cause == Termination::degeneracy);
  CHECK(l.start_cause == Termination::domain_exit);
  for (const auto& s : l.samples) CHECK(s.lam_n - s.lam_m >= 0.05);
}

TEST_CASE("two-defect field: avoidance, continuity and census") {
  const TwoDefectRun run = twoDefectRun();
  REQUIRE(run.tmpl.graph.vertices.size() == 2);
  const auto lines = trace_all(run.gen.field, run.seeds, run.tp);
  REQUIRE(lines.size() == run.seeds.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    const auto& l = lines[i];
    CHECK(l.diagnostic.empty());
    CHECK(l.start_cause != Termination::degeneracy);
    CHECK(l.end_cause != Termination::degeneracy);
    for (const auto& s : l.samples)
      for (const auto& c : run.tp.vertex_circles) CHECK((s.position - c.center).norm() >= c.radius - 1e-9);
    for (std::size_t k = 2; k < l.samples.size(); ++k) {
      const Vec2 a = l.samples[k - 1].position - l.samples[k - 2].position;
      const Vec2 b = l.samples[k].position - l.samples[k - 1].position;
      if (a.norm() > 1e-12 && b.norm() > 1e-12) CHECK(a.dot(b) > 0.0);
    }
    if (run.seeds[i].constraint == DirectionConstraint::outward) {
      // Where the director is tangent to the circle, curvature can tip the
      // first midpoint step slightly inward.
      const Vec2 first = (l.samples[1].position - l.samples[0].position).normalized();
      CHECK(first.dot((run.seeds[i].position - *run.seeds[i].center).normalized()) > -0.05);
      CHECK_FALSE(l.closed);
      CHECK((l.end_cause == Termination::domain_exit || l.end_cause == Termination::vertex_circle ||
             l.end_cause == Termination::max_length));
    }
  }
  const auto census = termination_census(lines);
  CHECK(census.count(Termination::degeneracy) == 0);
}

TEST_CASE("trace_all is independent of the thread count") {
  const TwoDefectRun run = twoDefectRun();
  std::vector<Hyperstreamline> a, b;
  {
    testing::ThreadsEnv env("1");
    a = trace_all(run.gen.field, run.seeds, run.tp);
  }
  {
    testing::ThreadsEnv env("5");
    b = trace_all(run.gen.field, run.seeds, run.tp);
  }
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].samples.size() == b[i].samples.size());
    for (std::size_t k = 0; k < a[i].samples.size(); ++k)
      CHECK(a[i].samples[k].position == b[i].samples[k].position);
  }
}

TEST_CASE("cross sections") {
  SUBCASE("uniaxial field has equal minor axes") {
    const TensorField f = testing::uniform_square(33, 0.4);
    const auto l = trace(f, seedAt(Vec2(0.5, 0.5)), TraceParams::defaults(f));
    for (const auto& s : l.samples) CHECK(s.lam_m == doctest::Approx(s.lam_l).epsilon(1e-12));
    CHECK_THROWS_AS(cross_sections(f, l, 0.0), std::invalid_argument);
  }
  SUBCASE("scene width is 0.6 l_s") {
    const TwoDefectRun run = twoDefectRun();
    auto lines = trace_all(run.gen.field, run.seeds, run.tp);
    const double ls = run.tmpl.params.spacing;
    annotate_cross_sections(run.gen.field, lines, ls);
    double widest = 0.0;
    for (const auto& l : lines)
      for (const auto& s : l.samples) {
        widest = std::max(widest, 2.0 * s.half_width);
        CHECK(s.color == s.lam_n);
      }
    CHECK(std::abs(widest - 0.6 * ls) < 1e-9);
  }
}
