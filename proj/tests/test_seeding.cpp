#include "nemvis/field_gen.hpp"
#include "nemvis/seeding.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>

using namespace nemvis;

namespace {

TemplateCurve segment(Vec2 a, Vec2 b) { return {CurveKind::edge_segment, {a, b}, false, std::nullopt}; }

TemplateCurve circle(Vec2 c, double r, int n = 720) {
  TemplateCurve t{CurveKind::boundary, {}, true, std::nullopt};
  for (int k = 0; k < n; ++k) t.points.push_back(c + r * Vec2(std::cos(2 * M_PI * k / n), std::sin(2 * M_PI * k / n)));
  return t;
}

// Director angle 2x: w along a horizontal line is 1 - |cos 2x|, whose
// integral from 0 is x - G(x) with G the integral of |cos 2t|.
TensorField bendField(int n) {
  TensorField f(n, n, 1.0 / (n - 1), 1.0 / (n - 1));
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) f.at(i, j) = testing::planar(0.8, 2.0 * f.node(i, j).x());
  return f;
}

double bendWeighted(double x) {
  const double g = 2 * x <= M_PI / 2 ? 0.5 * std::sin(2 * x) : 1.0 - 0.5 * std::sin(2 * x);
  return x - g;
}

}  // namespace

TEST_CASE("seed count law on straight segments") {
  const TensorField f = testing::uniform_square(129, 0.0);  // director along x
  const double sp = 0.1;
  SUBCASE("orthogonal segment of length 3 sp gives 4 seeds at spacing sp") {
    const ParamCurve c(segment(Vec2(0.5, 0.2), Vec2(0.5, 0.2 + 3 * sp)));
    CHECK(renormalized_length(c, f) == doctest::Approx(3 * sp).epsilon(1e-9));
    const auto seeds = place_seeds(c, f, sp);
    REQUIRE(seeds.size() == 4);
    for (std::size_t k = 1; k < seeds.size(); ++k)
      CHECK((seeds[k].position - seeds[k - 1].position).norm() == doctest::Approx(sp).epsilon(0.01));
    CHECK(seeds.front().position.y() == doctest::Approx(0.2).epsilon(1e-6));
  }
  SUBCASE("parallel segment gives 1 seed at the midpoint") {
    const ParamCurve c(segment(Vec2(0.2, 0.5), Vec2(0.2 + 3 * sp, 0.5)));
    CHECK(renormalized_length(c, f) == doctest::Approx(0.0).epsilon(1e-12));
    const auto seeds = place_seeds(c, f, sp);
    REQUIRE(seeds.size() == 1);
    CHECK((seeds[0].position - Vec2(0.2 + 1.5 * sp, 0.5)).norm() < 1e-9);
  }
  SUBCASE("diagonal segment weighs 1 - cos 45") {
    const ParamCurve c(segment(Vec2(0.2, 0.2), Vec2(0.8, 0.8)));
    CHECK(renormalized_length(c, f) == doctest::Approx(c.length() * (1 - std::sqrt(0.5))).epsilon(1e-6));
  }
}

TEST_CASE("circle in a uniform field") {
  const TensorField f = testing::uniform_square(257, 0.0);
  const ParamCurve c(circle(Vec2(0.5, 0.5), 0.5));
  const double exact = (2 * M_PI - 4) * 0.5;
  CHECK(renormalized_length(c, f) == doctest::Approx(exact).epsilon(0.005));
  const auto seeds = place_seeds(c, f, 0.08);
  CHECK(seeds.size() == 14);
  CHECK(seeds[0].s == 0.0);
  for (const auto& s : seeds) CHECK((s.position - Vec2(0.5, 0.5)).norm() == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("weighted gaps equal the spacing in a varying field") {
  const TensorField f = bendField(257);
  const ParamCurve c(segment(Vec2(0.1, 0.3), Vec2(0.95, 0.3)));
  const double total = bendWeighted(0.95) - bendWeighted(0.1);
  CHECK(renormalized_length(c, f) == doctest::Approx(total).epsilon(1e-3));
  const double sp = 0.04;
  const auto seeds = place_seeds(c, f, sp);
  REQUIRE(seeds.size() == static_cast<std::size_t>(std::floor(total / sp) + 1));
  for (std::size_t k = 1; k < seeds.size(); ++k) {
    const double gap = bendWeighted(seeds[k].position.x()) - bendWeighted(seeds[k - 1].position.x());
    CHECK(gap == doctest::Approx(sp).epsilon(0.01));
  }
  // Residual split equally between the two ends.
  const double head = bendWeighted(seeds.front().position.x()) - bendWeighted(0.1);
  const double tail = bendWeighted(0.95) - bendWeighted(seeds.back().position.x());
  CHECK(head == doctest::Approx(tail).epsilon(0.02));
}

TEST_CASE("parametric curve tangent matches finite differences") {
  const ParamCurve open(TemplateCurve{CurveKind::edge_segment,
                                      {Vec2(0.1, 0.1), Vec2(0.3, 0.25), Vec2(0.5, 0.2), Vec2(0.8, 0.6)},
                                      false,
                                      std::nullopt});
  const ParamCurve closed(circle(Vec2(0.5, 0.5), 0.3, 40));
  for (const ParamCurve* c : {&open, &closed}) {
    for (int k = 1; k < 50; ++k) {
      const double s = c->length() * k / 50.0, e = 1e-6;
      const Vec2 fd = (c->position(s + e) - c->position(s - e)) / (2 * e);
      CHECK((fd - c->tangent(s)).norm() < 1e-5);
      CHECK(c->tangent(s).norm() == doctest::Approx(1.0).epsilon(1e-9));
    }
  }
  CHECK(closed.length() == doctest::Approx(2 * M_PI * 0.3).epsilon(1e-3));
  CHECK((closed.position(0.0) - closed.position(closed.length())).norm() < 1e-12);
  CHECK_THROWS_AS(ParamCurve(segment(Vec2(0.1, 0.1), Vec2(0.1, 0.1))), std::invalid_argument);
}

TEST_CASE("seed count satisfies the spacing bounds") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int t = 0; t < 100; ++t) {
    const double sp = 0.01 + 0.2 * u(rng);
    const double sprime = 3.0 * u(rng);
    const int open = seed_count(sprime, sp, false);
    CHECK((open - 1) * sp <= sprime * (1 + 1e-12));
    CHECK(open * sp > sprime);
    const int closed = seed_count(sprime, sp, true);
    CHECK(closed >= 1);
    if (sprime >= 0.5 * sp) CHECK(std::abs(closed - sprime / sp) <= 0.5 + 1e-9);
  }
  CHECK(seed_count(0.3, 0.1, false) == 4);
  CHECK(seed_count(0.0, 0.1, false) == 1);
  CHECK_THROWS_AS(seed_count(1.0, 0.0, false), std::invalid_argument);
}

TEST_CASE("template seeding") {
  const MaterialParams p = MaterialParams{}.with_nematic_length(0.02);
  const TensorField f = ansatz_field(GridSpec::spanning(129, 129, 0, 0, 1, 1),
                                     {{Vec2(0.3, 0.5), 0.5, 0.0}, {Vec2(0.7, 0.5), -0.5, 0.0}}, p);
  const double r = 0.05;
  TopologicalTemplate t = build_template(f, build_graph(detect_defects(f)), r);
  const auto seeds = seed_template(t, f, {0.04, r, 2.0});
  REQUIRE(!seeds.empty());
  for (const auto& s : seeds) {
    const auto& c = t.curves.at(static_cast<std::size_t>(s.curve));
    if (c.kind == CurveKind::vertex_circle) {
      CHECK(s.constraint == DirectionConstraint::outward);
      REQUIRE(s.center);
      CHECK((s.position - *s.center).norm() == doctest::Approx(r).epsilon(1e-12));
    } else {
      CHECK(s.constraint == DirectionConstraint::both);
      CHECK_FALSE(s.center);
    }
  }
  CHECK(std::is_sorted(seeds.begin(), seeds.end(), [](const SeedPoint& a, const SeedPoint& b) {
    return a.curve < b.curve;
  }));

  SUBCASE("doubling the spacing never adds seeds") {
    std::size_t prev = seeds.size();
    for (double sp : {0.08, 0.16, 0.32}) {
      const auto fewer = seed_template(t, f, {sp, r, 2.0});
      CHECK(fewer.size() <= prev);
      prev = fewer.size();
    }
  }
  SUBCASE("parameter validation") {
    CHECK_THROWS_AS(seed_template(t, f, {0.0, r, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(seed_template(t, f, {0.04, r, 0.5}), std::invalid_argument);
  }
  SUBCASE("result does not depend on the thread count") {
    testing::ThreadsEnv one("1");
    const auto serial = seed_template(t, f, {0.04, r, 2.0});
    REQUIRE(serial.size() == seeds.size());
    for (std::size_t k = 0; k < seeds.size(); ++k) CHECK(serial[k].position == seeds[k].position);
  }
}

TEST_CASE("direction constraint names") {
  CHECK(parse_constraint(to_string(DirectionConstraint::outward)) == DirectionConstraint::outward);
  CHECK(parse_constraint("both") == DirectionConstraint::both);
  CHECK_THROWS(parse_constraint("inward"));
}
