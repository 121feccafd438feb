#include "nemvis/field_gen.hpp"
#include "nemvis/topology.hpp"
#include "support.hpp"

#include <doctest.h>

#include <random>
#include <set>

using namespace nemvis;

namespace {

// Every triangle whose circumcircle holds no other point; the union of
// their edges is the Delaunay graph for points in general position.
std::set<Edge> bruteForceDelaunay(const std::vector<Vec2>& p) {
  std::set<Edge> edges;
  const int n = static_cast<int>(p.size());
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const Vec2 a = p[i], b = p[j], c = p[k];
        const double d = 2.0 * (a.x() * (b.y() - c.y()) + b.x() * (c.y() - a.y()) + c.x() * (a.y() - b.y()));
        if (std::abs(d) < 1e-12) continue;
        const Vec2 o((a.squaredNorm() * (b.y() - c.y()) + b.squaredNorm() * (c.y() - a.y()) +
                      c.squaredNorm() * (a.y() - b.y())) / d,
                     (a.squaredNorm() * (c.x() - b.x()) + b.squaredNorm() * (a.x() - c.x()) +
                      c.squaredNorm() * (b.x() - a.x())) / d);
        const double r = (a - o).norm();
        bool empty = true;
        for (int m = 0; m < n && empty; ++m)
          if (m != i && m != j && m != k && (p[m] - o).norm() < r * (1.0 - 1e-12)) empty = false;
        if (empty) {
          edges.insert({i, j});
          edges.insert({i, k});
          edges.insert({j, k});
        }
      }
  return edges;
}

DefectSite site(double x, double y) { return {Vec2(x, y), 0.9, 4}; }

TensorField twoDefectAnsatz(int n) {
  const MaterialParams p = MaterialParams{}.with_nematic_length(0.02);
  return ansatz_field(GridSpec::spanning(n, n, 0, 0, 1, 1),
                      {{Vec2(0.3, 0.5), 0.5, 0.0}, {Vec2(0.7, 0.5), 0.5, 0.0}}, p);
}

}  // namespace

TEST_CASE("Delaunay edges match the brute-force empty-circle oracle") {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 300; ++trial) {
    const int n = 3 + trial % 10;
    std::vector<Vec2> pts;
    for (int k = 0; k < n; ++k) pts.emplace_back(u(rng), u(rng));
    const auto got = delaunay_edges(pts);
    const std::set<Edge> want = bruteForceDelaunay(pts);
    CHECK(std::set<Edge>(got.begin(), got.end()) == want);
    CHECK(std::is_sorted(got.begin(), got.end()));
  }
}

TEST_CASE("Delaunay special configurations") {
  SUBCASE("empty and single") {
    CHECK(delaunay_edges(std::vector<Vec2>{}).empty());
    CHECK(delaunay_edges(std::vector<Vec2>{Vec2(0, 0)}).empty());
  }
  SUBCASE("two points") { CHECK(delaunay_edges(std::vector<Vec2>{Vec2(0, 0), Vec2(1, 0)}).size() == 1); }
  SUBCASE("unit square corners: four sides and one diagonal") {
    const std::vector<Vec2> sq{Vec2(0, 0), Vec2(1, 0), Vec2(1, 1), Vec2(0, 1)};
    const auto e = delaunay_edges(sq);
    CHECK(e.size() == 5);
    int diagonals = 0;
    for (auto [a, b] : e) diagonals += (sq[a] - sq[b]).norm() > 1.2;
    CHECK(diagonals == 1);
  }
  SUBCASE("collinear points form a chain") {
    const std::vector<Vec2> line{Vec2(0, 0), Vec2(2, 0), Vec2(1, 0), Vec2(3, 0)};
    const auto e = delaunay_edges(line);
    CHECK(std::set<Edge>(e.begin(), e.end()) == std::set<Edge>{{0, 2}, {1, 2}, {1, 3}});
  }
  SUBCASE("regular hexagon with center") {
    std::vector<Vec2> pts{Vec2(0, 0)};
    for (int k = 0; k < 6; ++k) pts.emplace_back(std::cos(k * M_PI / 3), std::sin(k * M_PI / 3));
    CHECK(delaunay_edges(pts).size() == 12);
  }
  SUBCASE("no accepted edges cross") {
    std::mt19937_64 rng(5);
    std::uniform_int_distribution<int> u(0, 4);
    std::vector<Vec2> grid;
    for (int k = 0; k < 14; ++k) grid.emplace_back(u(rng), u(rng));
    std::vector<Vec2> uniq;
    for (const auto& p : grid)
      if (std::none_of(uniq.begin(), uniq.end(), [&](const Vec2& q) { return (p - q).norm() < 1e-9; }))
        uniq.push_back(p);
    const auto e = delaunay_edges(uniq);
    for (std::size_t a = 0; a < e.size(); ++a)
      for (std::size_t b = a + 1; b < e.size(); ++b)
        CHECK_FALSE(segments_cross(uniq[e[a].first], uniq[e[a].second], uniq[e[b].first], uniq[e[b].second]));
  }
}

TEST_CASE("defect detection") {
  SUBCASE("uniform field has no defects") {
    CHECK(detect_defects(testing::uniform_square(40, 0.4)).empty());
  }
  SUBCASE("two ansatz cores are found within two cells") {
    const TensorField f = twoDefectAnsatz(101);
    const auto d = detect_defects(f);
    REQUIRE(d.size() == 2);
    CHECK((d[0].position - Vec2(0.3, 0.5)).norm() < 2 * f.dx());
    CHECK((d[1].position - Vec2(0.7, 0.5)).norm() < 2 * f.dx());
    CHECK(d[0].peak_cp > kDefaultCpThreshold);
  }
  SUBCASE("masked-out cores are ignored") {
    TensorField f = twoDefectAnsatz(101);
    mask_disk(f, Vec2(0.7, 0.5), 0.15);
    const auto d = detect_defects(f);
    REQUIRE(d.size() == 1);
    CHECK((d[0].position - Vec2(0.7, 0.5)).norm() < 2 * f.dx());
  }
}

TEST_CASE("graph construction") {
  const auto g = build_graph({site(0.8, 0.2), site(0.2, 0.2), site(0.5, 0.7)});
  REQUIRE(g.vertices.size() == 3);
  CHECK(g.vertices[0].position.x() == doctest::Approx(0.2));  // sorted by (y, x)
  CHECK(g.vertices[2].position.y() == doctest::Approx(0.7));
  CHECK(g.edges.size() == 3);
  const auto dup = build_graph({site(0.5, 0.5), site(0.5, 0.5)});
  CHECK(dup.vertices.size() == 1);
  CHECK(dup.warnings.size() == 1);
  CHECK(build_graph({}).edges.empty());
}

TEST_CASE("boundary extraction") {
  SUBCASE("disk perimeter within 2%") {
    TensorField f = testing::uniform_square(256, 0.0);
    mask_disk(f, Vec2(0.5, 0.5), 0.45);
    const auto curves = extract_boundary(f);
    REQUIRE(curves.size() == 1);
    CHECK(curves[0].closed);
    CHECK(curves[0].kind == CurveKind::boundary);
    CHECK(polyline_length(curves[0].points, true) == doctest::Approx(2 * M_PI * 0.45).epsilon(0.02));
    CHECK(signed_area(curves[0].points) > 0.0);
    for (const auto& p : curves[0].points) CHECK(f.contains(p));
  }
  SUBCASE("annulus gives an outer and an inner contour") {
    TensorField f = testing::uniform_square(160, 0.0);
    for (int j = 0; j < f.ny(); ++j)
      for (int i = 0; i < f.nx(); ++i) {
        const double r = (f.node(i, j) - Vec2(0.5, 0.5)).norm();
        f.setMask(i, j, r <= 0.45 && r >= 0.2);
      }
    const auto curves = extract_boundary(f);
    REQUIRE(curves.size() == 2);
    int ccw = 0, cw = 0;
    for (const auto& c : curves) (signed_area(c.points) > 0 ? ccw : cw)++;
    CHECK(ccw == 1);
    CHECK(cw == 1);
  }
  SUBCASE("full square is one counterclockwise loop") {
    const auto curves = extract_boundary(testing::uniform_square(64, 0.0));
    REQUIRE(curves.size() == 1);
    CHECK(signed_area(curves[0].points) == doctest::Approx(1.0).epsilon(0.05));
  }
}

TEST_CASE("template structure") {
  SUBCASE("two defects: two circles and one trimmed edge") {
    const TensorField f = twoDefectAnsatz(129);
    const double r = 0.05;
    const auto t = build_template(f, build_graph(detect_defects(f)), r);
    int circles = 0, edges = 0, boundary = 0;
    for (const auto& c : t.curves) {
      circles += c.kind == CurveKind::vertex_circle;
      edges += c.kind == CurveKind::edge_segment;
      boundary += c.kind == CurveKind::boundary;
    }
    CHECK(circles == 2);
    CHECK(edges == 1);
    CHECK(boundary == 0);
    const auto vc = vertex_circles(t);
    for (const auto& c : t.curves)
      for (const auto& p : c.points)
        for (std::size_t v = 0; v < vc.size(); ++v) {
          if (c.owner_vertex && *c.owner_vertex == static_cast<int>(v)) continue;
          CHECK((p - vc[v].center).norm() >= vc[v].radius - 1e-9);
        }
    for (const auto& c : t.curves) {
      if (c.kind != CurveKind::edge_segment) continue;
      const double span = (t.graph.vertices[0].position - t.graph.vertices[1].position).norm();
      CHECK(polyline_length(c.points, false) == doctest::Approx(span - 2 * r).epsilon(1e-9));
    }
  }
  SUBCASE("no defects: boundary only") {
    TensorField f = testing::uniform_square(96, 0.3);
    mask_disk(f, Vec2(0.5, 0.5), 0.5);
    const auto t = build_template(f, build_graph(detect_defects(f)), 0.05);
    REQUIRE(!t.curves.empty());
    for (const auto& c : t.curves) CHECK(c.kind == CurveKind::boundary);
  }
  SUBCASE("overlapping circles are clipped against each other") {
    const TensorField f = testing::uniform_square(129, 0.0);
    const auto g = build_graph({site(0.45, 0.5), site(0.55, 0.5)});
    const auto t = build_template(f, g, 0.08);
    const auto vc = vertex_circles(t);
    for (const auto& c : t.curves) {
      CHECK(c.kind == CurveKind::vertex_circle);  // the edge lies inside both circles
      for (const auto& p : c.points)
        for (std::size_t v = 0; v < vc.size(); ++v)
          if (static_cast<int>(v) != *c.owner_vertex) CHECK((p - vc[v].center).norm() >= vc[v].radius - 1e-9);
    }
  }
  SUBCASE("invalid radius") {
    CHECK_THROWS_AS(build_template(testing::uniform_square(16, 0.0), TemplateGraph{}, 0.0), std::invalid_argument);
  }
}

TEST_CASE("curve kind names") {
  for (auto k : {CurveKind::edge_segment, CurveKind::vertex_circle, CurveKind::boundary})
    CHECK(parse_curve_kind(to_string(k)) == k);
  CHECK_THROWS(parse_curve_kind("spiral"));
}
