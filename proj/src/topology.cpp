#include "nemvis/topology.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace nemvis {

std::string to_string(CurveKind kind) {
  switch (kind) {
    case CurveKind::edge_segment: return "edge-segment";
    case CurveKind::vertex_circle: return "vertex-circle";
    case CurveKind::boundary: return "boundary";
  }
  return "boundary";
}

CurveKind parse_curve_kind(const std::string& name) {
  if (name == "edge-segment") return CurveKind::edge_segment;
  if (name == "vertex-circle") return CurveKind::vertex_circle;
  if (name == "boundary") return CurveKind::boundary;
  throw std::invalid_argument("unknown curve kind '" + name + "'");
}

double signed_area(const std::vector<Vec2>& poly) {
  double a = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k) {
    const Vec2& p = poly[k];
    const Vec2& q = poly[(k + 1) % poly.size()];
    a += p.x() * q.y() - q.x() * p.y();
  }
  return 0.5 * a;
}

double polyline_length(const std::vector<Vec2>& pts, bool closed) {
  double len = 0.0;
  for (std::size_t k = 1; k < pts.size(); ++k) len += (pts[k] - pts[k - 1]).norm();
  if (closed && pts.size() > 1) len += (pts.front() - pts.back()).norm();
  return len;
}

// --- defect detection -----------------------------------------------------------

namespace {

struct Cluster {
  double weight = 0.0;
  Vec2 weighted = Vec2::Zero();
  double peak_cp = 0.0;
  int cells = 0;

  Vec2 centroid() const { return weighted / weight; }
};

}  // namespace

std::vector<DefectSite> detect_defects(const TensorField& field, double cp_threshold, double cs_threshold) {
  if (!(cp_threshold > 0.0 && cp_threshold < 1.0))
    throw std::invalid_argument("detect_defects: cp_threshold must lie in (0, 1)");
  const int nx = field.nx(), ny = field.ny();
  std::vector<WestinMetrics> metrics(field.size());
  std::vector<std::uint8_t> flagged(field.size(), 0);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!field.inMask(i, j)) continue;
      const auto k = field.index(i, j);
      metrics[k] = westin(field.at(i, j));
      flagged[k] = metrics[k].c_p >= cp_threshold || metrics[k].c_s >= cs_threshold;
    }
  }

  std::vector<Cluster> clusters;
  std::vector<std::uint8_t> seen(field.size(), 0);
  std::vector<std::pair<int, int>> stack;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!flagged[field.index(i, j)] || seen[field.index(i, j)]) continue;
      std::vector<std::pair<int, int>> members;
      stack.assign(1, {i, j});
      seen[field.index(i, j)] = 1;
      while (!stack.empty()) {
        const auto [ci, cj] = stack.back();
        stack.pop_back();
        members.emplace_back(ci, cj);
        for (int dj = -1; dj <= 1; ++dj)
          for (int di = -1; di <= 1; ++di) {
            const int ni = ci + di, nj = cj + dj;
            if (ni < 0 || nj < 0 || ni >= nx || nj >= ny) continue;
            const auto nk = field.index(ni, nj);
            if (flagged[nk] && !seen[nk]) {
              seen[nk] = 1;
              stack.emplace_back(ni, nj);
            }
          }
      }
      Cluster c;
      for (const auto& [mi, mj] : members) c.peak_cp = std::max(c.peak_cp, metrics[field.index(mi, mj)].c_p);
      // Biaxial cores are weighted by c_p, melted cores by c_s.
      const bool biaxial = c.peak_cp >= cp_threshold;
      for (const auto& [mi, mj] : members) {
        const auto& m = metrics[field.index(mi, mj)];
        const double w = biaxial ? m.c_p : std::max(m.c_s, 0.0);
        c.weight += w;
        c.weighted += w * field.node(mi, mj);
      }
      if (!(c.weight > 0.0)) {
        c.weight = static_cast<double>(members.size());
        c.weighted = Vec2::Zero();
        for (const auto& [mi, mj] : members) c.weighted += field.node(mi, mj);
      }
      c.cells = static_cast<int>(members.size());
      clusters.push_back(c);
    }
  }

  const double mergeDistance = 2.0 * std::max(field.dx(), field.dy());
  for (bool merged = true; merged;) {
    merged = false;
    for (std::size_t a = 0; a < clusters.size() && !merged; ++a)
      for (std::size_t b = a + 1; b < clusters.size() && !merged; ++b)
        if ((clusters[a].centroid() - clusters[b].centroid()).norm() < mergeDistance) {
          clusters[a].weight += clusters[b].weight;
          clusters[a].weighted += clusters[b].weighted;
          clusters[a].peak_cp = std::max(clusters[a].peak_cp, clusters[b].peak_cp);
          clusters[a].cells += clusters[b].cells;
          clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
          merged = true;
        }
  }

  std::vector<DefectSite> sites;
  sites.reserve(clusters.size());
  for (const auto& c : clusters) sites.push_back({c.centroid(), c.peak_cp, c.cells});
  std::sort(sites.begin(), sites.end(), [](const DefectSite& a, const DefectSite& b) {
    return a.position.y() != b.position.y() ? a.position.y() < b.position.y()
                                            : a.position.x() < b.position.x();
  });
  return sites;
}

// --- graph -----------------------------------------------------------------------

TemplateGraph build_graph(std::vector<DefectSite> defects) {
  TemplateGraph g;
  for (const auto& d : defects) {
    auto dup = std::find_if(g.vertices.begin(), g.vertices.end(), [&d](const DefectSite& v) {
      return (v.position - d.position).norm() < 1e-12;
    });
    if (dup != g.vertices.end()) {
      dup->peak_cp = std::max(dup->peak_cp, d.peak_cp);
      dup->cluster_cells += d.cluster_cells;
      g.warnings.push_back(fmt::format("merged duplicate defect at ({:.17g}, {:.17g})", d.position.x(),
                                       d.position.y()));
      continue;
    }
    g.vertices.push_back(d);
  }
  std::sort(g.vertices.begin(), g.vertices.end(), [](const DefectSite& a, const DefectSite& b) {
    return a.position.y() != b.position.y() ? a.position.y() < b.position.y()
                                            : a.position.x() < b.position.x();
  });
  std::vector<Vec2> pts;
  pts.reserve(g.vertices.size());
  for (const auto& v : g.vertices) pts.push_back(v.position);
  g.edges = delaunay_edges(pts);
  return g;
}

// --- template ----------------------------------------------------------------------

namespace {

template <typename Pred>
double bisectValid(double valid, double invalid, const Pred& ok) {
  for (int it = 0; it < 80; ++it) {
    const double mid = 0.5 * (valid + invalid);
    if (mid == valid || mid == invalid) break;
    (ok(mid) ? valid : invalid) = mid;
  }
  return valid;
}

// Closed circle or the arcs of it that stay outside the other circles and
// inside the domain.
std::vector<TemplateCurve> circleCurves(const TensorField& field, const std::vector<DefectSite>& vertices,
                                        int owner, double radius) {
  const Vec2 c = vertices[owner].position;
  const double h = std::min(field.dx(), field.dy());
  const int segments = std::max(64, static_cast<int>(std::ceil(2.0 * std::numbers::pi * radius / (0.5 * h))));
  const double step = 2.0 * std::numbers::pi / segments;
  auto point = [&](double theta) { return Vec2(c + radius * Vec2(std::cos(theta), std::sin(theta))); };
  auto ok = [&](double theta) {
    const Vec2 p = point(theta);
    if (!field.contains(p)) return false;
    for (int k = 0; k < static_cast<int>(vertices.size()); ++k)
      if (k != owner && (p - vertices[k].position).norm() < radius) return false;
    return true;
  };

  std::vector<double> angles;
  for (int k = 0; k < segments; ++k) angles.push_back(k * step);
  // Overlap centres guarantee that narrow overlaps get a sample.
  for (int k = 0; k < static_cast<int>(vertices.size()); ++k) {
    const Vec2 d = vertices[k].position - c;
    if (k == owner || d.norm() >= 2.0 * radius) continue;
    double phi = std::atan2(d.y(), d.x());
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    angles.push_back(phi);
  }
  std::sort(angles.begin(), angles.end());

  std::vector<std::uint8_t> valid(angles.size());
  for (std::size_t k = 0; k < angles.size(); ++k) valid[k] = ok(angles[k]);

  TemplateCurve base{CurveKind::vertex_circle, {}, false, owner};
  const auto firstInvalid = std::find(valid.begin(), valid.end(), 0);
  if (firstInvalid == valid.end()) {
    base.closed = true;
    for (double a : angles) base.points.push_back(point(a));
    return {base};
  }

  // Unwrap starting at an invalid sample so every run is contiguous.
  const std::size_t m = angles.size();
  const std::size_t s0 = static_cast<std::size_t>(firstInvalid - valid.begin());
  std::vector<double> u(m + 1);
  std::vector<std::uint8_t> uv(m + 1);
  for (std::size_t k = 0; k <= m; ++k) {
    const std::size_t idx = (s0 + k) % m;
    u[k] = angles[idx] + (s0 + k >= m ? 2.0 * std::numbers::pi : 0.0);
    uv[k] = valid[idx];
  }
  std::vector<TemplateCurve> arcs;
  for (std::size_t k = 1; k < m; ++k) {
    if (!uv[k] || uv[k - 1]) continue;
    std::size_t e = k;
    while (uv[e + 1]) ++e;
    const double start = bisectValid(u[k], u[k - 1], ok);
    const double end = bisectValid(u[e], u[e + 1], ok);
    if ((end - start) * radius > 1e-6 * radius) {
      TemplateCurve arc = base;
      arc.points.push_back(point(start));
      for (std::size_t q = k; q <= e; ++q)
        if (u[q] - start > 0.1 * step && end - u[q] > 0.1 * step) arc.points.push_back(point(u[q]));
      arc.points.push_back(point(end));
      arcs.push_back(std::move(arc));
    }
    k = e;
  }
  return arcs;
}

// Pieces of the segment a-b outside every circle and inside the domain.
std::vector<TemplateCurve> segmentCurves(const TensorField& field, const std::vector<VertexCircle>& circles,
                                         const Vec2& a, const Vec2& b) {
  const Vec2 d = b - a;
  const double len = d.norm();
  const double h = std::min(field.dx(), field.dy());
  std::vector<std::pair<double, double>> keep{{0.0, 1.0}};
  for (const auto& c : circles) {
    const Vec2 f = a - c.center;
    const double qa = d.squaredNorm(), qb = 2.0 * f.dot(d), qc = f.squaredNorm() - c.radius * c.radius;
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc <= 0.0) continue;
    const double sq = std::sqrt(disc);
    const double t1 = (-qb - sq) / (2.0 * qa), t2 = (-qb + sq) / (2.0 * qa);
    std::vector<std::pair<double, double>> next;
    for (const auto& [lo, hi] : keep) {
      if (t2 <= lo || t1 >= hi) {
        next.emplace_back(lo, hi);
        continue;
      }
      if (t1 > lo) next.emplace_back(lo, t1);
      if (t2 < hi) next.emplace_back(t2, hi);
    }
    keep = std::move(next);
  }

  auto ok = [&](double t) { return field.contains(a + t * d); };
  std::vector<std::pair<double, double>> pieces;
  for (const auto& [lo, hi] : keep) {
    const int n = std::max(2, static_cast<int>(std::ceil((hi - lo) * len / (0.5 * h))));
    double runStart = ok(lo) ? lo : -1.0;
    double prev = lo;
    for (int k = 1; k <= n; ++k) {
      const double t = lo + (hi - lo) * k / n;
      const bool v = ok(t);
      if (v && runStart < 0.0) runStart = bisectValid(t, prev, ok);
      if (!v && runStart >= 0.0) {
        pieces.emplace_back(runStart, bisectValid(prev, t, ok));
        runStart = -1.0;
      }
      prev = t;
    }
    if (runStart >= 0.0) pieces.emplace_back(runStart, hi);
  }

  std::vector<TemplateCurve> out;
  for (const auto& [lo, hi] : pieces) {
    const double plen = (hi - lo) * len;
    if (plen < 0.5 * h) continue;
    TemplateCurve seg{CurveKind::edge_segment, {}, false, std::nullopt};
    const int n = std::max(2, static_cast<int>(std::ceil(plen / (0.5 * h))));
    for (int k = 0; k <= n; ++k) seg.points.push_back(a + (lo + (hi - lo) * k / n) * d);
    out.push_back(std::move(seg));
  }
  return out;
}

}  // namespace

std::vector<VertexCircle> vertex_circles(const TopologicalTemplate& tmpl) {
  std::vector<VertexCircle> out;
  for (const auto& v : tmpl.graph.vertices) out.push_back({v.position, tmpl.params.vertex_radius});
  return out;
}

TopologicalTemplate build_template(const TensorField& field, const TemplateGraph& graph, double vertex_radius) {
  if (!(vertex_radius > 0.0)) throw std::invalid_argument("build_template: vertex radius must be > 0");
  TopologicalTemplate t;
  t.graph = graph;
  t.params.vertex_radius = vertex_radius;

  if (graph.vertices.empty()) {
    t.curves = extract_boundary(field);
    if (t.curves.empty()) throw std::runtime_error("build_template: no defects and no domain boundary");
    return t;
  }

  for (int v = 0; v < static_cast<int>(graph.vertices.size()); ++v) {
    auto arcs = circleCurves(field, graph.vertices, v, vertex_radius);
    t.curves.insert(t.curves.end(), arcs.begin(), arcs.end());
  }
  const auto circles = vertex_circles(t);
  for (const auto& [i, j] : graph.edges) {
    auto segs = segmentCurves(field, circles, graph.vertices[i].position, graph.vertices[j].position);
    t.curves.insert(t.curves.end(), segs.begin(), segs.end());
  }
  return t;
}

// --- boundary --------------------------------------------------------------------

namespace {

constexpr int kSmoothingPasses = 20;
constexpr double kTaubinLambda = 0.5;
constexpr double kTaubinMu = -0.53;

void laplacianPass(std::vector<Vec2>& poly, double factor) {
  const std::size_t n = poly.size();
  std::vector<Vec2> next(n);
  for (std::size_t k = 0; k < n; ++k) {
    const Vec2& prev = poly[(k + n - 1) % n];
    const Vec2& succ = poly[(k + 1) % n];
    next[k] = poly[k] + factor * (0.5 * (prev + succ) - poly[k]);
  }
  poly = std::move(next);
}

}  // namespace

std::vector<TemplateCurve> extract_boundary(const TensorField& field) {
  const int nx = field.nx(), ny = field.ny();
  auto inside = [&](int i, int j) {
    return i >= 0 && j >= 0 && i < nx && j < ny && field.inMask(i, j);
  };
  // Edge keys: orientation bit, then padded node coordinates.
  auto key = [&](int vertical, int i, int j) -> std::int64_t {
    return (static_cast<std::int64_t>(vertical) << 60) |
           (static_cast<std::int64_t>(j + 1) << 30) | static_cast<std::int64_t>(i + 1);
  };
  auto position = [&](std::int64_t k) {
    const int vertical = static_cast<int>(k >> 60);
    const int j = static_cast<int>((k >> 30) & ((1 << 30) - 1)) - 1;
    const int i = static_cast<int>(k & ((1 << 30) - 1)) - 1;
    const Vec2 p(field.ox() + i * field.dx(), field.oy() + j * field.dy());
    return vertical ? Vec2(p + Vec2(0.0, 0.5 * field.dy())) : Vec2(p + Vec2(0.5 * field.dx(), 0.0));
  };

  std::map<std::int64_t, std::int64_t> next;
  for (int cj = -1; cj < ny; ++cj) {
    for (int ci = -1; ci < nx; ++ci) {
      const int cx[4] = {ci, ci + 1, ci + 1, ci};
      const int cy[4] = {cj, cj, cj + 1, cj + 1};
      const std::int64_t edges[4] = {key(0, ci, cj), key(1, ci + 1, cj), key(0, ci, cj + 1), key(1, ci, cj)};
      struct Crossing {
        std::int64_t edge;
        bool start;
      };
      std::vector<Crossing> xs;
      int insideCount = 0;
      for (int e = 0; e < 4; ++e) {
        const bool a = inside(cx[e], cy[e]);
        const bool b = inside(cx[(e + 1) % 4], cy[(e + 1) % 4]);
        insideCount += a;
        if (a != b) xs.push_back({edges[e], a});
      }
      const std::size_t m = xs.size();
      // Saddles are resolved with the centre inside (mean value 1/2).
      for (std::size_t s = 0; s < m; ++s) {
        if (!xs[s].start) continue;
        const std::size_t to = m == 4 && insideCount * 2 < 4 ? (s + m - 1) % m : (s + 1) % m;
        next[xs[s].edge] = xs[to].edge;
      }
    }
  }

  const double h = std::min(field.dx(), field.dy());
  const double inset = 0.75 * h;
  std::vector<TemplateCurve> curves;
  std::map<std::int64_t, bool> used;
  for (const auto& [startEdge, unused] : next) {
    if (used[startEdge]) continue;
    std::vector<Vec2> poly;
    std::int64_t e = startEdge;
    while (!used[e]) {
      used[e] = true;
      poly.push_back(position(e));
      const auto it = next.find(e);
      if (it == next.end()) break;
      e = it->second;
    }
    if (poly.size() < 4) continue;

    for (int pass = 0; pass < kSmoothingPasses; ++pass) {
      laplacianPass(poly, kTaubinLambda);
      laplacianPass(poly, kTaubinMu);
    }
    const std::size_t n = poly.size();
    std::vector<Vec2> moved;
    moved.reserve(n);
    for (std::size_t k = 0; k < n; ++k) {
      const Vec2 t = poly[(k + 1) % n] - poly[(k + n - 1) % n];
      if (t.norm() == 0.0) continue;
      const Vec2 normal = Vec2(-t.y(), t.x()).normalized();
      Vec2 p = poly[k] + inset * normal;
      for (int tries = 0; tries < 8 && !field.contains(p); ++tries) p += 0.25 * h * normal;
      if (field.contains(p)) moved.push_back(p);
    }
    if (moved.size() < 4) continue;
    curves.push_back({CurveKind::boundary, std::move(moved), true, std::nullopt});
  }
  return curves;
}

}  // namespace nemvis
