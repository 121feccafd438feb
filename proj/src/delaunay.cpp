#include "nemvis/delaunay.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace nemvis {

namespace {

double cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c) {
  const Eigen::Vector2d u = b - a, v = c - a;
  return u.x() * v.y() - u.y() * v.x();
}

enum class EdgeClass { rejected, tied, strict };

// Feasible range of t for circle centres mid + t * perp that keep every
// other point on or outside the circle through p[i] and p[j].
EdgeClass classify(std::span<const Eigen::Vector2d> p, int i, int j) {
  constexpr double tol = 1e-9;
  const Eigen::Vector2d mid = 0.5 * (p[i] + p[j]);
  const Eigen::Vector2d d = p[j] - p[i];
  const Eigen::Vector2d perp(-d.y(), d.x());
  const double len2 = d.squaredNorm();
  const double r2 = (mid - p[i]).squaredNorm();
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  for (int k = 0; k < static_cast<int>(p.size()); ++k) {
    if (k == i || k == j) continue;
    const double a = ((mid - p[k]).squaredNorm() - r2) / len2;
    const double b = 2.0 * perp.dot(p[i] - p[k]) / len2;
    const double bscale = 2.0 * (p[i] - p[k]).norm() / std::sqrt(len2);
    if (std::abs(b) <= 1e-12 * bscale) {
      if (a < -tol) return EdgeClass::rejected;
      continue;
    }
    const double t = -a / b;
    if (b > 0.0) lo = std::max(lo, t);
    else hi = std::min(hi, t);
    if (lo > hi + tol) return EdgeClass::rejected;
  }
  return hi - lo > tol ? EdgeClass::strict : EdgeClass::tied;
}

}  // namespace

bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    const Eigen::Vector2d& d) {
  const double scale = std::max({(b - a).squaredNorm(), (d - c).squaredNorm(), 1e-300});
  const double eps = 1e-12 * scale;
  const double d1 = cross(a, b, c), d2 = cross(a, b, d);
  const double d3 = cross(c, d, a), d4 = cross(c, d, b);
  return ((d1 > eps && d2 < -eps) || (d1 < -eps && d2 > eps)) &&
         ((d3 > eps && d4 < -eps) || (d3 < -eps && d4 > eps));
}

std::vector<Edge> delaunay_edges(std::span<const Eigen::Vector2d> points) {
  const int n = static_cast<int>(points.size());
  std::vector<Edge> strict, tied;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      switch (classify(points, i, j)) {
        case EdgeClass::strict: strict.emplace_back(i, j); break;
        case EdgeClass::tied: tied.emplace_back(i, j); break;
        case EdgeClass::rejected: break;
      }
    }
  }

  auto length2 = [&points](const Edge& e) { return (points[e.first] - points[e.second]).squaredNorm(); };
  std::stable_sort(tied.begin(), tied.end(),
                   [&](const Edge& x, const Edge& y) { return length2(x) < length2(y); });

  std::vector<Edge> edges = strict;
  for (const Edge& e : tied) {
    const bool crosses = std::any_of(edges.begin(), edges.end(), [&](const Edge& f) {
      return segments_cross(points[e.first], points[e.second], points[f.first], points[f.second]);
    });
    if (!crosses) edges.push_back(e);
  }
  std::sort(edges.begin(), edges.end());
  return edges;
}

}  // namespace nemvis
