#pragma once

#include <Eigen/Dense>

#include <span>
#include <utility>
#include <vector>

namespace nemvis {

using Edge = std::pair<int, int>;

/// Edges of a Delaunay triangulation of distinct points, built from the
/// empty-circle property: edge (i, j) qualifies when some circle through
/// both endpoints holds no other point strictly inside. Cocircular ties are
/// resolved shortest-first without crossings. Collinear input yields the
/// nearest-neighbour chain. Edges are returned with i < j, sorted.
std::vector<Edge> delaunay_edges(std::span<const Eigen::Vector2d> points);

/// True when open segments ab and cd cross at a single interior point.
bool segments_cross(const Eigen::Vector2d& a, const Eigen::Vector2d& b, const Eigen::Vector2d& c,
                    const Eigen::Vector2d& d);

}  // namespace nemvis
