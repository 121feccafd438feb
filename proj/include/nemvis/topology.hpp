#pragma once

#include "nemvis/delaunay.hpp"
#include "nemvis/field.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nemvis {

/// Biaxiality level that flags a node as part of a defect core. Discrete
/// cores peak well below c_p = 1; see README for the calibration.
inline constexpr double kDefaultCpThreshold = 0.5;
/// Melted (near isotropic) cores are flagged as well.
inline constexpr double kDefaultCsThreshold = 0.9;

struct DefectSite {
  Vec2 position{0.0, 0.0};
  double peak_cp = 0.0;
  int cluster_cells = 0;
};

struct TemplateGraph {
  std::vector<DefectSite> vertices;
  std::vector<Edge> edges;
  std::vector<std::string> warnings;
};

enum class CurveKind { edge_segment, vertex_circle, boundary };

std::string to_string(CurveKind kind);
CurveKind parse_curve_kind(const std::string& name);

struct TemplateCurve {
  CurveKind kind = CurveKind::boundary;
  std::vector<Vec2> points;
  bool closed = false;
  std::optional<int> owner_vertex;
};

struct TemplateParams {
  double vertex_radius = 0.0;
  double spacing = 0.0;
  double ratio = 2.0;
  double cp_threshold = kDefaultCpThreshold;
  double cs_threshold = kDefaultCsThreshold;
};

struct TopologicalTemplate {
  TemplateGraph graph;
  std::vector<TemplateCurve> curves;
  TemplateParams params;
};

struct VertexCircle {
  Vec2 center;
  double radius;
};

/// Clusters (8-connected) of masked nodes with c_p >= cp_threshold or
/// c_s >= cs_threshold, each reduced to a weighted centroid. Clusters closer
/// than two grid cells are merged. Sorted by (y, x).
std::vector<DefectSite> detect_defects(const TensorField& field, double cp_threshold = kDefaultCpThreshold,
                                       double cs_threshold = kDefaultCsThreshold);

/// Nearest-neighbour graph of the defects via Delaunay triangulation.
TemplateGraph build_graph(std::vector<DefectSite> defects);

/// Circles around every vertex and graph edges trimmed to the circles, or
/// the domain boundary when the graph has no vertices.
TopologicalTemplate build_template(const TensorField& field, const TemplateGraph& graph,
                                   double vertex_radius);

/// Closed contours of the mask at level 1/2, smoothed and moved inside the
/// sampleable region. Outer contours run counterclockwise, holes clockwise.
std::vector<TemplateCurve> extract_boundary(const TensorField& field);

std::vector<VertexCircle> vertex_circles(const TopologicalTemplate& tmpl);

/// Shoelace area; positive for counterclockwise polygons.
double signed_area(const std::vector<Vec2>& polygon);
double polyline_length(const std::vector<Vec2>& points, bool closed);

}  // namespace nemvis
