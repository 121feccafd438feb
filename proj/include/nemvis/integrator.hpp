#pragma once

#include "nemvis/field.hpp"
#include "nemvis/seeding.hpp"
#include "nemvis/topology.hpp"

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nemvis {

/// Any tensor source: returns nullopt outside its domain.
using TensorSource = std::function<std::optional<AlignmentTensor>(const Vec2&)>;

enum class Termination { none, domain_exit, degeneracy, vertex_circle, max_length, closed_loop };

std::string to_string(Termination t);

struct TraceParams {
  double step = 0.0;
  double max_arclength = 0.0;
  double stop_cl = 0.05;
  std::vector<VertexCircle> vertex_circles;
  double loop_eps = 0.0;
  double loop_cos = 0.9;

  /// h = min(dx, dy) / 2, max length = twice the box perimeter, loop_eps = h / 2.
  static TraceParams defaults(const TensorField& field);
  void validate() const;
};

struct StreamSample {
  Vec2 position{0.0, 0.0};
  double s = 0.0;
  double lam_n = 0.0, lam_m = 0.0, lam_l = 0.0;
  Vec2 cross_axis{0.0, 1.0};  // in-plane unit normal to the director
  double color = 0.0;
  double half_width = 0.0;
};

struct Hyperstreamline {
  std::vector<StreamSample> samples;
  Termination start_cause = Termination::none;  // backward end of two-sided traces
  Termination end_cause = Termination::none;
  bool closed = false;
  std::string diagnostic;  // set when the seed could not be traced

  bool empty() const { return samples.empty(); }
};

/// RK2 (midpoint) integration of dr/ds = n(r) from one seed. Two-sided
/// seeds produce one polyline through the seed; outward seeds trace away
/// from their owning vertex only.
Hyperstreamline trace(const TensorSource& source, const SeedPoint& seed, const TraceParams& params);
Hyperstreamline trace(const TensorField& field, const SeedPoint& seed, const TraceParams& params);

/// One entry per seed, in seed order.
std::vector<Hyperstreamline> trace_all(const TensorField& field, const std::vector<SeedPoint>& seeds,
                                       const TraceParams& params);

/// Half-width = width_scale * lam_m, color = lam_n.
Hyperstreamline cross_sections(const TensorField& field, const Hyperstreamline& line, double width_scale);

/// Width scale that makes the widest ribbon in the scene 0.6 * spacing.
double scene_width_scale(const std::vector<Hyperstreamline>& lines, double spacing);

/// Applies scene_width_scale to every line.
void annotate_cross_sections(const TensorField& field, std::vector<Hyperstreamline>& lines, double spacing);

/// Count of line ends per termination cause (both ends of two-sided traces).
std::map<Termination, int> termination_census(const std::vector<Hyperstreamline>& lines);

}  // namespace nemvis
