#pragma once

#include "nemvis/topology.hpp"

#include <Eigen/Dense>

#include <vector>

namespace nemvis {

/// Cubic spline through a template polyline (natural for open curves,
/// periodic for closed ones), parameterized by arc length.
class ParamCurve {
 public:
  explicit ParamCurve(const TemplateCurve& source);

  const TemplateCurve& source() const { return source_; }
  bool closed() const { return source_.closed; }
  double length() const { return arclength_.back(); }

  /// Cumulative arc length at each control point (plus the closing point for
  /// closed curves).
  const std::vector<double>& arclengths() const { return arclength_; }

  Vec2 position(double s) const;
  /// Unit tangent dr/ds.
  Vec2 tangent(double s) const;

 private:
  struct Local {
    int segment;
    double u;
  };
  Local locate(double s) const;
  Vec2 evaluate(int segment, double u) const;
  Vec2 derivative(int segment, double u) const;
  double speedIntegral(int segment, double u0, double u1) const;

  TemplateCurve source_;
  std::vector<double> knots_;        // chord-length parameter per control point
  Eigen::Matrix<double, Eigen::Dynamic, 2> values_;
  Eigen::Matrix<double, Eigen::Dynamic, 2> moments_;  // second derivatives
  std::vector<double> arclength_;
};

ParamCurve parameterize(const TemplateCurve& curve);

}  // namespace nemvis
