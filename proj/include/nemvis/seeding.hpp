#pragma once

#include "nemvis/field.hpp"
#include "nemvis/spline.hpp"
#include "nemvis/topology.hpp"

#include <optional>
#include <string>
#include <vector>

namespace nemvis {

enum class DirectionConstraint { both, outward };

std::string to_string(DirectionConstraint c);
DirectionConstraint parse_constraint(const std::string& name);

struct SeedPoint {
  Vec2 position{0.0, 0.0};
  int curve = 0;
  double s = 0.0;
  DirectionConstraint constraint = DirectionConstraint::both;
  std::optional<Vec2> center;  // owning vertex for outward seeds
};

struct SeedingParams {
  double spacing = 0.0;        // l_s, spacing around defects
  double vertex_radius = 0.0;
  double ratio = 2.0;          // edge and boundary spacing = ratio * l_s

  void validate() const;
};

/// Below this linearity the major eigenvector is not trusted and w = 1.
inline constexpr double kWeightDegenerateCl = 0.05;

/// w(s) = 1 - |t(s) . n(s)| with n the in-plane major eigenvector.
/// Degenerate or out-of-domain points weigh 1.
double weight(const ParamCurve& curve, const TensorField& field, double s);

/// Cumulative weighted arc length W(s) = int_0^s w, built by adaptive
/// Simpson quadrature. Between accepted panels W is the exact integral of
/// the panel's quadratic interpolant.
class WeightedArclength {
 public:
  WeightedArclength(const ParamCurve& curve, const TensorField& field, double rel_tol = 1e-4);

  double total() const { return cumulative_.back(); }
  double at(double s) const;
  /// Smallest s (to within tol * curve length) with W(s) >= target.
  double invert(double target, double tol = 1e-7) const;
  int degenerate_samples() const { return degenerate_; }

 private:
  struct Panel {
    double a, b, fa, fm, fb;
  };
  std::vector<Panel> panels_;
  std::vector<double> cumulative_;  // W at the start of each panel, plus total
  double length_;
  int degenerate_ = 0;
};

/// S' = int_0^S w ds.
double renormalized_length(const ParamCurve& curve, const TensorField& field);

/// Seed count for a curve with renormalized length s_prime.
int seed_count(double s_prime, double spacing, bool closed);

std::vector<SeedPoint> place_seeds(const ParamCurve& curve, const TensorField& field, double spacing);

/// Seeds every template curve. Vertex circles use l_s and outward-only
/// traces; edges and boundaries use ratio * l_s and two-sided traces.
std::vector<SeedPoint> seed_template(const TopologicalTemplate& tmpl, const TensorField& field,
                                     const SeedingParams& params);

}  // namespace nemvis
