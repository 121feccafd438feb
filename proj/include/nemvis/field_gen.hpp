#pragma once

#include "nemvis/field.hpp"

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace nemvis {

/// Landau-de Gennes bulk coefficients, one elastic constant and a scalar
/// kinetic coefficient. The defaults give S_eq = (2 + sqrt 76) / 12.
struct MaterialParams {
  double a = -1.0;
  double b = 2.0;
  double c = 3.0;
  double l1 = 4e-4;
  double gamma = 1.0;

  double nematic_length() const;
  void validate() const;

  /// Defaults with l1 chosen so that sqrt(l1 / |a|) == length.
  static MaterialParams with_nematic_length(double length);
};

struct DefectSpec {
  Vec2 center{0.0, 0.0};
  double charge = 0.5;
  double phase = 0.0;
};

struct GridSpec {
  int nx = 2, ny = 2;
  double dx = 1.0, dy = 1.0;
  double ox = 0.0, oy = 0.0;

  /// nx x ny nodes spanning [x0, x1] x [y0, y1].
  static GridSpec spanning(int nx, int ny, double x0, double y0, double x1, double y1);
};

enum class Anchoring { free, uniform, tangential };

struct BoundarySpec {
  Anchoring kind = Anchoring::free;
  double director_angle = 0.0;  // uniform anchoring
};

struct RelaxReport {
  int steps = 0;
  double dt = 0.0;
  std::vector<double> energies;
  std::uint64_t prng_seed = 0;
};

class NoNematicMinimum : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class RelaxDivergence : public std::runtime_error {
 public:
  RelaxDivergence(int step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  int step() const { return step_; }

 private:
  int step_;
};

inline constexpr int kEnergyCheckpointInterval = 50;

/// Order parameter minimizing the uniaxial bulk density
/// f(S) = a S^2 / 3 - 2 b S^3 / 27 + c S^4 / 9.
double bulk_equilibrium_order(const MaterialParams& params);

/// Bulk free-energy density of a single tensor.
double bulk_density(const AlignmentTensor& q, const MaterialParams& params);

/// Local bulk part of dF/dQ (unprojected, symmetric).
Eigen::Matrix3d bulk_derivative(const AlignmentTensor& q, const MaterialParams& params);

/// Symmetric-traceless projection (M + M^T) / 2 - tr(M) I / 3.
AlignmentTensor project_traceless(const Eigen::Matrix3d& m);

/// Uniaxial in-plane director field winding around the given defects. The
/// in-plane order decays to zero at each core while the out-of-plane part is
/// kept, which leaves a biaxial core.
TensorField ansatz_field(const GridSpec& grid, const std::vector<DefectSpec>& defects,
                         const MaterialParams& params);

/// Low-order random in-plane field: random directors on a lattice of the
/// given spacing, bilinearly interpolated onto the grid so the continuum
/// field does not depend on the grid resolution.
TensorField random_field(const GridSpec& grid, const MaterialParams& params, double lattice_spacing,
                         double order_fraction, std::uint64_t seed);

/// Discrete total free energy over masked nodes. Elastic term uses the
/// difference across every edge joining two masked nodes.
double total_free_energy(const TensorField& field, const MaterialParams& params);

/// Exact gradient of total_free_energy divided by the node area, one
/// symmetric matrix per node (zero outside the mask).
std::vector<Eigen::Matrix3d> free_energy_gradient(const TensorField& field,
                                                  const MaterialParams& params);

/// Largest explicit Euler step accepted by relax().
double max_stable_dt(const TensorField& field, const MaterialParams& params);

/// Explicit gradient flow Q <- Q - dt gamma Pi[dF/dQ] on the free nodes.
/// Anchored boundaries pin the masked nodes that touch the domain edge.
std::pair<TensorField, RelaxReport> relax(const TensorField& field, const MaterialParams& params,
                                          const BoundarySpec& boundary, int steps, double dt);

/// Same as relax but calls observer(step, field) at every energy checkpoint.
std::pair<TensorField, RelaxReport> relax(
    const TensorField& field, const MaterialParams& params, const BoundarySpec& boundary,
    int steps, double dt, const std::function<void(int, const TensorField&)>& observer);

void mask_disk(TensorField& field, const Vec2& center, double radius);

/// Pins the boundary nodes of field to the anchoring condition. No-op for
/// free boundaries.
void apply_anchoring(TensorField& field, const MaterialParams& params,
                     const BoundarySpec& boundary);

/// Masked nodes that are held fixed under the given anchoring.
std::vector<std::uint8_t> fixed_nodes(const TensorField& field, const BoundarySpec& boundary);

// --- scenario generation ----------------------------------------------------

enum class Scenario { uniform_circle, two_defect_circle, many_defect_square };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);

struct ScenarioOptions {
  int nx = 128;
  int ny = 128;
  double nematic_length = 0.0;  // 0 = scenario default
  int steps = -1;               // -1 = scenario default
  std::uint64_t prng_seed = 1;
};

struct GeneratedField {
  TensorField field;
  RelaxReport report;
  MaterialParams params;
  std::vector<DefectSpec> defects;  // ansatz cores, empty for random fields
};

GeneratedField generate_scenario(Scenario scenario, const ScenarioOptions& options);

}  // namespace nemvis
