#include "nemvis/field_gen.hpp"
#include "nemvis/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace nemvis {

double MaterialParams::nematic_length() const { return std::sqrt(l1 / std::abs(a)); }

void MaterialParams::validate() const {
  if (!(c > 0.0)) throw std::invalid_argument("MaterialParams: c must be > 0");
  if (!(l1 > 0.0)) throw std::invalid_argument("MaterialParams: l1 must be > 0");
  if (!(gamma > 0.0)) throw std::invalid_argument("MaterialParams: gamma must be > 0");
  if (!(a != 0.0)) throw std::invalid_argument("MaterialParams: a must be non-zero for a nematic length");
}

MaterialParams MaterialParams::with_nematic_length(double length) {
  MaterialParams p;
  p.l1 = length * length * std::abs(p.a);
  return p;
}

GridSpec GridSpec::spanning(int nx, int ny, double x0, double y0, double x1, double y1) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("GridSpec: need at least 2 nodes per axis");
  return {nx, ny, (x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1), x0, y0};
}

double bulk_equilibrium_order(const MaterialParams& p) {
  const double disc = p.b * p.b - 24.0 * p.a * p.c;
  if (disc < 0.0) throw NoNematicMinimum("bulk_equilibrium_order: b^2 - 24ac < 0, no nematic minimum");
  return (p.b + std::sqrt(disc)) / (4.0 * p.c);
}

double bulk_density(const AlignmentTensor& q, const MaterialParams& p) {
  const Eigen::Matrix3d m = q.matrix();
  const double qq = q.contract();
  const double q3 = (m * m).cwiseProduct(m).sum();
  return 0.5 * p.a * qq - p.b * q3 / 3.0 + 0.25 * p.c * qq * qq;
}

Eigen::Matrix3d bulk_derivative(const AlignmentTensor& q, const MaterialParams& p) {
  const Eigen::Matrix3d m = q.matrix();
  return p.a * m - p.b * (m * m) + p.c * q.contract() * m;
}

AlignmentTensor project_traceless(const Eigen::Matrix3d& m) { return AlignmentTensor::fromMatrix(m); }

namespace {

AlignmentTensor inPlaneUniaxial(double order, double angle) {
  return AlignmentTensor::uniaxial(order, Vec3(std::cos(angle), std::sin(angle), 0.0));
}

double clampedOrder(const MaterialParams& params) {
  // Physical uniaxial order is bounded by 1 (D eigenvalue 1).
  return std::clamp(bulk_equilibrium_order(params), 0.0, 1.0);
}

}  // namespace

TensorField ansatz_field(const GridSpec& grid, const std::vector<DefectSpec>& defects,
                         const MaterialParams& params) {
  params.validate();
  TensorField field(grid.nx, grid.ny, grid.dx, grid.dy, grid.ox, grid.oy);
  const double order = clampedOrder(params);
  const double ln = params.nematic_length();
  const double minSeparation = 2.0 * std::max(grid.dx, grid.dy);

  for (std::size_t k = 0; k < defects.size(); ++k) {
    const auto& d = defects[k];
    if (std::abs(std::abs(d.charge) - 0.5) > 1e-12)
      throw std::invalid_argument("ansatz_field: defect charge must be +1/2 or -1/2");
    const Vec2 lo = field.lower(), hi = field.upper();
    if (d.center.x() < lo.x() || d.center.x() > hi.x() || d.center.y() < lo.y() || d.center.y() > hi.y())
      throw std::invalid_argument("ansatz_field: defect center outside the grid");
    for (std::size_t m = 0; m < k; ++m)
      if ((defects[m].center - d.center).norm() < minSeparation)
        throw std::invalid_argument("ansatz_field: defects closer than two grid cells");
  }

  const Eigen::Matrix3d outOfPlane = Vec3::UnitZ() * Vec3::UnitZ().transpose() - Eigen::Matrix3d::Identity() / 3.0;
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 p = field.node(i, j);
      double psi = 0.0;
      double rmin = std::numeric_limits<double>::infinity();
      for (const auto& d : defects) {
        const Vec2 r = p - d.center;
        psi += d.charge * std::atan2(r.y(), r.x()) + d.phase;
        rmin = std::min(rmin, r.norm());
      }
      const double g = defects.empty() ? 1.0 : 1.0 - std::exp(-rmin / ln);
      const Vec3 n(std::cos(psi), std::sin(psi), 0.0);
      Eigen::Matrix3d planar = n * n.transpose();
      planar(0, 0) -= 0.5;
      planar(1, 1) -= 0.5;
      planar(2, 2) = 0.0;
      field.at(i, j) = AlignmentTensor::fromMatrix(order * (g * planar - 0.5 * outOfPlane));
    }
  }
  return field;
}

TensorField random_field(const GridSpec& grid, const MaterialParams& params, double lattice_spacing,
                         double order_fraction, std::uint64_t seed) {
  params.validate();
  if (!(lattice_spacing > 0.0)) throw std::invalid_argument("random_field: lattice spacing must be > 0");
  TensorField field(grid.nx, grid.ny, grid.dx, grid.dy, grid.ox, grid.oy);
  const double order = order_fraction * clampedOrder(params);
  const Vec2 lo = field.lower(), hi = field.upper();
  const int lx = std::max(1, static_cast<int>(std::ceil((hi.x() - lo.x()) / lattice_spacing - 1e-9)));
  const int ly = std::max(1, static_cast<int>(std::ceil((hi.y() - lo.y()) / lattice_spacing - 1e-9)));
  const double sx = (hi.x() - lo.x()) / lx, sy = (hi.y() - lo.y()) / ly;

  std::mt19937_64 rng(seed);
  std::vector<Eigen::Matrix<double, 5, 1>> lattice;
  lattice.reserve(static_cast<std::size_t>(lx + 1) * (ly + 1));
  for (int k = 0; k < (lx + 1) * (ly + 1); ++k) {
    // 53-bit uniform draw; avoids distribution implementation differences.
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    lattice.push_back(inPlaneUniaxial(order, std::numbers::pi * u).components());
  }
  auto at = [&](int a, int b) -> const Eigen::Matrix<double, 5, 1>& {
    return lattice[static_cast<std::size_t>(b) * (lx + 1) + a];
  };

  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const Vec2 p = field.node(i, j);
      const double gx = std::clamp((p.x() - lo.x()) / sx, 0.0, static_cast<double>(lx));
      const double gy = std::clamp((p.y() - lo.y()) / sy, 0.0, static_cast<double>(ly));
      const int a = std::min(static_cast<int>(gx), lx - 1);
      const int b = std::min(static_cast<int>(gy), ly - 1);
      const double fx = gx - a, fy = gy - b;
      const Eigen::Matrix<double, 5, 1> c = (1 - fx) * (1 - fy) * at(a, b) + fx * (1 - fy) * at(a + 1, b) +
                     (1 - fx) * fy * at(a, b + 1) + fx * fy * at(a + 1, b + 1);
      field.at(i, j) = AlignmentTensor::fromComponents(c);
    }
  }
  return field;
}

double total_free_energy(const TensorField& f, const MaterialParams& params) {
  const double area = f.dx() * f.dy();
  const double kx = 0.5 * params.l1 / (f.dx() * f.dx());
  const double ky = 0.5 * params.l1 / (f.dy() * f.dy());
  double total = 0.0;
  for (int j = 0; j < f.ny(); ++j) {
    double row = 0.0;
    for (int i = 0; i < f.nx(); ++i) {
      if (!f.inMask(i, j)) continue;
      const auto& q = f.at(i, j);
      row += bulk_density(q, params);
      if (i + 1 < f.nx() && f.inMask(i + 1, j))
        row += kx * AlignmentTensor::fromComponents(f.at(i + 1, j).components() - q.components()).contract();
      if (j + 1 < f.ny() && f.inMask(i, j + 1))
        row += ky * AlignmentTensor::fromComponents(f.at(i, j + 1).components() - q.components()).contract();
    }
    total += row;
  }
  return total * area;
}

namespace {

// Per-area gradient at one node; unmasked neighbours contribute nothing.
Eigen::Matrix3d nodeGradient(const TensorField& f, const MaterialParams& params, int i, int j) {
  const auto& q = f.at(i, j);
  Eigen::Matrix<double, 5, 1> lap = Eigen::Matrix<double, 5, 1>::Zero();
  const double ix2 = 1.0 / (f.dx() * f.dx()), iy2 = 1.0 / (f.dy() * f.dy());
  const auto c = q.components();
  if (i > 0 && f.inMask(i - 1, j)) lap += ix2 * (c - f.at(i - 1, j).components());
  if (i + 1 < f.nx() && f.inMask(i + 1, j)) lap += ix2 * (c - f.at(i + 1, j).components());
  if (j > 0 && f.inMask(i, j - 1)) lap += iy2 * (c - f.at(i, j - 1).components());
  if (j + 1 < f.ny() && f.inMask(i, j + 1)) lap += iy2 * (c - f.at(i, j + 1).components());
  return bulk_derivative(q, params) + params.l1 * AlignmentTensor::fromComponents(lap).matrix();
}

}  // namespace

std::vector<Eigen::Matrix3d> free_energy_gradient(const TensorField& f, const MaterialParams& params) {
  std::vector<Eigen::Matrix3d> g(f.size(), Eigen::Matrix3d::Zero());
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i)
      if (f.inMask(i, j)) g[f.index(i, j)] = nodeGradient(f, params, i, j);
  return g;
}

double max_stable_dt(const TensorField& f, const MaterialParams& params) {
  const double h = std::min(f.dx(), f.dy());
  const double diffusive = 0.2 * h * h / (params.gamma * params.l1);
  const double bulk = 0.05 / params.gamma;
  return std::min(diffusive, bulk);
}

void mask_disk(TensorField& field, const Vec2& center, double radius) {
  for (int j = 0; j < field.ny(); ++j)
    for (int i = 0; i < field.nx(); ++i)
      field.setMask(i, j, (field.node(i, j) - center).norm() <= radius * (1.0 + 1e-12));
}

std::vector<std::uint8_t> fixed_nodes(const TensorField& f, const BoundarySpec& boundary) {
  std::vector<std::uint8_t> fixed(f.size(), 0);
  if (boundary.kind == Anchoring::free) return fixed;
  auto outside = [&f](int i, int j) {
    return i < 0 || j < 0 || i >= f.nx() || j >= f.ny() || !f.inMask(i, j);
  };
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i)
      if (f.inMask(i, j) &&
          (outside(i - 1, j) || outside(i + 1, j) || outside(i, j - 1) || outside(i, j + 1)))
        fixed[f.index(i, j)] = 1;
  return fixed;
}

void apply_anchoring(TensorField& f, const MaterialParams& params, const BoundarySpec& boundary) {
  if (boundary.kind == Anchoring::free) return;
  const double order = clampedOrder(params);
  const auto fixed = fixed_nodes(f, boundary);

  Vec2 centroid = Vec2::Zero();
  std::size_t count = 0;
  for (int j = 0; j < f.ny(); ++j)
    for (int i = 0; i < f.nx(); ++i)
      if (f.inMask(i, j)) {
        centroid += f.node(i, j);
        ++count;
      }
  if (count > 0) centroid /= static_cast<double>(count);

  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (!fixed[f.index(i, j)]) continue;
      double angle = boundary.director_angle;
      if (boundary.kind == Anchoring::tangential) {
        const Vec2 r = f.node(i, j) - centroid;
        angle = std::atan2(r.y(), r.x()) + 0.5 * std::numbers::pi;
      }
      f.at(i, j) = inPlaneUniaxial(order, angle);
    }
  }
}

std::pair<TensorField, RelaxReport> relax(const TensorField& field, const MaterialParams& params,
                                          const BoundarySpec& boundary, int steps, double dt) {
  return relax(field, params, boundary, steps, dt, {});
}

std::pair<TensorField, RelaxReport> relax(
    const TensorField& field, const MaterialParams& params, const BoundarySpec& boundary,
    int steps, double dt, const std::function<void(int, const TensorField&)>& observer) {
  params.validate();
  if (steps < 0) throw std::invalid_argument("relax: negative step count");
  const double bound = max_stable_dt(field, params);
  if (!(dt > 0.0) || dt > bound * (1.0 + 1e-12))
    throw std::invalid_argument(fmt::format("relax: dt = {} outside (0, {}]", dt, bound));

  TensorField current = field;
  apply_anchoring(current, params, boundary);
  const auto fixed = fixed_nodes(current, boundary);
  TensorField next = current;

  RelaxReport report;
  report.dt = dt;
  auto checkpoint = [&](int step) {
    report.energies.push_back(total_free_energy(current, params));
    if (observer) observer(step, current);
  };
  checkpoint(0);

  const double rate = dt * params.gamma;
  std::vector<std::uint8_t> rowBad(static_cast<std::size_t>(current.ny()), 0);
  for (int step = 1; step <= steps; ++step) {
    parallel_for(static_cast<std::size_t>(current.ny()), [&](std::size_t b, std::size_t e) {
      for (std::size_t jj = b; jj < e; ++jj) {
        const int j = static_cast<int>(jj);
        bool bad = false;
        for (int i = 0; i < current.nx(); ++i) {
          const std::size_t k = current.index(i, j);
          if (!current.inMask(i, j) || fixed[k]) {
            next.tensors()[k] = current.tensors()[k];
            continue;
          }
          const AlignmentTensor g = project_traceless(nodeGradient(current, params, i, j));
          const AlignmentTensor q = AlignmentTensor::fromComponents(
              current.tensors()[k].components() - rate * g.components());
          bad = bad || !q.allFinite();
          next.tensors()[k] = q;
        }
        rowBad[jj] = bad ? 1 : 0;
      }
    });
    if (std::any_of(rowBad.begin(), rowBad.end(), [](std::uint8_t v) { return v != 0; }))
      throw RelaxDivergence(step, fmt::format("relax: non-finite tensor at step {}", step));
    std::swap(current.tensors(), next.tensors());
    report.steps = step;
    if (step % kEnergyCheckpointInterval == 0 || step == steps) checkpoint(step);
  }
  return {std::move(current), std::move(report)};
}

// --- scenarios ----------------------------------------------------------------

Scenario parse_scenario(const std::string& name) {
  if (name == "uniform-circle") return Scenario::uniform_circle;
  if (name == "two-defect-circle") return Scenario::two_defect_circle;
  if (name == "many-defect-square") return Scenario::many_defect_square;
  throw std::invalid_argument("unknown case '" + name + "'");
}

std::string scenario_name(Scenario s) {
  switch (s) {
    case Scenario::uniform_circle: return "uniform-circle";
    case Scenario::two_defect_circle: return "two-defect-circle";
    case Scenario::many_defect_square: return "many-defect-square";
  }
  return "unknown";
}

namespace {

constexpr double kCircleLength = 0.02;
constexpr double kSquareLength = 0.008;
// Two +1/2 cores under tangential anchoring rest near r = R / 5^(1/4).
constexpr double kTwoDefectOffset = 0.5 * 0.6687403049764220;
constexpr double kRandomLatticeInLengths = 8.0;
constexpr double kRandomOrderFraction = 0.2;
constexpr double kManyDefectRelaxTime = 60.0;
constexpr int kCircleDefaultSteps = 200;

}  // namespace

GeneratedField generate_scenario(Scenario scenario, const ScenarioOptions& opt) {
  const bool circle = scenario != Scenario::many_defect_square;
  const double ln = opt.nematic_length > 0.0 ? opt.nematic_length
                                             : (circle ? kCircleLength : kSquareLength);
  const MaterialParams params = MaterialParams::with_nematic_length(ln);
  const GridSpec grid = GridSpec::spanning(opt.nx, opt.ny, 0.0, 0.0, 1.0, 1.0);
  const Vec2 center(0.5, 0.5);

  std::vector<DefectSpec> defects;
  BoundarySpec boundary;
  TensorField initial(grid.nx, grid.ny, grid.dx, grid.dy, grid.ox, grid.oy);
  switch (scenario) {
    case Scenario::uniform_circle:
      initial = ansatz_field(grid, {}, params);
      boundary = {Anchoring::uniform, 0.0};
      break;
    case Scenario::two_defect_circle:
      defects = {{center - Vec2(kTwoDefectOffset, 0.0), 0.5, 0.25 * std::numbers::pi},
                 {center + Vec2(kTwoDefectOffset, 0.0), 0.5, 0.25 * std::numbers::pi}};
      initial = ansatz_field(grid, defects, params);
      boundary = {Anchoring::tangential, 0.0};
      break;
    case Scenario::many_defect_square:
      initial = random_field(grid, params, kRandomLatticeInLengths * ln, kRandomOrderFraction,
                             opt.prng_seed);
      boundary = {Anchoring::free, 0.0};
      break;
  }
  if (circle) mask_disk(initial, center, 0.5);

  const double dt = max_stable_dt(initial, params);
  int steps = opt.steps;
  if (steps < 0)
    steps = circle ? kCircleDefaultSteps : static_cast<int>(std::ceil(kManyDefectRelaxTime / dt - 1e-9));
  auto [relaxed, report] = relax(initial, params, boundary, steps, dt);
  report.prng_seed = opt.prng_seed;
  return {std::move(relaxed), std::move(report), params, std::move(defects)};
}

}  // namespace nemvis
