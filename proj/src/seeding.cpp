#include "nemvis/seeding.hpp"
#include "nemvis/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace nemvis {

std::string to_string(DirectionConstraint c) { return c == DirectionConstraint::both ? "both" : "outward"; }

DirectionConstraint parse_constraint(const std::string& name) {
  if (name == "both") return DirectionConstraint::both;
  if (name == "outward") return DirectionConstraint::outward;
  throw std::invalid_argument("unknown direction constraint '" + name + "'");
}

void SeedingParams::validate() const {
  if (!(spacing > 0.0)) throw std::invalid_argument("seeding: spacing must be > 0");
  if (!(vertex_radius > 0.0)) throw std::invalid_argument("seeding: vertex radius must be > 0");
  if (!(ratio >= 1.0)) throw std::invalid_argument("seeding: vertex/edge ratio must be >= 1");
}

namespace {

struct WeightSample {
  double w;
  bool degenerate;
};

WeightSample evaluateWeight(const ParamCurve& curve, const TensorField& field, double s) {
  const auto q = field.sample(curve.position(s));
  if (!q) return {1.0, true};
  const EigenFrame frame = eigendecompose(to_modified(*q));
  if (westin(frame).c_l < kWeightDegenerateCl) return {1.0, true};
  const auto n = in_plane_director(frame);
  if (!n) return {1.0, true};
  return {std::clamp(1.0 - std::abs(curve.tangent(s).dot(*n)), 0.0, 1.0), false};
}

// Integral over [0, x] (x in [0, 1]) of the quadratic through (0, fa),
// (1/2, fm), (1, fb), per unit panel width.
double quadraticPrefix(double fa, double fm, double fb, double x) {
  const double x2 = x * x, x3 = x2 * x;
  return fa * 2.0 * (x3 / 3.0 - 0.75 * x2 + 0.5 * x) - fm * 4.0 * (x3 / 3.0 - 0.5 * x2) +
         fb * 2.0 * (x3 / 3.0 - 0.25 * x2);
}

}  // namespace

double weight(const ParamCurve& curve, const TensorField& field, double s) {
  return evaluateWeight(curve, field, s).w;
}

WeightedArclength::WeightedArclength(const ParamCurve& curve, const TensorField& field, double rel_tol)
    : length_(curve.length()) {
  auto f = [&](double s) {
    const auto r = evaluateWeight(curve, field, s);
    degenerate_ += r.degenerate;
    return r.w;
  };
  // Initial panels no wider than one grid cell so that features are seen.
  const double h = std::min(field.dx(), field.dy());
  const int initial = std::clamp(static_cast<int>(std::ceil(length_ / h)), 8, 4096);
  std::vector<double> fv(2 * initial + 1);
  for (int k = 0; k <= 2 * initial; ++k) fv[k] = f(length_ * k / (2.0 * initial));
  double estimate = 0.0;
  for (int k = 0; k < initial; ++k)
    estimate += (fv[2 * k] + 4.0 * fv[2 * k + 1] + fv[2 * k + 2]) * (length_ / initial) / 6.0;
  const double tol = rel_tol * std::max(estimate, 1e-3 * length_);
  const double minWidth = 1e-9 * length_;

  struct Task {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  for (int k = 0; k < initial; ++k) {
    const double a = length_ * k / initial, b = length_ * (k + 1) / initial;
    std::vector<Task> stack{{a, b, fv[2 * k], fv[2 * k + 1], fv[2 * k + 2],
                             (fv[2 * k] + 4.0 * fv[2 * k + 1] + fv[2 * k + 2]) * (b - a) / 6.0, 0}};
    std::vector<Panel> local;
    while (!stack.empty()) {
      const Task t = stack.back();
      stack.pop_back();
      const double m = 0.5 * (t.a + t.b);
      const double flm = f(0.5 * (t.a + m)), frm = f(0.5 * (m + t.b));
      const double left = (t.fa + 4.0 * flm + t.fm) * (m - t.a) / 6.0;
      const double right = (t.fm + 4.0 * frm + t.fb) * (t.b - m) / 6.0;
      const double localTol = tol * (t.b - t.a) / length_;
      if (std::abs(left + right - t.whole) <= 15.0 * localTol || t.depth >= 30 || (t.b - t.a) < minWidth) {
        local.push_back({t.a, m, t.fa, flm, t.fm});
        local.push_back({m, t.b, t.fm, frm, t.fb});
      } else {
        // Right pushed first so panels pop in increasing s.
        stack.push_back({m, t.b, t.fm, frm, t.fb, right, t.depth + 1});
        stack.push_back({t.a, m, t.fa, flm, t.fm, left, t.depth + 1});
      }
    }
    panels_.insert(panels_.end(), local.begin(), local.end());
  }

  cumulative_.assign(panels_.size() + 1, 0.0);
  for (std::size_t k = 0; k < panels_.size(); ++k) {
    const auto& p = panels_[k];
    cumulative_[k + 1] = cumulative_[k] + (p.fa + 4.0 * p.fm + p.fb) * (p.b - p.a) / 6.0;
  }
}

double WeightedArclength::at(double s) const {
  if (s <= 0.0) return 0.0;
  if (s >= length_) return total();
  auto it = std::upper_bound(panels_.begin(), panels_.end(), s, [](double v, const Panel& p) { return v < p.a; });
  const std::size_t k = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, (it - panels_.begin()) - 1));
  const auto& p = panels_[k];
  const double x = std::clamp((s - p.a) / (p.b - p.a), 0.0, 1.0);
  return cumulative_[k] + (p.b - p.a) * quadraticPrefix(p.fa, p.fm, p.fb, x);
}

double WeightedArclength::invert(double target, double tol) const {
  double lo = 0.0, hi = length_;
  const double eps = tol * length_;
  while (hi - lo > eps) {
    const double mid = 0.5 * (lo + hi);
    if (at(mid) < target) lo = mid;
    else hi = mid;
  }
  return 0.5 * (lo + hi);
}

double renormalized_length(const ParamCurve& curve, const TensorField& field) {
  return WeightedArclength(curve, field).total();
}

int seed_count(double s_prime, double spacing, bool closed) {
  if (!(spacing > 0.0)) throw std::invalid_argument("seed_count: spacing must be > 0");
  // Ratios within 1e-9 of an integer snap to it.
  const double ratio = s_prime / spacing;
  if (closed) return std::max(1, static_cast<int>(std::floor(ratio + 0.5 + 1e-9)));
  return std::max(1, static_cast<int>(std::floor(ratio + 1e-9)) + 1);
}

std::vector<SeedPoint> place_seeds(const ParamCurve& curve, const TensorField& field, double spacing) {
  if (!(spacing > 0.0)) throw std::invalid_argument("place_seeds: spacing must be > 0");
  const WeightedArclength w(curve, field);
  const double total = w.total();
  const double length = curve.length();
  const int alpha = seed_count(total, spacing, curve.closed());
  const bool flat = total <= 1e-9 * length;

  std::vector<double> positions;
  if (curve.closed()) {
    if (flat) positions.push_back(0.0);
    else
      for (int j = 0; j < alpha; ++j) positions.push_back(j == 0 ? 0.0 : w.invert(j * total / alpha));
  } else if (flat) {
    positions.push_back(0.5 * length);
  } else if (alpha == 1) {
    positions.push_back(w.invert(0.5 * total));
  } else {
    const double residual = std::max(0.0, total - (alpha - 1) * spacing);
    for (int j = 0; j < alpha; ++j) positions.push_back(w.invert(0.5 * residual + j * spacing));
  }

  std::vector<SeedPoint> seeds;
  seeds.reserve(positions.size());
  for (double s : positions) seeds.push_back({curve.position(s), 0, s, DirectionConstraint::both, std::nullopt});
  return seeds;
}

std::vector<SeedPoint> seed_template(const TopologicalTemplate& tmpl, const TensorField& field,
                                     const SeedingParams& params) {
  params.validate();
  std::vector<std::vector<SeedPoint>> perCurve(tmpl.curves.size());
  parallel_for(tmpl.curves.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto& c = tmpl.curves[i];
      const bool vertex = c.kind == CurveKind::vertex_circle;
      const double spacing = vertex ? params.spacing : params.ratio * params.spacing;
      auto seeds = place_seeds(ParamCurve(c), field, spacing);
      for (auto& s : seeds) {
        s.curve = static_cast<int>(i);
        if (vertex && c.owner_vertex) {
          const Vec2 center = tmpl.graph.vertices.at(static_cast<std::size_t>(*c.owner_vertex)).position;
          s.constraint = DirectionConstraint::outward;
          s.center = center;
          // The polyline dips inside the true circle between its points.
          const Vec2 r = s.position - center;
          if (r.norm() > 0.0) s.position = center + tmpl.params.vertex_radius * r.normalized();
        }
      }
      perCurve[i] = std::move(seeds);
    }
  });
  std::vector<SeedPoint> all;
  for (auto& v : perCurve) all.insert(all.end(), v.begin(), v.end());
  return all;
}

}  // namespace nemvis
