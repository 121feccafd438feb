#include "nemvis/spline.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace nemvis {

namespace {

// 5-point Gauss-Legendre on [-1, 1].
constexpr std::array<double, 5> kNodes{0.0, -0.5384693101056831, 0.5384693101056831, -0.9061798459386640,
                                       0.9061798459386640};
constexpr std::array<double, 5> kWeights{0.5688888888888889, 0.4786286704993665, 0.4786286704993665,
                                         0.2369268850561891, 0.2369268850561891};

std::vector<Vec2> cleanPoints(const TemplateCurve& c) {
  double scale = 0.0;
  for (const auto& p : c.points) scale = std::max(scale, p.cwiseAbs().maxCoeff());
  const double eps = 1e-12 * std::max(scale, 1.0);
  std::vector<Vec2> pts;
  for (const auto& p : c.points) {
    if (!p.allFinite()) throw std::invalid_argument("parameterize: non-finite curve point");
    if (pts.empty() || (p - pts.back()).norm() > eps) pts.push_back(p);
  }
  if (c.closed) {
    while (pts.size() > 1 && (pts.front() - pts.back()).norm() <= eps) pts.pop_back();
  }
  return pts;
}

}  // namespace

ParamCurve::ParamCurve(const TemplateCurve& source) : source_(source) {
  const std::vector<Vec2> pts = cleanPoints(source);
  const bool closed = source.closed;
  if (pts.size() < (closed ? 4u : 2u))
    throw std::invalid_argument("parameterize: too few distinct points for a spline");
  source_.points = pts;

  // Closed curves repeat the first point at the end.
  const int n = static_cast<int>(pts.size()) + (closed ? 1 : 0);
  values_.resize(n, 2);
  for (int k = 0; k < n; ++k) values_.row(k) = pts[k % pts.size()].transpose();
  knots_.assign(n, 0.0);
  for (int k = 1; k < n; ++k) knots_[k] = knots_[k - 1] + (values_.row(k) - values_.row(k - 1)).norm();

  moments_ = Eigen::Matrix<double, Eigen::Dynamic, 2>::Zero(n, 2);
  const int segs = n - 1;
  std::vector<double> h(segs);
  for (int k = 0; k < segs; ++k) h[k] = knots_[k + 1] - knots_[k];
  auto slope = [&](int k) -> Eigen::RowVector2d { return (values_.row(k + 1) - values_.row(k)) / h[k]; };

  if (closed) {
    // Unknowns M_0..M_{segs-1}; M_segs == M_0.
    const int m = segs;
    Eigen::SparseMatrix<double> a(m, m);
    Eigen::Matrix<double, Eigen::Dynamic, 2> rhs(m, 2);
    std::vector<Eigen::Triplet<double>> trip;
    for (int k = 0; k < m; ++k) {
      const int prev = (k + m - 1) % m;
      const int next = (k + 1) % m;
      trip.emplace_back(k, prev, h[prev]);
      trip.emplace_back(k, k, 2.0 * (h[prev] + h[k]));
      trip.emplace_back(k, next, h[k]);
      rhs.row(k) = 6.0 * (slope(k) - slope(prev));
    }
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("parameterize: periodic spline system is singular");
    const Eigen::Matrix<double, Eigen::Dynamic, 2> sol = lu.solve(rhs);
    moments_.topRows(m) = sol;
    moments_.row(m) = sol.row(0);
  } else if (segs >= 2) {
    const int m = segs - 1;  // interior moments, natural ends stay zero
    Eigen::SparseMatrix<double> a(m, m);
    Eigen::Matrix<double, Eigen::Dynamic, 2> rhs(m, 2);
    std::vector<Eigen::Triplet<double>> trip;
    for (int r = 0; r < m; ++r) {
      const int k = r + 1;
      if (r > 0) trip.emplace_back(r, r - 1, h[k - 1]);
      trip.emplace_back(r, r, 2.0 * (h[k - 1] + h[k]));
      if (r + 1 < m) trip.emplace_back(r, r + 1, h[k]);
      rhs.row(r) = 6.0 * (slope(k) - slope(k - 1));
    }
    a.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw std::runtime_error("parameterize: spline system is singular");
    moments_.middleRows(1, m) = lu.solve(rhs);
  }

  arclength_.assign(n, 0.0);
  for (int k = 0; k < segs; ++k) arclength_[k + 1] = arclength_[k] + speedIntegral(k, knots_[k], knots_[k + 1]);
  if (!(arclength_.back() > 0.0)) throw std::invalid_argument("parameterize: zero-length curve");
}

Vec2 ParamCurve::evaluate(int k, double u) const {
  const double h = knots_[k + 1] - knots_[k];
  const double a = (knots_[k + 1] - u) / h, b = (u - knots_[k]) / h;
  const Eigen::RowVector2d r = a * values_.row(k) + b * values_.row(k + 1) +
                               ((a * a * a - a) * moments_.row(k) + (b * b * b - b) * moments_.row(k + 1)) *
                                   (h * h / 6.0);
  return r.transpose();
}

Vec2 ParamCurve::derivative(int k, double u) const {
  const double h = knots_[k + 1] - knots_[k];
  const double a = (knots_[k + 1] - u) / h, b = (u - knots_[k]) / h;
  const Eigen::RowVector2d d = (values_.row(k + 1) - values_.row(k)) / h -
                               (3.0 * a * a - 1.0) / 6.0 * h * moments_.row(k) +
                               (3.0 * b * b - 1.0) / 6.0 * h * moments_.row(k + 1);
  return d.transpose();
}

double ParamCurve::speedIntegral(int k, double u0, double u1) const {
  auto gauss = [&](double a, double b) {
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t q = 0; q < kNodes.size(); ++q) sum += kWeights[q] * derivative(k, mid + half * kNodes[q]).norm();
    return sum * half;
  };
  // Adaptive bisection until halves agree to 1e-6 relative.
  struct Panel {
    double a, b, whole;
    int depth;
  };
  double total = 0.0;
  std::vector<Panel> stack{{u0, u1, gauss(u0, u1), 0}};
  while (!stack.empty()) {
    const Panel p = stack.back();
    stack.pop_back();
    const double mid = 0.5 * (p.a + p.b);
    const double left = gauss(p.a, mid), right = gauss(mid, p.b);
    if (std::abs(left + right - p.whole) <= 1e-6 * 1e-3 * std::abs(left + right) || p.depth >= 20) {
      total += left + right;
    } else {
      stack.push_back({p.a, mid, left, p.depth + 1});
      stack.push_back({mid, p.b, right, p.depth + 1});
    }
  }
  return total;
}

ParamCurve::Local ParamCurve::locate(double s) const {
  const double total = length();
  if (closed()) {
    s = std::fmod(s, total);
    if (s < 0.0) s += total;
  } else {
    s = std::clamp(s, 0.0, total);
  }
  const int segs = static_cast<int>(knots_.size()) - 1;
  auto it = std::upper_bound(arclength_.begin(), arclength_.end(), s);
  int k = static_cast<int>(it - arclength_.begin()) - 1;
  k = std::clamp(k, 0, segs - 1);
  const double target = s - arclength_[k];
  const double segLen = arclength_[k + 1] - arclength_[k];
  if (target <= 0.0) return {k, knots_[k]};
  if (target >= segLen) return {k, knots_[k + 1]};

  // Newton on the in-segment arc length, safeguarded by bisection.
  double lo = knots_[k], hi = knots_[k + 1];
  double u = lo + (hi - lo) * target / segLen;
  for (int it2 = 0; it2 < 50; ++it2) {
    const double f = speedIntegral(k, knots_[k], u) - target;
    if (std::abs(f) <= 1e-13 * std::max(1.0, total)) break;
    if (f > 0.0) hi = u;
    else lo = u;
    const double speed = derivative(k, u).norm();
    double next = speed > 0.0 ? u - f / speed : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    u = next;
  }
  return {k, u};
}

Vec2 ParamCurve::position(double s) const {
  const Local l = locate(s);
  return evaluate(l.segment, l.u);
}

Vec2 ParamCurve::tangent(double s) const {
  const Local l = locate(s);
  Vec2 d = derivative(l.segment, l.u);
  const double n = d.norm();
  if (n == 0.0) {
    // Only possible at a cusp; fall back to the chord direction.
    d = (values_.row(l.segment + 1) - values_.row(l.segment)).transpose();
    return d.normalized();
  }
  return d / n;
}

ParamCurve parameterize(const TemplateCurve& curve) { return ParamCurve(curve); }

}  // namespace nemvis
