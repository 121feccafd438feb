#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace nemvis {

/// Symmetric traceless 3x3 alignment tensor. Only five components are
/// stored; qzz = -qxx - qyy is always derived.
template <typename Scalar>
struct AlignmentTensorT {
  Scalar qxx{0}, qxy{0}, qxz{0}, qyy{0}, qyz{0};

  Scalar qzz() const { return -qxx - qyy; }

  Eigen::Matrix<Scalar, 3, 3> matrix() const {
    Eigen::Matrix<Scalar, 3, 3> m;
    m << qxx, qxy, qxz,
         qxy, qyy, qyz,
         qxz, qyz, qzz();
    return m;
  }

  /// Symmetric-traceless part of an arbitrary matrix.
  template <typename Derived>
  static AlignmentTensorT fromMatrix(const Eigen::MatrixBase<Derived>& m) {
    const Scalar tr3 = m.trace() / Scalar(3);
    AlignmentTensorT q;
    q.qxx = m(0, 0) - tr3;
    q.qyy = m(1, 1) - tr3;
    q.qxy = Scalar(0.5) * (m(0, 1) + m(1, 0));
    q.qxz = Scalar(0.5) * (m(0, 2) + m(2, 0));
    q.qyz = Scalar(0.5) * (m(1, 2) + m(2, 1));
    return q;
  }

  /// Uniaxial tensor S (n n - I/3).
  template <typename Derived>
  static AlignmentTensorT uniaxial(Scalar order, const Eigen::MatrixBase<Derived>& director) {
    const Eigen::Matrix<Scalar, 3, 1> n = director.normalized();
    return fromMatrix(order * (n * n.transpose()));
  }

  Eigen::Matrix<Scalar, 5, 1> components() const {
    Eigen::Matrix<Scalar, 5, 1> c;
    c << qxx, qxy, qxz, qyy, qyz;
    return c;
  }

  static AlignmentTensorT fromComponents(const Eigen::Matrix<Scalar, 5, 1>& c) {
    return {c[0], c[1], c[2], c[3], c[4]};
  }

  /// Full double contraction Q:Q over all nine entries.
  Scalar contract() const {
    return qxx * qxx + qyy * qyy + qzz() * qzz() +
           Scalar(2) * (qxy * qxy + qxz * qxz + qyz * qyz);
  }

  bool allFinite() const {
    return std::isfinite(qxx) && std::isfinite(qxy) && std::isfinite(qxz) &&
           std::isfinite(qyy) && std::isfinite(qyz);
  }

  friend bool operator==(const AlignmentTensorT&, const AlignmentTensorT&) = default;
};

/// D = Q + I/3. Trace one, non-negative spectrum for physical Q.
template <typename Scalar>
struct ModifiedTensorT {
  Scalar dxx{0}, dxy{0}, dxz{0}, dyy{0}, dyz{0}, dzz{0};

  Eigen::Matrix<Scalar, 3, 3> matrix() const {
    Eigen::Matrix<Scalar, 3, 3> m;
    m << dxx, dxy, dxz,
         dxy, dyy, dyz,
         dxz, dyz, dzz;
    return m;
  }

  Scalar trace() const { return dxx + dyy + dzz; }
};

template <typename Scalar>
struct EigenFrameT {
  Scalar lam_n{0}, lam_m{0}, lam_l{0};
  Eigen::Matrix<Scalar, 3, 1> vec_n{Eigen::Matrix<Scalar, 3, 1>::UnitX()};
  Eigen::Matrix<Scalar, 3, 1> vec_m{Eigen::Matrix<Scalar, 3, 1>::UnitY()};
  Eigen::Matrix<Scalar, 3, 1> vec_l{Eigen::Matrix<Scalar, 3, 1>::UnitZ()};

  Eigen::Matrix<Scalar, 3, 3> reconstruct() const {
    return lam_n * vec_n * vec_n.transpose() + lam_m * vec_m * vec_m.transpose() +
           lam_l * vec_l * vec_l.transpose();
  }
};

template <typename Scalar>
struct WestinMetricsT {
  Scalar c_s{1}, c_l{0}, c_p{0};
};

using AlignmentTensor = AlignmentTensorT<double>;
using ModifiedTensor = ModifiedTensorT<double>;
using EigenFrame = EigenFrameT<double>;
using WestinMetrics = WestinMetricsT<double>;

class EigenError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename Scalar>
ModifiedTensorT<Scalar> to_modified(const AlignmentTensorT<Scalar>& q) {
  const Scalar third = Scalar(1) / Scalar(3);
  return {q.qxx + third, q.qxy, q.qxz, q.qyy + third, q.qyz, q.qzz() + third};
}

namespace detail {

// Largest-magnitude component made positive; first index wins ties.
template <typename Scalar>
Eigen::Matrix<Scalar, 3, 1> canonicalSign(const Eigen::Matrix<Scalar, 3, 1>& v) {
  int k = 0;
  for (int i = 1; i < 3; ++i)
    if (std::abs(v[i]) > std::abs(v[k])) k = i;
  return v[k] < Scalar(0) ? Eigen::Matrix<Scalar, 3, 1>(-v) : v;
}

}  // namespace detail

inline constexpr int kJacobiMaxSweeps = 50;
inline constexpr double kJacobiOffTolerance = 1e-14;

/// Cyclic Jacobi eigendecomposition of a symmetric 3x3 matrix. Eigenvalues
/// are returned in descending order with canonically signed eigenvectors.
/// Throws EigenError on non-finite input or if the sweep cap is reached.
template <typename Scalar>
EigenFrameT<Scalar> jacobi_eigen(const Eigen::Matrix<Scalar, 3, 3>& input) {
  using Mat = Eigen::Matrix<Scalar, 3, 3>;
  if (!input.allFinite()) throw EigenError("eigendecompose: non-finite tensor");

  Mat a = Scalar(0.5) * (input + input.transpose());
  Mat v = Mat::Identity();
  const Scalar scale = std::max<Scalar>(Scalar(1), a.norm());
  const Scalar tol = Scalar(kJacobiOffTolerance) * scale;

  auto offNorm = [&a] {
    return std::sqrt(Scalar(2) * (a(0, 1) * a(0, 1) + a(0, 2) * a(0, 2) + a(1, 2) * a(1, 2)));
  };

  bool converged = offNorm() <= tol;
  for (int sweep = 0; sweep < kJacobiMaxSweeps && !converged; ++sweep) {
    for (int p = 0; p < 2; ++p) {
      for (int q = p + 1; q < 3; ++q) {
        const Scalar apq = a(p, q);
        if (apq == Scalar(0)) continue;
        const Scalar theta = (a(q, q) - a(p, p)) / (Scalar(2) * apq);
        const Scalar t = (theta >= Scalar(0) ? Scalar(1) : Scalar(-1)) /
                         (std::abs(theta) + std::sqrt(theta * theta + Scalar(1)));
        const Scalar c = Scalar(1) / std::sqrt(t * t + Scalar(1));
        const Scalar s = t * c;
        Mat j = Mat::Identity();
        j(p, p) = c;
        j(q, q) = c;
        j(p, q) = s;
        j(q, p) = -s;
        a = j.transpose() * a * j;
        a(p, q) = a(q, p) = Scalar(0);
        v = v * j;
      }
    }
    converged = offNorm() <= tol;
  }
  if (!converged) throw EigenError("eigendecompose: Jacobi did not converge");

  std::array<int, 3> order{0, 1, 2};
  std::sort(order.begin(), order.end(), [&a](int i, int j) { return a(i, i) > a(j, j); });

  EigenFrameT<Scalar> e;
  e.lam_n = a(order[0], order[0]);
  e.lam_m = a(order[1], order[1]);
  e.lam_l = a(order[2], order[2]);
  e.vec_n = detail::canonicalSign<Scalar>(v.col(order[0]));
  e.vec_m = detail::canonicalSign<Scalar>(v.col(order[1]));
  e.vec_l = detail::canonicalSign<Scalar>(v.col(order[2]));
  return e;
}

template <typename Scalar>
EigenFrameT<Scalar> eigendecompose(const ModifiedTensorT<Scalar>& d) {
  return jacobi_eigen<Scalar>(d.matrix());
}

/// c_l = l1 - l2, c_p = 2 (l2 - l3), c_s = 3 l3 on the sorted spectrum of D.
template <typename Scalar>
WestinMetricsT<Scalar> westin(const EigenFrameT<Scalar>& e) {
  return {Scalar(3) * e.lam_l, e.lam_n - e.lam_m, Scalar(2) * (e.lam_m - e.lam_l)};
}

template <typename Scalar>
WestinMetricsT<Scalar> westin(const AlignmentTensorT<Scalar>& q) {
  return westin(eigendecompose(to_modified(q)));
}

}  // namespace nemvis
