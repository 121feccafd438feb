#include "nemvis/field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace nemvis {

TensorField::TensorField(int nx, int ny, double dx, double dy, double ox, double oy)
    : nx_(nx), ny_(ny), dx_(dx), dy_(dy), ox_(ox), oy_(oy) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("TensorField: nx and ny must be >= 2");
  if (!(dx > 0.0) || !(dy > 0.0)) throw std::invalid_argument("TensorField: dx and dy must be > 0");
  if (!std::isfinite(ox) || !std::isfinite(oy) || !std::isfinite(dx) || !std::isfinite(dy))
    throw std::invalid_argument("TensorField: non-finite grid header");
  tensors_.assign(static_cast<std::size_t>(nx) * ny, AlignmentTensor{});
  mask_.assign(tensors_.size(), 1);
}

bool TensorField::hasFullMask() const {
  return std::all_of(mask_.begin(), mask_.end(), [](std::uint8_t m) { return m != 0; });
}

std::size_t TensorField::maskCount() const {
  return static_cast<std::size_t>(std::count_if(mask_.begin(), mask_.end(),
                                                 [](std::uint8_t m) { return m != 0; }));
}

double TensorField::boxPerimeter() const {
  return 2.0 * ((nx_ - 1) * dx_ + (ny_ - 1) * dy_);
}

bool TensorField::locate(const Vec2& p, int& i, int& j, double& fx, double& fy) const {
  const double gx = (p.x() - ox_) / dx_;
  const double gy = (p.y() - oy_) / dy_;
  // Small slack so points clipped exactly onto the box edge still sample.
  constexpr double slack = 1e-9;
  if (!(gx >= -slack && gy >= -slack && gx <= nx_ - 1 + slack && gy <= ny_ - 1 + slack))
    return false;
  const double cx = std::clamp(gx, 0.0, static_cast<double>(nx_ - 1));
  const double cy = std::clamp(gy, 0.0, static_cast<double>(ny_ - 1));
  i = std::min(static_cast<int>(std::floor(cx)), nx_ - 2);
  j = std::min(static_cast<int>(std::floor(cy)), ny_ - 2);
  fx = cx - i;
  fy = cy - j;
  return true;
}

double TensorField::maskLevel(const Vec2& p) const {
  int i, j;
  double fx, fy;
  if (!locate(p, i, j, fx, fy)) return 0.0;
  const double m00 = mask_[index(i, j)], m10 = mask_[index(i + 1, j)];
  const double m01 = mask_[index(i, j + 1)], m11 = mask_[index(i + 1, j + 1)];
  return (1 - fx) * (1 - fy) * m00 + fx * (1 - fy) * m10 + (1 - fx) * fy * m01 + fx * fy * m11;
}

bool TensorField::contains(const Vec2& p) const { return maskLevel(p) >= 0.5; }

std::optional<AlignmentTensor> TensorField::sampleUnmasked(const Vec2& p) const {
  int i, j;
  double fx, fy;
  if (!locate(p, i, j, fx, fy)) return std::nullopt;
  const double w00 = (1 - fx) * (1 - fy), w10 = fx * (1 - fy);
  const double w01 = (1 - fx) * fy, w11 = fx * fy;
  const Eigen::Matrix<double, 5, 1> c = w00 * at(i, j).components() + w10 * at(i + 1, j).components() +
                 w01 * at(i, j + 1).components() + w11 * at(i + 1, j + 1).components();
  return AlignmentTensor::fromComponents(c);
}

std::optional<AlignmentTensor> TensorField::sample(const Vec2& p) const {
  if (!contains(p)) return std::nullopt;
  return sampleUnmasked(p);
}

std::optional<Vec2> in_plane_director(const EigenFrame& frame) {
  const Vec2 d = frame.vec_n.head<2>();
  const double n = d.norm();
  if (n < kMinInPlaneNorm) return std::nullopt;
  return Vec2(d / n);
}

}  // namespace nemvis
