#pragma once

#include "nemvis/tensor.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <vector>

namespace nemvis {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;

/// Structured 2D grid of alignment tensors. Nodes are stored row-major with
/// x varying fastest; mask marks nodes that belong to the domain.
class TensorField {
 public:
  TensorField(int nx, int ny, double dx, double dy, double ox = 0.0, double oy = 0.0);

  int nx() const { return nx_; }
  int ny() const { return ny_; }
  double dx() const { return dx_; }
  double dy() const { return dy_; }
  double ox() const { return ox_; }
  double oy() const { return oy_; }
  std::size_t size() const { return tensors_.size(); }

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx_ + i; }
  Vec2 node(int i, int j) const { return {ox_ + i * dx_, oy_ + j * dy_}; }
  Vec2 lower() const { return {ox_, oy_}; }
  Vec2 upper() const { return {ox_ + (nx_ - 1) * dx_, oy_ + (ny_ - 1) * dy_}; }

  const AlignmentTensor& at(int i, int j) const { return tensors_[index(i, j)]; }
  AlignmentTensor& at(int i, int j) { return tensors_[index(i, j)]; }
  bool inMask(int i, int j) const { return mask_[index(i, j)] != 0; }
  void setMask(int i, int j, bool inside) { mask_[index(i, j)] = inside ? 1 : 0; }

  const std::vector<AlignmentTensor>& tensors() const { return tensors_; }
  std::vector<AlignmentTensor>& tensors() { return tensors_; }
  const std::vector<std::uint8_t>& mask() const { return mask_; }
  std::vector<std::uint8_t>& mask() { return mask_; }

  bool hasFullMask() const;
  std::size_t maskCount() const;

  /// Bilinear interpolation of the 0/1 mask; the domain is the >= 0.5 region.
  double maskLevel(const Vec2& p) const;
  bool contains(const Vec2& p) const;

  /// Bilinear sample of the five stored components, or nullopt when p is
  /// outside the grid or the masked domain.
  std::optional<AlignmentTensor> sample(const Vec2& p) const;

  /// Sample without the mask test (still requires p inside the grid box).
  std::optional<AlignmentTensor> sampleUnmasked(const Vec2& p) const;

  /// Perimeter of the grid bounding box.
  double boxPerimeter() const;

 private:
  bool locate(const Vec2& p, int& i, int& j, double& fx, double& fy) const;

  int nx_, ny_;
  double dx_, dy_, ox_, oy_;
  std::vector<AlignmentTensor> tensors_;
  std::vector<std::uint8_t> mask_;
};

inline constexpr double kMinInPlaneNorm = 0.1;

/// Normalized xy projection of the major eigenvector, or nullopt when the
/// projection is shorter than kMinInPlaneNorm.
std::optional<Vec2> in_plane_director(const EigenFrame& frame);

/// Free-function form used by the integrator and seeding code.
inline std::optional<AlignmentTensor> sample(const TensorField& field, const Vec2& p) {
  return field.sample(p);
}

}  // namespace nemvis
