#pragma once

#include "nemvis/field.hpp"
#include "nemvis/integrator.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>

namespace testing {

using nemvis::AlignmentTensor;
using nemvis::TensorField;
using nemvis::Vec2;
using nemvis::Vec3;

/// Uniaxial in-plane tensor with director at angle theta.
inline AlignmentTensor planar(double order, double theta) {
  return AlignmentTensor::uniaxial(order, Vec3(std::cos(theta), std::sin(theta), 0.0));
}

/// n x n grid over [0, 1]^2 with a constant director angle.
inline TensorField uniform_square(int n, double theta, double order = 0.8) {
  TensorField f(n, n, 1.0 / (n - 1), 1.0 / (n - 1));
  for (auto& q : f.tensors()) q = planar(order, theta);
  return f;
}

/// Pure bend field n = theta-hat around center, defined on an annulus.
inline nemvis::TensorSource rotation_source(Vec2 center, double r_in, double r_out, double order = 0.8) {
  return [=](const Vec2& p) -> std::optional<AlignmentTensor> {
    const Vec2 d = p - center;
    const double r = d.norm();
    if (r < r_in || r > r_out) return std::nullopt;
    return planar(order, std::atan2(d.y(), d.x()) + M_PI / 2);
  };
}

/// Sets NEMVIS_THREADS for the lifetime of the object.
class ThreadsEnv {
 public:
  explicit ThreadsEnv(const std::string& value) {
    if (const char* old = std::getenv("NEMVIS_THREADS")) old_ = old;
    ::setenv("NEMVIS_THREADS", value.c_str(), 1);
  }
  ~ThreadsEnv() {
    if (old_) ::setenv("NEMVIS_THREADS", old_->c_str(), 1);
    else ::unsetenv("NEMVIS_THREADS");
  }

 private:
  std::optional<std::string> old_;
};

}  // namespace testing
