// Rotation-group primitives and small fixed-size helpers shared by the
// simulator, the observer and the observability tooling.
#pragma once

#include <Eigen/Dense>

namespace bearing_ins {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Tolerance for the orthogonality / unit-norm checks below.
inline constexpr double kRotationTol = 1e-9;

/// 3x3 matrix verified to lie on the rotation group (orthogonal, det +1).
class Rotation {
 public:
  Rotation() : m_(Mat3::Identity()) {}

  /// Throws std::invalid_argument if `m` is off the group beyond kRotationTol.
  explicit Rotation(const Mat3& m);

  static Rotation identity() { return Rotation(); }

  const Mat3& matrix() const { return m_; }

  /// Inverse rotation (the transpose; exactly preserves the group invariants).
  Rotation inverse() const { return Rotation(Mat3(m_.transpose()), Unchecked{}); }

  Vec3 operator*(const Vec3& v) const { return m_ * v; }
  Rotation operator*(const Rotation& o) const { return Rotation(Mat3(m_ * o.m_)); }

 private:
  struct Unchecked {};
  Rotation(const Mat3& m, Unchecked) : m_(m) {}
  Mat3 m_;
};

/// Cross-product matrix: skew(v) * w == v x w.
Mat3 skew(const Vec3& v);

/// Orthogonal projector onto the plane normal to the unit vector `x`
/// (I - x x^T). Throws std::invalid_argument when ||x|| deviates from 1
/// by more than kRotationTol.
Mat3 projector(const Vec3& x);

/// Rodrigues exponential of the body rate `w` applied for `dt` seconds.
/// Uses a second-order series below ||w*dt|| = 1e-8.
Rotation exp_so3(const Vec3& w, double dt);

/// Orthogonal polar factor of `m` (the Frobenius-nearest rotation for
/// inputs with positive determinant). Throws std::domain_error for
/// singular or reflection-like inputs.
Rotation project_to_rotation(const Mat3& m);

/// Geodesic angle between two rotations, in [0, pi].
double rotation_angle_error(const Rotation& a, const Rotation& b);

}  // namespace bearing_ins
