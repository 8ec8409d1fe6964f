#include "bearing_ins/so3.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace bearing_ins {

Rotation::Rotation(const Mat3& m) : m_(m) {
  if (!m.allFinite()) {
    throw std::invalid_argument("Rotation: matrix has non-finite entries");
  }
  const double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (ortho > kRotationTol || std::abs(det - 1.0) > kRotationTol) {
    std::ostringstream msg;
    msg << "Rotation: matrix is off the rotation group (orthogonality residual "
        << ortho << ", det " << det << ")";
    throw std::invalid_argument(msg.str());
  }
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
      -v.y(), v.x(), 0.0;
  return m;
}

Mat3 projector(const Vec3& x) {
  const double n = x.norm();
  if (std::abs(n - 1.0) > kRotationTol) {
    std::ostringstream msg;
    msg << "projector: input must be unit-norm, got ||x|| = " << n;
    throw std::invalid_argument(msg.str());
  }
  return Mat3::Identity() - x * x.transpose();
}

Rotation exp_so3(const Vec3& w, double dt) {
  const Vec3 u = w * dt;
  const double theta = u.norm();
  const Mat3 ux = skew(u);
  Mat3 m;
  if (theta < 1e-8) {
    m = Mat3::Identity() + ux + 0.5 * (ux * ux);
  } else {
    const double half_sin = std::sin(0.5 * theta);
    const double a = std::sin(theta) / theta;
    const double b = 2.0 * half_sin * half_sin / (theta * theta);  // (1-cos)/theta^2
    m = Mat3::Identity() + a * ux + b * (ux * ux);
  }
  return Rotation(m);
}

Rotation project_to_rotation(const Mat3& m) {
  if (!m.allFinite()) {
    throw std::domain_error("project_to_rotation: matrix has non-finite entries");
  }
  const double scale = m.cwiseAbs().maxCoeff();
  const double det = m.determinant();
  if (!(det > 1e-12 * scale * scale * scale)) {
    std::ostringstream msg;
    msg << "project_to_rotation: input is singular or reflection-like (det = " << det << ")";
    throw std::domain_error(msg.str());
  }

  // Newton iteration X <- (X + X^-T)/2; converges quadratically to the
  // orthogonal polar factor for det > 0 and is a fixed point on the group.
  Mat3 x = m;
  for (int it = 0; it < 100; ++it) {
    const Mat3 next = 0.5 * (x + x.inverse().transpose().eval());
    const double step = (next - x).cwiseAbs().maxCoeff();
    x = next;
    if (step < 1e-14) break;
  }
  try {
    return Rotation(x);
  } catch (const std::invalid_argument&) {
    throw std::domain_error("project_to_rotation: polar iteration did not reach the group");
  }
}

double rotation_angle_error(const Rotation& a, const Rotation& b) {
  // atan2 form of acos((trace - 1)/2): identical on the group but keeps
  // full precision near 0 and pi, where acos loses ~8 digits.
  const Mat3 m = a.matrix().transpose() * b.matrix();
  const Vec3 axis(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1));
  const double sin_theta = 0.5 * axis.norm();
  const double cos_theta = 0.5 * (m.trace() - 1.0);
  return std::atan2(sin_theta, cos_theta);
}

}  // namespace bearing_ins
