#include "pampc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <Eigen/Geometry>

namespace pampc {

UnitQuaternion::UnitQuaternion(double w, double x, double y, double z) {
  const double n = std::sqrt(w * w + x * x + y * y + z * z);
  if (!(n > 0.0) || !std::isfinite(n)) {
    throw std::invalid_argument("UnitQuaternion: zero or non-finite norm");
  }
  w_ = w / n;
  x_ = x / n;
  y_ = y / n;
  z_ = z / n;
}

UnitQuaternion::UnitQuaternion(const Vec4& wxyz)
    : UnitQuaternion(wxyz[0], wxyz[1], wxyz[2], wxyz[3]) {}

UnitQuaternion UnitQuaternion::from_axis_angle(const Vec3& axis, double angle) {
  const Vec3 a = axis.normalized();
  const double s = std::sin(0.5 * angle);
  return {std::cos(0.5 * angle), s * a.x(), s * a.y(), s * a.z()};
}

UnitQuaternion UnitQuaternion::from_yaw(double yaw) {
  return {std::cos(0.5 * yaw), 0.0, 0.0, std::sin(0.5 * yaw)};
}

UnitQuaternion UnitQuaternion::from_unit_coeffs(double w, double x, double y, double z) {
  const double n2 = w * w + x * x + y * y + z * z;
  if (std::abs(n2 - 1.0) > 1e-12) return {w, x, y, z};
  UnitQuaternion q;
  q.w_ = w;
  q.x_ = x;
  q.y_ = y;
  q.z_ = z;
  return q;
}

UnitQuaternion UnitQuaternion::from_rotation_matrix(const Mat3& R) {
  const Eigen::Quaterniond q(R);
  return {q.w(), q.x(), q.y(), q.z()};
}

Mat3 UnitQuaternion::rotation_matrix() const { return rotation_matrix_raw(coeffs()); }

Mat3 rotation_matrix_raw(const Vec4& q) {
  const double w = q[0], x = q[1], y = q[2], z = q[3];
  Mat3 R;
  R << 1 - 2 * y * y - 2 * z * z, 2 * (x * y - w * z), 2 * (x * z + w * y),
      2 * (x * y + w * z), 1 - 2 * x * x - 2 * z * z, 2 * (y * z - w * x),
      2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * x * x - 2 * y * y;
  return R;
}

Vec3 quat_rotate(const UnitQuaternion& q, const Vec3& v) { return q.rotation_matrix() * v; }

Vec4 hamilton_product(const Vec4& a, const Vec4& b) {
  return {a[0] * b[0] - a[1] * b[1] - a[2] * b[2] - a[3] * b[3],
          a[0] * b[1] + a[1] * b[0] + a[2] * b[3] - a[3] * b[2],
          a[0] * b[2] - a[1] * b[3] + a[2] * b[0] + a[3] * b[1],
          a[0] * b[3] + a[1] * b[2] - a[2] * b[1] + a[3] * b[0]};
}

UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b) {
  return UnitQuaternion(hamilton_product(a.coeffs(), b.coeffs()));
}

UnitQuaternion quat_inverse(const UnitQuaternion& q) { return {q.w(), -q.x(), -q.y(), -q.z()}; }

Mat4 omega_matrix(const Vec3& omega) {
  const double wx = omega.x(), wy = omega.y(), wz = omega.z();
  Mat4 L;
  L << 0, -wx, -wy, -wz,
      wx, 0, wz, -wy,
      wy, -wz, 0, wx,
      wz, wy, -wx, 0;
  return L;
}

Vec4 quat_derivative(const UnitQuaternion& q, const Vec3& omega) {
  return 0.5 * omega_matrix(omega) * q.coeffs();
}

Mat3 skew(const Vec3& v) {
  Mat3 S;
  S << 0, -v.z(), v.y(),
      v.z(), 0, -v.x(),
      -v.y(), v.x(), 0;
  return S;
}

double yaw_of(const UnitQuaternion& q) {
  return std::atan2(2.0 * (q.w() * q.z() + q.x() * q.y()),
                    1.0 - 2.0 * (q.y() * q.y() + q.z() * q.z()));
}

double pitch_of(const UnitQuaternion& q) {
  const double s = 2.0 * (q.w() * q.y() - q.z() * q.x());
  return std::asin(std::clamp(s, -1.0, 1.0));
}

double roll_of(const UnitQuaternion& q) {
  return std::atan2(2.0 * (q.w() * q.x() + q.y() * q.z()),
                    1.0 - 2.0 * (q.x() * q.x() + q.y() * q.y()));
}

double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b) {
  const double d = std::abs(a.coeffs().dot(b.coeffs()));
  return 2.0 * std::acos(std::min(1.0, d));
}

}  // namespace pampc
