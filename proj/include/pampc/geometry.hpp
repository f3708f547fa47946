#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

namespace pampc {

using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

/// Hamilton unit quaternion stored scalar-first as (w, x, y, z).
///
/// Every constructor normalizes, so a UnitQuaternion is always a valid
/// rotation. Use coeffs() when the raw 4-vector is needed, e.g. inside
/// integrators that operate on unnormalized stage values.
class UnitQuaternion {
 public:
  UnitQuaternion() = default;
  UnitQuaternion(double w, double x, double y, double z);
  explicit UnitQuaternion(const Vec4& wxyz);

  static UnitQuaternion identity() { return {}; }
  /// Rotation of `angle` radians about `axis` (axis need not be unit length).
  static UnitQuaternion from_axis_angle(const Vec3& axis, double angle);
  /// Pure heading rotation about world z.
  static UnitQuaternion from_yaw(double yaw);
  static UnitQuaternion from_rotation_matrix(const Mat3& R);
  /// Keeps the coefficients bit-exact when they are already unit length
  /// (within 1e-12); normalizes otherwise. Used when reading logs back.
  static UnitQuaternion from_unit_coeffs(double w, double x, double y, double z);

  double w() const { return w_; }
  double x() const { return x_; }
  double y() const { return y_; }
  double z() const { return z_; }
  Vec3 vec() const { return {x_, y_, z_}; }
  Vec4 coeffs() const { return {w_, x_, y_, z_}; }

  /// Matrix Q with Q * v equal to quat_rotate(*this, v).
  Mat3 rotation_matrix() const;

 private:
  double w_ = 1.0;
  double x_ = 0.0;
  double y_ = 0.0;
  double z_ = 0.0;
};

Vec3 quat_rotate(const UnitQuaternion& q, const Vec3& v);
UnitQuaternion quat_mul(const UnitQuaternion& a, const UnitQuaternion& b);
UnitQuaternion quat_inverse(const UnitQuaternion& q);

/// Quaternion kinematics for body rates: returns 0.5 * Lambda(omega) * q.
Vec4 quat_derivative(const UnitQuaternion& q, const Vec3& omega);

/// The 4x4 skew matrix Lambda(omega) acting on (w, x, y, z).
Mat4 omega_matrix(const Vec3& omega);

/// Raw Hamilton product on 4-vectors, no normalization.
Vec4 hamilton_product(const Vec4& a, const Vec4& b);

/// Rotation matrix from an unnormalized (w, x, y, z) using the unit-quaternion
/// polynomial. Agrees with UnitQuaternion::rotation_matrix on unit inputs.
Mat3 rotation_matrix_raw(const Vec4& q);

Mat3 skew(const Vec3& v);

// Z-Y-X Euler angles, used only for metrics and plots.
double yaw_of(const UnitQuaternion& q);
double pitch_of(const UnitQuaternion& q);
double roll_of(const UnitQuaternion& q);

/// Angle of the shortest rotation between two attitudes, in [0, pi].
double angular_distance(const UnitQuaternion& a, const UnitQuaternion& b);

}  // namespace pampc
