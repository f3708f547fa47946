#include "pampc/perception.hpp"

#include <cmath>
#include <numbers>

#include "pampc/errors.hpp"

namespace pampc {

UnitQuaternion CameraExtrinsics::forward_camera(double pitch_down_deg) {
  const double a = pitch_down_deg * std::numbers::pi / 180.0;
  const Vec3 z_c(std::cos(a), 0.0, -std::sin(a));
  const Vec3 x_c(0.0, -1.0, 0.0);
  const Vec3 y_c = z_c.cross(x_c);
  Mat3 R;
  R.col(0) = x_c;
  R.col(1) = y_c;
  R.col(2) = z_c;
  return UnitQuaternion::from_rotation_matrix(R);
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0 && half_width > 0 && half_height > 0)) {
    throw std::invalid_argument("CameraIntrinsics: focal lengths and image extents must be positive");
  }
}

Vec3 camera_position_world(const QuadState& x, const CameraExtrinsics& extr) {
  return quat_rotate(x.q, extr.t_BC) + x.p;
}

Vec3 optical_axis_world(const QuadState& x, const CameraExtrinsics& extr) {
  return quat_rotate(quat_mul(x.q, extr.q_BC), Vec3::UnitZ());
}

Vec3 point_in_camera(const QuadState& x, const CameraExtrinsics& extr, const Vec3& p_W) {
  const UnitQuaternion q_WC = quat_mul(x.q, extr.q_BC);
  return quat_rotate(quat_inverse(q_WC), p_W - camera_position_world(x, extr));
}

Eigen::Vector2d project(const Vec3& p_C, const CameraIntrinsics& intr, double depth_epsilon) {
  if (!(p_C.z() > depth_epsilon)) throw DepthNonPositive(p_C.z());
  return {intr.fx * p_C.x() / p_C.z(), intr.fy * p_C.y() / p_C.z()};
}

Vec3 point_velocity_in_camera(const QuadState& x, const QuadInput& u, const CameraExtrinsics& extr, const Vec3& p_W) {
  const UnitQuaternion q_WC = quat_mul(x.q, extr.q_BC);
  const Vec3 p_C = point_in_camera(x, extr, p_W);
  const Vec3 omega_C = quat_rotate(quat_inverse(extr.q_BC), u.omega);
  const Vec3 v_cam_W = x.v + quat_rotate(x.q, u.omega.cross(extr.t_BC));
  const Vec3 v_C = quat_rotate(quat_inverse(q_WC), v_cam_W);
  return -omega_C.cross(p_C) - v_C;
}

Eigen::Vector2d projection_velocity(const Vec3& p_C, const Vec3& p_C_dot, const CameraIntrinsics& intr,
                                    double depth_epsilon) {
  const double z = p_C.z();
  if (!(z > depth_epsilon)) throw DepthNonPositive(z);
  const double z2 = z * z;
  return {intr.fx * (p_C_dot.x() * z - p_C.x() * p_C_dot.z()) / z2,
          intr.fy * (p_C_dot.y() * z - p_C.y() * p_C_dot.z()) / z2};
}

Eigen::Vector2d projection_velocity_cross_form(const Vec3& p_C, const Vec3& p_C_dot, const CameraIntrinsics& intr,
                                               double depth_epsilon) {
  const double z = p_C.z();
  if (!(z > depth_epsilon)) throw DepthNonPositive(z);
  const double z2 = z * z;
  // Rows select the y and x components of the cross product.
  Mat3 M = Mat3::Zero();
  M(0, 1) = intr.fx / z2;
  M(1, 0) = -intr.fy / z2;
  const Vec3 s_dot = M * p_C.cross(p_C_dot);
  return s_dot.head<2>();
}

PerceptionState perception_state(const QuadState& x, const QuadInput& u, const CameraExtrinsics& extr,
                                 const CameraIntrinsics& intr, const Vec3& p_W, double depth_epsilon) {
  const Vec3 p_C = point_in_camera(x, extr, p_W);
  const Eigen::Vector2d s = project(p_C, intr, depth_epsilon);
  const Eigen::Vector2d s_dot =
      projection_velocity(p_C, point_velocity_in_camera(x, u, extr, p_W), intr, depth_epsilon);
  return {s.x(), s.y(), s_dot.x(), s_dot.y()};
}

Vec3 centroid(std::span<const Landmark> landmarks) {
  if (landmarks.empty()) throw EmptyLandmarkSet();
  Vec3 sum = Vec3::Zero();
  for (const auto& l : landmarks) sum += l.p_W;
  return sum / static_cast<double>(landmarks.size());
}

bool is_visible(const QuadState& x, const CameraExtrinsics& extr, const CameraIntrinsics& intr, const Vec3& p_W,
                double depth_epsilon) {
  const Vec3 p_C = point_in_camera(x, extr, p_W);
  if (!(p_C.z() > depth_epsilon)) return false;
  const Eigen::Vector2d s = project(p_C, intr, depth_epsilon);
  return std::abs(s.x()) <= intr.half_width && std::abs(s.y()) <= intr.half_height;
}

}  // namespace pampc
