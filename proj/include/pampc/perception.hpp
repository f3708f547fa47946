#pragma once

#include <span>

#include "pampc/dynamics.hpp"
#include "pampc/geometry.hpp"

namespace pampc {

inline constexpr double kDefaultDepthEpsilon = 0.01;

/// Camera pose in the body frame. The camera z axis is the optical axis,
/// x points right in the image and y points down.
struct CameraExtrinsics {
  Vec3 t_BC = Vec3(0.1, 0.0, 0.0);
  UnitQuaternion q_BC = forward_camera(45.0);

  /// Body-forward camera pitched down by `pitch_down_deg`.
  static UnitQuaternion forward_camera(double pitch_down_deg);
};

/// Pinhole intrinsics; (u, v) are measured from the principal point.
struct CameraIntrinsics {
  double fx = 220.0;
  double fy = 220.0;
  double half_width = 320.0;
  double half_height = 240.0;

  void validate() const;
};

struct Landmark {
  Vec3 p_W = Vec3::Zero();
};

/// Projection s = (u, v) [px] and its rate (u_dot, v_dot) [px/s].
struct PerceptionState {
  double u = 0.0;
  double v = 0.0;
  double u_dot = 0.0;
  double v_dot = 0.0;

  Vec4 to_vector() const { return {u, v, u_dot, v_dot}; }
};

/// Landmark position expressed in the camera frame.
Vec3 point_in_camera(const QuadState& x, const CameraExtrinsics& extr, const Vec3& p_W);

/// Pinhole projection. Throws DepthNonPositive when z_C <= depth_epsilon.
Eigen::Vector2d project(const Vec3& p_C, const CameraIntrinsics& intr, double depth_epsilon = kDefaultDepthEpsilon);

/// Time derivative of point_in_camera for a static landmark:
/// p_C_dot = -omega_C x p_C - v_C, with the camera velocity including the
/// lever-arm term omega_B x t_BC.
Vec3 point_velocity_in_camera(const QuadState& x, const QuadInput& u, const CameraExtrinsics& extr, const Vec3& p_W);

/// Pixel velocity by the quotient rule.
Eigen::Vector2d projection_velocity(const Vec3& p_C, const Vec3& p_C_dot, const CameraIntrinsics& intr,
                                    double depth_epsilon = kDefaultDepthEpsilon);

/// Same quantity through the cross-product form p_C x p_C_dot. Kept as an
/// independent algebraic route for cross-checking projection_velocity.
Eigen::Vector2d projection_velocity_cross_form(const Vec3& p_C, const Vec3& p_C_dot, const CameraIntrinsics& intr,
                                               double depth_epsilon = kDefaultDepthEpsilon);

PerceptionState perception_state(const QuadState& x, const QuadInput& u, const CameraExtrinsics& extr,
                                 const CameraIntrinsics& intr, const Vec3& p_W,
                                 double depth_epsilon = kDefaultDepthEpsilon);

/// Arithmetic mean of the landmark positions. Throws EmptyLandmarkSet.
Vec3 centroid(std::span<const Landmark> landmarks);

/// Visible means positive depth and projection inside the image extents.
bool is_visible(const QuadState& x, const CameraExtrinsics& extr, const CameraIntrinsics& intr, const Vec3& p_W,
                double depth_epsilon = kDefaultDepthEpsilon);

/// Optical axis direction in the world frame.
Vec3 optical_axis_world(const QuadState& x, const CameraExtrinsics& extr);

/// Camera center in the world frame.
Vec3 camera_position_world(const QuadState& x, const CameraExtrinsics& extr);

}  // namespace pampc
