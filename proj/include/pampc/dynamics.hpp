#pragma once

#include <Eigen/Core>

#include "pampc/geometry.hpp"

namespace pampc {

inline constexpr int kStateDim = 10;
inline constexpr int kInputDim = 4;

using StateVector = Eigen::Matrix<double, kStateDim, 1>;
using InputVector = Eigen::Matrix<double, kInputDim, 1>;
using StateMatrix = Eigen::Matrix<double, kStateDim, kStateDim>;
using InputMatrix = Eigen::Matrix<double, kStateDim, kInputDim>;

/// Flattened layout: [p (0..2), v (3..5), q = (w,x,y,z) (6..9)].
struct QuadState {
  Vec3 p = Vec3::Zero();
  Vec3 v = Vec3::Zero();
  UnitQuaternion q;

  StateVector to_vector() const;
  /// Normalizes the quaternion block.
  static QuadState from_vector(const StateVector& x);
  bool is_finite() const;
};

/// Mass-normalized collective thrust c [m/s^2] and body rates omega [rad/s].
struct QuadInput {
  double c = 0.0;
  Vec3 omega = Vec3::Zero();

  InputVector to_vector() const { return {c, omega.x(), omega.y(), omega.z()}; }
  static QuadInput from_vector(const InputVector& u) { return {u[0], u.tail<3>()}; }
  static QuadInput hover(double g) { return {g, Vec3::Zero()}; }
};

struct ModelParams {
  double g = 9.81;
};

struct StateDerivative {
  Vec3 p_dot;
  Vec3 v_dot;
  Vec4 q_dot;
};

StateDerivative dynamics_derivative(const QuadState& x, const QuadInput& u, const ModelParams& params);

/// Right-hand side on the flattened state; the quaternion block may be
/// unnormalized (RK4 stage values).
StateVector flow(const StateVector& x, const InputVector& u, double g);

/// Analytic partials of flow().
void flow_jacobians(const StateVector& x, const InputVector& u, double g, StateMatrix& fx, InputMatrix& fu);

/// Classical RK4 with zero-order-hold input; the quaternion is renormalized
/// after the full step.
QuadState rk4_step(const QuadState& x, const QuadInput& u, double dt, const ModelParams& params);

/// RK4 on the raw vector without renormalization.
StateVector rk4_step_raw(const StateVector& x, const InputVector& u, double dt, double g);

struct StepWithJacobians {
  QuadState next;
  StateMatrix A;  // d x+ / d x
  InputMatrix B;  // d x+ / d u
};

/// rk4_step together with the sensitivities of the un-renormalized RK4 map,
/// chained through the four stages.
StepWithJacobians rk4_step_with_jacobians(const QuadState& x, const QuadInput& u, double dt, const ModelParams& params);

}  // namespace pampc
