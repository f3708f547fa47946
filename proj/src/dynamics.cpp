#include "pampc/dynamics.hpp"

#include <cmath>

namespace pampc {

StateVector QuadState::to_vector() const {
  StateVector x;
  x << p, v, q.coeffs();
  return x;
}

QuadState QuadState::from_vector(const StateVector& x) {
  return {x.segment<3>(0), x.segment<3>(3), UnitQuaternion(Vec4(x.segment<4>(6)))};
}

bool QuadState::is_finite() const { return to_vector().allFinite(); }

StateDerivative dynamics_derivative(const QuadState& x, const QuadInput& u, const ModelParams& params) {
  const StateVector d = flow(x.to_vector(), u.to_vector(), params.g);
  return {d.segment<3>(0), d.segment<3>(3), d.segment<4>(6)};
}

StateVector flow(const StateVector& x, const InputVector& u, double g) {
  const Vec4 q = x.segment<4>(6);
  const double w = q[0], qx = q[1], qy = q[2], qz = q[3];
  const double c = u[0];
  StateVector d;
  d.segment<3>(0) = x.segment<3>(3);
  // Body z axis of the polynomial rotation matrix, scaled by thrust.
  d[3] = 2.0 * (qx * qz + w * qy) * c;
  d[4] = 2.0 * (qy * qz - w * qx) * c;
  d[5] = (1.0 - 2.0 * (qx * qx + qy * qy)) * c - g;
  d.segment<4>(6) = 0.5 * omega_matrix(u.tail<3>()) * q;
  return d;
}

void flow_jacobians(const StateVector& x, const InputVector& u, double /*g*/, StateMatrix& fx, InputMatrix& fu) {
  const double w = x[6], qx = x[7], qy = x[8], qz = x[9];
  const double c = u[0];
  fx.setZero();
  fu.setZero();
  fx.block<3, 3>(0, 3).setIdentity();

  // d(v_dot)/dq, columns ordered (w, x, y, z).
  fx.block<3, 4>(3, 6) << 2 * qy, 2 * qz, 2 * w, 2 * qx,
      -2 * qx, -2 * w, 2 * qz, 2 * qy,
      0, -4 * qx, -4 * qy, 0;
  fx.block<3, 4>(3, 6) *= c;
  fu.block<3, 1>(3, 0) << 2.0 * (qx * qz + w * qy), 2.0 * (qy * qz - w * qx), 1.0 - 2.0 * (qx * qx + qy * qy);

  fx.block<4, 4>(6, 6) = 0.5 * omega_matrix(u.tail<3>());
  // q_dot = 0.5 * q (x) (0, omega), linear in omega.
  fu.block<4, 3>(6, 1) << -qx, -qy, -qz,
      w, -qz, qy,
      qz, w, -qx,
      -qy, qx, w;
  fu.block<4, 3>(6, 1) *= 0.5;
}

StateVector rk4_step_raw(const StateVector& x, const InputVector& u, double dt, double g) {
  const StateVector k1 = flow(x, u, g);
  const StateVector k2 = flow(x + 0.5 * dt * k1, u, g);
  const StateVector k3 = flow(x + 0.5 * dt * k2, u, g);
  const StateVector k4 = flow(x + dt * k3, u, g);
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

QuadState rk4_step(const QuadState& x, const QuadInput& u, double dt, const ModelParams& params) {
  return QuadState::from_vector(rk4_step_raw(x.to_vector(), u.to_vector(), dt, params.g));
}

StepWithJacobians rk4_step_with_jacobians(const QuadState& x0, const QuadInput& u0, double dt, const ModelParams& params) {
  const StateVector x = x0.to_vector();
  const InputVector u = u0.to_vector();
  const double g = params.g;

  StateMatrix fx;
  InputMatrix fu;

  // Each stage k_i = f(x + a_i h k_{i-1}, u); propagate dk_i/dx and dk_i/du.
  const StateVector k1 = flow(x, u, g);
  flow_jacobians(x, u, g, fx, fu);
  const StateMatrix k1x = fx;
  const InputMatrix k1u = fu;

  const StateVector x2 = x + 0.5 * dt * k1;
  const StateVector k2 = flow(x2, u, g);
  flow_jacobians(x2, u, g, fx, fu);
  const StateMatrix k2x = fx * (StateMatrix::Identity() + 0.5 * dt * k1x);
  const InputMatrix k2u = fx * (0.5 * dt * k1u) + fu;

  const StateVector x3 = x + 0.5 * dt * k2;
  const StateVector k3 = flow(x3, u, g);
  flow_jacobians(x3, u, g, fx, fu);
  const StateMatrix k3x = fx * (StateMatrix::Identity() + 0.5 * dt * k2x);
  const InputMatrix k3u = fx * (0.5 * dt * k2u) + fu;

  const StateVector x4 = x + dt * k3;
  const StateVector k4 = flow(x4, u, g);
  flow_jacobians(x4, u, g, fx, fu);
  const StateMatrix k4x = fx * (StateMatrix::Identity() + dt * k3x);
  const InputMatrix k4u = fx * (dt * k3u) + fu;

  StepWithJacobians out;
  const StateVector next = x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  out.next = QuadState::from_vector(next);
  out.A = StateMatrix::Identity() + (dt / 6.0) * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
  out.B = (dt / 6.0) * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
  return out;
}

}  // namespace pampc
