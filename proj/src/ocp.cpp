#include "pampc/ocp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Eigenvalues>

namespace pampc {
namespace {

// Left-multiplication matrix: a (x) b = left_matrix(a) * b.
Mat4 left_matrix(const Vec4& a) {
  Mat4 L;
  L << a[0], -a[1], -a[2], -a[3],
      a[1], a[0], -a[3], a[2],
      a[2], a[3], a[0], -a[1],
      a[3], -a[2], a[1], a[0];
  return L;
}

template <typename M>
void check_symmetric_psd(const M& m, double floor, const char* name) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(name) + " has non-finite entries");
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
    throw std::invalid_argument(std::string(name) + " is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<M> es(m, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < floor - 1e-12) {
    throw std::invalid_argument(std::string(name) + " is not positive (semi)definite");
  }
}

// Perception quantities with the depth clamped; never throws.
Vec4 clamped_perception(const QuadState& x, const QuadInput& u, const OcpConfig& config, const Vec3& poi,
                        double& depth) {
  const Vec3 p_C = point_in_camera(x, config.extrinsics, poi);
  const Vec3 p_C_dot = point_velocity_in_camera(x, u, config.extrinsics, poi);
  depth = p_C.z();
  const double z = std::max(p_C.z(), config.depth_epsilon);
  const double z2 = z * z;
  const auto& in = config.intrinsics;
  return {in.fx * p_C.x() / z, in.fy * p_C.y() / z, in.fx * (p_C_dot.x() * z - p_C.x() * p_C_dot.z()) / z2,
          in.fy * (p_C_dot.y() * z - p_C.y() * p_C_dot.z()) / z2};
}

}  // namespace

const StateMatrix& CostWeights::Qx_at(int stage) const {
  if (stage >= 0 && static_cast<std::size_t>(stage) < Qx_stage_schedule.size()) return Qx_stage_schedule[stage];
  return Qx_stage;
}

const Mat4& CostWeights::Qp_at(int stage) const {
  if (stage >= 0 && static_cast<std::size_t>(stage) < Qp_schedule.size()) return Qp_schedule[stage];
  return Qp;
}

const Mat4& CostWeights::R_at(int stage) const {
  if (stage >= 0 && static_cast<std::size_t>(stage) < R_schedule.size()) return R_schedule[stage];
  return R;
}

void CostWeights::validate() const {
  check_symmetric_psd(Qx_stage, 0.0, "Qx_stage");
  check_symmetric_psd(Qx_terminal, 0.0, "Qx_terminal");
  check_symmetric_psd(Qp, 0.0, "Qp");
  check_symmetric_psd(R, 1e-9, "R");
  for (const auto& m : Qx_stage_schedule) check_symmetric_psd(m, 0.0, "Qx_stage_schedule");
  for (const auto& m : Qp_schedule) check_symmetric_psd(m, 0.0, "Qp_schedule");
  for (const auto& m : R_schedule) check_symmetric_psd(m, 1e-9, "R_schedule");
}

CostWeights CostWeights::defaults(const CameraIntrinsics& intr) {
  CostWeights w;
  StateVector qx;
  qx << 80, 80, 400, 80, 80, 80, 0.5, 0.5, 0.3, 0;
  w.Qx_stage = qx.asDiagonal();
  w.Qx_terminal = w.Qx_stage;
  const double sx = 220.0 / intr.fx;
  const double sy = 220.0 / intr.fy;
  // Pixel-space weights; the 70 : 1.5 ratio between image position and
  // image velocity is kept from the nominal diag(70, 70, 1.5, 1.5) * 1e-3.
  w.Qp = Vec4(3.0e-3 * sx * sx, 3.0e-3 * sy * sy, 0.065e-3 * sx * sx, 0.065e-3 * sy * sy).asDiagonal();
  w.R = Vec4(20, 5, 5, 0.1).asDiagonal();
  return w;
}

void Bounds::validate() const {
  if (!(c_min >= 0.0 && c_min < c_max)) throw std::invalid_argument("Bounds: need 0 <= c_min < c_max");
  if (!(omega_max > 0.0)) throw std::invalid_argument("Bounds: omega_max must be positive");
  if (!(v_max > 0.0)) throw std::invalid_argument("Bounds: v_max must be positive");
  if (!(velocity_penalty >= 0.0)) throw std::invalid_argument("Bounds: velocity_penalty must be nonnegative");
}

void Reference::validate(int N) const {
  if (static_cast<int>(x.size()) != N) throw std::invalid_argument("Reference: state list length must equal N");
  if (static_cast<int>(u.size()) != N - 1) throw std::invalid_argument("Reference: input list length must equal N-1");
}

void OcpConfig::validate() const {
  if (N < 2) throw std::invalid_argument("OcpConfig: N must be >= 2");
  if (!(dt > 0.0)) throw std::invalid_argument("OcpConfig: dt must be positive");
  if (integrator_substeps < 1) throw std::invalid_argument("OcpConfig: integrator_substeps must be >= 1");
  if (!(depth_epsilon > 0.0)) throw std::invalid_argument("OcpConfig: depth_epsilon must be positive");
  if (!(model.g > 0.0)) throw std::invalid_argument("OcpConfig: g must be positive");
  weights.validate();
  bounds.validate();
  intrinsics.validate();
}

namespace {

// Horizontal part of the body z axis turned by +90 degrees about world z,
// (-b_y, b_x), so that it lines up with the vector part of a small tilt
// quaternion.
Eigen::Vector2d tilt_xy(const Vec4& q) {
  return {2.0 * (q[0] * q[1] - q[2] * q[3]), 2.0 * (q[1] * q[3] + q[0] * q[2])};
}

}  // namespace

StateVector state_residual(const QuadState& x, const QuadState& ref, bool heading_free) {
  StateVector r;
  r.segment<3>(0) = x.p - ref.p;
  r.segment<3>(3) = x.v - ref.v;
  r[9] = 0.0;
  if (heading_free) {
    r.segment<2>(kAttitudeRow) = 0.5 * (tilt_xy(x.q.coeffs()) - tilt_xy(ref.q.coeffs()));
    r[kYawRow] = 0.0;
    return r;
  }
  const Vec4 qe = hamilton_product(quat_inverse(ref.q).coeffs(), x.q.coeffs());
  const double sign = qe[0] < 0.0 ? -1.0 : 1.0;
  r.segment<3>(kAttitudeRow) = sign * qe.tail<3>();
  return r;
}

StateMatrix state_residual_jacobian(const QuadState& x, const QuadState& ref, bool heading_free) {
  StateMatrix J = StateMatrix::Zero();
  J.block<6, 6>(0, 0).setIdentity();
  if (heading_free) {
    const double w = x.q.w(), qx = x.q.x(), qy = x.q.y(), qz = x.q.z();
    J.block<1, 4>(kAttitudeRow, 6) << qx, w, -qz, -qy;
    J.block<1, 4>(kAttitudeRow + 1, 6) << qy, qz, w, qx;
    return J;
  }
  const Mat4 L = left_matrix(quat_inverse(ref.q).coeffs());
  const double sign = (L.row(0).dot(x.q.coeffs()) < 0.0) ? -1.0 : 1.0;
  J.block<3, 4>(kAttitudeRow, 6) = sign * L.bottomRows<3>();
  return J;
}

double stage_cost(const QuadState& x, const QuadInput& u, const PerceptionState& z, const QuadState& ref_x,
                  const QuadInput& ref_u, const CostWeights& weights, int stage, bool heading_free) {
  const StateVector rx = state_residual(x, ref_x, heading_free);
  const Vec4 rz = z.to_vector();
  const InputVector ru = u.to_vector() - ref_u.to_vector();
  return rx.dot(weights.Qx_at(stage) * rx) + rz.dot(weights.Qp_at(stage) * rz) + ru.dot(weights.R_at(stage) * ru);
}

double terminal_cost(const QuadState& x, const QuadState& ref_x, const CostWeights& weights, bool heading_free) {
  const StateVector rx = state_residual(x, ref_x, heading_free);
  return rx.dot(weights.Qx_terminal * rx);
}

double depth_fade(double depth, double depth_epsilon) {
  const double s = std::clamp((depth - depth_epsilon) / (2.0 * depth_epsilon), 0.0, 1.0);
  return 0.5 * (1.0 - std::cos(std::numbers::pi * s));
}

Vec4 guarded_perception_residual(const QuadState& x, const QuadInput& u, const OcpConfig& config, const Vec3& poi) {
  double depth = 0.0;
  const Vec4 z = clamped_perception(x, u, config, poi, depth);
  const double s = std::clamp((depth - config.depth_epsilon) / (2.0 * config.depth_epsilon), 0.0, 1.0);
  // sqrt of the cosine fade.
  return std::sin(0.5 * std::numbers::pi * s) * z;
}

double total_cost(const std::vector<QuadState>& X, const std::vector<QuadInput>& U, const OcpConfig& config,
                  const Reference& reference, const Vec3& poi) {
  const int N = config.N;
  if (static_cast<int>(X.size()) != N || static_cast<int>(U.size()) != N - 1) {
    throw std::invalid_argument("total_cost: trajectory lengths do not match N");
  }
  reference.validate(N);
  double cost = 0.0;
  for (int i = 0; i < N - 1; ++i) {
    const Vec4 z = guarded_perception_residual(X[i], U[i], config, poi);
    cost += stage_cost(X[i], U[i], {z[0], z[1], z[2], z[3]}, reference.x[i], reference.u[i], config.weights, i,
                       reference.heading_free);
  }
  cost += terminal_cost(X[N - 1], reference.x[N - 1], config.weights, reference.heading_free);
  return cost;
}

double velocity_penalty(const Vec3& v, const Bounds& bounds) {
  double sum = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double e = std::max(0.0, std::abs(v[k]) - bounds.v_max);
    sum += e * e;
  }
  return bounds.velocity_penalty * sum;
}

double BoundsReport::min_input_slack() const {
  return std::min({thrust_lower, thrust_upper, omega.minCoeff()});
}

double BoundsReport::min_slack() const { return std::min(min_input_slack(), velocity.minCoeff()); }

BoundsReport check_bounds(const QuadInput& u, const Vec3& v, const Bounds& bounds) {
  BoundsReport r;
  r.thrust_lower = u.c - bounds.c_min;
  r.thrust_upper = bounds.c_max - u.c;
  for (int k = 0; k < 3; ++k) {
    r.omega[k] = bounds.omega_max - std::abs(u.omega[k]);
    r.velocity[k] = bounds.v_max - std::abs(v[k]);
  }
  return r;
}

QuadInput clamp_input(const QuadInput& u, const Bounds& bounds) {
  QuadInput out;
  out.c = std::clamp(u.c, bounds.c_min, bounds.c_max);
  for (int k = 0; k < 3; ++k) out.omega[k] = std::clamp(u.omega[k], -bounds.omega_max, bounds.omega_max);
  return out;
}

}  // namespace pampc
