#include "pampc/verify.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include "pampc/dynamics.hpp"
#include "pampc/perception.hpp"

namespace pampc {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

UnitQuaternion random_attitude(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  return UnitQuaternion(Vec4(n(rng), n(rng), n(rng), n(rng)));
}

QuadState random_state(std::mt19937_64& rng) {
  QuadState x;
  x.p = Vec3(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, 0, 3));
  x.v = Vec3(uniform(rng, -4, 4), uniform(rng, -4, 4), uniform(rng, -2, 2));
  x.q = random_attitude(rng);
  return x;
}

QuadInput random_input(std::mt19937_64& rng) {
  return {uniform(rng, 2.0, 18.0), Vec3(uniform(rng, -3, 3), uniform(rng, -3, 3), uniform(rng, -2, 2))};
}

// Landmark placed in front of the camera at depth 1..5 m.
Vec3 random_visible_landmark(std::mt19937_64& rng, const QuadState& x, const CameraExtrinsics& extr) {
  const double z = uniform(rng, 1.0, 5.0);
  const Vec3 p_C(uniform(rng, -z, z), uniform(rng, -z, z), z);
  return camera_position_world(x, extr) + quat_rotate(quat_mul(x.q, extr.q_BC), p_C);
}

// Entrywise error, relative for entries above one and absolute below.
double mixed_error(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace

SuiteResult verify_jacobians(const VerifyOptions& opt) {
  SuiteResult r{"dynamics_jacobians", "rk4_step_with_jacobians", false, 0.0, 1e-5, opt.jacobian_cases};
  std::mt19937_64 rng(opt.seed);
  const ModelParams params;
  const double h = 1e-6;
  for (int c = 0; c < opt.jacobian_cases; ++c) {
    const QuadState x = random_state(rng);
    const QuadInput u = random_input(rng);
    const double dt = uniform(rng, 0.01, 0.1);
    StepWithJacobians s = rk4_step_with_jacobians(x, u, dt, params);
    if (opt.corrupt_jacobian) s.A(3, 6) += 1e-3;

    const StateVector xv = x.to_vector();
    const InputVector uv = u.to_vector();
    for (int j = 0; j < kStateDim; ++j) {
      StateVector xp = xv, xm = xv;
      xp[j] += h;
      xm[j] -= h;
      const StateVector col = (rk4_step_raw(xp, uv, dt, params.g) - rk4_step_raw(xm, uv, dt, params.g)) / (2 * h);
      for (int i = 0; i < kStateDim; ++i) r.max_error = std::max(r.max_error, mixed_error(s.A(i, j), col[i]));
    }
    for (int j = 0; j < kInputDim; ++j) {
      InputVector up = uv, um = uv;
      up[j] += h;
      um[j] -= h;
      const StateVector col = (rk4_step_raw(xv, up, dt, params.g) - rk4_step_raw(xv, um, dt, params.g)) / (2 * h);
      for (int i = 0; i < kStateDim; ++i) r.max_error = std::max(r.max_error, mixed_error(s.B(i, j), col[i]));
    }
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

SuiteResult verify_projection_velocity(const VerifyOptions& opt) {
  SuiteResult r{"projection_velocity_vs_flow", "perception_state", false, 0.0, 1e-5, opt.projection_cases};
  std::mt19937_64 rng(opt.seed + 1);
  const CameraExtrinsics extr;
  const CameraIntrinsics intr;
  const double h = 1e-6;
  for (int c = 0; c < opt.projection_cases; ++c) {
    const QuadState x = random_state(rng);
    const QuadInput u = random_input(rng);
    const Vec3 p_W = random_visible_landmark(rng, x, extr);
    const PerceptionState z = perception_state(x, u, extr, intr, p_W, kDefaultDepthEpsilon);

    // Derivative of the projection along the state flow.
    const StateVector xv = x.to_vector();
    const StateVector f = flow(xv, u.to_vector(), 9.81);
    const auto pixel = [&](const StateVector& xs) {
      return project(point_in_camera(QuadState::from_vector(xs), extr, p_W), intr, kDefaultDepthEpsilon);
    };
    const Eigen::Vector2d s_dot = (pixel(xv + h * f) - pixel(xv - h * f)) / (2 * h);
    r.max_error = std::max({r.max_error, mixed_error(z.u_dot, s_dot.x()), mixed_error(z.v_dot, s_dot.y())});
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

SuiteResult verify_projection_forms(const VerifyOptions& opt) {
  SuiteResult r{"projection_velocity_forms", "projection_velocity_cross_form", false, 0.0, 1e-9,
                opt.projection_cases};
  std::mt19937_64 rng(opt.seed + 2);
  const CameraIntrinsics intr;
  for (int c = 0; c < opt.projection_cases; ++c) {
    const double z = uniform(rng, 0.05, 8.0);
    const Vec3 p_C(uniform(rng, -z, z), uniform(rng, -z, z), z);
    const Vec3 p_dot(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5));
    const Eigen::Vector2d a = projection_velocity(p_C, p_dot, intr, kDefaultDepthEpsilon);
    const Eigen::Vector2d b = projection_velocity_cross_form(p_C, p_dot, intr, kDefaultDepthEpsilon);
    r.max_error = std::max({r.max_error, mixed_error(b.x(), a.x()), mixed_error(b.y(), a.y())});
  }
  r.passed = r.max_error < r.tolerance;
  return r;
}

CondensedQp random_box_qp(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> nd(0.0, 1.0);
  Eigen::MatrixXd M(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) M(i, j) = nd(rng);
  const Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(M).householderQ();
  Eigen::VectorXd d(n);
  for (int i = 0; i < n; ++i) d[i] = std::pow(10.0, uniform(rng, -1.0, 1.0));

  CondensedQp qp;
  qp.H = Q.transpose() * d.asDiagonal() * Q;
  qp.H = 0.5 * (qp.H + qp.H.transpose());
  qp.g.resize(n);
  qp.lb.resize(n);
  qp.ub.resize(n);
  for (int i = 0; i < n; ++i) {
    qp.g[i] = 3.0 * nd(rng);
    qp.lb[i] = -uniform(rng, 0.0, 1.5);
    qp.ub[i] = uniform(rng, 0.0, 1.5);
    if (uniform(rng, 0, 1) < 0.05) qp.ub[i] = qp.lb[i];
  }
  return qp;
}

Eigen::VectorXd projected_gradient_qp(const CondensedQp& qp, double tol, int max_iter) {
  const double L = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(qp.H, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(qp.size()).cwiseMax(qp.lb).cwiseMin(qp.ub);
  for (int k = 0; k < max_iter; ++k) {
    const Eigen::VectorXd next = (x - (qp.H * x + qp.g) / L).cwiseMax(qp.lb).cwiseMin(qp.ub);
    const double move = (next - x).lpNorm<Eigen::Infinity>();
    x = next;
    if (move < tol) break;
  }
  return x;
}

SuiteResult verify_qp(const VerifyOptions& opt) {
  SuiteResult r{"box_qp_vs_projected_gradient", "solve_qp", false, 0.0, 1e-6, opt.qp_cases};
  std::mt19937_64 rng(opt.seed + 3);
  bool all_optimal = true;
  for (int c = 0; c < opt.qp_cases; ++c) {
    const int n = std::uniform_int_distribution<int>(1, 40)(rng);
    const CondensedQp qp = random_box_qp(n, rng);
    const QpSolution sol = solve_qp(qp);
    if (sol.status != QpStatus::Optimal) all_optimal = false;
    const Eigen::VectorXd ref = projected_gradient_qp(qp, 1e-13);
    const double scale = std::max(1.0, ref.lpNorm<Eigen::Infinity>());
    r.max_error = std::max(r.max_error, (sol.du - ref).lpNorm<Eigen::Infinity>() / scale);
  }
  r.passed = all_optimal && r.max_error < r.tolerance;
  return r;
}

std::vector<SuiteResult> run_verify(const VerifyOptions& opt) {
  return {verify_jacobians(opt), verify_projection_velocity(opt), verify_projection_forms(opt), verify_qp(opt)};
}

}  // namespace pampc
