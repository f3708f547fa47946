#include <doctest.h>

#include "helpers.hpp"
#include "pampc/sim.hpp"
#include "pampc/solver.hpp"

using namespace pampc;

namespace {

struct HoverProblem {
  Scenario scenario = Scenario::make_hover_regulation();
  OcpConfig ocp;
  Reference ref;
  Vec3 poi;

  HoverProblem() {
    ref = reference_for(scenario, 0.0, ocp);
    poi = centroid(scenario.landmarks);
  }
};

// Quadratic model on the uncondensed variables: states follow the linear
// recursion from dx_0 = 0, cost blocks taken from the linearization.
double sparse_model(const LinearizedOcp& lin, const Eigen::VectorXd& du) {
  const int N = static_cast<int>(lin.Hxx.size());
  StateVector dx = StateVector::Zero();
  double q = 0.0;
  for (int k = 0; k < N; ++k) {
    q += 0.5 * dx.dot(lin.Hxx[k] * dx) + lin.gx[k].dot(dx);
    if (k == N - 1) break;
    const InputVector u = du.segment<kInputDim>(kInputDim * k);
    q += dx.dot(lin.Hxu[k] * u) + 0.5 * u.dot(lin.Huu[k] * u) + lin.gu[k].dot(u);
    dx = (lin.A[k] * dx + lin.B[k] * u).eval();
  }
  return q;
}

}  // namespace

TEST_CASE("hover equilibrium: the first iteration returns the hover input") {
  HoverProblem p;
  const QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  SolverState s = SolverState::initialize(x0, p.ocp);
  const RtiResult r = rti_step(s, x0, p.ocp, p.ref, p.poi);
  CHECK(r.diagnostics.status == SolveStatus::Optimal);
  CHECK(std::abs(r.u_apply.c - 9.81) < 1e-6);
  CHECK(r.u_apply.omega.norm() < 1e-6);
  CHECK(r.diagnostics.kkt_residual < 1e-6);
}

TEST_CASE("frozen problem converges from a perturbed state") {
  HoverProblem p;
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p += Vec3(0.3, -0.2, 0.1);
  x0.v = Vec3(0.2, 0.1, 0.0);
  x0.q = UnitQuaternion::from_axis_angle(Vec3(1, 1, 0), 0.1);
  SolverState s = SolverState::initialize(x0, p.ocp);
  int converged_at = -1;
  for (int it = 0; it < 20; ++it) {
    const RtiResult r = rti_step(s, x0, p.ocp, p.ref, p.poi);
    if (r.diagnostics.kkt_residual < 1e-6) {
      converged_at = it;
      break;
    }
  }
  CHECK(converged_at >= 0);
}

TEST_CASE("condensed QP equals the sparse quadratic model") {
  HoverProblem p;
  p.ocp.N = 8;
  p.ref = reference_for(p.scenario, 0.0, p.ocp);
  std::mt19937_64 rng(51);
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p += Vec3(0.2, 0.1, -0.1);
  x0.q = UnitQuaternion::from_axis_angle(Vec3(0.3, 1, 0.2), 0.2);
  SolverState s = SolverState::initialize(x0, p.ocp);
  for (auto& u : s.U_guess) u = testing::random_input(rng);
  const LinearizedOcp lin = linearize(s, x0, p.ocp, p.ref, p.poi);
  const CondensedQp qp = condense(lin, s.U_guess, p.ocp.bounds, 0.0);
  const int M = qp.size();
  const Eigen::MatrixXd H = qp.H - qp.regularization * Eigen::MatrixXd::Identity(M, M);

  // Hessian entries by second differences of the exact quadratic.
  Eigen::MatrixXd Ho(M, M);
  Eigen::VectorXd go(M);
  const double q0 = sparse_model(lin, Eigen::VectorXd::Zero(M));
  for (int i = 0; i < M; ++i) {
    const Eigen::VectorXd ei = Eigen::VectorXd::Unit(M, i);
    go[i] = 0.5 * (sparse_model(lin, ei) - sparse_model(lin, -ei));
    for (int j = 0; j < M; ++j) {
      const Eigen::VectorXd ej = Eigen::VectorXd::Unit(M, j);
      Ho(i, j) = sparse_model(lin, ei + ej) - sparse_model(lin, ei) - sparse_model(lin, ej) + q0;
    }
  }
  const double scale = std::max(1.0, Ho.cwiseAbs().maxCoeff());
  CHECK((H - Ho).cwiseAbs().maxCoeff() < 1e-8 * scale);
  CHECK((qp.g - go).cwiseAbs().maxCoeff() < 1e-8 * std::max(1.0, go.cwiseAbs().maxCoeff()));

  for (int t = 0; t < 5; ++t) {
    Eigen::VectorXd du(M);
    for (int i = 0; i < M; ++i) du[i] = testing::uniform(rng, -1, 1);
    const double condensed = 0.5 * du.dot(H * du) + qp.g.dot(du);
    CHECK(std::abs(condensed - (sparse_model(lin, du) - q0)) < 1e-8 * std::max(1.0, std::abs(condensed)));
  }
}

TEST_CASE("condensed unconstrained step solves the dense KKT system") {
  HoverProblem p;
  p.ocp.N = 6;
  p.ref = reference_for(p.scenario, 0.0, p.ocp);
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p += Vec3(0.1, 0.2, 0.0);
  SolverState s = SolverState::initialize(x0, p.ocp);
  const LinearizedOcp lin = linearize(s, x0, p.ocp, p.ref, p.poi);
  const CondensedQp qp = condense(lin, s.U_guess, p.ocp.bounds, 1e-6);
  const int N = p.ocp.N, nx = kStateDim, nu = kInputDim;
  const int nz = N * nx + (N - 1) * nu, nc = N * nx;
  Eigen::MatrixXd W = Eigen::MatrixXd::Zero(nz, nz);
  Eigen::VectorXd w = Eigen::VectorXd::Zero(nz);
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(nc, nz);
  const auto xi = [&](int k) { return k * nx; };
  const auto ui = [&](int k) { return N * nx + k * nu; };
  for (int k = 0; k < N; ++k) {
    W.block(xi(k), xi(k), nx, nx) = lin.Hxx[k];
    w.segment(xi(k), nx) = lin.gx[k];
    if (k < N - 1) {
      W.block(xi(k), ui(k), nx, nu) = lin.Hxu[k];
      W.block(ui(k), xi(k), nu, nx) = lin.Hxu[k].transpose();
      W.block(ui(k), ui(k), nu, nu) = lin.Huu[k] + 1e-6 * Mat4::Identity();
      w.segment(ui(k), nu) = lin.gu[k];
    }
  }
  C.block(0, 0, nx, nx).setIdentity();
  for (int k = 0; k + 1 < N; ++k) {
    C.block(xi(k + 1), xi(k + 1), nx, nx) = -StateMatrix::Identity();
    C.block(xi(k + 1), xi(k), nx, nx) = lin.A[k];
    C.block(xi(k + 1), ui(k), nx, nu) = lin.B[k];
  }
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(nz + nc, nz + nc);
  K.topLeftCorner(nz, nz) = W;
  K.topRightCorner(nz, nc) = C.transpose();
  K.bottomLeftCorner(nc, nz) = C;
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nz + nc);
  rhs.head(nz) = -w;
  const Eigen::VectorXd sol = K.fullPivLu().solve(rhs);
  const Eigen::VectorXd du_kkt = sol.segment(N * nx, (N - 1) * nu);
  // Same regularization as the dense system (only when no extra shift was needed).
  REQUIRE(qp.regularization == doctest::Approx(1e-6));
  const Eigen::VectorXd du = qp.H.ldlt().solve(-qp.g);
  CHECK((du - du_kkt).norm() < 1e-8 * std::max(1.0, du.norm()));
}

TEST_CASE("condensed gradient is the gradient of the objective") {
  HoverProblem p;
  p.ocp.N = 6;
  p.ref = reference_for(p.scenario, 0.0, p.ocp);
  std::mt19937_64 rng(52);
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.v = Vec3(0.5, -0.3, 0.2);
  SolverState s = SolverState::initialize(x0, p.ocp);
  for (auto& u : s.U_guess) u = QuadInput{9.81 + testing::uniform(rng, -1, 1), Vec3::Random() * 0.5};
  const CondensedQp qp = linearize_and_condense(s, x0, p.ocp, p.ref, p.poi);
  const double h = 1e-6;
  for (int i = 0; i < qp.size(); ++i) {
    std::vector<QuadInput> Up = s.U_guess, Um = s.U_guess;
    InputVector a = Up[i / 4].to_vector(), b = Um[i / 4].to_vector();
    a[i % 4] += h;
    b[i % 4] -= h;
    Up[i / 4] = QuadInput::from_vector(a);
    Um[i / 4] = QuadInput::from_vector(b);
    const double fd = (nlp_objective(rollout(x0, Up, p.ocp), Up, p.ocp, p.ref, p.poi) -
                       nlp_objective(rollout(x0, Um, p.ocp), Um, p.ocp, p.ref, p.poi)) /
                      (2 * h);
    CHECK(std::abs(qp.g[i] - fd) < 1e-4 * std::max(1.0, std::abs(fd)));
  }
}

TEST_CASE("first input matches an independent finite-horizon LQR near hover") {
  HoverProblem p;
  p.ocp.weights.Qp.setZero();
  const int N = p.ocp.N;
  const QuadState xh = p.scenario.initial_state(p.ocp.extrinsics);
  QuadState x0 = xh;
  const Vec3 dp(0.01, -0.008, 0.005), dv(-0.004, 0.006, 0.002);
  x0.p += dp;
  x0.v += dv;

  // Linearization of the independent integrator at hover.
  const oracle::Vec10 xv = xh.to_vector();
  const oracle::Vec4d uh(9.81, 0, 0, 0);
  Eigen::MatrixXd A(10, 10), B(10, 4);
  const double h = 1e-6;
  const double step = p.ocp.dt / p.ocp.integrator_substeps;
  for (int j = 0; j < 10; ++j) {
    oracle::Vec10 a = xv, b = xv;
    a[j] += h;
    b[j] -= h;
    A.col(j) = (oracle::integrate_held(a, uh, p.ocp.dt, step) - oracle::integrate_held(b, uh, p.ocp.dt, step)) / (2 * h);
  }
  for (int j = 0; j < 4; ++j) {
    oracle::Vec4d a = uh, b = uh;
    a[j] += h;
    b[j] -= h;
    B.col(j) = (oracle::integrate_held(xv, a, p.ocp.dt, step) - oracle::integrate_held(xv, b, p.ocp.dt, step)) / (2 * h);
  }
  // Residual rows pick (p, v, q_x, q_y, q_z) at the identity attitude.
  Eigen::MatrixXd Cr = Eigen::MatrixXd::Zero(10, 10);
  Cr.topLeftCorner(6, 6).setIdentity();
  Cr(6, 7) = Cr(7, 8) = Cr(8, 9) = 1.0;
  const Eigen::MatrixXd Q = Cr.transpose() * p.ocp.weights.Qx_stage * Cr;
  const Eigen::MatrixXd Qf = Cr.transpose() * p.ocp.weights.Qx_terminal * Cr;
  const Eigen::MatrixXd K = oracle::lqr_first_gain(A, B, Q, Eigen::MatrixXd(p.ocp.weights.R), Qf, N - 1);
  oracle::Vec10 dx = oracle::Vec10::Zero();
  dx.segment<3>(0) = dp;
  dx.segment<3>(3) = dv;
  const Eigen::Vector4d du_lqr = -K * dx;

  SolverState s = SolverState::initialize(x0, p.ocp);
  QuadInput u;
  // A few frozen iterations remove the cold-start linearization offset.
  for (int it = 0; it < 3; ++it) u = rti_step(s, x0, p.ocp, p.ref, p.poi).u_apply;
  const Eigen::Vector4d du_mpc = u.to_vector() - uh;
  CHECK((du_mpc - du_lqr).norm() <= 0.05 * du_lqr.norm());
}

TEST_CASE("predicted trajectory is the rollout of the updated inputs") {
  HoverProblem p;
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p.x() += 0.5;
  SolverState s = SolverState::initialize(x0, p.ocp);
  const RtiResult r = rti_step(s, x0, p.ocp, p.ref, p.poi);
  const auto X = rollout(x0, s.U_guess, p.ocp);
  REQUIRE(r.predicted.size() == X.size());
  for (std::size_t i = 0; i < X.size(); ++i) CHECK((r.predicted[i].to_vector() - X[i].to_vector()).norm() == 0.0);
  for (const auto& u : s.U_guess) CHECK(check_bounds(u, Vec3::Zero(), p.ocp.bounds).input_feasible());
}

TEST_CASE("applied input respects bounds under a large step") {
  HoverProblem p;
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p += Vec3(4, -3, 2);
  SolverState s = SolverState::initialize(x0, p.ocp);
  for (int it = 0; it < 5; ++it) {
    const RtiResult r = rti_step(s, x0, p.ocp, p.ref, p.poi);
    CHECK(check_bounds(r.u_apply, Vec3::Zero(), p.ocp.bounds).input_feasible(1e-12));
  }
}

TEST_CASE("failures fall back to the last applied input") {
  HoverProblem p;
  const QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  SolverState s = SolverState::initialize(x0, p.ocp);
  const QuadInput good = rti_step(s, x0, p.ocp, p.ref, p.poi).u_apply;
  QuadState bad = x0;
  bad.p.x() = std::numeric_limits<double>::quiet_NaN();
  const RtiResult r = rti_step(s, bad, p.ocp, p.ref, p.poi);
  CHECK(r.diagnostics.status == SolveStatus::LinearizationFailed);
  CHECK(r.u_apply.to_vector() == good.to_vector());
}

TEST_CASE("iteration cap is reported and the input stays feasible") {
  HoverProblem p;
  QuadState x0 = p.scenario.initial_state(p.ocp.extrinsics);
  x0.p += Vec3(4, -3, 2);
  SolverState s = SolverState::initialize(x0, p.ocp);
  SolverOptions opt;
  opt.qp_max_iter = 1;
  const RtiResult r = rti_step(s, x0, p.ocp, p.ref, p.poi, opt);
  CHECK(r.diagnostics.status == SolveStatus::MaxIter);
  CHECK(check_bounds(r.u_apply, Vec3::Zero(), p.ocp.bounds).input_feasible());
}

TEST_CASE("warm start shifting") {
  OcpConfig ocp;
  ocp.N = 4;
  QuadState x;
  SolverState s = SolverState::initialize(x, ocp);
  for (int i = 0; i < 4; ++i) s.X_guess[i].p = Vec3(i, 0, 0);
  for (int i = 0; i < 3; ++i) s.U_guess[i].c = 10.0 + i;
  const SolverState a = shift_warm_start(s);
  CHECK(a.X_guess[0].p.x() == 1.0);
  CHECK(a.X_guess[3].p.x() == 3.0);
  CHECK(a.U_guess[2].c == 12.0);
  const SolverState b = advance_warm_start(s, 0.25);
  CHECK(b.X_guess[0].p.x() == doctest::Approx(0.25));
  CHECK(b.U_guess[0].c == doctest::Approx(10.25));
  CHECK(b.X_guess[3].p.x() == 3.0);
  const SolverState c = advance_warm_start(s, 0.0);
  CHECK(c.X_guess[2].p.x() == 2.0);
}

TEST_CASE("rollout chains shooting intervals of RK4 sub-steps") {
  OcpConfig ocp;
  ocp.N = 5;
  std::mt19937_64 rng(53);
  const QuadState x0 = testing::random_state(rng);
  std::vector<QuadInput> U;
  for (int i = 0; i < 4; ++i) U.push_back(testing::random_input(rng));
  const auto X = rollout(x0, U, ocp);
  QuadState x = x0;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < ocp.integrator_substeps; ++j) x = rk4_step(x, U[i], ocp.dt / ocp.integrator_substeps, ocp.model);
  CHECK((X.back().to_vector() - x.to_vector()).norm() == 0.0);
  // Independent fine integration of the same held inputs.
  oracle::Vec10 y = x0.to_vector();
  for (int i = 0; i < 4; ++i) y = oracle::integrate_held(y, U[i].to_vector(), ocp.dt, 1e-4);
  CHECK((X.back().p - y.head<3>()).norm() < 1e-6);
}

TEST_CASE("shooting-step Jacobians match central differences") {
  OcpConfig ocp;
  std::mt19937_64 rng(54);
  const double h = 1e-6;
  for (int c = 0; c < 20; ++c) {
    const QuadState x = testing::random_state(rng);
    const QuadInput u = testing::random_input(rng);
    const StepWithJacobians s = shooting_step_with_jacobians(x, u, ocp);
    CHECK((s.next.to_vector() - shooting_step(x, u, ocp).to_vector()).norm() == 0.0);
    for (int j = 0; j < kInputDim; ++j) {
      InputVector a = u.to_vector(), b = u.to_vector();
      a[j] += h;
      b[j] -= h;
      const StateVector fd = (shooting_step(x, QuadInput::from_vector(a), ocp).to_vector() -
                              shooting_step(x, QuadInput::from_vector(b), ocp).to_vector()) / (2 * h);
      CHECK((s.B.col(j) - fd).lpNorm<Eigen::Infinity>() < 1e-6);
    }
    for (int j = 0; j < 6; ++j) {
      StateVector a = x.to_vector(), b = x.to_vector();
      a[j] += h;
      b[j] -= h;
      const StateVector fd = (shooting_step(QuadState::from_vector(a), u, ocp).to_vector() -
                              shooting_step(QuadState::from_vector(b), u, ocp).to_vector()) / (2 * h);
      CHECK((s.A.col(j) - fd).lpNorm<Eigen::Infinity>() < 1e-6);
    }
  }
}
