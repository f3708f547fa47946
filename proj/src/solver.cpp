#include "pampc/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include <Eigen/Cholesky>

#include "pampc/errors.hpp"

namespace pampc {
namespace {

using PerceptionStateJacobian = Eigen::Matrix<double, 4, kStateDim>;

void perception_jacobians(const QuadState& x, const QuadInput& u, const OcpConfig& ocp, const Vec3& poi, double h,
                          PerceptionStateJacobian& Jx, Mat4& Ju) {
  const StateVector xv = x.to_vector();
  for (int i = 0; i < kStateDim; ++i) {
    StateVector xp = xv, xm = xv;
    xp[i] += h;
    xm[i] -= h;
    Jx.col(i) = (guarded_perception_residual(QuadState::from_vector(xp), u, ocp, poi) -
                 guarded_perception_residual(QuadState::from_vector(xm), u, ocp, poi)) /
                (2.0 * h);
  }
  const InputVector uv = u.to_vector();
  for (int i = 0; i < kInputDim; ++i) {
    InputVector up = uv, um = uv;
    up[i] += h;
    um[i] -= h;
    Ju.col(i) = (guarded_perception_residual(x, QuadInput::from_vector(up), ocp, poi) -
                 guarded_perception_residual(x, QuadInput::from_vector(um), ocp, poi)) /
                (2.0 * h);
  }
}

void add_velocity_penalty(const Vec3& v, const Bounds& bounds, StateMatrix& Hxx, StateVector& gx) {
  for (int j = 0; j < 3; ++j) {
    const double excess = std::abs(v[j]) - bounds.v_max;
    if (excess <= 0.0) continue;
    const double sign = v[j] < 0.0 ? -1.0 : 1.0;
    Hxx(3 + j, 3 + j) += 2.0 * bounds.velocity_penalty;
    gx[3 + j] += 2.0 * bounds.velocity_penalty * excess * sign;
  }
}

QuadState lerp_state(const QuadState& a, const QuadState& b, double t) {
  QuadState out;
  out.p = (1.0 - t) * a.p + t * b.p;
  out.v = (1.0 - t) * a.v + t * b.v;
  Vec4 qb = b.q.coeffs();
  if (qb.dot(a.q.coeffs()) < 0.0) qb = -qb;
  out.q = UnitQuaternion(Vec4((1.0 - t) * a.q.coeffs() + t * qb));
  return out;
}

QuadInput lerp_input(const QuadInput& a, const QuadInput& b, double t) {
  return {(1.0 - t) * a.c + t * b.c, (1.0 - t) * a.omega + t * b.omega};
}

}  // namespace

std::string_view to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::NotRun:
      return "NotRun";
    case SolveStatus::Optimal:
      return "Optimal";
    case SolveStatus::MaxIter:
      return "MaxIter";
    case SolveStatus::Degenerate:
      return "Degenerate";
    case SolveStatus::LinearizationFailed:
      return "LinearizationFailed";
  }
  return "Unknown";
}

SolverState SolverState::initialize(const QuadState& x_est, const OcpConfig& ocp) {
  SolverState s;
  s.X_guess.assign(ocp.N, x_est);
  s.U_guess.assign(ocp.N - 1, clamp_input(QuadInput::hover(ocp.model.g), ocp.bounds));
  s.last_applied = s.U_guess.front();
  return s;
}

QuadState shooting_step(const QuadState& x, const QuadInput& u, const OcpConfig& ocp) {
  const double h = ocp.dt / ocp.integrator_substeps;
  QuadState y = x;
  for (int i = 0; i < ocp.integrator_substeps; ++i) y = rk4_step(y, u, h, ocp.model);
  return y;
}

StepWithJacobians shooting_step_with_jacobians(const QuadState& x, const QuadInput& u, const OcpConfig& ocp) {
  const double h = ocp.dt / ocp.integrator_substeps;
  StepWithJacobians out = rk4_step_with_jacobians(x, u, h, ocp.model);
  for (int i = 1; i < ocp.integrator_substeps; ++i) {
    const StepWithJacobians s = rk4_step_with_jacobians(out.next, u, h, ocp.model);
    out.B = (s.A * out.B + s.B).eval();
    out.A = (s.A * out.A).eval();
    out.next = s.next;
  }
  return out;
}

std::vector<QuadState> rollout(const QuadState& x0, const std::vector<QuadInput>& U, const OcpConfig& ocp) {
  std::vector<QuadState> X;
  X.reserve(U.size() + 1);
  X.push_back(x0);
  for (const auto& u : U) X.push_back(shooting_step(X.back(), u, ocp));
  return X;
}

LinearizedOcp linearize(SolverState& state, const QuadState& x_est, const OcpConfig& ocp, const Reference& reference,
                        const Vec3& poi, const SolverOptions& options) {
  const int N = ocp.N;
  if (static_cast<int>(state.U_guess.size()) != N - 1) {
    throw std::invalid_argument("linearize: solver state does not match horizon");
  }
  reference.validate(N);

  LinearizedOcp lin;
  lin.A.resize(N - 1);
  lin.B.resize(N - 1);
  lin.Hxx.resize(N);
  lin.Hxu.resize(N);
  lin.Huu.resize(N);
  lin.gx.resize(N);
  lin.gu.resize(N);

  // Gap closure: the guess is re-propagated from the latest estimate.
  auto& X = state.X_guess;
  const auto& U = state.U_guess;
  X.resize(N);
  X[0] = x_est;
  for (int k = 0; k < N - 1; ++k) {
    const StepWithJacobians step = shooting_step_with_jacobians(X[k], U[k], ocp);
    lin.A[k] = step.A;
    lin.B[k] = step.B;
    X[k + 1] = step.next;
  }

  const Reference& ref = reference;
  const CostWeights& weights = ocp.weights;

  PerceptionStateJacobian Jzx;
  Mat4 Jzu;
  for (int k = 0; k < N; ++k) {
    const bool terminal = k == N - 1;
    const StateMatrix& Qx = terminal ? weights.Qx_terminal : weights.Qx_at(k);
    const StateMatrix Jx = state_residual_jacobian(X[k], ref.x[k], ref.heading_free);
    const StateVector rx = state_residual(X[k], ref.x[k], ref.heading_free);
    const StateMatrix QJ = Qx * Jx;
    lin.Hxx[k] = 2.0 * Jx.transpose() * QJ;
    lin.gx[k] = 2.0 * QJ.transpose() * rx;
    add_velocity_penalty(X[k].v, ocp.bounds, lin.Hxx[k], lin.gx[k]);
    lin.Hxu[k].setZero();
    lin.Huu[k].setZero();
    lin.gu[k].setZero();
    if (terminal) continue;

    const Mat4& R = weights.R_at(k);
    lin.Huu[k] = 2.0 * R;
    lin.gu[k] = 2.0 * R * (U[k].to_vector() - ref.u[k].to_vector());

    const Mat4& Qp = weights.Qp_at(k);
    if (!Qp.isZero(0.0)) {
      const Vec4 rz = guarded_perception_residual(X[k], U[k], ocp, poi);
      perception_jacobians(X[k], U[k], ocp, poi, options.perception_fd_step, Jzx, Jzu);
      if (!rz.allFinite() || !Jzx.allFinite() || !Jzu.allFinite()) {
        throw LinearizationFailure("non-finite perception residual at stage " + std::to_string(k));
      }
      const Eigen::Matrix<double, 4, kStateDim> QpJx = Qp * Jzx;
      const Mat4 QpJu = Qp * Jzu;
      lin.Hxx[k] += 2.0 * Jzx.transpose() * QpJx;
      lin.Hxu[k] += 2.0 * QpJx.transpose() * Jzu;
      lin.Huu[k] += 2.0 * Jzu.transpose() * QpJu;
      lin.gx[k] += 2.0 * QpJx.transpose() * rz;
      lin.gu[k] += 2.0 * QpJu.transpose() * rz;
    }
  }
  for (int k = 0; k < N; ++k) {
    if (!lin.Hxx[k].allFinite() || !lin.gx[k].allFinite() || !lin.gu[k].allFinite()) {
      throw LinearizationFailure("non-finite cost linearization at node " + std::to_string(k));
    }
  }
  return lin;
}

CondensedQp condense(const LinearizedOcp& lin, const std::vector<QuadInput>& U_guess, const Bounds& bounds,
                     double levenberg_initial) {
  const int N = static_cast<int>(lin.Hxx.size());
  const int M = kInputDim * (N - 1);
  CondensedQp qp;
  qp.H = Eigen::MatrixXd::Zero(M, M);
  qp.g = Eigen::VectorXd::Zero(M);

  // G maps stacked input corrections to the state correction at node k.
  Eigen::Matrix<double, kStateDim, Eigen::Dynamic> G = Eigen::Matrix<double, kStateDim, Eigen::Dynamic>::Zero(kStateDim, M);
  for (int k = 0; k < N; ++k) {
    const int nk = kInputDim * k;
    if (nk > 0) {
      const auto Gk = G.leftCols(nk);
      qp.H.topLeftCorner(nk, nk).noalias() += Gk.transpose() * lin.Hxx[k] * Gk;
      qp.g.head(nk).noalias() += Gk.transpose() * lin.gx[k];
    }
    if (k == N - 1) break;
    if (nk > 0) {
      const Eigen::MatrixXd cross = G.leftCols(nk).transpose() * lin.Hxu[k];
      qp.H.block(0, nk, nk, kInputDim) += cross;
      qp.H.block(nk, 0, kInputDim, nk) += cross.transpose();
    }
    qp.H.block<kInputDim, kInputDim>(nk, nk) += lin.Huu[k];
    qp.g.segment<kInputDim>(nk) += lin.gu[k];

    if (nk > 0) G.leftCols(nk) = lin.A[k] * G.leftCols(nk);
    G.middleCols<kInputDim>(nk) = lin.B[k];
  }
  qp.H = 0.5 * (qp.H + qp.H.transpose()).eval();

  double lambda = levenberg_initial;
  const Eigen::MatrixXd I = Eigen::MatrixXd::Identity(M, M);
  for (int attempt = 0; attempt < 200; ++attempt) {
    Eigen::LLT<Eigen::MatrixXd> llt(qp.H + lambda * I);
    if (llt.info() == Eigen::Success) break;
    lambda *= 2.0;
  }
  qp.H += lambda * I;
  qp.regularization = lambda;

  qp.lb.resize(M);
  qp.ub.resize(M);
  for (int k = 0; k < N - 1; ++k) {
    const QuadInput& u = U_guess[k];
    qp.lb[4 * k] = bounds.c_min - u.c;
    qp.ub[4 * k] = bounds.c_max - u.c;
    for (int j = 0; j < 3; ++j) {
      qp.lb[4 * k + 1 + j] = -bounds.omega_max - u.omega[j];
      qp.ub[4 * k + 1 + j] = bounds.omega_max - u.omega[j];
    }
  }
  qp.ub = qp.ub.cwiseMax(qp.lb);
  return qp;
}

CondensedQp linearize_and_condense(SolverState& state, const QuadState& x_est, const OcpConfig& ocp,
                                   const Reference& reference, const Vec3& poi, const SolverOptions& options) {
  const LinearizedOcp lin = linearize(state, x_est, ocp, reference, poi, options);
  return condense(lin, state.U_guess, ocp.bounds, options.levenberg_initial);
}

RtiResult rti_step(SolverState& state, const QuadState& x_est, const OcpConfig& ocp, const Reference& reference,
                   const Vec3& poi, const SolverOptions& options) {
  const auto t0 = std::chrono::steady_clock::now();
  RtiResult result;
  auto finish = [&](SolveStatus status) {
    state.last_status = status;
    result.diagnostics.status = status;
    result.predicted = state.X_guess;
    result.diagnostics.solve_time_us =
        std::chrono::duration<double, std::micro>(std::chrono::steady_clock::now() - t0).count();
    return result;
  };

  CondensedQp qp;
  try {
    qp = linearize_and_condense(state, x_est, ocp, reference, poi, options);
  } catch (const LinearizationFailure&) {
    result.u_apply = state.last_applied;
    return finish(SolveStatus::LinearizationFailed);
  }

  const double kkt = qp_kkt_residual(qp, Eigen::VectorXd::Zero(qp.size()));
  state.last_kkt_residual = kkt;
  result.diagnostics.kkt_residual = kkt;

  const QpSolution sol = solve_qp(qp, options.qp_max_iter);
  result.diagnostics.qp_iterations = sol.iterations;
  if (sol.status == QpStatus::Degenerate) {
    result.u_apply = state.last_applied;
    return finish(SolveStatus::Degenerate);
  }

  for (int k = 0; k < ocp.N - 1; ++k) {
    const InputVector du = sol.du.segment<kInputDim>(kInputDim * k);
    state.U_guess[k] = clamp_input(QuadInput::from_vector(state.U_guess[k].to_vector() + du), ocp.bounds);
  }
  state.X_guess = rollout(x_est, state.U_guess, ocp);
  state.last_applied = state.U_guess.front();
  result.u_apply = state.last_applied;
  return finish(sol.status == QpStatus::Optimal ? SolveStatus::Optimal : SolveStatus::MaxIter);
}

SolverState advance_warm_start(const SolverState& state, double fraction) {
  SolverState out = state;
  const int nx = static_cast<int>(state.X_guess.size());
  const int nu = static_cast<int>(state.U_guess.size());
  const int whole = static_cast<int>(std::floor(fraction));
  const double frac = fraction - whole;
  for (int i = 0; i < nx; ++i) {
    const int a = std::min(i + whole, nx - 1);
    const int b = std::min(a + 1, nx - 1);
    out.X_guess[i] = frac == 0.0 ? state.X_guess[a] : lerp_state(state.X_guess[a], state.X_guess[b], frac);
  }
  for (int i = 0; i < nu; ++i) {
    const int a = std::min(i + whole, nu - 1);
    const int b = std::min(a + 1, nu - 1);
    out.U_guess[i] = frac == 0.0 ? state.U_guess[a] : lerp_input(state.U_guess[a], state.U_guess[b], frac);
  }
  return out;
}

SolverState shift_warm_start(const SolverState& state) { return advance_warm_start(state, 1.0); }

double nlp_objective(const std::vector<QuadState>& X, const std::vector<QuadInput>& U, const OcpConfig& ocp,
                     const Reference& reference, const Vec3& poi) {
  double cost = total_cost(X, U, ocp, reference, poi);
  for (const auto& x : X) cost += velocity_penalty(x.v, ocp.bounds);
  return cost;
}

}  // namespace pampc
