#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "pampc/ocp.hpp"
#include "pampc/qp.hpp"

namespace pampc {

enum class SolveStatus : std::uint8_t { NotRun, Optimal, MaxIter, Degenerate, LinearizationFailed };

std::string_view to_string(SolveStatus s);

/// Warm-start trajectory carried from one control loop to the next.
struct SolverState {
  std::vector<QuadState> X_guess;  // N entries
  std::vector<QuadInput> U_guess;  // N-1 entries
  SolveStatus last_status = SolveStatus::NotRun;
  double last_kkt_residual = 0.0;
  QuadInput last_applied;

  /// Cold start: states held at x_est, hover inputs.
  static SolverState initialize(const QuadState& x_est, const OcpConfig& ocp);
};

/// One Gauss-Newton linearization of the transcribed problem around the
/// current guess (states re-propagated from x_est).
struct LinearizedOcp {
  std::vector<StateMatrix> A;  // N-1 entries
  std::vector<InputMatrix> B;
  // Per-node Gauss-Newton blocks; node N-1 holds the terminal cost (no input).
  std::vector<StateMatrix> Hxx;  // N entries
  std::vector<InputMatrix> Hxu;  // N entries, last is zero
  std::vector<Mat4> Huu;         // N entries, last is zero
  std::vector<StateVector> gx;
  std::vector<InputVector> gu;
};

struct SolverOptions {
  double perception_fd_step = 1e-6;
  double levenberg_initial = 1e-6;
  int qp_max_iter = 500;
};

/// Re-propagates the guess from x_est and assembles stage Jacobians and
/// Gauss-Newton blocks. Throws LinearizationFailure on non-finite values.
LinearizedOcp linearize(SolverState& state, const QuadState& x_est, const OcpConfig& ocp, const Reference& reference,
                        const Vec3& poi, const SolverOptions& options = {});

/// Eliminates the state corrections, producing a QP over stacked input
/// corrections, and applies the Levenberg shift.
CondensedQp condense(const LinearizedOcp& lin, const std::vector<QuadInput>& U_guess, const Bounds& bounds,
                     double levenberg_initial = 1e-6);

CondensedQp linearize_and_condense(SolverState& state, const QuadState& x_est, const OcpConfig& ocp,
                                   const Reference& reference, const Vec3& poi, const SolverOptions& options = {});

struct RtiDiagnostics {
  double solve_time_us = 0.0;
  int qp_iterations = 0;
  double kkt_residual = 0.0;
  SolveStatus status = SolveStatus::NotRun;
};

struct RtiResult {
  QuadInput u_apply;
  std::vector<QuadState> predicted;
  RtiDiagnostics diagnostics;
};

/// One real-time iteration: linearize, condense, solve the QP, take the full
/// step, re-propagate. On failure the previously applied input is returned
/// with the failure status.
RtiResult rti_step(SolverState& state, const QuadState& x_est, const OcpConfig& ocp, const Reference& reference,
                   const Vec3& poi, const SolverOptions& options = {});

/// Shifts the guess by one stage and duplicates the last stage.
SolverState shift_warm_start(const SolverState& state);

/// Shifts the guess by a fraction of a stage (linear interpolation between
/// neighbouring stages); fraction = 1 is shift_warm_start.
SolverState advance_warm_start(const SolverState& state, double fraction);

/// Objective the solver minimizes: total_cost plus
/// the soft velocity penalty.
double nlp_objective(const std::vector<QuadState>& X, const std::vector<QuadInput>& U, const OcpConfig& ocp,
                     const Reference& reference, const Vec3& poi);

/// One shooting interval of length ocp.dt: integrator_substeps RK4 steps
/// with the input held.
QuadState shooting_step(const QuadState& x, const QuadInput& u, const OcpConfig& ocp);

/// shooting_step with sensitivities chained over the sub-steps.
StepWithJacobians shooting_step_with_jacobians(const QuadState& x, const QuadInput& u, const OcpConfig& ocp);

/// Propagates x0 through shooting_step along U.
std::vector<QuadState> rollout(const QuadState& x0, const std::vector<QuadInput>& U, const OcpConfig& ocp);

}  // namespace pampc
