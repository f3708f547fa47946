#pragma once

#include <vector>

#include "pampc/dynamics.hpp"
#include "pampc/perception.hpp"

namespace pampc {

/// Rows of the 10-dim state residual: position 0..2, velocity 3..5,
/// attitude 6..8, row 9 reserved (always zero).
inline constexpr int kAttitudeRow = 6;
inline constexpr int kYawRow = 8;

/// Quadratic weights. Per-stage overrides (when non-empty) replace the
/// time-invariant matrix for the stages they cover.
struct CostWeights {
  StateMatrix Qx_stage = StateMatrix::Zero();
  StateMatrix Qx_terminal = StateMatrix::Zero();
  Mat4 Qp = Mat4::Zero();
  Mat4 R = Mat4::Identity();

  std::vector<StateMatrix> Qx_stage_schedule;
  std::vector<Mat4> Qp_schedule;
  std::vector<Mat4> R_schedule;

  const StateMatrix& Qx_at(int stage) const;
  const Mat4& Qp_at(int stage) const;
  const Mat4& R_at(int stage) const;

  /// Symmetry and semidefiniteness checks. Throws std::invalid_argument.
  void validate() const;

  /// Default tuning for the given camera (perception weights are scaled with
  /// the focal length so that the angular weighting is camera independent).
  static CostWeights defaults(const CameraIntrinsics& intr);
};

struct Bounds {
  double c_min = 2.0;
  double c_max = 19.6;
  double omega_max = 3.0;
  double v_max = 5.0;
  /// Weight of the quadratic exact penalty on velocity bound violation.
  double velocity_penalty = 1e3;

  void validate() const;
};

struct Reference {
  std::vector<QuadState> x;  // N entries
  std::vector<QuadInput> u;  // N-1 entries
  /// No heading reference: only the tilt of the attitude is penalized.
  bool heading_free = false;

  void validate(int N) const;
};

struct OcpConfig {
  int N = 20;
  double dt = 0.1;
  /// RK4 sub-steps per shooting interval.
  int integrator_substeps = 4;
  CostWeights weights = CostWeights::defaults(CameraIntrinsics{});
  Bounds bounds;
  CameraExtrinsics extrinsics;
  CameraIntrinsics intrinsics;
  double depth_epsilon = kDefaultDepthEpsilon;
  ModelParams model;

  double horizon() const { return N * dt; }
  int num_inputs() const { return kInputDim * (N - 1); }
  void validate() const;
};

/// [p - p_ref, v - v_ref, attitude error, 0]. The attitude error is
/// Im(q_ref^-1 * q) with the sign of its real part, so q and -q agree.
/// With heading_free it is instead built from d = (R e3 - R_ref e3)_xy, the
/// horizontal difference of the body z axes: (0.5 * (-d_y, d_x), 0). That
/// ignores rotation about the thrust axis and, for a level reference,
/// equals the quaternion error to first order.
StateVector state_residual(const QuadState& x, const QuadState& ref, bool heading_free = false);

/// d state_residual / d x on the flattened (raw quaternion) state.
StateMatrix state_residual_jacobian(const QuadState& x, const QuadState& ref, bool heading_free = false);

double stage_cost(const QuadState& x, const QuadInput& u, const PerceptionState& z, const QuadState& ref_x,
                  const QuadInput& ref_u, const CostWeights& weights, int stage = 0, bool heading_free = false);
double terminal_cost(const QuadState& x, const QuadState& ref_x, const CostWeights& weights,
                     bool heading_free = false);

/// Smooth factor in [0, 1]: 0 for depth <= eps, 1 for depth >= 3 eps,
/// cosine ramp in between.
double depth_fade(double depth, double depth_epsilon);

/// Perception residual as seen by the optimizer: evaluated with the depth
/// clamped at depth_epsilon and scaled by sqrt(depth_fade), so the weighted
/// cost fades to zero as the landmark approaches the camera plane.
Vec4 guarded_perception_residual(const QuadState& x, const QuadInput& u, const OcpConfig& config, const Vec3& poi);

/// Sum of stage costs (perception from guarded_perception_residual) plus the
/// terminal cost. X has N entries, U has N-1.
double total_cost(const std::vector<QuadState>& X, const std::vector<QuadInput>& U, const OcpConfig& config,
                  const Reference& reference, const Vec3& poi);

/// Soft velocity bound: weight * sum(max(0, |v_i| - v_max)^2).
double velocity_penalty(const Vec3& v, const Bounds& bounds);

/// Signed slacks: nonnegative everywhere iff the input and velocity are
/// within bounds.
struct BoundsReport {
  double thrust_lower = 0.0;
  double thrust_upper = 0.0;
  Vec3 omega = Vec3::Zero();
  Vec3 velocity = Vec3::Zero();

  double min_input_slack() const;
  double min_slack() const;
  bool feasible(double tol = 0.0) const { return min_slack() >= -tol; }
  bool input_feasible(double tol = 0.0) const { return min_input_slack() >= -tol; }
};

BoundsReport check_bounds(const QuadInput& u, const Vec3& v, const Bounds& bounds);

/// Clamp an input into the box.
QuadInput clamp_input(const QuadInput& u, const Bounds& bounds);

}  // namespace pampc
