#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pampc/ocp.hpp"
#include "pampc/solver.hpp"

namespace pampc {

enum class ScenarioKind : std::uint8_t { Circle, HoverToHover, Darkness, HoverRegulation };

std::string_view to_string(ScenarioKind k);
ScenarioKind scenario_kind_from_string(std::string_view s);

struct CircleParams {
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  double radius = 1.8;
  double speed = 3.0;
  double altitude = 1.5;
};

struct HoverToHoverParams {
  Vec3 p1 = Vec3(0.0, -1.5, 1.2);
  Vec3 p2 = Vec3(0.0, 1.5, 1.2);
};

struct DarknessParams {
  /// Closed loop through the waypoints (the first one is not repeated).
  std::vector<Vec3> waypoints;
  double cruise_speed = 1.5;
  std::vector<std::vector<Landmark>> clusters;
  double hysteresis_deg = 15.0;
};

struct HoverRegulationParams {
  Vec3 position = Vec3(0.0, 0.0, 1.5);
};

struct Scenario {
  ScenarioKind kind = ScenarioKind::HoverRegulation;
  CircleParams circle;
  HoverToHoverParams hover_to_hover;
  DarknessParams darkness;
  HoverRegulationParams hover;
  /// Landmarks for the single-POI scenarios (the POI is their centroid).
  std::vector<Landmark> landmarks;
  double duration = 10.0;

  void validate() const;
  QuadState initial_state(const CameraExtrinsics& extr) const;

  static Scenario make_circle(double speed = 3.0);
  static Scenario make_hover_to_hover();
  static Scenario make_darkness();
  /// Hover with a landmark placed on the optical axis of the default camera.
  static Scenario make_hover_regulation(const CameraExtrinsics& extr = {});
};

struct SimConfig {
  double sim_dt = 1e-3;
  double control_period = 0.01;
  /// Standard deviation of additive estimate noise per channel group.
  double noise_position = 0.0;
  double noise_velocity = 0.0;
  double noise_attitude = 0.0;  // rad, small-angle perturbation
  /// First-order body-rate lag time constant; 0 applies commanded rates exactly.
  double rate_loop_tau = 0.0;
  std::uint64_t seed = 0;
  /// Record wall-clock solve times. Off keeps logs byte-reproducible.
  bool record_timing = false;
  bool keep_predictions = false;

  void validate() const;
  int substeps() const;
};

struct SimRecord {
  double t = 0.0;
  QuadState x;
  QuadInput u;
  /// Empty when the active POI is at or behind the camera plane.
  std::optional<PerceptionState> z;
  double depth = 0.0;
  bool poi_visible = false;
  int poi_index = 0;
  double solve_time_us = 0.0;
  double kkt_residual = 0.0;
  int qp_iterations = 0;
  SolveStatus status = SolveStatus::NotRun;
};

struct SimLog {
  std::vector<SimRecord> records;
  /// Predicted open-loop trajectories per control step (keep_predictions).
  std::vector<std::vector<QuadState>> predictions;
  int poi_switches = 0;
};

struct MetricReport {
  double mean_center_distance_px = 0.0;
  double max_center_distance_px = 0.0;
  double fov_visible_fraction = 0.0;
  /// POI within the central half of the image in each axis.
  double center_half_fraction = 0.0;
  double mean_projection_speed_px_s = 0.0;
  double max_altitude_m = 0.0;
  double max_abs_pitch_rad = 0.0;
  int bound_violations = 0;
  double solve_time_mean_us = 0.0;
  double solve_time_max_us = 0.0;
  double solve_time_std_us = 0.0;
  double tracking_rmse_m = 0.0;
};

/// Position reference of a scenario at time t (also used for RMSE).
Vec3 reference_position(const Scenario& scenario, double t);

Reference reference_for(const Scenario& scenario, double t, const OcpConfig& ocp);

/// Deterministic cluster selection with hysteresis for the darkness scenario;
/// single-POI scenarios always return the landmark centroid.
class PoiSelector {
 public:
  PoiSelector(const Scenario& scenario, const CameraExtrinsics& extr);

  /// Updates the selection for the current state and returns the POI.
  Vec3 update(const QuadState& x);
  Vec3 poi() const { return pois_.at(current_); }
  int current() const { return current_; }
  int switches() const { return switches_; }
  const std::vector<Vec3>& candidates() const { return pois_; }

 private:
  CameraExtrinsics extr_;
  std::vector<Vec3> pois_;
  double hysteresis_rad_;
  int current_ = -1;
  int switches_ = 0;
};

/// Angle between the optical axis and the ray from the camera to `p_W`.
double angle_from_optical_axis(const QuadState& x, const CameraExtrinsics& extr, const Vec3& p_W);

/// Stateless view of the POI for a given state: single-POI scenarios return
/// the centroid, the darkness scenario the cluster closest to the optical
/// axis.
Vec3 active_poi(const Scenario& scenario, const QuadState& x, const CameraExtrinsics& extr = {});

SimLog run_closed_loop(const Scenario& scenario, const OcpConfig& ocp, const SimConfig& sim,
                       const SolverOptions& options = {});

MetricReport compute_metrics(const SimLog& log, const Scenario& scenario, const CameraIntrinsics& intr,
                             const Bounds& bounds = {});

}  // namespace pampc
