#include "pampc/sim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <limits>
#include <random>
#include <stdexcept>

#include "pampc/errors.hpp"

namespace pampc {
namespace {

constexpr double kDivergenceRadius = 100.0;

double loop_length(const std::vector<Vec3>& wp) {
  double len = 0.0;
  for (std::size_t i = 0; i < wp.size(); ++i) len += (wp[(i + 1) % wp.size()] - wp[i]).norm();
  return len;
}

// Position and velocity along the closed waypoint loop at arc length s.
void waypoint_loop(const DarknessParams& d, double t, Vec3& p, Vec3& v) {
  const auto& wp = d.waypoints;
  const double total = loop_length(wp);
  double s = std::max(0.0, t) * d.cruise_speed;
  if (s >= total) {
    p = wp.front();
    v.setZero();
    return;
  }
  for (std::size_t i = 0; i < wp.size(); ++i) {
    const Vec3 a = wp[i];
    const Vec3 b = wp[(i + 1) % wp.size()];
    const double len = (b - a).norm();
    if (s < len || i + 1 == wp.size()) {
      const Vec3 dir = (b - a) / len;
      p = a + std::min(s, len) * dir;
      v = d.cruise_speed * dir;
      return;
    }
    s -= len;
  }
}

UnitQuaternion facing(const Vec3& from, const Vec3& to) {
  const Vec3 d = to - from;
  return UnitQuaternion::from_yaw(std::atan2(d.y(), d.x()));
}

std::vector<Vec3> candidate_pois(const Scenario& scenario) {
  std::vector<Vec3> pois;
  if (scenario.kind == ScenarioKind::Darkness) {
    for (const auto& cluster : scenario.darkness.clusters) pois.push_back(centroid(cluster));
  } else {
    pois.push_back(centroid(scenario.landmarks));
  }
  return pois;
}

}  // namespace

std::string_view to_string(ScenarioKind k) {
  switch (k) {
    case ScenarioKind::Circle:
      return "circle";
    case ScenarioKind::HoverToHover:
      return "hover_to_hover";
    case ScenarioKind::Darkness:
      return "darkness";
    case ScenarioKind::HoverRegulation:
      return "hover";
  }
  return "unknown";
}

ScenarioKind scenario_kind_from_string(std::string_view s) {
  if (s == "circle") return ScenarioKind::Circle;
  if (s == "hover_to_hover") return ScenarioKind::HoverToHover;
  if (s == "darkness") return ScenarioKind::Darkness;
  if (s == "hover") return ScenarioKind::HoverRegulation;
  throw std::invalid_argument("unknown scenario kind '" + std::string(s) + "'");
}

void Scenario::validate() const {
  if (!(duration > 0.0)) throw std::invalid_argument("Scenario: duration must be positive");
  switch (kind) {
    case ScenarioKind::Circle:
      if (!(circle.radius > 0.0)) throw std::invalid_argument("Scenario: circle radius must be positive");
      if (landmarks.empty()) throw EmptyLandmarkSet();
      break;
    case ScenarioKind::Darkness:
      if (darkness.clusters.empty()) throw std::invalid_argument("Scenario: darkness needs at least one cluster");
      for (const auto& c : darkness.clusters) {
        if (c.empty()) throw EmptyLandmarkSet();
      }
      if (darkness.waypoints.size() < 2) throw std::invalid_argument("Scenario: darkness needs >= 2 waypoints");
      if (!(darkness.cruise_speed > 0.0)) throw std::invalid_argument("Scenario: cruise speed must be positive");
      break;
    case ScenarioKind::HoverToHover:
    case ScenarioKind::HoverRegulation:
      if (landmarks.empty()) throw EmptyLandmarkSet();
      break;
  }
}

QuadState Scenario::initial_state(const CameraExtrinsics& extr) const {
  QuadState x;
  switch (kind) {
    case ScenarioKind::Circle: {
      x.p = reference_position(*this, 0.0);
      x.v = Vec3(0.0, circle.speed, 0.0);
      x.q = facing(x.p, centroid(landmarks));
      break;
    }
    case ScenarioKind::HoverToHover:
      x.p = hover_to_hover.p1;
      x.q = facing(x.p, centroid(landmarks));
      break;
    case ScenarioKind::Darkness: {
      x.p = darkness.waypoints.front();
      PoiSelector sel(*this, extr);
      // Face the cluster that is closest to the heading-free optical axis.
      double best = std::numeric_limits<double>::infinity();
      for (const auto& poi : sel.candidates()) {
        QuadState probe = x;
        probe.q = facing(x.p, poi);
        const double a = angle_from_optical_axis(probe, extr, poi);
        if (a < best) {
          best = a;
          x.q = probe.q;
        }
      }
      break;
    }
    case ScenarioKind::HoverRegulation:
      x.p = hover.position;
      break;
  }
  return x;
}

Scenario Scenario::make_circle(double speed) {
  Scenario s;
  s.kind = ScenarioKind::Circle;
  s.circle.speed = speed;
  s.landmarks = {Landmark{Vec3(s.circle.center.x(), s.circle.center.y(), 0.0)}};
  s.duration = 20.0;
  return s;
}

Scenario Scenario::make_hover_to_hover() {
  Scenario s;
  s.kind = ScenarioKind::HoverToHover;
  s.landmarks = {Landmark{Vec3(1.5, 0.0, 0.5)}};
  s.duration = 6.0;
  return s;
}

Scenario Scenario::make_darkness() {
  Scenario s;
  s.kind = ScenarioKind::Darkness;
  s.darkness.waypoints = {Vec3(0, 0, 1.2), Vec3(4, 0, 1.2), Vec3(4, 3, 1.2), Vec3(0, 3, 1.2)};
  s.darkness.clusters = {
      {Landmark{Vec3(5.5, 0.3, 0.2)}, Landmark{Vec3(5.5, 0.7, 0.2)}, Landmark{Vec3(5.5, 0.5, 0.4)}},
      {Landmark{Vec3(0.8, 4.5, 0.2)}, Landmark{Vec3(1.2, 4.5, 0.2)}, Landmark{Vec3(1.0, 4.5, 0.4)}},
  };
  s.duration = loop_length(s.darkness.waypoints) / s.darkness.cruise_speed + 2.0;
  return s;
}

Scenario Scenario::make_hover_regulation(const CameraExtrinsics& extr) {
  Scenario s;
  s.kind = ScenarioKind::HoverRegulation;
  QuadState x;
  x.p = s.hover.position;
  // Put the landmark on the optical axis, at the depth where it meets the floor.
  const Vec3 cam = camera_position_world(x, extr);
  const Vec3 axis = optical_axis_world(x, extr);
  const double depth = axis.z() < -1e-6 ? -cam.z() / axis.z() : 2.0;
  s.landmarks = {Landmark{cam + depth * axis}};
  s.duration = 5.0;
  return s;
}

void SimConfig::validate() const {
  if (!(sim_dt > 0.0)) throw std::invalid_argument("SimConfig: sim_dt must be positive");
  if (!(control_period >= sim_dt)) throw std::invalid_argument("SimConfig: control_period must be >= sim_dt");
  const double ratio = control_period / sim_dt;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw std::invalid_argument("SimConfig: control_period must be a multiple of sim_dt");
  }
  if (noise_position < 0 || noise_velocity < 0 || noise_attitude < 0 || rate_loop_tau < 0) {
    throw std::invalid_argument("SimConfig: noise and lag parameters must be nonnegative");
  }
}

int SimConfig::substeps() const { return static_cast<int>(std::lround(control_period / sim_dt)); }

Vec3 reference_position(const Scenario& scenario, double t) {
  switch (scenario.kind) {
    case ScenarioKind::Circle: {
      const auto& c = scenario.circle;
      const double theta = c.speed / c.radius * t;
      return {c.center.x() + c.radius * std::cos(theta), c.center.y() + c.radius * std::sin(theta), c.altitude};
    }
    case ScenarioKind::HoverToHover:
      return t < 0.0 ? scenario.hover_to_hover.p1 : scenario.hover_to_hover.p2;
    case ScenarioKind::Darkness: {
      Vec3 p, v;
      waypoint_loop(scenario.darkness, t, p, v);
      return p;
    }
    case ScenarioKind::HoverRegulation:
      return scenario.hover.position;
  }
  return Vec3::Zero();
}

Reference reference_for(const Scenario& scenario, double t, const OcpConfig& ocp) {
  Reference ref;
  ref.x.resize(ocp.N);
  ref.u.assign(ocp.N - 1, QuadInput::hover(ocp.model.g));
  ref.heading_free = scenario.kind != ScenarioKind::HoverRegulation;
  const Vec3 gravity(0.0, 0.0, -ocp.model.g);
  for (int i = 0; i < ocp.N; ++i) {
    const double ti = t + i * ocp.dt;
    QuadState& x = ref.x[i];
    Vec3 accel = Vec3::Zero();
    switch (scenario.kind) {
      case ScenarioKind::Circle: {
        const auto& c = scenario.circle;
        const double w = c.speed / c.radius;
        const double th = w * ti;
        x.p = reference_position(scenario, ti);
        x.v = Vec3(-c.speed * std::sin(th), c.speed * std::cos(th), 0.0);
        accel = Vec3(-c.radius * w * w * std::cos(th), -c.radius * w * w * std::sin(th), 0.0);
        break;
      }
      case ScenarioKind::HoverToHover:
      case ScenarioKind::HoverRegulation:
        x.p = reference_position(scenario, ti);
        break;
      case ScenarioKind::Darkness:
        waypoint_loop(scenario.darkness, ti, x.p, x.v);
        break;
    }
    if (i < ocp.N - 1) ref.u[i].c = std::clamp((accel - gravity).norm(), ocp.bounds.c_min, ocp.bounds.c_max);
  }
  return ref;
}

double angle_from_optical_axis(const QuadState& x, const CameraExtrinsics& extr, const Vec3& p_W) {
  const Vec3 ray = p_W - camera_position_world(x, extr);
  const double c = optical_axis_world(x, extr).dot(ray) / std::max(ray.norm(), 1e-12);
  return std::acos(std::clamp(c, -1.0, 1.0));
}

PoiSelector::PoiSelector(const Scenario& scenario, const CameraExtrinsics& extr)
    : extr_(extr),
      pois_(candidate_pois(scenario)),
      hysteresis_rad_(scenario.darkness.hysteresis_deg * std::numbers::pi / 180.0) {}

Vec3 PoiSelector::update(const QuadState& x) {
  int best = 0;
  double best_angle = std::numeric_limits<double>::infinity();
  for (int i = 0; i < static_cast<int>(pois_.size()); ++i) {
    const double a = angle_from_optical_axis(x, extr_, pois_[i]);
    if (a < best_angle) {
      best_angle = a;
      best = i;
    }
  }
  if (current_ < 0) {
    current_ = best;
  } else if (best != current_ &&
             best_angle + hysteresis_rad_ < angle_from_optical_axis(x, extr_, pois_[current_])) {
    current_ = best;
    ++switches_;
  }
  return pois_[current_];
}

Vec3 active_poi(const Scenario& scenario, const QuadState& x, const CameraExtrinsics& extr) {
  PoiSelector sel(scenario, extr);
  return sel.update(x);
}

SimLog run_closed_loop(const Scenario& scenario, const OcpConfig& ocp, const SimConfig& sim,
                       const SolverOptions& options) {
  scenario.validate();
  ocp.validate();
  sim.validate();

  std::mt19937_64 rng(sim.seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  QuadState x = scenario.initial_state(ocp.extrinsics);
  SolverState solver = SolverState::initialize(x, ocp);
  PoiSelector selector(scenario, ocp.extrinsics);
  Vec3 omega_actual = Vec3::Zero();

  const int steps = static_cast<int>(std::lround(scenario.duration / sim.control_period));
  const int substeps = sim.substeps();
  const double shift = sim.control_period / ocp.dt;

  SimLog log;
  log.records.reserve(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * sim.control_period;
    if (!x.is_finite()) throw SimDiverged(t, "non-finite state");
    if (x.p.norm() > kDivergenceRadius) throw SimDiverged(t, "position norm exceeds 100 m");

    QuadState x_est = x;
    if (sim.noise_position > 0.0 || sim.noise_velocity > 0.0 || sim.noise_attitude > 0.0) {
      for (int j = 0; j < 3; ++j) x_est.p[j] += sim.noise_position * normal(rng);
      for (int j = 0; j < 3; ++j) x_est.v[j] += sim.noise_velocity * normal(rng);
      Vec3 dtheta;
      for (int j = 0; j < 3; ++j) dtheta[j] = sim.noise_attitude * normal(rng);
      if (dtheta.norm() > 0.0) x_est.q = quat_mul(x.q, UnitQuaternion::from_axis_angle(dtheta, dtheta.norm()));
    }

    const Vec3 poi = selector.update(x_est);
    const Reference ref = reference_for(scenario, t, ocp);
    const RtiResult res = rti_step(solver, x_est, ocp, ref, poi, options);

    SimRecord rec;
    rec.t = t;
    rec.x = x;
    rec.u = res.u_apply;
    rec.poi_index = selector.current();
    const Vec3 p_C = point_in_camera(x, ocp.extrinsics, poi);
    rec.depth = p_C.z();
    if (p_C.z() > ocp.depth_epsilon) {
      rec.z = perception_state(x, rec.u, ocp.extrinsics, ocp.intrinsics, poi, ocp.depth_epsilon);
      rec.poi_visible =
          std::abs(rec.z->u) <= ocp.intrinsics.half_width && std::abs(rec.z->v) <= ocp.intrinsics.half_height;
    }
    rec.solve_time_us = sim.record_timing ? res.diagnostics.solve_time_us : 0.0;
    rec.kkt_residual = res.diagnostics.kkt_residual;
    rec.qp_iterations = res.diagnostics.qp_iterations;
    rec.status = res.diagnostics.status;
    log.records.push_back(rec);
    if (sim.keep_predictions) log.predictions.push_back(res.predicted);
    if (k == steps) break;

    for (int s = 0; s < substeps; ++s) {
      if (sim.rate_loop_tau > 0.0) {
        omega_actual += (1.0 - std::exp(-sim.sim_dt / sim.rate_loop_tau)) * (rec.u.omega - omega_actual);
      } else {
        omega_actual = rec.u.omega;
      }
      x = rk4_step(x, {rec.u.c, omega_actual}, sim.sim_dt, ocp.model);
    }
    solver = advance_warm_start(solver, shift);
  }
  log.poi_switches = selector.switches();
  return log;
}

MetricReport compute_metrics(const SimLog& log, const Scenario& scenario, const CameraIntrinsics& intr,
                             const Bounds& bounds) {
  MetricReport m;
  const auto& recs = log.records;
  if (recs.empty()) return m;
  const double n = static_cast<double>(recs.size());

  int valid = 0;
  int visible = 0;
  int central = 0;
  double dist_sum = 0.0;
  double speed_sum = 0.0;
  double time_sum = 0.0;
  double err_sum = 0.0;
  m.max_altitude_m = -std::numeric_limits<double>::infinity();
  for (const auto& r : recs) {
    if (r.poi_visible) ++visible;
    if (r.z) {
      ++valid;
      const double d = std::hypot(r.z->u, r.z->v);
      dist_sum += d;
      m.max_center_distance_px = std::max(m.max_center_distance_px, d);
      speed_sum += std::hypot(r.z->u_dot, r.z->v_dot);
      if (std::abs(r.z->u) <= 0.5 * intr.half_width && std::abs(r.z->v) <= 0.5 * intr.half_height) ++central;
    }
    m.max_altitude_m = std::max(m.max_altitude_m, r.x.p.z());
    m.max_abs_pitch_rad = std::max(m.max_abs_pitch_rad, std::abs(pitch_of(r.x.q)));
    if (!check_bounds(r.u, r.x.v, bounds).input_feasible(1e-9)) ++m.bound_violations;
    time_sum += r.solve_time_us;
    m.solve_time_max_us = std::max(m.solve_time_max_us, r.solve_time_us);
    err_sum += (r.x.p - reference_position(scenario, r.t)).squaredNorm();
  }
  if (valid > 0) {
    m.mean_center_distance_px = dist_sum / valid;
    m.mean_projection_speed_px_s = speed_sum / valid;
  }
  m.fov_visible_fraction = visible / n;
  m.center_half_fraction = central / n;
  m.solve_time_mean_us = time_sum / n;
  double var = 0.0;
  for (const auto& r : recs) var += (r.solve_time_us - m.solve_time_mean_us) * (r.solve_time_us - m.solve_time_mean_us);
  m.solve_time_std_us = std::sqrt(var / n);
  m.tracking_rmse_m = std::sqrt(err_sum / n);
  return m;
}

}  // namespace pampc
