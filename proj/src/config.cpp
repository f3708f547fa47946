#include "pampc/config.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "pampc/errors.hpp"

namespace pampc {
namespace {

using nlohmann::json;

json vec_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json matrix_json(const Eigen::MatrixXd& m) {
  if (m.isDiagonal(0.0)) return vec_json(Eigen::VectorXd(m.diagonal()));
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) rows.push_back(vec_json(Eigen::VectorXd(m.row(r).transpose())));
  return rows;
}

json landmarks_json(const std::vector<Landmark>& lms) {
  json a = json::array();
  for (const auto& l : lms) a.push_back(vec_json(l.p_W));
  return a;
}

json scenario_json(const Scenario& s) {
  json j;
  j["kind"] = std::string(to_string(s.kind));
  j["duration"] = s.duration;
  j["landmarks"] = landmarks_json(s.landmarks);
  switch (s.kind) {
    case ScenarioKind::Circle:
      j["circle"] = {{"center", json::array({s.circle.center.x(), s.circle.center.y()})},
                     {"radius", s.circle.radius},
                     {"speed", s.circle.speed},
                     {"altitude", s.circle.altitude}};
      break;
    case ScenarioKind::HoverToHover:
      j["hover_to_hover"] = {{"p1", vec_json(s.hover_to_hover.p1)}, {"p2", vec_json(s.hover_to_hover.p2)}};
      break;
    case ScenarioKind::Darkness: {
      json wps = json::array();
      for (const auto& w : s.darkness.waypoints) wps.push_back(vec_json(w));
      json clusters = json::array();
      for (const auto& c : s.darkness.clusters) clusters.push_back(landmarks_json(c));
      j["darkness"] = {{"waypoints", wps},
                       {"cruise_speed", s.darkness.cruise_speed},
                       {"clusters", clusters},
                       {"hysteresis_deg", s.darkness.hysteresis_deg}};
      break;
    }
    case ScenarioKind::HoverRegulation:
      j["hover"] = {{"position", vec_json(s.hover.position)}};
      break;
  }
  return j;
}

json to_json(const RunConfig& c) {
  json j;
  j["version"] = kConfigVersion;
  j["scenario"] = scenario_json(c.scenario);

  const auto& o = c.ocp;
  json weights = {{"Qx_stage", matrix_json(o.weights.Qx_stage)},
                  {"Qx_terminal", matrix_json(o.weights.Qx_terminal)},
                  {"Qp", matrix_json(o.weights.Qp)},
                  {"R", matrix_json(o.weights.R)}};
  json bounds = {{"c_min", o.bounds.c_min},
                 {"c_max", o.bounds.c_max},
                 {"omega_max", o.bounds.omega_max},
                 {"v_max", o.bounds.v_max},
                 {"velocity_penalty", o.bounds.velocity_penalty}};
  const Vec4 q = o.extrinsics.q_BC.coeffs();
  json camera = {{"t_BC", vec_json(o.extrinsics.t_BC)},
                 {"q_BC", json::array({q[0], q[1], q[2], q[3]})},
                 {"fx", o.intrinsics.fx},
                 {"fy", o.intrinsics.fy},
                 {"half_width", o.intrinsics.half_width},
                 {"half_height", o.intrinsics.half_height}};
  j["ocp"] = {{"N", o.N},
              {"dt", o.dt},
              {"integrator_substeps", o.integrator_substeps},
              {"depth_epsilon", o.depth_epsilon},
              {"g", o.model.g},
              {"weights", weights},
              {"bounds", bounds},
              {"camera", camera}};

  const auto& s = c.sim;
  j["sim"] = {{"sim_dt", s.sim_dt},
              {"control_period", s.control_period},
              {"noise_position", s.noise_position},
              {"noise_velocity", s.noise_velocity},
              {"noise_attitude", s.noise_attitude},
              {"rate_loop_tau", s.rate_loop_tau},
              {"seed", s.seed},
              {"record_timing", s.record_timing}};
  j["solver"] = {{"perception_fd_step", c.solver.perception_fd_step},
                 {"levenberg_initial", c.solver.levenberg_initial},
                 {"qp_max_iter", c.solver.qp_max_iter}};
  j["output"] = {{"directory", c.output.directory},
                 {"log_csv", c.output.log_csv},
                 {"metrics_json", c.output.metrics_json},
                 {"predicted_trajectories", c.output.predicted_trajectories}};
  return j;
}

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

// Lists (landmarks, waypoints, clusters) are replaced wholesale; objects are
// merged key by key and may only contain keys present in the defaults.
void merge_strict(json& base, const json& patch, const std::string& path) {
  if (!patch.is_object()) {
    throw ConfigInvalid(path.empty() ? "<root>" : path, "expected an object");
  }
  for (auto it = patch.begin(); it != patch.end(); ++it) {
    const std::string key = join(path, it.key());
    if (!base.contains(it.key())) throw ConfigInvalid(key, "unknown key");
    json& slot = base[it.key()];
    if (slot.is_object()) {
      merge_strict(slot, it.value(), key);
    } else {
      slot = it.value();
    }
  }
}

std::vector<std::string> split_path(const std::string& key) {
  std::vector<std::string> parts;
  std::stringstream ss(key);
  std::string part;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  return parts;
}

void apply_override(json& root, const std::string& key, const std::string& text) {
  const auto parts = split_path(key);
  if (parts.empty()) throw ConfigInvalid(key, "empty key");
  json* node = &root;
  for (const auto& part : parts) {
    if (node->is_object()) {
      if (!node->contains(part)) throw ConfigInvalid(key, "unknown key");
      node = &(*node)[part];
    } else if (node->is_array()) {
      std::size_t idx = 0;
      std::size_t used = 0;
      try {
        idx = std::stoul(part, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != part.size() || idx >= node->size()) throw ConfigInvalid(key, "bad list index '" + part + "'");
      node = &(*node)[idx];
    } else {
      throw ConfigInvalid(key, "unknown key");
    }
  }
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;
  *node = value;
}

// Typed access with the dotted key in every error.
class Reader {
 public:
  Reader(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  Reader sub(const std::string& key) const { return {at(key), join(path_, key)}; }
  const json& raw() const { return j_; }
  const std::string& path() const { return path_; }

  double num(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number()) throw ConfigInvalid(join(path_, key), "expected a number");
    return v.get<double>();
  }

  int integer(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_integer()) throw ConfigInvalid(join(path_, key), "expected an integer");
    return v.get<int>();
  }

  std::uint64_t uint(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigInvalid(join(path_, key), "expected a nonnegative integer");
    }
    return v.get<std::uint64_t>();
  }

  bool flag(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_boolean()) throw ConfigInvalid(join(path_, key), "expected true or false");
    return v.get<bool>();
  }

  std::string str(const std::string& key) const {
    const json& v = at(key);
    if (!v.is_string()) throw ConfigInvalid(join(path_, key), "expected a string");
    return v.get<std::string>();
  }

  Eigen::VectorXd vec(const std::string& key, int n) const { return to_vec(at(key), n, join(path_, key)); }
  Vec3 vec3(const std::string& key) const { return vec(key, 3); }

  Eigen::MatrixXd matrix(const std::string& key, int n) const {
    const json& v = at(key);
    const std::string where = join(path_, key);
    if (!v.is_array() || v.empty()) throw ConfigInvalid(where, "expected a list");
    if (!v.front().is_array()) return to_vec(v, n, where).asDiagonal();
    if (static_cast<int>(v.size()) != n) throw ConfigInvalid(where, "expected " + std::to_string(n) + " rows");
    Eigen::MatrixXd m(n, n);
    for (int r = 0; r < n; ++r) m.row(r) = to_vec(v[r], n, where).transpose();
    return m;
  }

  std::vector<Vec3> points(const std::string& key) const { return to_points(at(key), join(path_, key)); }

  static std::vector<Vec3> to_points(const json& v, const std::string& where) {
    if (!v.is_array()) throw ConfigInvalid(where, "expected a list of points");
    std::vector<Vec3> out;
    for (const auto& p : v) out.push_back(to_vec(p, 3, where));
    return out;
  }

 private:
  const json& at(const std::string& key) const {
    if (!j_.is_object() || !j_.contains(key)) throw ConfigInvalid(join(path_, key), "missing");
    return j_.at(key);
  }

  static Eigen::VectorXd to_vec(const json& v, int n, const std::string& where) {
    if (!v.is_array() || static_cast<int>(v.size()) != n) {
      throw ConfigInvalid(where, "expected a list of " + std::to_string(n) + " numbers");
    }
    Eigen::VectorXd out(n);
    for (int i = 0; i < n; ++i) {
      if (!v[i].is_number()) throw ConfigInvalid(where, "expected a list of " + std::to_string(n) + " numbers");
      out[i] = v[i].get<double>();
    }
    return out;
  }

  const json& j_;
  std::string path_;
};

std::vector<Landmark> to_landmarks(const std::vector<Vec3>& pts) {
  std::vector<Landmark> out;
  for (const auto& p : pts) out.push_back(Landmark{p});
  return out;
}

// Runs a struct-level validate() and reports failures against `key`.
template <typename F>
void validated(const std::string& key, F&& check) {
  try {
    check();
  } catch (const ConfigInvalid&) {
    throw;
  } catch (const std::exception& e) {
    throw ConfigInvalid(key, e.what());
  }
}

RunConfig from_json(const json& root) {
  const Reader r(root, "");
  RunConfig c = default_run_config(scenario_kind_from_string(r.sub("scenario").str("kind")));

  const Reader sc = r.sub("scenario");
  Scenario& s = c.scenario;
  s.duration = sc.num("duration");
  s.landmarks = to_landmarks(sc.points("landmarks"));
  switch (s.kind) {
    case ScenarioKind::Circle: {
      const Reader ci = sc.sub("circle");
      s.circle.center = ci.vec("center", 2);
      s.circle.radius = ci.num("radius");
      s.circle.speed = ci.num("speed");
      s.circle.altitude = ci.num("altitude");
      break;
    }
    case ScenarioKind::HoverToHover: {
      const Reader h = sc.sub("hover_to_hover");
      s.hover_to_hover.p1 = h.vec3("p1");
      s.hover_to_hover.p2 = h.vec3("p2");
      break;
    }
    case ScenarioKind::Darkness: {
      const Reader d = sc.sub("darkness");
      s.darkness.waypoints = d.points("waypoints");
      s.darkness.cruise_speed = d.num("cruise_speed");
      s.darkness.hysteresis_deg = d.num("hysteresis_deg");
      const json& clusters = d.raw().at("clusters");
      const std::string where = join(d.path(), "clusters");
      if (!clusters.is_array()) throw ConfigInvalid(where, "expected a list of clusters");
      s.darkness.clusters.clear();
      for (const auto& cl : clusters) s.darkness.clusters.push_back(to_landmarks(Reader::to_points(cl, where)));
      if (s.darkness.clusters.empty()) throw ConfigInvalid(where, "at least one cluster is required");
      break;
    }
    case ScenarioKind::HoverRegulation:
      s.hover.position = sc.sub("hover").vec3("position");
      break;
  }

  const Reader oc = r.sub("ocp");
  OcpConfig& o = c.ocp;
  o.N = oc.integer("N");
  if (o.N < 2) throw ConfigInvalid("ocp.N", "N must be at least 2");
  o.dt = oc.num("dt");
  if (!(o.dt > 0.0)) throw ConfigInvalid("ocp.dt", "must be positive");
  o.integrator_substeps = oc.integer("integrator_substeps");
  if (o.integrator_substeps < 1) throw ConfigInvalid("ocp.integrator_substeps", "must be at least 1");
  o.depth_epsilon = oc.num("depth_epsilon");
  if (!(o.depth_epsilon > 0.0)) throw ConfigInvalid("ocp.depth_epsilon", "must be positive");
  o.model.g = oc.num("g");
  if (!(o.model.g > 0.0)) throw ConfigInvalid("ocp.g", "must be positive");

  const Reader w = oc.sub("weights");
  o.weights.Qx_stage = w.matrix("Qx_stage", kStateDim);
  o.weights.Qx_terminal = w.matrix("Qx_terminal", kStateDim);
  o.weights.Qp = w.matrix("Qp", 4);
  o.weights.R = w.matrix("R", kInputDim);
  validated("ocp.weights", [&] { o.weights.validate(); });

  const Reader b = oc.sub("bounds");
  o.bounds.c_min = b.num("c_min");
  o.bounds.c_max = b.num("c_max");
  o.bounds.omega_max = b.num("omega_max");
  o.bounds.v_max = b.num("v_max");
  o.bounds.velocity_penalty = b.num("velocity_penalty");
  validated("ocp.bounds", [&] { o.bounds.validate(); });

  const Reader cam = oc.sub("camera");
  o.extrinsics.t_BC = cam.vec3("t_BC");
  validated("ocp.camera.q_BC", [&] { o.extrinsics.q_BC = UnitQuaternion(Vec4(cam.vec("q_BC", 4))); });
  o.intrinsics.fx = cam.num("fx");
  o.intrinsics.fy = cam.num("fy");
  o.intrinsics.half_width = cam.num("half_width");
  o.intrinsics.half_height = cam.num("half_height");
  validated("ocp.camera", [&] { o.intrinsics.validate(); });

  const Reader si = r.sub("sim");
  c.sim.sim_dt = si.num("sim_dt");
  c.sim.control_period = si.num("control_period");
  c.sim.noise_position = si.num("noise_position");
  c.sim.noise_velocity = si.num("noise_velocity");
  c.sim.noise_attitude = si.num("noise_attitude");
  c.sim.rate_loop_tau = si.num("rate_loop_tau");
  c.sim.seed = si.uint("seed");
  c.sim.record_timing = si.flag("record_timing");
  validated("sim", [&] { c.sim.validate(); });

  const Reader so = r.sub("solver");
  c.solver.perception_fd_step = so.num("perception_fd_step");
  if (!(c.solver.perception_fd_step > 0.0)) throw ConfigInvalid("solver.perception_fd_step", "must be positive");
  c.solver.levenberg_initial = so.num("levenberg_initial");
  if (!(c.solver.levenberg_initial > 0.0)) throw ConfigInvalid("solver.levenberg_initial", "must be positive");
  c.solver.qp_max_iter = so.integer("qp_max_iter");
  if (c.solver.qp_max_iter < 1) throw ConfigInvalid("solver.qp_max_iter", "must be at least 1");

  const Reader out = r.sub("output");
  c.output.directory = out.str("directory");
  if (c.output.directory.empty()) throw ConfigInvalid("output.directory", "must not be empty");
  c.output.log_csv = out.flag("log_csv");
  c.output.metrics_json = out.flag("metrics_json");
  c.output.predicted_trajectories = out.flag("predicted_trajectories");
  c.sim.keep_predictions = c.output.predicted_trajectories;

  validated("scenario", [&] { s.validate(); });
  return c;
}

}  // namespace

RunConfig default_run_config(ScenarioKind kind) {
  RunConfig c;
  c.ocp.weights = CostWeights::defaults(c.ocp.intrinsics);
  switch (kind) {
    case ScenarioKind::Circle:
      c.scenario = Scenario::make_circle();
      break;
    case ScenarioKind::HoverToHover:
      c.scenario = Scenario::make_hover_to_hover();
      break;
    case ScenarioKind::Darkness:
      c.scenario = Scenario::make_darkness();
      break;
    case ScenarioKind::HoverRegulation:
      c.scenario = Scenario::make_hover_regulation(c.ocp.extrinsics);
      break;
  }
  return c;
}

std::pair<std::string, std::string> split_override(const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigInvalid(assignment, "override must look like key=value");
  }
  return {assignment.substr(0, eq), assignment.substr(eq + 1)};
}

RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides) {
  const json user = json::parse(text, nullptr, false, true);
  if (user.is_discarded()) throw ConfigInvalid("<root>", "not valid JSON");
  if (!user.is_object()) throw ConfigInvalid("<root>", "expected an object");
  if (!user.contains("version")) throw ConfigInvalid("version", "missing");
  if (user.at("version") != kConfigVersion) {
    throw ConfigInvalid("version", "unsupported version (expected " + std::to_string(kConfigVersion) + ")");
  }

  // The scenario kind picks the defaults, so resolve it before merging.
  std::string kind;
  if (user.contains("scenario") && user.at("scenario").is_object() && user.at("scenario").contains("kind")) {
    const json& k = user.at("scenario").at("kind");
    if (!k.is_string()) throw ConfigInvalid("scenario.kind", "expected a string");
    kind = k.get<std::string>();
  }
  const std::string file_kind = kind;
  for (const auto& o : overrides) {
    const auto [key, value] = split_override(o);
    if (key != "scenario.kind") continue;
    const json v = json::parse(value, nullptr, false);
    kind = (!v.is_discarded() && v.is_string()) ? v.get<std::string>() : value;
  }
  if (kind.empty()) throw ConfigInvalid("scenario.kind", "missing");
  ScenarioKind parsed_kind = ScenarioKind::Circle;
  validated("scenario.kind", [&] { parsed_kind = scenario_kind_from_string(kind); });

  json merged = to_json(default_run_config(parsed_kind));
  if (kind == file_kind) {
    merge_strict(merged, user, "");
  } else {
    // A different kind starts from that kind's scenario defaults; the file's
    // scenario section describes another scenario and is dropped.
    json rest = user;
    rest.erase("scenario");
    merge_strict(merged, rest, "");
  }
  for (const auto& o : overrides) {
    const auto [key, value] = split_override(o);
    if (key == "scenario.kind") continue;
    if (key == "version") throw ConfigInvalid(key, "cannot be overridden");
    apply_override(merged, key, value);
  }
  return from_json(merged);
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_run_config(ss.str(), overrides);
}

std::string dump_run_config(const RunConfig& config) { return to_json(config).dump(2) + "\n"; }

}  // namespace pampc
