#include <limits>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pampc/config.hpp"
#include "pampc/errors.hpp"
#include "pampc/log_io.hpp"
#include "pampc/perception.hpp"
#include "pampc/runner.hpp"
#include "pampc/verify.hpp"

namespace py = pybind11;
using namespace pampc;

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Column-oriented view of a log: one array per channel.
py::dict log_to_dict(const SimLog& log) {
  const Eigen::Index n = static_cast<Eigen::Index>(log.records.size());
  Eigen::VectorXd t(n), depth(n), solve_us(n), kkt(n);
  RowMatrix x(n, kStateDim), u(n, kInputDim), z(n, 4);
  Eigen::VectorXi visible(n), poi(n), qp_iter(n);
  std::vector<std::string> status;
  for (Eigen::Index i = 0; i < n; ++i) {
    const SimRecord& r = log.records[static_cast<size_t>(i)];
    t[i] = r.t;
    x.row(i) = r.x.to_vector().transpose();
    u.row(i) = r.u.to_vector().transpose();
    if (r.z)
      z.row(i) << r.z->u, r.z->v, r.z->u_dot, r.z->v_dot;
    else
      z.row(i).setConstant(std::numeric_limits<double>::quiet_NaN());
    depth[i] = r.depth;
    visible[i] = r.poi_visible ? 1 : 0;
    poi[i] = r.poi_index;
    solve_us[i] = r.solve_time_us;
    kkt[i] = r.kkt_residual;
    qp_iter[i] = r.qp_iterations;
    status.emplace_back(to_string(r.status));
  }
  py::dict d;
  d["t"] = t;
  d["state"] = x;
  d["input"] = u;
  d["pixel"] = z;
  d["depth"] = depth;
  d["poi_visible"] = visible;
  d["poi_index"] = poi;
  d["solve_time_us"] = solve_us;
  d["kkt_residual"] = kkt;
  d["qp_iterations"] = qp_iter;
  d["status"] = status;
  d["poi_switches"] = log.poi_switches;
  return d;
}

py::dict metrics_to_dict(const MetricReport& m) {
  py::dict d;
  d["mean_center_distance_px"] = m.mean_center_distance_px;
  d["max_center_distance_px"] = m.max_center_distance_px;
  d["fov_visible_fraction"] = m.fov_visible_fraction;
  d["center_half_fraction"] = m.center_half_fraction;
  d["mean_projection_speed_px_s"] = m.mean_projection_speed_px_s;
  d["max_altitude_m"] = m.max_altitude_m;
  d["max_abs_pitch_rad"] = m.max_abs_pitch_rad;
  d["bound_violations"] = m.bound_violations;
  d["solve_time_mean_us"] = m.solve_time_mean_us;
  d["solve_time_max_us"] = m.solve_time_max_us;
  d["solve_time_std_us"] = m.solve_time_std_us;
  d["tracking_rmse_m"] = m.tracking_rmse_m;
  return d;
}

py::dict outcome_to_dict(const RunOutcome& o) {
  py::dict d;
  d["log"] = log_to_dict(o.log);
  d["metrics"] = metrics_to_dict(o.metrics);
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Perception-aware NMPC core";

  auto error = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigInvalid>(m, "ConfigInvalid", error.ptr());
  py::register_exception<SimDiverged>(m, "SimDiverged", error.ptr());
  py::register_exception<DepthNonPositive>(m, "DepthNonPositive", error.ptr());
  py::register_exception<IoError>(m, "IoError", error.ptr());

  m.attr("STATE_DIM") = kStateDim;
  m.attr("INPUT_DIM") = kInputDim;

  m.def(
      "default_config",
      [](const std::string& kind) { return dump_run_config(default_run_config(scenario_kind_from_string(kind))); },
      py::arg("kind") = "circle", "Default config of a scenario kind as JSON text.");
  m.def(
      "resolve_config",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        return dump_run_config(parse_run_config(text, overrides));
      },
      py::arg("text"), py::arg("overrides") = std::vector<std::string>{},
      "Parses config text with dotted overrides and returns the fully resolved JSON.");

  m.def(
      "run",
      [](const std::string& text, const std::vector<std::string>& overrides) {
        const RunConfig cfg = parse_run_config(text, overrides);
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_scenario(cfg);
        }
        return outcome_to_dict(out);
      },
      py::arg("config"), py::arg("overrides") = std::vector<std::string>{},
      "Runs the closed loop for a JSON config and returns {'log': ..., 'metrics': ...}.");
  m.def(
      "run_to_directory",
      [](const std::string& text, const std::filesystem::path& dir, const std::vector<std::string>& overrides) {
        const RunConfig cfg = parse_run_config(text, overrides);
        RunOutcome out;
        {
          py::gil_scoped_release release;
          out = run_to_directory(cfg, dir);
        }
        return outcome_to_dict(out);
      },
      py::arg("config"), py::arg("directory"), py::arg("overrides") = std::vector<std::string>{},
      "Like run, and writes the configured artifacts into directory.");

  m.def(
      "rk4_step",
      [](const StateVector& x, const InputVector& u, double dt, double g) {
        return rk4_step(QuadState::from_vector(x), QuadInput::from_vector(u), dt, ModelParams{g}).to_vector();
      },
      py::arg("x"), py::arg("u"), py::arg("dt"), py::arg("g") = 9.81);
  m.def(
      "rk4_step_with_jacobians",
      [](const StateVector& x, const InputVector& u, double dt, double g) {
        const StepWithJacobians s =
            rk4_step_with_jacobians(QuadState::from_vector(x), QuadInput::from_vector(u), dt, ModelParams{g});
        return py::make_tuple(s.next.to_vector(), StateMatrix(s.A), InputMatrix(s.B));
      },
      py::arg("x"), py::arg("u"), py::arg("dt"), py::arg("g") = 9.81, "Returns (x_next, A, B).");

  m.def(
      "perception_state",
      [](const StateVector& x, const InputVector& u, const Vec3& p_W) {
        const PerceptionState z = perception_state(QuadState::from_vector(x), QuadInput::from_vector(u),
                                                   CameraExtrinsics{}, CameraIntrinsics{}, p_W, kDefaultDepthEpsilon);
        return Eigen::Vector4d(z.u, z.v, z.u_dot, z.v_dot);
      },
      py::arg("x"), py::arg("u"), py::arg("p_W"),
      "(u, v, u_dot, v_dot) of a world point for the default camera.");

  m.def(
      "solve_qp",
      [](const Eigen::MatrixXd& H, const Eigen::VectorXd& g, const Eigen::VectorXd& lb, const Eigen::VectorXd& ub,
         int max_iter) {
        const QpSolution s = solve_qp(CondensedQp{H, g, lb, ub}, max_iter);
        return py::make_tuple(s.du, std::string(to_string(s.status)), s.iterations);
      },
      py::arg("H"), py::arg("g"), py::arg("lb"), py::arg("ub"), py::arg("max_iter") = 500,
      "Box QP: min 0.5 x'Hx + g'x, lb <= x <= ub. Returns (x, status, iterations).");

  m.def(
      "verify",
      [](std::uint64_t seed, bool corrupt_jacobian) {
        VerifyOptions opt;
        opt.seed = seed;
        opt.corrupt_jacobian = corrupt_jacobian;
        py::list out;
        for (const SuiteResult& r : run_verify(opt)) {
          py::dict d;
          d["name"] = r.name;
          d["operation"] = r.operation;
          d["passed"] = r.passed;
          d["max_error"] = r.max_error;
          d["tolerance"] = r.tolerance;
          d["cases"] = r.cases;
          out.append(d);
        }
        return out;
      },
      py::arg("seed") = 7, py::arg("corrupt_jacobian") = false);

  m.def(
      "read_log_csv", [](const std::filesystem::path& path) { return log_to_dict(read_log_csv(path)); },
      py::arg("path"), "Reads a log.csv written by a run into column arrays.");
}
