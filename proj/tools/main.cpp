// pampc: run, sweep and verify from the command line.

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "pampc/errors.hpp"
#include "pampc/log_io.hpp"
#include "pampc/runner.hpp"
#include "pampc/verify.hpp"

namespace {

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw pampc::IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cmd_run(const std::string& config_path, const std::vector<std::string>& sets) {
  const auto config = pampc::load_run_config(config_path, sets);
  const auto dir = pampc::resolve_output_directory(config);
  const auto out = pampc::run_to_directory(config, dir);
  const auto& m = out.metrics;
  std::cout << "wrote " << dir.string() << " (" << out.log.records.size() << " records)\n"
            << "tracking_rmse_m " << m.tracking_rmse_m << "\n"
            << "mean_center_distance_px " << m.mean_center_distance_px << "\n"
            << "fov_visible_fraction " << m.fov_visible_fraction << "\n"
            << "bound_violations " << m.bound_violations << "\n";
  return 0;
}

int cmd_sweep(const std::string& config_path, const std::vector<std::string>& sets, const std::string& param,
              const std::string& values, int jobs) {
  const std::string text = read_file(config_path);
  const auto base = pampc::parse_run_config(text, sets);
  const auto list = pampc::split_sweep_values(values);
  const auto root = pampc::resolve_output_directory(base);
  const auto entries = pampc::run_sweep(text, sets, param, list, root, jobs);
  int failures = 0;
  for (const auto& e : entries) {
    if (e.ok) {
      std::cout << param << "=" << e.value << " ok rmse " << e.metrics.tracking_rmse_m << " center_px "
                << e.metrics.mean_center_distance_px << "\n";
    } else {
      ++failures;
      std::cout << param << "=" << e.value << " FAILED: " << e.error << "\n";
    }
  }
  std::cout << "summary " << (root / "sweep_summary.csv").string() << "\n";
  return failures == 0 ? 0 : 1;
}

int cmd_verify(bool corrupt) {
  pampc::VerifyOptions opt;
  opt.corrupt_jacobian = corrupt;
  bool ok = true;
  for (const auto& r : pampc::run_verify(opt)) {
    std::cout << (r.passed ? "PASS " : "FAIL ") << r.name << " [" << r.operation << "] max_error " << r.max_error
              << " tol " << r.tolerance << " cases " << r.cases << "\n";
    ok = ok && r.passed;
  }
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Perception-aware MPC for a quadrotor"};
  app.require_subcommand(1);

  std::string config_path;
  std::vector<std::string> sets;
  auto* run = app.add_subcommand("run", "Run one closed-loop scenario");
  run->add_option("config", config_path, "JSON config file")->required();
  run->add_option("--set", sets, "Override a key, e.g. --set ocp.N=30")->allow_extra_args(false);

  std::string param, values;
  int jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  auto* sweep = app.add_subcommand("sweep", "Run a config once per value of one parameter");
  sweep->add_option("config", config_path, "JSON config file")->required();
  sweep->add_option("--set", sets, "Override a key before sweeping")->allow_extra_args(false);
  sweep->add_option("--param", param, "Dotted key to sweep")->required();
  sweep->add_option("--values", values, "Comma separated values")->required();
  sweep->add_option("--jobs", jobs, "Parallel runs")->check(CLI::PositiveNumber);

  bool corrupt = false;
  auto* verify = app.add_subcommand("verify", "Check analytic derivatives and the QP against oracles");
  verify->add_flag("--corrupt-jacobian", corrupt, "Test hook: perturb the analytic Jacobian");

  std::string kind = "circle";
  auto* defaults = app.add_subcommand("defaults", "Print the default config for a scenario kind");
  defaults->add_option("kind", kind, "circle | hover_to_hover | darkness | hover");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, sets);
    if (*sweep) return cmd_sweep(config_path, sets, param, values, jobs);
    if (*verify) return cmd_verify(corrupt);
    if (*defaults) {
      std::cout << pampc::dump_run_config(pampc::default_run_config(pampc::scenario_kind_from_string(kind)));
      return 0;
    }
  } catch (const pampc::ConfigInvalid& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const pampc::IoError& e) {
    std::cerr << "io error: " << e.what() << "\n";
    return 3;
  } catch (const pampc::SimDiverged& e) {
    std::cerr << "simulation diverged: " << e.what() << "\n";
    return 4;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
