#include "pampc/runner.hpp"

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "pampc/errors.hpp"
#include "pampc/log_io.hpp"

namespace pampc {

RunOutcome run_scenario(const RunConfig& config) {
  RunOutcome out;
  out.log = run_closed_loop(config.scenario, config.ocp, config.sim, config.solver);
  out.metrics = compute_metrics(out.log, config.scenario, config.ocp.intrinsics, config.ocp.bounds);
  return out;
}

std::filesystem::path resolve_output_directory(const RunConfig& config) {
  std::filesystem::path dir = config.output.directory;
  if (dir.is_relative()) {
    if (const char* root = std::getenv("PAMPC_OUTPUT_ROOT"); root && *root) dir = std::filesystem::path(root) / dir;
  }
  return dir;
}

RunOutcome run_to_directory(const RunConfig& config, const std::filesystem::path& directory) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create " + directory.string() + ": " + ec.message());
  {
    std::ofstream f(directory / "config.resolved.json", std::ios::binary);
    if (!f) throw IoError("cannot write " + (directory / "config.resolved.json").string());
    f << dump_run_config(config);
  }
  RunOutcome out = run_scenario(config);
  if (config.output.log_csv) write_log_csv(directory / "log.csv", out.log);
  if (config.output.metrics_json) write_metrics_json(directory / "metrics.json", out.metrics);
  if (config.output.predicted_trajectories) {
    write_predictions_csv(directory / "predictions.csv", out.log, config.sim.control_period, config.ocp.dt);
  }
  return out;
}

std::vector<std::string> split_sweep_values(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  int depth = 0;
  for (char ch : text) {
    if (ch == '[' || ch == '{') ++depth;
    if (ch == ']' || ch == '}') --depth;
    if (ch == ',' && depth == 0) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(cur);
  std::erase_if(out, [](const std::string& s) { return s.find_first_not_of(" \t") == std::string::npos; });
  if (out.empty()) throw ConfigInvalid("values", "sweep value list is empty");
  return out;
}

std::vector<SweepEntry> run_sweep(const std::string& base_config_text, const std::vector<std::string>& overrides,
                                  const std::string& param, const std::vector<std::string>& values,
                                  const std::filesystem::path& root, int jobs) {
  if (values.empty()) throw ConfigInvalid("values", "sweep value list is empty");
  if (param.empty()) throw ConfigInvalid("param", "sweep parameter is empty");

  std::vector<SweepEntry> entries(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    entries[i].value = values[i];
    entries[i].directory = root / ("run_" + std::to_string(i));
  }

  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < entries.size(); i = next++) {
      try {
        auto ov = overrides;
        ov.push_back(param + "=" + entries[i].value);
        const RunConfig config = parse_run_config(base_config_text, ov);
        entries[i].metrics = run_to_directory(config, entries[i].directory).metrics;
        entries[i].ok = true;
      } catch (const std::exception& e) {
        entries[i].error = e.what();
      }
    }
  };
  const int n = std::max(1, std::min<int>(jobs, static_cast<int>(entries.size())));
  std::vector<std::thread> pool;
  for (int t = 1; t < n; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  std::error_code ec;
  std::filesystem::create_directories(root, ec);
  std::ofstream f(root / "sweep_summary.csv", std::ios::binary);
  if (!f) throw IoError("cannot write " + (root / "sweep_summary.csv").string());
  f << "index,param,value,ok,directory,tracking_rmse_m,mean_center_distance_px,fov_visible_fraction,"
       "max_altitude_m,bound_violations,solve_time_mean_us,error\n";
  const auto quote = [](const std::string& s) {
    std::string q = "\"";
    for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  };
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    const auto& m = e.metrics;
    f << i << ',' << quote(param) << ',' << quote(e.value) << ',' << (e.ok ? 1 : 0) << ','
      << quote(e.directory.filename().string()) << ',' << format_double(m.tracking_rmse_m) << ','
      << format_double(m.mean_center_distance_px) << ',' << format_double(m.fov_visible_fraction) << ','
      << format_double(m.max_altitude_m) << ',' << m.bound_violations << ',' << format_double(m.solve_time_mean_us)
      << ',' << quote(e.error) << '\n';
  }
  return entries;
}

}  // namespace pampc
