#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pampc/sim.hpp"

namespace pampc {

inline constexpr int kConfigVersion = 1;

struct OutputConfig {
  std::string directory = "out";
  bool log_csv = true;
  bool metrics_json = true;
  bool predicted_trajectories = false;
};

/// Everything a single closed-loop run needs.
struct RunConfig {
  Scenario scenario;
  OcpConfig ocp;
  SimConfig sim;
  SolverOptions solver;
  OutputConfig output;
};

/// Defaults for a scenario kind (scenario factory, default OCP and sim).
RunConfig default_run_config(ScenarioKind kind);

/// Parses a JSON config. Keys missing from the text keep their defaults;
/// keys the defaults do not have are rejected. `overrides` are "a.b.c=value"
/// strings applied after the file, with value parsed as JSON when possible
/// and as a plain string otherwise. Overriding scenario.kind with a different
/// kind replaces the whole scenario section with that kind's defaults.
/// Throws ConfigInvalid naming the key.
RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides = {});

/// Reads and parses a config file. Throws IoError if it cannot be read.
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// Fully resolved config as JSON text; parse_run_config(dump_run_config(c))
/// reproduces c.
std::string dump_run_config(const RunConfig& config);

/// Splits "key=value"; throws ConfigInvalid when there is no '='.
std::pair<std::string, std::string> split_override(const std::string& assignment);

}  // namespace pampc
