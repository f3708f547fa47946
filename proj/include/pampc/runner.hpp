#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "pampc/config.hpp"

namespace pampc {

struct RunOutcome {
  SimLog log;
  MetricReport metrics;
};

/// Runs the closed loop and computes metrics. Nothing is written.
RunOutcome run_scenario(const RunConfig& config);

/// Resolves output.directory: relative paths are taken against the
/// PAMPC_OUTPUT_ROOT environment variable when it is set.
std::filesystem::path resolve_output_directory(const RunConfig& config);

/// run_scenario plus the artifacts requested in config.output, written to
/// `directory` (created if needed) together with config.resolved.json.
RunOutcome run_to_directory(const RunConfig& config, const std::filesystem::path& directory);

struct SweepEntry {
  std::string value;
  std::filesystem::path directory;
  bool ok = false;
  std::string error;
  MetricReport metrics;
};

/// Splits a comma separated value list, keeping commas inside brackets.
/// Throws ConfigInvalid (key "values") when the list is empty.
std::vector<std::string> split_sweep_values(const std::string& text);

/// One run per value of `param`, each in <root>/run_<i>, executed on up to
/// `jobs` threads. A run that fails (including an invalid value) is recorded
/// and the others still complete.
/// Writes <root>/sweep_summary.csv. Results are in value order.
std::vector<SweepEntry> run_sweep(const std::string& base_config_text, const std::vector<std::string>& overrides,
                                  const std::string& param, const std::vector<std::string>& values,
                                  const std::filesystem::path& root, int jobs);

}  // namespace pampc
