#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <string_view>

#include "pampc/sim.hpp"

namespace pampc {

inline constexpr std::array<std::string_view, 25> kLogColumns = {
    "t",     "px",    "py",    "pz",    "vx",      "vy",   "vz",       "qw",  "qx",
    "qy",    "qz",    "c",     "wx",    "wy",      "wz",   "u_px",     "v_px", "udot",
    "vdot",  "depth_m", "visible", "solve_us", "kkt", "qp_iters", "status"};

/// Shortest text that parses back to the same double ("nan", "inf" and
/// "-inf" for non-finite values).
std::string format_double(double x);
double parse_double(std::string_view text);

/// One row per record. Perception columns hold "nan" when the POI was at or
/// behind the camera plane.
std::string log_to_csv(const SimLog& log);
void write_log_csv(const std::filesystem::path& path, const SimLog& log);

/// Inverse of log_to_csv for the per-step records (poi_index and
/// predictions are not stored in the CSV). Throws IoError on malformed input.
SimLog log_from_csv(const std::string& text);
SimLog read_log_csv(const std::filesystem::path& path);

/// Keys are the MetricReport field names.
std::string metrics_to_json(const MetricReport& m);
void write_metrics_json(const std::filesystem::path& path, const MetricReport& m);

/// Predicted open-loop trajectories, one row per (step, stage).
void write_predictions_csv(const std::filesystem::path& path, const SimLog& log, double control_period,
                           double ocp_dt);

SolveStatus solve_status_from_string(std::string_view s);

}  // namespace pampc
