#include <doctest.h>

#include <bit>
#include <filesystem>
#include <fstream>
#include <json.hpp>

#include "helpers.hpp"
#include "pampc/errors.hpp"
#include "pampc/log_io.hpp"

using namespace pampc;

namespace {

SimLog short_run(bool timing) {
  Scenario s = Scenario::make_circle(3.0);
  s.duration = 1.0;
  SimConfig sim;
  sim.record_timing = timing;
  sim.keep_predictions = true;
  return run_closed_loop(s, OcpConfig{}, sim);
}

}  // namespace

TEST_CASE("CSV header has the documented columns in order") {
  const std::string csv = log_to_csv(SimLog{});
  CHECK(csv ==
        "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,c,wx,wy,wz,u_px,v_px,udot,vdot,depth_m,visible,solve_us,kkt,qp_iters,"
        "status\n");
}

TEST_CASE("number formatting round-trips exactly") {
  std::mt19937_64 rng(61);
  for (int i = 0; i < 2000; ++i) {
    const double x = std::bit_cast<double>(rng());
    if (!std::isfinite(x)) continue;
    CHECK(std::bit_cast<std::uint64_t>(parse_double(format_double(x))) == std::bit_cast<std::uint64_t>(x));
  }
  CHECK(std::isnan(parse_double(format_double(std::nan("")))));
  CHECK(parse_double(format_double(-INFINITY)) == -INFINITY);
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.0x"), IoError);
  CHECK_THROWS_AS(parse_double(""), IoError);
}

TEST_CASE("re-reading a log reproduces the metrics JSON bit for bit") {
  const Scenario s = [] {
    Scenario c = Scenario::make_circle(3.0);
    c.duration = 1.0;
    return c;
  }();
  const SimLog log = short_run(true);
  const CameraIntrinsics intr;
  const std::string json_a = metrics_to_json(compute_metrics(log, s, intr));
  const SimLog back = log_from_csv(log_to_csv(log));
  REQUIRE(back.records.size() == log.records.size());
  CHECK(metrics_to_json(compute_metrics(back, s, intr)) == json_a);
  CHECK(log_to_csv(back) == log_to_csv(log));
}

TEST_CASE("records without a valid projection are written as nan") {
  SimLog log;
  SimRecord r;
  r.depth = -0.5;
  r.status = SolveStatus::Degenerate;
  log.records.push_back(r);
  const std::string csv = log_to_csv(log);
  CHECK(csv.find(",nan,nan,nan,nan,-0.5,0,") != std::string::npos);
  const SimLog back = log_from_csv(csv);
  CHECK_FALSE(back.records[0].z.has_value());
  CHECK(back.records[0].status == SolveStatus::Degenerate);
}

TEST_CASE("malformed logs raise IoError") {
  const std::string good = log_to_csv(short_run(false));
  CHECK_THROWS_AS(log_from_csv(""), IoError);
  CHECK_THROWS_AS(log_from_csv("t,px\n1,2\n"), IoError);
  std::string truncated = good.substr(0, good.find('\n', good.find('\n') + 1));
  truncated = truncated.substr(0, truncated.rfind(','));
  CHECK_THROWS_AS(log_from_csv(truncated), IoError);
  std::string bad_status = good;
  bad_status.replace(bad_status.find("Optimal"), 7, "Great!!");
  CHECK_THROWS_AS(log_from_csv(bad_status), IoError);
  CHECK_THROWS_AS(read_log_csv("/nonexistent/log.csv"), IoError);
}

TEST_CASE("metrics JSON keys are the report field names") {
  const auto j = nlohmann::json::parse(metrics_to_json(MetricReport{}));
  const std::vector<std::string> keys = {"mean_center_distance_px", "max_center_distance_px", "fov_visible_fraction",
                                         "center_half_fraction",    "mean_projection_speed_px_s",
                                         "max_altitude_m",          "max_abs_pitch_rad",
                                         "bound_violations",        "solve_time_mean_us",
                                         "solve_time_max_us",       "solve_time_std_us",
                                         "tracking_rmse_m"};
  CHECK(j.size() == keys.size());
  for (const auto& k : keys) CHECK(j.contains(k));
  CHECK(j["bound_violations"].is_number_integer());
}

TEST_CASE("predictions file has one row per step and stage") {
  const SimLog log = short_run(false);
  const auto dir = std::filesystem::temp_directory_path() / "pampc_pred_test";
  std::filesystem::create_directories(dir);
  write_predictions_csv(dir / "p.csv", log, 0.01, 0.1);
  std::ifstream f(dir / "p.csv");
  std::string line;
  int rows = -1;
  while (std::getline(f, line)) ++rows;
  CHECK(rows == static_cast<int>(log.records.size()) * 20);
  std::filesystem::remove_all(dir);
}

TEST_CASE("writing to an unwritable path raises IoError") {
  CHECK_THROWS_AS(write_log_csv("/nonexistent/dir/log.csv", SimLog{}), IoError);
  CHECK_THROWS_AS(write_metrics_json("/nonexistent/dir/m.json", MetricReport{}), IoError);
}
