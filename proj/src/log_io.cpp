#include "pampc/log_io.hpp"

#include <charconv>
#include <limits>
#include <cmath>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "pampc/errors.hpp"

namespace pampc {
namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  if (text == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (text == "inf") return std::numeric_limits<double>::infinity();
  if (text == "-inf") return -std::numeric_limits<double>::infinity();
  double x = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), x);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw IoError("malformed number '" + std::string(text) + "'");
  }
  return x;
}

SolveStatus solve_status_from_string(std::string_view s) {
  for (auto st : {SolveStatus::NotRun, SolveStatus::Optimal, SolveStatus::MaxIter, SolveStatus::Degenerate,
                  SolveStatus::LinearizationFailed}) {
    if (to_string(st) == s) return st;
  }
  throw IoError("unknown solver status '" + std::string(s) + "'");
}

std::string log_to_csv(const SimLog& log) {
  std::string out;
  for (std::size_t i = 0; i < kLogColumns.size(); ++i) {
    if (i) out += ',';
    out += kLogColumns[i];
  }
  out += '\n';
  const double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& r : log.records) {
    const Vec4 q = r.x.q.coeffs();
    const Vec4 z = r.z ? r.z->to_vector() : Vec4::Constant(nan);
    const double values[] = {r.t,      r.x.p.x(),  r.x.p.y(),  r.x.p.z(),  r.x.v.x(), r.x.v.y(), r.x.v.z(),
                             q[0],     q[1],       q[2],       q[3],       r.u.c,     r.u.omega.x(), r.u.omega.y(),
                             r.u.omega.z(), z[0],  z[1],       z[2],       z[3],      r.depth};
    for (double v : values) {
      out += format_double(v);
      out += ',';
    }
    out += r.poi_visible ? "1," : "0,";
    out += format_double(r.solve_time_us);
    out += ',';
    out += format_double(r.kkt_residual);
    out += ',';
    out += std::to_string(r.qp_iterations);
    out += ',';
    out += to_string(r.status);
    out += '\n';
  }
  return out;
}

void write_log_csv(const std::filesystem::path& path, const SimLog& log) { write_text(path, log_to_csv(log)); }

SimLog log_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty log");
  const auto header = split_fields(line);
  if (header.size() != kLogColumns.size()) throw IoError("unexpected log header");
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] != kLogColumns[i]) throw IoError("unexpected log column '" + std::string(header[i]) + "'");
  }

  SimLog log;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split_fields(line);
    if (f.size() != kLogColumns.size()) {
      throw IoError("line " + std::to_string(line_no) + ": expected " + std::to_string(kLogColumns.size()) +
                    " fields");
    }
    double v[20];
    for (int i = 0; i < 20; ++i) v[i] = parse_double(f[i]);
    SimRecord r;
    r.t = v[0];
    r.x.p = Vec3(v[1], v[2], v[3]);
    r.x.v = Vec3(v[4], v[5], v[6]);
    r.x.q = UnitQuaternion::from_unit_coeffs(v[7], v[8], v[9], v[10]);
    r.u.c = v[11];
    r.u.omega = Vec3(v[12], v[13], v[14]);
    if (!std::isnan(v[15])) r.z = PerceptionState{v[15], v[16], v[17], v[18]};
    r.depth = v[19];
    if (f[20] != "0" && f[20] != "1") throw IoError("line " + std::to_string(line_no) + ": bad visible flag");
    r.poi_visible = f[20] == "1";
    r.solve_time_us = parse_double(f[21]);
    r.kkt_residual = parse_double(f[22]);
    const auto iters = f[23];
    const auto res = std::from_chars(iters.data(), iters.data() + iters.size(), r.qp_iterations);
    if (res.ec != std::errc() || res.ptr != iters.data() + iters.size()) {
      throw IoError("line " + std::to_string(line_no) + ": bad qp_iters");
    }
    r.status = solve_status_from_string(f[24]);
    log.records.push_back(r);
  }
  return log;
}

SimLog read_log_csv(const std::filesystem::path& path) { return log_from_csv(read_text(path)); }

std::string metrics_to_json(const MetricReport& m) {
  nlohmann::ordered_json j;
  j["mean_center_distance_px"] = m.mean_center_distance_px;
  j["max_center_distance_px"] = m.max_center_distance_px;
  j["fov_visible_fraction"] = m.fov_visible_fraction;
  j["center_half_fraction"] = m.center_half_fraction;
  j["mean_projection_speed_px_s"] = m.mean_projection_speed_px_s;
  j["max_altitude_m"] = m.max_altitude_m;
  j["max_abs_pitch_rad"] = m.max_abs_pitch_rad;
  j["bound_violations"] = m.bound_violations;
  j["solve_time_mean_us"] = m.solve_time_mean_us;
  j["solve_time_max_us"] = m.solve_time_max_us;
  j["solve_time_std_us"] = m.solve_time_std_us;
  j["tracking_rmse_m"] = m.tracking_rmse_m;
  return j.dump(2) + "\n";
}

void write_metrics_json(const std::filesystem::path& path, const MetricReport& m) {
  write_text(path, metrics_to_json(m));
}

void write_predictions_csv(const std::filesystem::path& path, const SimLog& log, double control_period,
                           double ocp_dt) {
  std::string out = "step,t,stage,t_stage,px,py,pz,vx,vy,vz,qw,qx,qy,qz\n";
  for (std::size_t k = 0; k < log.predictions.size(); ++k) {
    const double t = static_cast<double>(k) * control_period;
    const auto& traj = log.predictions[k];
    for (std::size_t i = 0; i < traj.size(); ++i) {
      const auto& x = traj[i];
      const Vec4 q = x.q.coeffs();
      out += std::to_string(k) + ',' + format_double(t) + ',' + std::to_string(i) + ',' +
             format_double(t + static_cast<double>(i) * ocp_dt);
      for (double v : {x.p.x(), x.p.y(), x.p.z(), x.v.x(), x.v.y(), x.v.z(), q[0], q[1], q[2], q[3]}) {
        out += ',';
        out += format_double(v);
      }
      out += '\n';
    }
  }
  write_text(path, out);
}

}  // namespace pampc
