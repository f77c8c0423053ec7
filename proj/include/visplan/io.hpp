#pragma once

// CSV tables and JSON summaries for runs. Doubles are written with 17
// significant digits so every row parses back to the same value.

#include "visplan/pipeline.hpp"

#include "json.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace visplan {

class TableError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

inline std::string format_double(double v)
{
  if (std::isnan(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline double parse_double(const std::string& field, size_t line)
{
  const char* begin = field.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (field.empty() || end != begin + field.size())
    throw TableError("line " + std::to_string(line) + ": '" + field + "' is not a number");
  return v;
}

inline std::vector<std::string> split_csv(const std::string& row)
{
  std::vector<std::string> out;
  std::stringstream ss(row);
  std::string f;
  while (std::getline(ss, f, ',')) out.push_back(f);
  if (!row.empty() && row.back() == ',') out.emplace_back();
  return out;
}

inline const char* kTrajectoryHeader = "t_s,x_m,y_m,z_m,roll_deg,pitch_deg,yaw_deg";
inline const char* kStateMetricsHeader =
    "t_s,x_m,y_m,z_m,roll_deg,pitch_deg,yaw_deg,min_clearance_m,d_obj_m,visible_objectives";

namespace detail {

inline void write_pose_fields(std::ostream& out, double t, const RobotState& s)
{
  out << format_double(t);
  for (int i = 0; i < 3; ++i) out << ',' << format_double(s.position[i]);
  for (int i = 0; i < 3; ++i) out << ',' << format_double(rad2deg(s.rpy[i]));
}

} // namespace detail

struct TimedState
{
  double t = 0.0;
  RobotState state;
};

inline void write_trajectory_csv(std::ostream& out, std::span<const double> times, std::span<const RobotState> states)
{
  if (times.size() != states.size()) throw std::invalid_argument("one time stamp per state required");
  out << kTrajectoryHeader << '\n';
  for (size_t i = 0; i < states.size(); ++i) {
    detail::write_pose_fields(out, times[i], states[i]);
    out << '\n';
  }
}

/// Reads the trajectory table; the header must match and every row must have
/// exactly seven numeric columns.
inline std::vector<TimedState> read_trajectory_csv(std::istream& in)
{
  std::string row;
  if (!std::getline(in, row) || row != kTrajectoryHeader)
    throw TableError("line 1: expected header '" + std::string(kTrajectoryHeader) + "'");
  std::vector<TimedState> out;
  for (size_t line = 2; std::getline(in, row); ++line) {
    if (row.empty()) continue;
    const auto f = split_csv(row);
    if (f.size() != 7)
      throw TableError("line " + std::to_string(line) + ": expected 7 columns, got " + std::to_string(f.size()));
    double v[7];
    for (int i = 0; i < 7; ++i) v[i] = parse_double(f[i], line);
    out.push_back({v[0], RobotState(Vec3(v[1], v[2], v[3]), Vec3(deg2rad(v[4]), deg2rad(v[5]), deg2rad(v[6])))});
  }
  if (out.empty()) throw TableError("trajectory has no rows");
  return out;
}

inline void write_state_metrics_csv(std::ostream& out, const RunRecord& rec)
{
  out << kStateMetricsHeader << '\n';
  for (size_t i = 0; i < rec.states.size(); ++i) {
    detail::write_pose_fields(out, rec.times[i], rec.states[i]);
    out << ',' << format_double(rec.clearance[i]) << ',' << format_double(rec.d_obj[i]) << ',' << rec.visible[i] << '\n';
  }
}

struct StateMetricsRow
{
  TimedState pose;
  double clearance = 0.0;
  double d_obj = 0.0;
  int visible = 0;
};

inline std::vector<StateMetricsRow> read_state_metrics_csv(std::istream& in)
{
  std::string row;
  if (!std::getline(in, row) || row != kStateMetricsHeader)
    throw TableError("line 1: expected header '" + std::string(kStateMetricsHeader) + "'");
  std::vector<StateMetricsRow> out;
  for (size_t line = 2; std::getline(in, row); ++line) {
    if (row.empty()) continue;
    const auto f = split_csv(row);
    if (f.size() != 10)
      throw TableError("line " + std::to_string(line) + ": expected 10 columns, got " + std::to_string(f.size()));
    double v[9];
    for (int i = 0; i < 9; ++i) v[i] = parse_double(f[i], line);
    const double count = parse_double(f[9], line);
    if (count != std::floor(count) || count < 0) throw TableError("line " + std::to_string(line) + ": bad count");
    out.push_back({{v[0], RobotState(Vec3(v[1], v[2], v[3]), Vec3(deg2rad(v[4]), deg2rad(v[5]), deg2rad(v[6])))},
                   v[7], v[8], static_cast<int>(count)});
  }
  return out;
}

inline nlohmann::json run_summary(const RunRecord& rec, const std::string& scenario, bool baseline)
{
  using nlohmann::json;
  json j;
  j["scenario"] = scenario;
  j["planner"] = baseline ? "baseline" : "visibility";
  j["complete"] = rec.complete;
  j["M"] = rec.metric;
  j["path_length_m"] = rec.path_length;
  j["min_clearance_m"] = rec.min_clearance();
  j["executed_states"] = rec.states.size();
  j["duration_s"] = rec.times.empty() ? 0.0 : rec.times.back();
  json w;
  for (size_t i = 0; i < 6; ++i) w[std::string(WeightSet::names[i])] = rec.weights.as_array()[i];
  j["weights"] = w;
  j["non_converged_cycles"] = rec.non_converged_cycles();
  json cycles = json::array();
  for (const auto& c : rec.cycles) {
    cycles.push_back({{"cycle", c.cycle},
                      {"t_s", c.t},
                      {"plan_time_s", c.wall_time},
                      {"converged", c.converged},
                      {"retained_previous_plan", c.retained_previous},
                      {"iterations", c.iterations},
                      {"max_violation_m", c.max_violation},
                      {"objectives", c.objectives}});
  }
  j["cycles"] = cycles;
  json objs = json::array();
  for (const auto& o : rec.final_objectives)
    objs.push_back({{"position_m", {o.position.x(), o.position.y(), o.position.z()}}, {"created_at_cycle", o.created_at}});
  j["final_objectives"] = objs;
  return j;
}

} // namespace visplan
