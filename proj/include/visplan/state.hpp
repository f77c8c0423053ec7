#pragma once

#include "visplan/geometry.hpp"

#include <array>
#include <cmath>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace visplan {

/// Position plus roll/pitch/yaw. One optimization block of 6 variables.
struct RobotState
{
  Vec3 position = Vec3::Zero();
  Vec3 rpy = Vec3::Zero();

  RobotState() = default;
  RobotState(const Vec3& p, const Vec3& angles) : position(p), rpy(wrap(angles)) {}

  static RobotState from_pose(const RigidTransform& T) { return {T.translation(), T.rpy()}; }

  RigidTransform pose() const { return RigidTransform::from_rpy(position, rpy); }
  Quat orientation() const { return quat_from_rpy(rpy); }
  Vec3 forward() const { return orientation() * Vec3::UnitX(); }

  static Vec3 wrap(const Vec3& a) { return {wrap_angle(a.x()), wrap_angle(a.y()), wrap_angle(a.z())}; }

  bool operator==(const RobotState&) const = default;
};

inline constexpr int kStateDim = 6;

/// Ordered states with fixed endpoints; at least one segment.
class Trajectory
{
public:
  Trajectory() = default;
  explicit Trajectory(std::vector<RobotState> states) : states_(std::move(states))
  {
    if (states_.size() < 2) throw std::invalid_argument("trajectory needs at least 2 states");
    for (const auto& s : states_)
      if (!s.position.allFinite() || !s.rpy.allFinite()) throw std::invalid_argument("non-finite trajectory state");
  }

  size_t size() const { return states_.size(); }
  size_t segments() const { return states_.size() - 1; }
  const RobotState& operator[](size_t i) const { return states_[i]; }
  RobotState& operator[](size_t i) { return states_[i]; }
  const std::vector<RobotState>& states() const { return states_; }
  std::vector<RobotState>& states() { return states_; }
  const RobotState& front() const { return states_.front(); }
  const RobotState& back() const { return states_.back(); }

  bool operator==(const Trajectory&) const = default;

private:
  std::vector<RobotState> states_;
};

/// The six cost weights: translation, rotation, obstacle clearance,
/// waypoint uniformity, alignment and visibility.
struct WeightSet
{
  double t_w = 1.0;
  double r_w = 1.0;
  double o_w = 1.0;
  double d_w = 1.0;
  double a_w = 1.0;
  double v_w = 1.0;

  static constexpr std::array<std::string_view, 6> names = {"t_w", "r_w", "o_w", "d_w", "a_w", "v_w"};

  std::array<double, 6> as_array() const { return {t_w, r_w, o_w, d_w, a_w, v_w}; }
  static WeightSet from_array(const std::array<double, 6>& w) { return {w[0], w[1], w[2], w[3], w[4], w[5]}; }

  void validate() const
  {
    for (size_t i = 0; i < 6; ++i) {
      const double w = as_array()[i];
      if (!std::isfinite(w) || w < 0.0)
        throw std::invalid_argument("weight " + std::string(names[i]) + " must be finite and >= 0");
    }
  }

  bool operator==(const WeightSet&) const = default;
};

struct Camera
{
  RigidTransform mount; // state frame -> camera frame, camera looks along +x
  double h_fov = deg2rad(120.0);
  double v_fov = deg2rad(90.0);
  double max_range = 6.0;
};

struct CameraRig
{
  std::vector<Camera> cameras;
  double d_vis = 1.0;

  void validate() const
  {
    if (!(d_vis > 0.0)) throw std::invalid_argument("d_vis must be > 0");
    for (const auto& c : cameras) {
      if (!(c.h_fov > 0.0 && c.h_fov < kPi) || !(c.v_fov > 0.0 && c.v_fov < kPi))
        throw std::invalid_argument("camera field of view must lie in (0, pi)");
      if (!(c.max_range > 0.0)) throw std::invalid_argument("camera max_range must be > 0");
    }
  }

  /// Forward stereo pair of the reference vehicle: 120 x 90 deg, tilted 40 deg down.
  static CameraRig forward_tilted()
  {
    CameraRig rig;
    rig.cameras.push_back({RigidTransform::from_rpy(Vec3::Zero(), Vec3(0.0, deg2rad(40.0), 0.0)),
                           deg2rad(120.0), deg2rad(90.0), 6.0});
    rig.d_vis = 1.0;
    return rig;
  }
};

} // namespace visplan
