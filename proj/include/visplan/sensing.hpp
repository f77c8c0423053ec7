#pragma once

// Simulated frustum range sensor and the visibility test behind the metric M.

#include "visplan/distance.hpp"
#include "visplan/state.hpp"

#include <cstdint>
#include <set>
#include <span>
#include <tuple>
#include <vector>

namespace visplan {

struct Bounds
{
  Vec3 min = Vec3::Constant(-50.0);
  Vec3 max = Vec3::Constant(50.0);

  bool contains(const Vec3& p) const { return (p.array() >= min.array()).all() && (p.array() <= max.array()).all(); }
};

/// Obstacles plus per-obstacle feature density (points / m^2, 0 when the
/// obstacle carries no features).
struct Environment
{
  std::vector<ConvexShape> obstacles;
  std::vector<double> feature_density;
  Bounds bounds;

  void add(ConvexShape shape, double density = 0.0)
  {
    if (!(density >= 0.0) || !std::isfinite(density)) throw std::invalid_argument("feature density must be >= 0");
    obstacles.push_back(std::move(shape));
    feature_density.push_back(density);
  }

  bool is_feature(size_t i) const { return feature_density[i] > 0.0; }

  void validate() const
  {
    if (feature_density.size() != obstacles.size()) throw std::invalid_argument("one feature density per obstacle required");
    if (!(bounds.min.array() < bounds.max.array()).all()) throw std::invalid_argument("bounds min must be below max");
  }
};

struct SensorConfig
{
  double h_fov = deg2rad(120.0);
  double v_fov = deg2rad(90.0);
  int h_res = 100;
  int v_res = 75;
  double max_range = 6.0;
  RigidTransform mount = RigidTransform::from_rpy(Vec3::Zero(), Vec3(0.0, deg2rad(40.0), 0.0));

  void validate() const
  {
    if (h_res < 1 || v_res < 1) throw std::invalid_argument("sensor resolution must be >= 1");
    if (!(h_fov > 0.0 && h_fov < kPi) || !(v_fov > 0.0 && v_fov < kPi))
      throw std::invalid_argument("sensor field of view must lie in (0, pi)");
    if (!(max_range > 0.0)) throw std::invalid_argument("sensor max_range must be > 0");
  }

  Camera as_camera() const { return {mount, h_fov, v_fov, max_range}; }
};

namespace detail {

struct RayHit
{
  double t = std::numeric_limits<double>::infinity();
  int obstacle = -1;
};

inline bool ray_may_hit_sphere(const Vec3& o, const Vec3& d, double max_t, const Vec3& c, double r)
{
  const Vec3 oc = c - o;
  const double t = std::clamp(oc.dot(d), 0.0, max_t);
  return (o + t * d - c).squaredNorm() <= r * r;
}

inline RayHit first_hit(std::span<const ConvexShape> obstacles, const Vec3& origin, const Vec3& dir, double max_t,
                        const std::vector<char>* skip = nullptr)
{
  RayHit best;
  for (size_t i = 0; i < obstacles.size(); ++i) {
    if (skip && (*skip)[i]) continue;
    const auto& o = obstacles[i];
    if (!ray_may_hit_sphere(origin, dir, std::min(max_t, best.t), o.center(), o.bounding_radius())) continue;
    if (auto t = ray_cast(o, origin, dir, std::min(max_t, best.t)); t && *t < best.t) best = {*t, static_cast<int>(i)};
  }
  return best;
}

} // namespace detail

/// Casts h_res x v_res rays through cell centers of the sensor frustum and
/// returns first hits on feature obstacles. Hits are thinned to at most one
/// per cell of side 1/sqrt(density) in the obstacle's own frame.
inline std::vector<Vec3> sense(const Environment& env, const RobotState& s, const SensorConfig& cfg)
{
  cfg.validate();
  const RigidTransform T = s.pose() * cfg.mount;
  const Vec3 origin = T.translation();
  std::vector<Vec3> out;
  std::set<std::tuple<int, std::int64_t, std::int64_t, std::int64_t>> taken;
  for (int iv = 0; iv < cfg.v_res; ++iv) {
    const double el = -0.5 * cfg.v_fov + (iv + 0.5) * cfg.v_fov / cfg.v_res;
    for (int ih = 0; ih < cfg.h_res; ++ih) {
      const double az = -0.5 * cfg.h_fov + (ih + 0.5) * cfg.h_fov / cfg.h_res;
      const Vec3 dir = T.rotate(Vec3(1.0, std::tan(az), std::tan(el)).normalized());
      const auto hit = detail::first_hit(env.obstacles, origin, dir, cfg.max_range);
      if (hit.obstacle < 0 || !env.is_feature(hit.obstacle)) continue;
      const Vec3 p = origin + hit.t * dir;
      const auto& shape = env.obstacles[hit.obstacle];
      const double cell = 1.0 / std::sqrt(env.feature_density[hit.obstacle]);
      const Vec3 local = shape.pose().inverse().apply(p) / cell;
      const auto key = std::make_tuple(hit.obstacle, static_cast<std::int64_t>(std::floor(local.x())),
                                       static_cast<std::int64_t>(std::floor(local.y())),
                                       static_cast<std::int64_t>(std::floor(local.z())));
      if (taken.insert(key).second) out.push_back(p);
    }
  }
  return out;
}

/// Camera with the same frustum and range as the sensor, for a rig.
inline CameraRig rig_from_sensor(const SensorConfig& cfg, double d_vis = 1.0)
{
  CameraRig rig;
  rig.cameras.push_back(cfg.as_camera());
  rig.d_vis = d_vis;
  return rig;
}

/// Surface tolerance within which an obstacle counts as carrying the point.
inline constexpr double kOwnSurfaceTolerance = 0.05;

/// Inside some camera's angular frustum and range, with an unobstructed line
/// of sight (obstacles within 5 cm of v are treated as its own surface).
inline bool is_visible(const RobotState& s, const CameraRig& rig, const Vec3& v, const Environment& env,
                       bool occlusion = true)
{
  const RigidTransform Ts = s.pose();
  std::vector<char> own;
  for (const auto& cam : rig.cameras) {
    const RigidTransform T = Ts * cam.mount;
    const Vec3 local = T.inverse().apply(v);
    if (!(local.x() > 0.0)) continue;
    if (std::abs(std::atan2(local.y(), local.x())) > 0.5 * cam.h_fov + 1e-12) continue;
    if (std::abs(std::atan2(local.z(), local.x())) > 0.5 * cam.v_fov + 1e-12) continue;
    const double dist = local.norm();
    if (dist > cam.max_range) continue;
    if (!occlusion) return true;
    if (own.empty()) {
      own.resize(env.obstacles.size());
      for (size_t i = 0; i < env.obstacles.size(); ++i)
        own[i] = signed_distance(v, env.obstacles[i]) <= kOwnSurfaceTolerance;
    }
    const Vec3 origin = T.translation();
    const Vec3 dir = (v - origin) / dist;
    if (detail::first_hit(env.obstacles, origin, dir, dist, &own).obstacle < 0) return true;
  }
  return false;
}

/// Number of objectives visible from s.
inline int visible_count(const RobotState& s, const CameraRig& rig, std::span<const Vec3> V, const Environment& env,
                         bool occlusion = true)
{
  int n = 0;
  for (const auto& v : V) n += is_visible(s, rig, v, env, occlusion) ? 1 : 0;
  return n;
}

/// Fraction of states from which at least one objective is visible.
inline double visibility_metric(std::span<const RobotState> states, const CameraRig& rig, std::span<const Vec3> V,
                                const Environment& env, bool occlusion = true)
{
  if (states.empty()) throw std::invalid_argument("visibility_metric needs at least one state");
  if (V.empty()) return 0.0;
  int seen = 0;
  for (const auto& s : states) {
    for (const auto& v : V)
      if (is_visible(s, rig, v, env, occlusion)) {
        ++seen;
        break;
      }
  }
  return static_cast<double>(seen) / static_cast<double>(states.size());
}

inline double visibility_metric(const Trajectory& S, const CameraRig& rig, std::span<const Vec3> V,
                                const Environment& env, bool occlusion = true)
{
  return visibility_metric(std::span<const RobotState>(S.states()), rig, V, env, occlusion);
}

} // namespace visplan
