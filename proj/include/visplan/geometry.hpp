#pragma once

// Rigid transforms and convex shapes.
//
// Conventions: z is up, +x is the body forward axis. Orientations are exposed
// as roll/pitch/yaw with R = Rz(yaw) * Ry(pitch) * Rx(roll); a positive pitch
// tilts the forward axis downwards.

#include <Eigen/Geometry>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace visplan {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Quat = Eigen::Quaterniond;

inline constexpr double kPi = std::numbers::pi;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

/// Wraps an angle into (-pi, pi].
inline double wrap_angle(double a)
{
  double w = std::remainder(a, 2.0 * kPi);
  if (w <= -kPi) w += 2.0 * kPi;
  return w;
}

inline Quat quat_from_rpy(const Vec3& rpy)
{
  return Quat(Eigen::AngleAxisd(rpy.z(), Vec3::UnitZ()) *
              Eigen::AngleAxisd(rpy.y(), Vec3::UnitY()) *
              Eigen::AngleAxisd(rpy.x(), Vec3::UnitX()));
}

inline Vec3 rpy_from_matrix(const Mat3& R)
{
  const double s = std::clamp(-R(2, 0), -1.0, 1.0);
  const double pitch = std::asin(s);
  if (std::abs(s) > 1.0 - 1e-12) {
    // gimbal lock: fold roll into yaw
    return {0.0, pitch, std::atan2(-R(0, 1), R(1, 1))};
  }
  return {std::atan2(R(2, 1), R(2, 2)), pitch, std::atan2(R(1, 0), R(0, 0))};
}

inline Vec3 rpy_from_quat(const Quat& q) { return rpy_from_matrix(q.toRotationMatrix()); }

/// Geodesic angle between two rotations, robust near identity.
inline double quaternion_angle(const Quat& a, const Quat& b)
{
  const Quat rel = a.conjugate() * b;
  return 2.0 * std::atan2(rel.vec().norm(), std::abs(rel.w()));
}

/// Columns are d(R(rpy) v)/d(roll), d/d(pitch), d/d(yaw).
inline Mat3 rotation_jacobian(const Vec3& rpy, const Vec3& v)
{
  const double cr = std::cos(rpy.x()), sr = std::sin(rpy.x());
  const double cp = std::cos(rpy.y()), sp = std::sin(rpy.y());
  const double cy = std::cos(rpy.z()), sy = std::sin(rpy.z());
  Mat3 Rx, Ry, Rz, dRx, dRy, dRz;
  Rx << 1, 0, 0, 0, cr, -sr, 0, sr, cr;
  Ry << cp, 0, sp, 0, 1, 0, -sp, 0, cp;
  Rz << cy, -sy, 0, sy, cy, 0, 0, 0, 1;
  dRx << 0, 0, 0, 0, -sr, -cr, 0, cr, -sr;
  dRy << -sp, 0, cp, 0, 0, 0, -cp, 0, -sp;
  dRz << -sy, -cy, 0, cy, -sy, 0, 0, 0, 0;
  Mat3 J;
  J.col(0) = Rz * Ry * dRx * v;
  J.col(1) = Rz * dRy * Rx * v;
  J.col(2) = dRz * Ry * Rx * v;
  return J;
}

/// Columns are dq/d(roll), dq/d(pitch), dq/d(yaw) with q stored as (w, x, y, z).
inline Eigen::Matrix<double, 4, 3> quaternion_jacobian(const Vec3& rpy)
{
  const double hr = 0.5 * rpy.x(), hp = 0.5 * rpy.y(), hy = 0.5 * rpy.z();
  const Quat qx(std::cos(hr), std::sin(hr), 0, 0);
  const Quat qy(std::cos(hp), 0, std::sin(hp), 0);
  const Quat qz(std::cos(hy), 0, 0, std::sin(hy));
  const Quat dqx(-0.5 * std::sin(hr), 0.5 * std::cos(hr), 0, 0);
  const Quat dqy(-0.5 * std::sin(hp), 0, 0.5 * std::cos(hp), 0);
  const Quat dqz(-0.5 * std::sin(hy), 0, 0, 0.5 * std::cos(hy));
  auto as_vec = [](const Quat& q) { return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z()); };
  Eigen::Matrix<double, 4, 3> J;
  J.col(0) = as_vec(qz * qy * dqx);
  J.col(1) = as_vec(qz * dqy * qx);
  J.col(2) = as_vec(dqz * qy * qx);
  return J;
}

class RigidTransform
{
public:
  RigidTransform() = default;
  RigidTransform(const Vec3& translation, const Quat& rotation)
      : translation_(translation), rotation_(rotation.normalized())
  {
  }

  static RigidTransform from_rpy(const Vec3& translation, const Vec3& rpy)
  {
    return {translation, quat_from_rpy(rpy)};
  }
  static RigidTransform translation_only(const Vec3& t) { return {t, Quat::Identity()}; }

  const Vec3& translation() const { return translation_; }
  const Quat& rotation() const { return rotation_; }
  Mat3 rotation_matrix() const { return rotation_.toRotationMatrix(); }
  Vec3 rpy() const { return rpy_from_quat(rotation_); }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 rotate(const Vec3& v) const { return rotation_ * v; }

  /// this * other: first apply `other`, then `this`.
  RigidTransform operator*(const RigidTransform& other) const
  {
    return {apply(other.translation_), rotation_ * other.rotation_};
  }

  RigidTransform inverse() const
  {
    const Quat qi = rotation_.conjugate();
    return {-(qi * translation_), qi};
  }

  bool is_finite() const
  {
    return translation_.allFinite() && rotation_.coeffs().allFinite();
  }

private:
  Vec3 translation_ = Vec3::Zero();
  Quat rotation_ = Quat::Identity();
};

struct Sphere
{
  double radius;
};
struct Box
{
  Vec3 half_extents;
};
struct Hull
{
  std::vector<Vec3> vertices;
};

namespace detail {

// 42-vertex icosphere (one subdivision of the icosahedron), unit circumradius.
struct Icosphere
{
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
  double inradius = 1.0; // min distance from origin to a face plane
};

inline Icosphere build_icosphere()
{
  Icosphere ico;
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  const std::array<Vec3, 12> base = {Vec3(-1, t, 0), Vec3(1, t, 0),  Vec3(-1, -t, 0), Vec3(1, -t, 0),
                                     Vec3(0, -1, t), Vec3(0, 1, t),  Vec3(0, -1, -t), Vec3(0, 1, -t),
                                     Vec3(t, 0, -1), Vec3(t, 0, 1),  Vec3(-t, 0, -1), Vec3(-t, 0, 1)};
  for (const auto& v : base) ico.vertices.push_back(v.normalized());
  const std::array<std::array<int, 3>, 20> faces = {{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                                                     {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                                                     {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                                                     {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}}};
  std::vector<std::pair<std::pair<int, int>, int>> midpoints;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    for (const auto& [k, idx] : midpoints)
      if (k == std::pair<int, int>(key.first, key.second)) return idx;
    ico.vertices.push_back((ico.vertices[a] + ico.vertices[b]).normalized());
    const int idx = static_cast<int>(ico.vertices.size()) - 1;
    midpoints.push_back({{key.first, key.second}, idx});
    return idx;
  };
  for (const auto& f : faces) {
    const int ab = midpoint(f[0], f[1]);
    const int bc = midpoint(f[1], f[2]);
    const int ca = midpoint(f[2], f[0]);
    ico.faces.push_back({f[0], ab, ca});
    ico.faces.push_back({f[1], bc, ab});
    ico.faces.push_back({f[2], ca, bc});
    ico.faces.push_back({ab, bc, ca});
  }
  for (const auto& f : ico.faces) {
    const Vec3& a = ico.vertices[f[0]];
    const Vec3 n = (ico.vertices[f[1]] - a).cross(ico.vertices[f[2]] - a).normalized();
    ico.inradius = std::min(ico.inradius, std::abs(n.dot(a)));
  }
  return ico;
}

inline const Icosphere& icosphere()
{
  static const Icosphere ico = build_icosphere();
  return ico;
}

} // namespace detail

/// Vertices of a polytope that circumscribes a sphere of the given radius.
inline std::vector<Vec3> circumscribed_sphere_vertices(double radius)
{
  const auto& ico = detail::icosphere();
  std::vector<Vec3> out;
  out.reserve(ico.vertices.size());
  const double scale = radius / ico.inradius;
  for (const auto& v : ico.vertices) out.push_back(v * scale);
  return out;
}

inline std::vector<Vec3> box_corners(const Vec3& h)
{
  std::vector<Vec3> c;
  c.reserve(8);
  for (int i = 0; i < 8; ++i)
    c.emplace_back((i & 1) ? h.x() : -h.x(), (i & 2) ? h.y() : -h.y(), (i & 4) ? h.z() : -h.z());
  return c;
}

/// Throws unless the points span a full 3D volume.
inline void require_full_dimensional(const std::vector<Vec3>& pts)
{
  if (pts.size() < 4) throw std::invalid_argument("hull needs at least 4 vertices");
  double scale = 0.0;
  for (const auto& p : pts) {
    if (!p.allFinite()) throw std::invalid_argument("hull vertex is not finite");
    scale = std::max(scale, (p - pts[0]).norm());
  }
  if (scale <= 0.0) throw std::invalid_argument("hull vertices are coincident");
  const double tol = 1e-9 * scale;
  size_t i1 = 0;
  for (size_t i = 1; i < pts.size(); ++i)
    if ((pts[i] - pts[0]).norm() > (pts[i1] - pts[0]).norm()) i1 = i;
  const Vec3 axis = (pts[i1] - pts[0]).normalized();
  size_t i2 = 0;
  double best = -1.0;
  for (size_t i = 0; i < pts.size(); ++i) {
    const double d = (pts[i] - pts[0]).cross(axis).norm();
    if (d > best) best = d, i2 = i;
  }
  if (best <= tol) throw std::invalid_argument("hull vertices are collinear");
  const Vec3 n = axis.cross(pts[i2] - pts[0]).normalized();
  double off = 0.0;
  for (const auto& p : pts) off = std::max(off, std::abs(n.dot(p - pts[0])));
  if (off <= tol) throw std::invalid_argument("hull vertices are coplanar");
}

/// A convex body: sphere, box or vertex hull, placed by a rigid pose.
///
/// Every variant is handled as a polytope "core" plus a spherical margin:
/// a sphere is its center point with margin = radius, boxes and hulls have
/// zero margin. Distance queries run on the cores and subtract the margins,
/// which is exact for all three variants.
class ConvexShape
{
public:
  using Geometry = std::variant<Sphere, Box, Hull>;

  static ConvexShape sphere(double radius, const RigidTransform& pose = {})
  {
    if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("sphere radius must be > 0");
    return ConvexShape(Sphere{radius}, pose);
  }
  static ConvexShape box(const Vec3& half_extents, const RigidTransform& pose = {})
  {
    if (!half_extents.allFinite() || (half_extents.array() <= 0.0).any())
      throw std::invalid_argument("box half-extents must be > 0");
    return ConvexShape(Box{half_extents}, pose);
  }
  static ConvexShape hull(std::vector<Vec3> vertices, const RigidTransform& pose = {})
  {
    require_full_dimensional(vertices);
    return ConvexShape(Hull{std::move(vertices)}, pose);
  }

  const Geometry& geometry() const { return geometry_; }
  const RigidTransform& pose() const { return pose_; }
  bool is_sphere() const { return std::holds_alternative<Sphere>(geometry_); }
  bool is_box() const { return std::holds_alternative<Box>(geometry_); }
  bool is_hull() const { return std::holds_alternative<Hull>(geometry_); }

  ConvexShape with_pose(const RigidTransform& pose) const
  {
    ConvexShape s = *this;
    s.pose_ = pose;
    s.refresh();
    return s;
  }

  double margin() const { return margin_; }
  /// Core polytope vertices in the shape's own frame.
  const std::vector<Vec3>& local_core() const { return local_core_; }
  /// Core polytope vertices in the world frame.
  const std::vector<Vec3>& world_core() const { return world_core_; }
  /// Center of the bounding ball (the pose origin for spheres).
  const Vec3& center() const { return center_; }
  /// Radius of a ball around center() containing the whole shape.
  double bounding_radius() const { return bounding_radius_; }

  /// Exact support point max_{x in shape} dir . x in world frame.
  Vec3 support(const Vec3& dir) const
  {
    const Vec3 local_dir = pose_.rotation().conjugate() * dir;
    Vec3 local;
    if (const auto* s = std::get_if<Sphere>(&geometry_)) {
      const double n = local_dir.norm();
      local = n > 0.0 ? Vec3(local_dir * (s->radius / n)) : Vec3(s->radius, 0, 0);
    } else if (const auto* b = std::get_if<Box>(&geometry_)) {
      for (int i = 0; i < 3; ++i) local[i] = local_dir[i] >= 0.0 ? b->half_extents[i] : -b->half_extents[i];
    } else {
      const auto& v = std::get<Hull>(geometry_).vertices;
      size_t best = 0;
      double best_dot = v[0].dot(local_dir);
      for (size_t i = 1; i < v.size(); ++i) {
        const double d = v[i].dot(local_dir);
        if (d > best_dot) best_dot = d, best = i;
      }
      local = v[best];
    }
    return pose_.apply(local);
  }

  double support_value(const Vec3& dir) const { return dir.dot(support(dir)); }

  /// Vertices used when this shape enters a swept hull (spheres are
  /// replaced by a circumscribing 42-vertex polytope).
  std::vector<Vec3> sweep_vertices_local() const
  {
    if (const auto* s = std::get_if<Sphere>(&geometry_)) {
      auto v = circumscribed_sphere_vertices(s->radius);
      for (auto& p : v) p = pose_.apply(p);
      return v;
    }
    std::vector<Vec3> v = local_core_;
    for (auto& p : v) p = pose_.apply(p);
    return v;
  }

private:
  ConvexShape(Geometry g, const RigidTransform& pose) : geometry_(std::move(g)), pose_(pose)
  {
    if (!pose_.is_finite()) throw std::invalid_argument("shape pose is not finite");
    if (const auto* s = std::get_if<Sphere>(&geometry_)) {
      local_core_ = {Vec3::Zero()};
      margin_ = s->radius;
    } else if (const auto* b = std::get_if<Box>(&geometry_)) {
      local_core_ = box_corners(b->half_extents);
    } else {
      local_core_ = std::get<Hull>(geometry_).vertices;
    }
    refresh();
  }

  void refresh()
  {
    world_core_.resize(local_core_.size());
    center_.setZero();
    for (size_t i = 0; i < local_core_.size(); ++i) {
      world_core_[i] = pose_.apply(local_core_[i]);
      center_ += world_core_[i];
    }
    center_ /= static_cast<double>(world_core_.size());
    double r = 0.0;
    for (const auto& w : world_core_) r = std::max(r, (w - center_).norm());
    bounding_radius_ = r + margin_;
  }

  Geometry geometry_;
  RigidTransform pose_;
  std::vector<Vec3> local_core_;
  std::vector<Vec3> world_core_;
  Vec3 center_ = Vec3::Zero();
  double margin_ = 0.0;
  double bounding_radius_ = 0.0;
};

/// World point at `distance` along the camera's forward axis.
inline Vec3 project_point(const RigidTransform& world_from_state, const RigidTransform& state_from_camera,
                          double distance)
{
  return world_from_state.apply(state_from_camera.apply(Vec3(distance, 0.0, 0.0)));
}

} // namespace visplan
