#pragma once

// Signed distance between convex bodies (GJK + EPA), swept hulls and ray casts.

#include "visplan/geometry.hpp"

#include <array>
#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

namespace visplan {

/// Result of a distance query between two cores with margins.
///
/// `normal` is the unit direction along which translating body A increases
/// the signed distance at first order (points from B towards A).
/// `weights_a` expresses the witness point on A's core as a convex
/// combination of A's core vertices (vertex index, weight).
struct DistanceResult
{
  double distance = 0.0;
  Vec3 normal = Vec3::UnitX();
  Vec3 witness_a = Vec3::Zero();
  Vec3 witness_b = Vec3::Zero();
  std::vector<std::pair<int, double>> weights_a;
  bool penetrating = false;
};

namespace detail {

struct SupportPoint
{
  Vec3 w; // a - b
  Vec3 a;
  Vec3 b;
  int ia = -1;
  int ib = -1;
};

inline int argmax_dot(std::span<const Vec3> pts, const Vec3& d)
{
  int best = 0;
  double best_dot = pts[0].dot(d);
  for (int i = 1; i < static_cast<int>(pts.size()); ++i) {
    const double v = pts[i].dot(d);
    if (v > best_dot) best_dot = v, best = i;
  }
  return best;
}

inline SupportPoint minkowski_support(std::span<const Vec3> a, std::span<const Vec3> b, const Vec3& d)
{
  SupportPoint s;
  s.ia = argmax_dot(a, d);
  s.ib = argmax_dot(b, -d);
  s.a = a[s.ia];
  s.b = b[s.ib];
  s.w = s.a - s.b;
  return s;
}

// Closest point to the origin on a simplex, with barycentric weights.
// Ericson, "Real-Time Collision Detection", 5.1.
struct SimplexClosest
{
  Vec3 point;
  std::array<double, 4> lambda{};
  std::array<int, 4> index{}; // which simplex vertices have non-zero weight
  int count = 0;
};

inline SimplexClosest closest_on_segment(const Vec3& a, const Vec3& b, int ia, int ib)
{
  SimplexClosest r;
  const Vec3 ab = b - a;
  const double denom = ab.squaredNorm();
  double t = denom > 0.0 ? std::clamp(-a.dot(ab) / denom, 0.0, 1.0) : 0.0;
  if (t <= 0.0) {
    r.point = a, r.count = 1, r.index[0] = ia, r.lambda[0] = 1.0;
  } else if (t >= 1.0) {
    r.point = b, r.count = 1, r.index[0] = ib, r.lambda[0] = 1.0;
  } else {
    r.point = a + t * ab;
    r.count = 2;
    r.index[0] = ia, r.lambda[0] = 1.0 - t;
    r.index[1] = ib, r.lambda[1] = t;
  }
  return r;
}

inline SimplexClosest closest_on_triangle(const Vec3& a, const Vec3& b, const Vec3& c, int ia, int ib, int ic)
{
  SimplexClosest r;
  const Vec3 ab = b - a, ac = c - a, ap = -a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) {
    r.point = a, r.count = 1, r.index[0] = ia, r.lambda[0] = 1.0;
    return r;
  }
  const Vec3 bp = -b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) {
    r.point = b, r.count = 1, r.index[0] = ib, r.lambda[0] = 1.0;
    return r;
  }
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {
    const double v = d1 / (d1 - d3);
    r.point = a + v * ab, r.count = 2;
    r.index[0] = ia, r.lambda[0] = 1.0 - v, r.index[1] = ib, r.lambda[1] = v;
    return r;
  }
  const Vec3 cp = -c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) {
    r.point = c, r.count = 1, r.index[0] = ic, r.lambda[0] = 1.0;
    return r;
  }
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {
    const double w = d2 / (d2 - d6);
    r.point = a + w * ac, r.count = 2;
    r.index[0] = ia, r.lambda[0] = 1.0 - w, r.index[1] = ic, r.lambda[1] = w;
    return r;
  }
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
    r.point = b + w * (c - b), r.count = 2;
    r.index[0] = ib, r.lambda[0] = 1.0 - w, r.index[1] = ic, r.lambda[1] = w;
    return r;
  }
  const double denom = 1.0 / (va + vb + vc);
  const double v = vb * denom, w = vc * denom;
  r.point = a + ab * v + ac * w;
  r.count = 3;
  r.index[0] = ia, r.lambda[0] = 1.0 - v - w;
  r.index[1] = ib, r.lambda[1] = v;
  r.index[2] = ic, r.lambda[2] = w;
  return r;
}

// Sign of the origin relative to plane (a,b,c), compared with vertex d.
inline bool origin_outside_plane(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d)
{
  const Vec3 n = (b - a).cross(c - a);
  const double sign_o = n.dot(-a);
  const double sign_d = n.dot(d - a);
  return sign_o * sign_d < 0.0;
}

inline std::optional<SimplexClosest> closest_on_tetrahedron(const std::array<Vec3, 4>& p)
{
  constexpr std::array<std::array<int, 4>, 4> faces = {{{0, 1, 2, 3}, {0, 2, 3, 1}, {0, 3, 1, 2}, {1, 3, 2, 0}}};
  std::optional<SimplexClosest> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& f : faces) {
    if (!origin_outside_plane(p[f[0]], p[f[1]], p[f[2]], p[f[3]])) continue;
    auto c = closest_on_triangle(p[f[0]], p[f[1]], p[f[2]], f[0], f[1], f[2]);
    const double d = c.point.squaredNorm();
    if (d < best_d) best_d = d, best = c;
  }
  return best; // empty: origin inside (or on) the tetrahedron
}

inline double tetra_volume6(const Vec3& a, const Vec3& b, const Vec3& c, const Vec3& d)
{
  return std::abs((b - a).dot((c - a).cross(d - a)));
}

inline void barycentric_triangle(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c, double& u,
                                 double& v, double& w)
{
  const Vec3 v0 = b - a, v1 = c - a, v2 = p - a;
  const double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
  const double d20 = v2.dot(v0), d21 = v2.dot(v1);
  const double denom = d00 * d11 - d01 * d01;
  if (denom <= 0.0) {
    u = 1.0, v = 0.0, w = 0.0;
    return;
  }
  v = (d11 * d20 - d01 * d21) / denom;
  w = (d00 * d21 - d01 * d20) / denom;
  u = 1.0 - v - w;
}

struct EpaFace
{
  std::array<int, 3> v;
  Vec3 n;
  double d;
};

inline bool make_face(const std::vector<SupportPoint>& pts, int a, int b, int c, EpaFace& f)
{
  const Vec3 n = (pts[b].w - pts[a].w).cross(pts[c].w - pts[a].w);
  const double len = n.norm();
  if (!(len > 1e-14)) return false;
  f.v = {a, b, c};
  f.n = n / len;
  f.d = f.n.dot(pts[a].w);
  return true;
}

// Expands `simplex` (origin inside or on it) into a tetrahedron of the
// Minkowski difference. Returns false when the difference is flat.
inline bool complete_tetrahedron(std::span<const Vec3> a, std::span<const Vec3> b,
                                 std::vector<SupportPoint>& simplex)
{
  const std::array<Vec3, 6> axes = {Vec3::UnitX(), -Vec3::UnitX(), Vec3::UnitY(),
                                    -Vec3::UnitY(), Vec3::UnitZ(), -Vec3::UnitZ()};
  constexpr double tol = 1e-10;
  if (simplex.size() == 1) {
    for (const auto& d : axes) {
      auto s = minkowski_support(a, b, d);
      if ((s.w - simplex[0].w).norm() > tol) {
        simplex.push_back(s);
        break;
      }
    }
    if (simplex.size() < 2) return false;
  }
  if (simplex.size() == 2) {
    const Vec3 line = (simplex[1].w - simplex[0].w).normalized();
    double best = tol;
    std::optional<SupportPoint> pick;
    for (const auto& ax : axes) {
      Vec3 d = line.cross(ax);
      if (d.norm() < 1e-6) continue;
      auto s = minkowski_support(a, b, d);
      const double off = (s.w - simplex[0].w).cross(line).norm();
      if (off > best) best = off, pick = s;
    }
    if (!pick) return false;
    simplex.push_back(*pick);
  }
  if (simplex.size() == 3) {
    const Vec3 n = (simplex[1].w - simplex[0].w).cross(simplex[2].w - simplex[0].w).normalized();
    auto s1 = minkowski_support(a, b, n);
    auto s2 = minkowski_support(a, b, -n);
    const double o1 = std::abs(n.dot(s1.w - simplex[0].w));
    const double o2 = std::abs(n.dot(s2.w - simplex[0].w));
    if (std::max(o1, o2) <= tol) return false;
    simplex.push_back(o1 >= o2 ? s1 : s2);
  }
  return tetra_volume6(simplex[0].w, simplex[1].w, simplex[2].w, simplex[3].w) > 1e-18;
}

inline DistanceResult epa(std::span<const Vec3> a, std::span<const Vec3> b, std::vector<SupportPoint> pts)
{
  DistanceResult out;
  out.penetrating = true;
  if (!complete_tetrahedron(a, b, pts)) {
    // flat Minkowski difference: touching contact with undefined normal
    out.distance = 0.0;
    out.witness_a = pts[0].a;
    out.witness_b = pts[0].b;
    out.weights_a = {{pts[0].ia, 1.0}};
    return out;
  }
  std::vector<EpaFace> faces;
  const Vec3 centroid = 0.25 * (pts[0].w + pts[1].w + pts[2].w + pts[3].w);
  constexpr std::array<std::array<int, 3>, 4> tet = {{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}}};
  for (const auto& t : tet) {
    EpaFace f;
    if (!make_face(pts, t[0], t[1], t[2], f)) continue;
    if (f.n.dot(pts[t[0]].w - centroid) < 0.0) {
      make_face(pts, t[0], t[2], t[1], f);
    }
    faces.push_back(f);
  }

  const EpaFace* closest = nullptr;
  for (int iter = 0; iter < 128 && !faces.empty(); ++iter) {
    size_t ci = 0;
    for (size_t i = 1; i < faces.size(); ++i)
      if (faces[i].d < faces[ci].d) ci = i;
    const EpaFace face = faces[ci];
    auto s = minkowski_support(a, b, face.n);
    const double dist = face.n.dot(s.w);
    bool duplicate = false;
    for (const auto& p : pts)
      if (p.ia == s.ia && p.ib == s.ib) duplicate = true;
    if (duplicate || dist - face.d <= 1e-10 + 1e-10 * std::abs(face.d)) {
      faces = {face};
      closest = &faces[0];
      break;
    }
    pts.push_back(s);
    const int ni = static_cast<int>(pts.size()) - 1;
    std::vector<std::pair<int, int>> horizon;
    std::vector<EpaFace> kept;
    kept.reserve(faces.size());
    for (const auto& f : faces) {
      if (f.n.dot(s.w - pts[f.v[0]].w) > 1e-12) {
        for (int e = 0; e < 3; ++e) {
          const std::pair<int, int> edge{f.v[e], f.v[(e + 1) % 3]};
          auto rev = std::find(horizon.begin(), horizon.end(), std::pair<int, int>{edge.second, edge.first});
          if (rev != horizon.end())
            horizon.erase(rev);
          else
            horizon.push_back(edge);
        }
      } else {
        kept.push_back(f);
      }
    }
    bool ok = true;
    for (const auto& [e0, e1] : horizon) {
      EpaFace f;
      if (!make_face(pts, e0, e1, ni, f)) {
        ok = false;
        break;
      }
      kept.push_back(f);
    }
    if (!ok || kept.empty()) {
      faces = {face};
      closest = &faces[0];
      break;
    }
    faces = std::move(kept);
  }
  if (!closest) {
    size_t ci = 0;
    for (size_t i = 1; i < faces.size(); ++i)
      if (faces[i].d < faces[ci].d) ci = i;
    faces = {faces[ci]};
    closest = &faces[0];
  }
  const EpaFace& f = *closest;
  const double depth = std::max(f.d, 0.0);
  const Vec3 proj = f.n * f.d;
  double u, v, w;
  barycentric_triangle(proj, pts[f.v[0]].w, pts[f.v[1]].w, pts[f.v[2]].w, u, v, w);
  out.distance = -depth;
  out.normal = -f.n;
  out.witness_a = u * pts[f.v[0]].a + v * pts[f.v[1]].a + w * pts[f.v[2]].a;
  out.witness_b = u * pts[f.v[0]].b + v * pts[f.v[1]].b + w * pts[f.v[2]].b;
  out.weights_a = {{pts[f.v[0]].ia, u}, {pts[f.v[1]].ia, v}, {pts[f.v[2]].ia, w}};
  return out;
}

} // namespace detail

/// Signed distance between two polytope cores inflated by spherical margins.
inline DistanceResult convex_distance(std::span<const Vec3> core_a, double margin_a, std::span<const Vec3> core_b,
                                      double margin_b)
{
  using namespace detail;
  DistanceResult out;
  if (core_a.size() == 1 && core_b.size() == 1) {
    const Vec3 d = core_a[0] - core_b[0];
    const double n = d.norm();
    out.distance = n - margin_a - margin_b;
    out.normal = n > 0.0 ? Vec3(d / n) : Vec3::UnitX();
    out.penetrating = out.distance < 0.0;
    out.witness_a = core_a[0] - margin_a * out.normal;
    out.witness_b = core_b[0] + margin_b * out.normal;
    out.weights_a = {{0, 1.0}};
    return out;
  }

  std::vector<SupportPoint> simplex;
  simplex.reserve(4);
  Vec3 ca = Vec3::Zero(), cb = Vec3::Zero();
  for (const auto& p : core_a) ca += p;
  for (const auto& p : core_b) cb += p;
  Vec3 dir = cb / double(core_b.size()) - ca / double(core_a.size());
  if (dir.squaredNorm() < 1e-24) dir = Vec3::UnitX();
  simplex.push_back(minkowski_support(core_a, core_b, dir));

  double prev = std::numeric_limits<double>::infinity();
  SimplexClosest best;
  std::vector<SupportPoint> best_simplex;
  bool intersect = false;
  for (int iter = 0; iter < 128; ++iter) {
    SimplexClosest c;
    const auto n = simplex.size();
    if (n == 1) {
      c.point = simplex[0].w, c.count = 1, c.index[0] = 0, c.lambda[0] = 1.0;
    } else if (n == 2) {
      c = closest_on_segment(simplex[0].w, simplex[1].w, 0, 1);
    } else if (n == 3) {
      c = closest_on_triangle(simplex[0].w, simplex[1].w, simplex[2].w, 0, 1, 2);
    } else {
      // a flat tetrahedron can't enclose the origin; its face tests are noise
      double scale = 0.0;
      for (const auto& p : simplex) scale = std::max(scale, (p.w - simplex[0].w).norm());
      if (std::abs(tetra_volume6(simplex[0].w, simplex[1].w, simplex[2].w, simplex[3].w)) <=
          1e-10 * scale * scale * scale)
        break;
      auto t = closest_on_tetrahedron({simplex[0].w, simplex[1].w, simplex[2].w, simplex[3].w});
      if (!t) {
        intersect = true;
        break;
      }
      c = *t;
    }
    std::vector<SupportPoint> reduced;
    for (int k = 0; k < c.count; ++k) reduced.push_back(simplex[c.index[k]]);
    for (int k = 0; k < c.count; ++k) c.index[k] = k;
    simplex = std::move(reduced);

    const double d2 = c.point.squaredNorm();
    if (d2 <= 1e-24) {
      intersect = true;
      break;
    }
    // no progress: keep the best simplex seen so far
    if (d2 >= prev) break;
    prev = d2;
    best = c;
    best_simplex = simplex;
    auto s = minkowski_support(core_a, core_b, -c.point);
    if (d2 - c.point.dot(s.w) <= 1e-12 * d2 + 1e-20) break;
    bool duplicate = false;
    for (const auto& p : simplex)
      if (p.ia == s.ia && p.ib == s.ib) duplicate = true;
    if (duplicate) break;
    simplex.push_back(s);
  }

  if (intersect) {
    out = epa(core_a, core_b, simplex);
  } else {
    const double d = best.point.norm();
    out.distance = d;
    out.normal = best.point / d;
    out.witness_a.setZero();
    out.witness_b.setZero();
    for (int k = 0; k < best.count; ++k) {
      const auto& sp = best_simplex[best.index[k]];
      out.witness_a += best.lambda[k] * sp.a;
      out.witness_b += best.lambda[k] * sp.b;
      out.weights_a.emplace_back(sp.ia, best.lambda[k]);
    }
  }
  out.distance -= margin_a + margin_b;
  out.penetrating = out.distance < 0.0;
  out.witness_a -= margin_a * out.normal;
  out.witness_b += margin_b * out.normal;
  return out;
}

inline DistanceResult distance_query(const ConvexShape& a, const ConvexShape& b)
{
  return convex_distance(a.world_core(), a.margin(), b.world_core(), b.margin());
}

/// Separation distance if disjoint, negative penetration depth if overlapping.
inline double signed_distance(const ConvexShape& a, const ConvexShape& b)
{
  return distance_query(a, b).distance;
}

/// Signed distance from a point to a shape (negative inside).
inline double signed_distance(const Vec3& p, const ConvexShape& shape)
{
  const std::array<Vec3, 1> pt{p};
  return convex_distance(pt, 0.0, shape.world_core(), shape.margin()).distance;
}

/// Convex hull of `shape` placed at two robot poses. The shape's own pose is
/// its offset in the robot frame. Spheres are replaced by a circumscribing
/// 42-vertex polytope so the hull always contains both end shapes.
inline ConvexShape swept_hull(const ConvexShape& shape, const RigidTransform& pose_a, const RigidTransform& pose_b)
{
  const bool coincident = (pose_a.translation() - pose_b.translation()).norm() <= 1e-12 &&
                          quaternion_angle(pose_a.rotation(), pose_b.rotation()) <= 1e-12;
  if (coincident) return shape.with_pose(pose_a * shape.pose());
  const auto local = shape.sweep_vertices_local();
  std::vector<Vec3> verts;
  verts.reserve(2 * local.size());
  for (const auto& v : local) verts.push_back(pose_a.apply(v));
  for (const auto& v : local) verts.push_back(pose_b.apply(v));
  return ConvexShape::hull(std::move(verts));
}

/// First intersection parameter t in [0, max_t] of the ray origin + t * dir
/// (dir unit length) with the shape, or nullopt. Origins inside return 0.
inline std::optional<double> ray_cast(const ConvexShape& shape, const Vec3& origin, const Vec3& dir, double max_t)
{
  if (shape.is_sphere()) {
    const double r = std::get<Sphere>(shape.geometry()).radius;
    const Vec3 oc = origin - shape.pose().translation();
    const double c = oc.squaredNorm() - r * r;
    if (c <= 0.0) return 0.0;
    const double bq = oc.dot(dir);
    const double disc = bq * bq - c;
    if (bq > 0.0 || disc < 0.0) return std::nullopt;
    const double t = -bq - std::sqrt(disc);
    if (t > max_t) return std::nullopt;
    return std::max(t, 0.0);
  }
  if (shape.is_box()) {
    const Vec3& h = std::get<Box>(shape.geometry()).half_extents;
    const auto inv = shape.pose().inverse();
    const Vec3 o = inv.apply(origin);
    const Vec3 d = inv.rotate(dir);
    double t0 = 0.0, t1 = max_t;
    for (int i = 0; i < 3; ++i) {
      if (std::abs(d[i]) < 1e-300) {
        if (o[i] < -h[i] || o[i] > h[i]) return std::nullopt;
        continue;
      }
      double ta = (-h[i] - o[i]) / d[i];
      double tb = (h[i] - o[i]) / d[i];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 > t1) return std::nullopt;
    }
    return t0;
  }
  // Hull: conservative advancement towards the supporting plane of the
  // closest point, which never overshoots a convex body.
  double t = 0.0;
  for (int iter = 0; iter < 64; ++iter) {
    const std::array<Vec3, 1> pt{origin + t * dir};
    const auto q = convex_distance(pt, 0.0, shape.world_core(), shape.margin());
    if (q.distance <= 1e-7) return t;
    const double approach = -dir.dot(q.normal);
    if (approach <= 1e-12) return std::nullopt;
    t += q.distance / approach;
    if (t > max_t) return std::nullopt;
  }
  return t;
}

} // namespace visplan
