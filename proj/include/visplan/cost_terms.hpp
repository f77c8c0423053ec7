#pragma once

// Cost and constraint terms of the visibility-aware objective.
//
// Every term is expressed as a residual block over the stacked trajectory
// variables [p_0, rpy_0, p_1, rpy_1, ...] (6 per state):
//   Squared:  w * |r|^2
//   Norm:     w * |r|
//   Hinge:    w * max(0, r)        (r scalar)
// The optimizer linearizes r around the current iterate and keeps the outer
// convex function, so the same blocks serve both exact evaluation and the
// convex model.

#include "visplan/distance.hpp"
#include "visplan/state.hpp"

#include <Eigen/Dense>

#include <optional>
#include <span>
#include <vector>

namespace visplan {

enum class TermKind { Squared, Norm, Hinge };

struct ResidualTerm
{
  TermKind kind = TermKind::Squared;
  double weight = 1.0;
  Eigen::VectorXd r;
  Eigen::MatrixXd J; // rows(r) x (6 * states); empty when not requested
  bool constraint = false;

  double value() const
  {
    switch (kind) {
    case TermKind::Squared: return weight * r.squaredNorm();
    case TermKind::Norm: return weight * r.norm();
    case TermKind::Hinge: return weight * std::max(0.0, r[0]);
    }
    return 0.0;
  }

  Eigen::VectorXd gradient() const
  {
    switch (kind) {
    case TermKind::Squared: return 2.0 * weight * J.transpose() * r;
    case TermKind::Norm: {
      const double n = r.norm();
      if (n <= 0.0) return Eigen::VectorXd::Zero(J.cols());
      return weight / n * J.transpose() * r;
    }
    case TermKind::Hinge:
      // one-sided subgradient at the kink
      if (r[0] > 0.0) return weight * J.row(0).transpose();
      return Eigen::VectorXd::Zero(J.cols());
    }
    return {};
  }
};

struct CostGradient
{
  double value = 0.0;
  Eigen::VectorXd gradient;
};

inline CostGradient accumulate(std::span<const ResidualTerm> terms, Eigen::Index cols)
{
  CostGradient out{0.0, Eigen::VectorXd::Zero(cols)};
  for (const auto& t : terms) {
    out.value += t.value();
    out.gradient += t.gradient();
  }
  return out;
}

/// Projection shortening used by the alignment term: a fixed value, or
/// max(fraction * av, floor) when `fixed` is unset.
struct AlignmentEpsilon
{
  double fraction = 0.1;
  double floor = 0.01;
  std::optional<double> fixed;

  double value(double av) const { return fixed ? *fixed : std::max(fraction * av, floor); }
  double derivative(double av) const { return fixed ? 0.0 : (fraction * av > floor ? fraction : 0.0); }
};

namespace detail {

inline Eigen::Index col(size_t state) { return static_cast<Eigen::Index>(kStateDim * state); }

struct SegmentGeometry
{
  std::vector<double> length;
  std::vector<Vec3> unit;
  double average = 0.0;
};

inline SegmentGeometry segment_geometry(const Trajectory& S)
{
  SegmentGeometry g;
  const size_t m = S.segments();
  g.length.resize(m);
  g.unit.resize(m);
  double total = 0.0;
  for (size_t j = 0; j < m; ++j) {
    const Vec3 d = S[j + 1].position - S[j].position;
    g.length[j] = d.norm();
    g.unit[j] = g.length[j] > 0.0 ? Vec3(d / g.length[j]) : Vec3::Zero();
    total += g.length[j];
  }
  g.average = total / static_cast<double>(m);
  return g;
}

// d(average)/d(positions), one row over all trajectory variables.
inline Eigen::RowVectorXd average_length_jacobian(const Trajectory& S, const SegmentGeometry& g)
{
  Eigen::RowVectorXd J = Eigen::RowVectorXd::Zero(col(S.size()));
  const double inv = 1.0 / static_cast<double>(S.segments());
  for (size_t j = 0; j < S.segments(); ++j) {
    J.segment<3>(col(j + 1)) += inv * g.unit[j].transpose();
    J.segment<3>(col(j)) -= inv * g.unit[j].transpose();
  }
  return J;
}

} // namespace detail

/// Mean segment length of the trajectory (total length / segments).
inline double average_segment_length(const Trajectory& S) { return detail::segment_geometry(S).average; }

// ---------------------------------------------------------------------------
// Path length

inline void add_translation_terms(const Trajectory& S, double t_w, bool jac, std::vector<ResidualTerm>& out)
{
  if (t_w == 0.0) return;
  const auto cols = detail::col(S.size());
  for (size_t j = 0; j + 1 < S.size(); ++j) {
    ResidualTerm t;
    t.kind = TermKind::Squared;
    t.weight = t_w;
    t.r = S[j + 1].position - S[j].position;
    if (jac) {
      t.J = Eigen::MatrixXd::Zero(3, cols);
      t.J.block<3, 3>(0, detail::col(j + 1)) = Mat3::Identity();
      t.J.block<3, 3>(0, detail::col(j)) = -Mat3::Identity();
    }
    out.push_back(std::move(t));
  }
}

/// Geodesic angle between consecutive orientations as a scalar residual.
inline void add_rotation_terms(const Trajectory& S, double r_w, bool jac, std::vector<ResidualTerm>& out)
{
  if (r_w == 0.0) return;
  const auto cols = detail::col(S.size());
  for (size_t j = 0; j + 1 < S.size(); ++j) {
    const Quat qa = S[j].orientation(), qb = S[j + 1].orientation();
    const Quat rel = qa.conjugate() * qb;
    const double half_sin = rel.vec().norm();
    const double theta = 2.0 * std::atan2(half_sin, std::abs(rel.w()));
    ResidualTerm t;
    t.kind = TermKind::Squared;
    t.weight = r_w;
    t.r = Eigen::VectorXd::Constant(1, theta);
    if (jac) {
      t.J = Eigen::MatrixXd::Zero(1, cols);
      if (half_sin > 1e-12) {
        const double dot = qa.coeffs().dot(qb.coeffs());
        const double dtheta_ddot = -2.0 * (dot >= 0.0 ? 1.0 : -1.0) / half_sin;
        const Eigen::Vector4d va(qa.w(), qa.x(), qa.y(), qa.z());
        const Eigen::Vector4d vb(qb.w(), qb.x(), qb.y(), qb.z());
        t.J.block<1, 3>(0, detail::col(j) + 3) = dtheta_ddot * vb.transpose() * quaternion_jacobian(S[j].rpy);
        t.J.block<1, 3>(0, detail::col(j + 1) + 3) =
            dtheta_ddot * va.transpose() * quaternion_jacobian(S[j + 1].rpy);
      }
    }
    out.push_back(std::move(t));
  }
}

/// t_w * sum |p_{i+1} - p_i|^2 + r_w * sum angle(q_i, q_{i+1})^2.
inline CostGradient path_length_cost(const Trajectory& S, double t_w, double r_w)
{
  std::vector<ResidualTerm> terms;
  add_translation_terms(S, t_w, true, terms);
  add_rotation_terms(S, r_w, true, terms);
  return accumulate(terms, detail::col(S.size()));
}

// ---------------------------------------------------------------------------
// Waypoint uniformity: sum (|p_{j+1} - p_j| - av)^2

inline void add_uniformity_terms(const Trajectory& S, double d_w, bool jac, std::vector<ResidualTerm>& out)
{
  if (d_w == 0.0) return;
  const auto g = detail::segment_geometry(S);
  Eigen::RowVectorXd dav;
  if (jac) dav = detail::average_length_jacobian(S, g);
  for (size_t j = 0; j < S.segments(); ++j) {
    ResidualTerm t;
    t.kind = TermKind::Squared;
    t.weight = d_w;
    t.r = Eigen::VectorXd::Constant(1, g.length[j] - g.average);
    if (jac) {
      t.J = -dav;
      t.J.block<1, 3>(0, detail::col(j + 1)) += g.unit[j].transpose();
      t.J.block<1, 3>(0, detail::col(j)) -= g.unit[j].transpose();
    }
    out.push_back(std::move(t));
  }
}

inline CostGradient uniformity_cost(const Trajectory& S)
{
  std::vector<ResidualTerm> terms;
  add_uniformity_terms(S, 1.0, true, terms);
  return accumulate(terms, detail::col(S.size()));
}

// ---------------------------------------------------------------------------
// Alignment: |p_i + R_i [av - eps, 0, 0]^T - p_{i+1}|

inline ResidualTerm alignment_term(const Trajectory& S, size_t i, const AlignmentEpsilon& eps,
                                   const detail::SegmentGeometry& g, const Eigen::RowVectorXd* dav, double weight)
{
  const double L = g.average - eps.value(g.average);
  const Mat3 R = S[i].pose().rotation_matrix();
  const Vec3 fwd = R.col(0);
  ResidualTerm t;
  t.kind = TermKind::Norm;
  t.weight = weight;
  t.r = S[i].position + L * fwd - S[i + 1].position;
  if (dav) {
    const double dL = 1.0 - eps.derivative(g.average);
    t.J = fwd * (dL * *dav);
    t.J.block<3, 3>(0, detail::col(i)) += Mat3::Identity();
    t.J.block<3, 3>(0, detail::col(i + 1)) -= Mat3::Identity();
    t.J.block<3, 3>(0, detail::col(i) + 3) += rotation_jacobian(S[i].rpy, Vec3(L, 0.0, 0.0));
  }
  return t;
}

/// Alignment distance of state i towards state i + 1 (requires i + 1 < size).
inline CostGradient alignment_cost(const Trajectory& S, size_t i, const AlignmentEpsilon& eps)
{
  if (i + 1 >= S.size()) throw std::out_of_range("alignment index has no successor");
  const auto g = detail::segment_geometry(S);
  const Eigen::RowVectorXd dav = detail::average_length_jacobian(S, g);
  const ResidualTerm t = alignment_term(S, i, eps, g, &dav, 1.0);
  return {t.value(), t.gradient()};
}

inline CostGradient alignment_cost(const Trajectory& S, size_t i, double epsilon)
{
  return alignment_cost(S, i, AlignmentEpsilon{.fixed = epsilon});
}

/// Alignment terms for every state that has a successor.
inline void add_alignment_terms(const Trajectory& S, double a_w, const AlignmentEpsilon& eps, bool jac,
                                std::vector<ResidualTerm>& out)
{
  if (a_w == 0.0) return;
  const auto g = detail::segment_geometry(S);
  Eigen::RowVectorXd dav;
  if (jac) dav = detail::average_length_jacobian(S, g);
  for (size_t i = 0; i + 1 < S.size(); ++i)
    out.push_back(alignment_term(S, i, eps, g, jac ? &dav : nullptr, a_w));
}

// ---------------------------------------------------------------------------
// Visibility: min over objectives and cameras of |projected point - v|

struct VisibilityMatch
{
  double distance = 0.0;
  size_t camera = 0;
  size_t objective = 0;
  Vec3 projected = Vec3::Zero();
};

inline std::optional<VisibilityMatch> nearest_visibility_match(const RobotState& s, const CameraRig& rig,
                                                               std::span<const Vec3> objectives)
{
  if (objectives.empty() || rig.cameras.empty()) return std::nullopt;
  const RigidTransform T = s.pose();
  VisibilityMatch best;
  best.distance = std::numeric_limits<double>::infinity();
  for (size_t c = 0; c < rig.cameras.size(); ++c) {
    const Vec3 f = project_point(T, rig.cameras[c].mount, rig.d_vis);
    for (size_t k = 0; k < objectives.size(); ++k) {
      const double d = (f - objectives[k]).norm();
      if (d < best.distance) best = {d, c, k, f};
    }
  }
  return best;
}

/// Residual for one state, columns placed at `column` in a matrix of `cols` columns.
inline std::optional<ResidualTerm> visibility_term(const RobotState& s, const CameraRig& rig,
                                                   std::span<const Vec3> objectives, double weight, bool jac,
                                                   Eigen::Index column, Eigen::Index cols)
{
  const auto m = nearest_visibility_match(s, rig, objectives);
  if (!m) return std::nullopt;
  ResidualTerm t;
  t.kind = TermKind::Norm;
  t.weight = weight;
  t.r = m->projected - objectives[m->objective];
  if (jac) {
    t.J = Eigen::MatrixXd::Zero(3, cols);
    t.J.block<3, 3>(0, column) = Mat3::Identity();
    const Vec3 offset = rig.cameras[m->camera].mount.apply(Vec3(rig.d_vis, 0.0, 0.0));
    t.J.block<3, 3>(0, column + 3) = rotation_jacobian(s.rpy, offset);
  }
  return t;
}

/// Distance from the projected observation point to the nearest objective;
/// zero when there are no objectives. Gradient over the state's 6 variables.
inline CostGradient visibility_cost(const RobotState& s, const CameraRig& rig, std::span<const Vec3> objectives)
{
  const auto t = visibility_term(s, rig, objectives, 1.0, true, 0, kStateDim);
  if (!t) return {0.0, Eigen::VectorXd::Zero(kStateDim)};
  return {t->value(), t->gradient()};
}

// ---------------------------------------------------------------------------
// Collision

namespace detail {

inline bool may_be_within(const Vec3& ca, double ra, const ConvexShape& b, double threshold)
{
  return (ca - b.center()).norm() - ra - b.bounding_radius() < threshold;
}

} // namespace detail

/// Hinge residual d_safe - sd(robot at s, obstacle) with its gradient over
/// the state's 6 variables; nullopt when provably beyond `d_safe + pad`.
struct ClearanceResidual
{
  double residual = 0.0; // target - sd
  Eigen::Matrix<double, 1, 6> grad = Eigen::Matrix<double, 1, 6>::Zero();
};

inline std::optional<ClearanceResidual> state_clearance_residual(const RobotState& s, const ConvexShape& robot,
                                                                 const ConvexShape& obstacle, double target,
                                                                 double pad)
{
  const RigidTransform T = s.pose();
  const ConvexShape placed = robot.with_pose(T * robot.pose());
  if (!detail::may_be_within(placed.center(), placed.bounding_radius(), obstacle, target + pad)) return std::nullopt;
  const auto q = distance_query(placed, obstacle);
  ClearanceResidual out;
  out.residual = target - q.distance;
  const Vec3 core_witness = q.witness_a + placed.margin() * q.normal;
  const Vec3 x_body = T.inverse().apply(core_witness);
  out.grad.segment<3>(0) = -q.normal.transpose();
  out.grad.segment<3>(3) = -(q.normal.transpose() * rotation_jacobian(s.rpy, x_body));
  return out;
}

/// Same residual for the swept hull of the robot between two states.
/// Gradient spans both states' 12 variables. The hull distance is reduced by
/// reach * (1 - |<qa, qb>|), the farthest any point of a slerped intermediate
/// pose can sit outside the endpoint hull; it vanishes for pure translation.
struct SweptClearanceResidual
{
  double residual = 0.0;
  Eigen::Matrix<double, 1, 12> grad = Eigen::Matrix<double, 1, 12>::Zero();
};

inline bool coincident_states(const RobotState& a, const RobotState& b)
{
  return (a.position - b.position).norm() <= 1e-12 && quaternion_angle(a.orientation(), b.orientation()) <= 1e-12;
}

inline std::optional<SweptClearanceResidual> swept_clearance_residual(const RobotState& a, const RobotState& b,
                                                                      const ConvexShape& robot,
                                                                      const std::vector<Vec3>& sweep_local,
                                                                      const ConvexShape& obstacle, double target,
                                                                      double pad)
{
  if (coincident_states(a, b)) {
    auto single = state_clearance_residual(a, robot, obstacle, target, pad);
    if (!single) return std::nullopt;
    SweptClearanceResidual out;
    out.residual = single->residual;
    out.grad.segment<6>(0) = 0.5 * single->grad;
    out.grad.segment<6>(6) = 0.5 * single->grad;
    return out;
  }
  double reach = 0.0;
  for (const auto& v : sweep_local) reach = std::max(reach, v.norm());
  // only a sphere's centre moves under rotation; its intermediate balls stay inside the end hulls
  const double bulge_reach = robot.is_sphere() ? robot.pose().translation().norm() : reach;
  const Quat qa = a.orientation(), qb = b.orientation();
  const double cos_half = qa.coeffs().dot(qb.coeffs());
  const double bulge = bulge_reach * (1.0 - std::abs(cos_half));
  pad += bulge;
  {
    // cheap reject: the hull lies within the capsule around the state origins
    const Vec3 ab = b.position - a.position;
    const double t = ab.squaredNorm() > 0.0 ? std::clamp((obstacle.center() - a.position).dot(ab) / ab.squaredNorm(), 0.0, 1.0) : 0.0;
    if (!detail::may_be_within(a.position + t * ab, reach, obstacle, target + pad)) return std::nullopt;
  }
  const RigidTransform Ta = a.pose(), Tb = b.pose();
  const size_t K = sweep_local.size();
  std::vector<Vec3> verts(2 * K);
  Vec3 center = Vec3::Zero();
  for (size_t k = 0; k < K; ++k) {
    verts[k] = Ta.apply(sweep_local[k]);
    verts[K + k] = Tb.apply(sweep_local[k]);
    center += verts[k] + verts[K + k];
  }
  center /= static_cast<double>(2 * K);
  double radius = 0.0;
  for (const auto& v : verts) radius = std::max(radius, (v - center).norm());
  if (!detail::may_be_within(center, radius, obstacle, target + pad)) return std::nullopt;

  const auto q = convex_distance(verts, 0.0, obstacle.world_core(), obstacle.margin());
  SweptClearanceResidual out;
  out.residual = target - q.distance + bulge;
  if (bulge > 0.0) {
    const double sgn = cos_half < 0.0 ? -1.0 : 1.0;
    const Eigen::Vector4d va(qa.w(), qa.x(), qa.y(), qa.z()), vb(qb.w(), qb.x(), qb.y(), qb.z());
    out.grad.segment<3>(3) -= bulge_reach * sgn * (vb.transpose() * quaternion_jacobian(a.rpy));
    out.grad.segment<3>(9) -= bulge_reach * sgn * (va.transpose() * quaternion_jacobian(b.rpy));
  }
  for (const auto& [idx, lambda] : q.weights_a) {
    if (lambda == 0.0) continue;
    const bool first = static_cast<size_t>(idx) < K;
    const Vec3& local = sweep_local[first ? idx : idx - K];
    const Vec3& rpy = first ? a.rpy : b.rpy;
    const int off = first ? 0 : 6;
    out.grad.segment<3>(off) -= lambda * q.normal.transpose();
    out.grad.segment<3>(off + 3) -= lambda * (q.normal.transpose() * rotation_jacobian(rpy, local));
  }
  return out;
}

/// Sum over obstacles of max(0, d_safe - sd(robot at s, o)).
inline CostGradient discrete_collision_cost(const RobotState& s, const ConvexShape& robot,
                                            std::span<const ConvexShape> obstacles, double d_safe)
{
  CostGradient out{0.0, Eigen::VectorXd::Zero(kStateDim)};
  for (const auto& o : obstacles) {
    const auto r = state_clearance_residual(s, robot, o, d_safe, 0.0);
    if (!r || r->residual <= 0.0) continue;
    out.value += r->residual;
    out.gradient += r->grad.transpose();
  }
  return out;
}

/// Hinge cost on the swept hull between two states; gradient over 12 variables.
inline CostGradient continuous_collision_cost(const RobotState& a, const RobotState& b, const ConvexShape& robot,
                                              std::span<const ConvexShape> obstacles, double d_safe)
{
  CostGradient out{0.0, Eigen::VectorXd::Zero(2 * kStateDim)};
  const auto local = robot.sweep_vertices_local();
  for (const auto& o : obstacles) {
    const auto r = swept_clearance_residual(a, b, robot, local, o, d_safe, 0.0);
    if (!r || r->residual <= 0.0) continue;
    out.value += r->residual;
    out.gradient += r->grad.transpose();
  }
  return out;
}

/// Minimum signed distance from the robot at `s` to any obstacle (+inf if none).
inline double min_clearance(const RobotState& s, const ConvexShape& robot, std::span<const ConvexShape> obstacles)
{
  const ConvexShape placed = robot.with_pose(s.pose() * robot.pose());
  double best = std::numeric_limits<double>::infinity();
  for (const auto& o : obstacles) best = std::min(best, signed_distance(placed, o));
  return best;
}

} // namespace visplan
