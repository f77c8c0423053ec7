#pragma once

// Analytic-versus-finite-difference sweeps for every cost term. Shared by the
// unit tests and the acceptance binary.

#include "support/oracles.hpp"

#include <string>

namespace oracle {

struct GradientCheck
{
  std::string term;
  int samples = 0;
  int skipped = 0; // configurations rejected for lying in a non-smooth band
  double worst = 0.0;
};

namespace detail {

inline std::vector<visplan::ConvexShape> random_obstacles(std::mt19937& rng, int count, double extent)
{
  std::uniform_real_distribution<double> p(-extent, extent), a(-3.0, 3.0), size(0.2, 0.8), unit(-1.0, 1.0);
  std::vector<visplan::ConvexShape> out;
  for (int i = 0; i < count; ++i) {
    const auto pose = visplan::RigidTransform::from_rpy(Vec3(p(rng), p(rng), p(rng)), Vec3(a(rng), a(rng) / 2, a(rng)));
    switch (i % 3) {
    case 0: out.push_back(visplan::ConvexShape::sphere(size(rng), pose)); break;
    case 1: out.push_back(visplan::ConvexShape::box(Vec3(size(rng), size(rng), size(rng)), pose)); break;
    default: {
      std::vector<Vec3> v;
      for (int k = 0; k < 8; ++k) v.emplace_back(unit(rng), unit(rng), unit(rng));
      out.push_back(visplan::ConvexShape::hull(v, pose));
    }
    }
  }
  return out;
}

// Robot with orientation-dependent geometry so the rotational gradient is exercised.
inline visplan::ConvexShape test_robot()
{
  return visplan::ConvexShape::box(Vec3(0.35, 0.25, 0.1), visplan::RigidTransform::translation_only(Vec3(0.1, 0.0, 0.0)));
}

// True when every obstacle is outside the hinge band and clear of contact.
inline bool away_from_kinks(const std::vector<double>& sds, double d_safe)
{
  for (double sd : sds)
    if (std::abs(sd - d_safe) < 1e-3 || sd < 1e-3) return false;
  return true;
}

} // namespace detail

inline GradientCheck check_path_length(int configs, std::mt19937& rng)
{
  GradientCheck out{"path_length"};
  while (out.samples < configs) {
    std::vector<visplan::RobotState> st;
    for (int i = 0; i < 10; ++i) st.push_back(random_state(rng, 3.0));
    bool ok = true;
    for (size_t i = 0; i + 1 < st.size(); ++i) {
      const double th = visplan::quaternion_angle(st[i].orientation(), st[i + 1].orientation());
      if (th < 1e-3 || visplan::kPi - th < 1e-3) ok = false;
    }
    if (!ok) {
      ++out.skipped;
      continue;
    }
    auto f = [](const Eigen::VectorXd& x) { return visplan::path_length_cost(visplan::Trajectory(unpack(x)), 1.3, 0.7).value; };
    const auto g = visplan::path_length_cost(visplan::Trajectory(st), 1.3, 0.7).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack(st))));
    ++out.samples;
  }
  return out;
}

inline GradientCheck check_uniformity(int configs, std::mt19937& rng)
{
  GradientCheck out{"uniformity"};
  while (out.samples < configs) {
    std::vector<visplan::RobotState> st;
    for (int i = 0; i < 8; ++i) st.push_back(random_state(rng, 3.0));
    auto f = [](const Eigen::VectorXd& x) { return visplan::uniformity_cost(visplan::Trajectory(unpack(x))).value; };
    const auto g = visplan::uniformity_cost(visplan::Trajectory(st)).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack(st))));
    ++out.samples;
  }
  return out;
}

inline GradientCheck check_discrete_collision(int configs, std::mt19937& rng)
{
  GradientCheck out{"discrete_collision"};
  const auto robot = detail::test_robot();
  const double d_safe = 0.6;
  while (out.samples < configs) {
    const auto obstacles = detail::random_obstacles(rng, 3, 1.5);
    const auto s = random_state(rng, 0.5);
    const auto placed = robot.with_pose(s.pose() * robot.pose());
    std::vector<double> sds;
    bool active = false;
    for (const auto& o : obstacles) {
      sds.push_back(visplan::signed_distance(placed, o));
      active = active || sds.back() < d_safe;
    }
    if (!active || !detail::away_from_kinks(sds, d_safe)) {
      ++out.skipped;
      continue;
    }
    auto f = [&](const Eigen::VectorXd& x) {
      return visplan::discrete_collision_cost(unpack(x)[0], robot, obstacles, d_safe).value;
    };
    const auto g = visplan::discrete_collision_cost(s, robot, obstacles, d_safe).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack({s}))));
    ++out.samples;
  }
  return out;
}

inline GradientCheck check_continuous_collision(int configs, std::mt19937& rng)
{
  GradientCheck out{"continuous_collision"};
  const auto robot = detail::test_robot();
  const double d_safe = 0.6;
  const auto local = robot.sweep_vertices_local();
  while (out.samples < configs) {
    const auto obstacles = detail::random_obstacles(rng, 3, 1.5);
    const auto a = random_state(rng, 1.0), b = random_state(rng, 1.0);
    std::vector<double> sds;
    bool active = false;
    for (const auto& o : obstacles) {
      const auto h = visplan::swept_hull(robot, a.pose(), b.pose());
      sds.push_back(visplan::signed_distance(h, o));
      active = active || sds.back() < d_safe;
    }
    if (!active || !detail::away_from_kinks(sds, d_safe)) {
      ++out.skipped;
      continue;
    }
    auto f = [&](const Eigen::VectorXd& x) {
      const auto st = unpack(x);
      return visplan::continuous_collision_cost(st[0], st[1], robot, obstacles, d_safe).value;
    };
    const auto g = visplan::continuous_collision_cost(a, b, robot, obstacles, d_safe).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack({a, b}))));
    ++out.samples;
  }
  return out;
}

inline GradientCheck check_visibility(int configs, std::mt19937& rng)
{
  GradientCheck out{"visibility"};
  visplan::CameraRig rig = visplan::CameraRig::forward_tilted();
  rig.cameras.push_back({visplan::RigidTransform::from_rpy(Vec3(0.1, 0.2, 0.0), Vec3(0.2, -0.1, 1.2))});
  std::uniform_real_distribution<double> p(-3.0, 3.0);
  while (out.samples < configs) {
    std::vector<Vec3> V;
    for (int k = 0; k < 5; ++k) V.emplace_back(p(rng), p(rng), p(rng));
    const auto s = random_state(rng, 2.0);
    // reject near-ties between the two best (camera, objective) pairs and the norm kink
    std::vector<double> d;
    for (const auto& c : rig.cameras)
      for (const auto& v : V) d.push_back((visplan::project_point(s.pose(), c.mount, rig.d_vis) - v).norm());
    std::sort(d.begin(), d.end());
    if (d[0] < 1e-3 || d[1] - d[0] < 1e-3) {
      ++out.skipped;
      continue;
    }
    auto f = [&](const Eigen::VectorXd& x) { return visplan::visibility_cost(unpack(x)[0], rig, V).value; };
    const auto g = visplan::visibility_cost(s, rig, V).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack({s}))));
    ++out.samples;
  }
  return out;
}

inline GradientCheck check_alignment(int configs, std::mt19937& rng)
{
  GradientCheck out{"alignment"};
  const visplan::AlignmentEpsilon eps;
  std::uniform_int_distribution<size_t> pick(1, 6);
  while (out.samples < configs) {
    std::vector<visplan::RobotState> st;
    for (int i = 0; i < 8; ++i) st.push_back(random_state(rng, 2.0));
    const visplan::Trajectory S(st);
    const size_t i = pick(rng);
    const double av = visplan::average_segment_length(S);
    bool ok = std::abs(eps.fraction * av - eps.floor) > 1e-3;
    for (size_t j = 0; j + 1 < st.size(); ++j) ok = ok && (st[j + 1].position - st[j].position).norm() > 1e-3;
    ok = ok && visplan::alignment_cost(S, i, eps).value > 1e-3;
    if (!ok) {
      ++out.skipped;
      continue;
    }
    auto f = [&](const Eigen::VectorXd& x) { return visplan::alignment_cost(visplan::Trajectory(unpack(x)), i, eps).value; };
    const auto g = visplan::alignment_cost(S, i, eps).gradient;
    out.worst = std::max(out.worst, relative_error(g, central_difference(f, pack(st))));
    ++out.samples;
  }
  return out;
}

inline std::vector<GradientCheck> run_gradient_checks(int configs, unsigned seed)
{
  std::mt19937 rng(seed);
  return {check_path_length(configs, rng),        check_uniformity(configs, rng), check_discrete_collision(configs, rng),
          check_continuous_collision(configs, rng), check_visibility(configs, rng), check_alignment(configs, rng)};
}

} // namespace oracle
