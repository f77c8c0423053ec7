#include "support/gradient_checks.hpp"
#include "visplan/cost_terms.hpp"

#include <gtest/gtest.h>

using namespace visplan;

namespace {

RobotState at(double x, double y = 0.0, double z = 0.0, double yaw = 0.0) { return RobotState(Vec3(x, y, z), Vec3(0, 0, yaw)); }

CameraRig identity_rig(double d_vis = 1.0)
{
  CameraRig rig;
  rig.cameras.push_back({});
  rig.d_vis = d_vis;
  return rig;
}

} // namespace

TEST(PathLength, Examples)
{
  EXPECT_NEAR(path_length_cost(Trajectory({at(0), at(1), at(2)}), 1.0, 1.0).value, 2.0, 1e-12);
  EXPECT_EQ(path_length_cost(Trajectory({at(1), at(1)}), 1.0, 1.0).value, 0.0);
  // quarter turn in yaw between two states
  EXPECT_NEAR(path_length_cost(Trajectory({at(0), at(0, 0, 0, kPi / 2)}), 0.0, 2.0).value, 2.0 * kPi * kPi / 4, 1e-12);
}

TEST(PathLength, TranslationInvariant)
{
  std::mt19937 rng(1);
  for (int k = 0; k < 50; ++k) {
    std::vector<RobotState> st;
    for (int i = 0; i < 6; ++i) st.push_back(oracle::random_state(rng, 3.0));
    auto moved = st;
    for (auto& s : moved) s.position += Vec3(4.0, -2.0, 1.5);
    EXPECT_NEAR(path_length_cost(Trajectory(st), 1.0, 1.0).value, path_length_cost(Trajectory(moved), 1.0, 1.0).value, 1e-9);
  }
}

TEST(DiscreteCollision, Examples)
{
  const auto robot = ConvexShape::sphere(0.3);
  const std::vector<ConvexShape> far{ConvexShape::sphere(0.3, RigidTransform::translation_only(Vec3(2, 0, 0)))};
  EXPECT_EQ(discrete_collision_cost(at(0), robot, far, 0.6).value, 0.0);
  const std::vector<ConvexShape> near{ConvexShape::sphere(0.3, RigidTransform::translation_only(Vec3(1, 0, 0)))};
  const auto c = discrete_collision_cost(at(0), robot, near, 0.6);
  EXPECT_NEAR(c.value, 0.2, 1e-12);
  EXPECT_NEAR(c.gradient[0], 1.0, 1e-9); // moving towards the obstacle raises the cost
}

TEST(ContinuousCollision, FarStatesAreFree)
{
  const auto robot = ConvexShape::sphere(0.3);
  const std::vector<ConvexShape> obs{ConvexShape::box(Vec3::Constant(0.5), RigidTransform::translation_only(Vec3(0, 10, 0)))};
  EXPECT_EQ(continuous_collision_cost(at(0), at(3), robot, obs, 0.6).value, 0.0);
}

TEST(ContinuousCollision, StraddlingThinWallIsPenalized)
{
  const auto robot = ConvexShape::sphere(0.3);
  const auto wall = ConvexShape::box(Vec3(0.05, 2.0, 2.0), RigidTransform::translation_only(Vec3(0, 0, 0)));
  const std::vector<ConvexShape> obs{wall};
  const auto a = at(-1.2), b = at(1.2);
  EXPECT_EQ(discrete_collision_cost(a, robot, obs, 0.6).value, 0.0);
  EXPECT_EQ(discrete_collision_cost(b, robot, obs, 0.6).value, 0.0);
  EXPECT_LT(oracle::dense_sweep_clearance(robot, a, b, wall, 1000), 0.6);
  EXPECT_GT(continuous_collision_cost(a, b, robot, obs, 0.6).value, 0.0);
}

TEST(ContinuousCollision, CoincidentStatesMatchDiscrete)
{
  std::mt19937 rng(2);
  const auto robot = ConvexShape::box(Vec3(0.3, 0.2, 0.1));
  const std::vector<ConvexShape> obs{ConvexShape::sphere(0.5, RigidTransform::translation_only(Vec3(0.9, 0.1, 0.0))),
                                     ConvexShape::box(Vec3(0.2, 0.3, 0.4), RigidTransform::translation_only(Vec3(-0.4, 1.0, 0.2)))};
  for (int k = 0; k < 20; ++k) {
    const auto s = oracle::random_state(rng, 0.3);
    EXPECT_NEAR(continuous_collision_cost(s, s, robot, obs, 0.6).value, discrete_collision_cost(s, robot, obs, 0.6).value, 1e-9);
  }
}

TEST(ContinuousCollision, DominatesEndpointCosts)
{
  std::mt19937 rng(3);
  const auto robot = ConvexShape::sphere(0.3);
  const std::vector<ConvexShape> obs{ConvexShape::sphere(0.5, RigidTransform::translation_only(Vec3(0.9, 0.1, 0.0))),
                                     ConvexShape::box(Vec3(0.2, 0.3, 0.4), RigidTransform::translation_only(Vec3(-0.4, 1.0, 0.2)))};
  for (int k = 0; k < 200; ++k) {
    const auto a = oracle::random_state(rng, 1.5), b = oracle::random_state(rng, 1.5);
    const double c = continuous_collision_cost(a, b, robot, obs, 0.6).value;
    EXPECT_GE(c, discrete_collision_cost(a, robot, obs, 0.6).value - 1e-9);
    EXPECT_GE(c, discrete_collision_cost(b, robot, obs, 0.6).value - 1e-9);
  }
}

TEST(ContinuousCollision, SoundForLargeRotations)
{
  // every pose slerped between the endpoints must be covered, including near half turns
  std::mt19937 rng(41);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  const auto robot = oracle::detail::test_robot();
  int violating = 0;
  for (int k = 0; k < 300; ++k) {
    const auto a = oracle::random_state(rng, 1.5), b = oracle::random_state(rng, 1.5);
    const auto shape = oracle::detail::random_obstacles(rng, 1 + k % 3, 0.5).back();
    const auto o = shape.with_pose(RigidTransform(0.5 * (a.position + b.position) + Vec3(u(rng), u(rng), u(rng)), shape.pose().rotation()));
    if (oracle::dense_sweep_clearance(robot, a, b, o, 400) >= 0.6) continue;
    ++violating;
    const std::vector<ConvexShape> obs{o};
    EXPECT_GT(continuous_collision_cost(a, b, robot, obs, 0.6).value, 0.0) << "instance " << k;
  }
  EXPECT_GT(violating, 100);
}

TEST(ContinuousCollision, PureTranslationUsesHullDistance)
{
  const auto robot = oracle::detail::test_robot();
  const auto wall = ConvexShape::box(Vec3(1.0, 0.05, 1.0), RigidTransform::translation_only(Vec3(0.5, 0.7, 0)));
  const std::vector<ConvexShape> obs{wall};
  const auto a = at(0, 0, 0, 0.3), b = at(1, 0.1, 0, 0.3);
  const double hull = signed_distance(swept_hull(robot, a.pose(), b.pose()), wall);
  EXPECT_NEAR(continuous_collision_cost(a, b, robot, obs, 0.6).value, 0.6 - hull, 1e-12);
}

TEST(ContinuousCollision, CentredSphereIgnoresRotation)
{
  const auto robot = ConvexShape::sphere(0.3);
  const auto wall = ConvexShape::box(Vec3(1.0, 0.05, 1.0), RigidTransform::translation_only(Vec3(0.5, 0.7, 0)));
  const std::vector<ConvexShape> obs{wall};
  const auto a = at(0, 0, 0, -1.0), b = at(1, 0.1, 0, 1.2);
  const double hull = signed_distance(swept_hull(robot, a.pose(), b.pose()), wall);
  EXPECT_LT(hull, 0.6);
  EXPECT_NEAR(continuous_collision_cost(a, b, robot, obs, 0.6).value, 0.6 - hull, 1e-12);
}

TEST(Visibility, Examples)
{
  const auto rig = identity_rig();
  const std::vector<Vec3> one{Vec3(1, 0, 0)};
  EXPECT_NEAR(visibility_cost(at(0), rig, one).value, 0.0, 1e-12);
  const std::vector<Vec3> two{Vec3(2, 0, 0), Vec3(1, 0.5, 0)};
  EXPECT_NEAR(visibility_cost(at(0), rig, two).value, 0.5, 1e-12);
  EXPECT_EQ(visibility_cost(at(0), rig, std::vector<Vec3>{}).value, 0.0);

  CameraRig pair = identity_rig();
  pair.cameras.push_back({RigidTransform::from_rpy(Vec3::Zero(), Vec3(0, 0, kPi / 2))});
  const std::vector<Vec3> side{project_point(RigidTransform{}, pair.cameras[1].mount, 1.0)};
  EXPECT_NEAR(visibility_cost(at(0), pair, side).value, 0.0, 1e-12);
}

TEST(Visibility, PermutationInvariant)
{
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-3, 3);
  CameraRig rig = CameraRig::forward_tilted();
  rig.cameras.push_back({RigidTransform::from_rpy(Vec3::Zero(), Vec3(0.0, 0.0, 1.0))});
  for (int k = 0; k < 50; ++k) {
    std::vector<Vec3> V;
    for (int i = 0; i < 6; ++i) V.emplace_back(u(rng), u(rng), u(rng));
    const auto s = oracle::random_state(rng, 2.0);
    const double base = visibility_cost(s, rig, V).value;
    std::shuffle(V.begin(), V.end(), rng);
    CameraRig swapped = rig;
    std::swap(swapped.cameras[0], swapped.cameras[1]);
    EXPECT_EQ(visibility_cost(s, swapped, V).value, base);
  }
}

TEST(Alignment, Examples)
{
  std::vector<RobotState> st;
  for (int i = 0; i < 5; ++i) st.push_back(at(i));
  const Trajectory S(st);
  for (size_t i = 1; i < 4; ++i) EXPECT_NEAR(alignment_cost(S, i, 0.1).value, 0.1, 1e-12);

  // state 1 yawed 90 degrees: projected point sits sideways, next waypoint ahead
  auto yawed = st;
  yawed[1].rpy = Vec3(0, 0, kPi / 2);
  const Trajectory Y(yawed);
  const double L = average_segment_length(Y) - 0.1;
  EXPECT_NEAR(alignment_cost(Y, 1, 0.1).value, std::hypot(L, average_segment_length(Y)), 1e-12);
  EXPECT_NEAR(alignment_cost(Y, 1, average_segment_length(Y)).value, 1.0, 1e-12);
}

TEST(Alignment, YawedByNinetyDegreesAtAverageSpacing)
{
  // next waypoint exactly av ahead; projection of length av - eps at right angles
  const Trajectory S({at(0), at(1), at(2)});
  auto st = S.states();
  st[0].rpy = Vec3(0, 0, kPi / 2);
  const Trajectory Y(st);
  const double av = average_segment_length(Y), eps = 0.1;
  EXPECT_NEAR(alignment_cost(Y, 0, eps).value, std::hypot(av - eps, av), 1e-12);
  // close to sqrt(2) (av - eps) for small eps
  EXPECT_NEAR(alignment_cost(Y, 0, eps).value, std::sqrt(2.0) * (av - eps), eps);
}

TEST(AverageSegmentLength, Examples)
{
  std::vector<RobotState> st;
  for (int i = 0; i <= 12; ++i) st.push_back(at(i));
  EXPECT_NEAR(average_segment_length(Trajectory(st)), 1.0, 1e-12);
  EXPECT_EQ(average_segment_length(Trajectory({at(3), at(3), at(3)})), 0.0);

  std::mt19937 rng(5);
  std::vector<RobotState> r;
  for (int i = 0; i < 9; ++i) r.push_back(oracle::random_state(rng, 5.0));
  double sum = 0.0;
  for (size_t i = 1; i < r.size(); ++i) sum += (r[i].position - r[i - 1].position).norm();
  EXPECT_NEAR(average_segment_length(Trajectory(r)), sum / 8.0, 1e-12);
}

TEST(CostTerms, AllNonNegative)
{
  std::mt19937 rng(6);
  const auto robot = ConvexShape::sphere(0.3);
  const std::vector<ConvexShape> obs{ConvexShape::box(Vec3::Constant(0.5))};
  const auto rig = CameraRig::forward_tilted();
  const std::vector<Vec3> V{Vec3(1, 1, 1), Vec3(-2, 0, 1)};
  for (int k = 0; k < 100; ++k) {
    std::vector<RobotState> st;
    for (int i = 0; i < 5; ++i) st.push_back(oracle::random_state(rng, 2.0));
    const Trajectory S(st);
    EXPECT_GE(path_length_cost(S, 1, 1).value, 0.0);
    EXPECT_GE(uniformity_cost(S).value, 0.0);
    EXPECT_GE(discrete_collision_cost(st[0], robot, obs, 0.6).value, 0.0);
    EXPECT_GE(continuous_collision_cost(st[0], st[1], robot, obs, 0.6).value, 0.0);
    EXPECT_GE(visibility_cost(st[0], rig, V).value, 0.0);
    EXPECT_GE(alignment_cost(S, 1, AlignmentEpsilon{}).value, 0.0);
  }
}

TEST(Gradients, MatchCentralDifferences)
{
  for (const auto& c : oracle::run_gradient_checks(100, 1234)) {
    EXPECT_EQ(c.samples, 100) << c.term;
    EXPECT_LT(c.worst, 1e-4) << c.term << " skipped " << c.skipped;
  }
}
