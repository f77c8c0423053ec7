#include "visplan/distance.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace visplan;

namespace {

// Points spread over the surface of a shape in world frame.
std::vector<Vec3> sample_surface(const ConvexShape& s, int n)
{
  std::vector<Vec3> out;
  const auto& T = s.pose();
  if (s.is_sphere()) {
    const double r = std::get<Sphere>(s.geometry()).radius;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j <= n; ++j) {
        const double th = 2.0 * kPi * i / n, ph = kPi * j / n;
        out.push_back(T.apply(r * Vec3(std::sin(ph) * std::cos(th), std::sin(ph) * std::sin(th), std::cos(ph))));
      }
  } else if (s.is_box()) {
    const Vec3 h = std::get<Box>(s.geometry()).half_extents;
    for (int face = 0; face < 6; ++face) {
      const int ax = face / 2;
      const double sgn = face % 2 ? 1.0 : -1.0;
      for (int i = 0; i <= n; ++i)
        for (int j = 0; j <= n; ++j) {
          Vec3 p;
          p[ax] = sgn * h[ax];
          p[(ax + 1) % 3] = h[(ax + 1) % 3] * (2.0 * i / n - 1.0);
          p[(ax + 2) % 3] = h[(ax + 2) % 3] * (2.0 * j / n - 1.0);
          out.push_back(T.apply(p));
        }
    }
  } else {
    // hull: random convex combinations pushed out along support directions
    std::mt19937 rng(5);
    std::normal_distribution<double> g;
    for (int i = 0; i < n * n * 6; ++i) {
      const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
      out.push_back(s.support(d));
    }
  }
  return out;
}

double brute_force_distance(const ConvexShape& a, const ConvexShape& b, int n)
{
  const auto pa = sample_surface(a, n), pb = sample_surface(b, n);
  double best = std::numeric_limits<double>::infinity();
  for (const auto& x : pa)
    for (const auto& y : pb) best = std::min(best, (x - y).norm());
  return best;
}

ConvexShape random_shape(std::mt19937& rng, const Vec3& center)
{
  std::uniform_real_distribution<double> u(-1.0, 1.0), pos(0.2, 1.0);
  const auto pose = RigidTransform::from_rpy(center, Vec3(u(rng) * kPi, u(rng) * 1.5, u(rng) * kPi));
  switch (rng() % 3) {
  case 0: return ConvexShape::sphere(pos(rng), pose);
  case 1: return ConvexShape::box(Vec3(pos(rng), pos(rng), pos(rng)), pose);
  default: {
    std::vector<Vec3> v;
    for (int i = 0; i < 10; ++i) v.emplace_back(u(rng), u(rng), u(rng));
    return ConvexShape::hull(v, pose);
  }
  }
}

} // namespace

TEST(RigidTransform, ComposeWithInverseIsIdentity)
{
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 200; ++i) {
    const auto T = RigidTransform::from_rpy(Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng) / 2, u(rng)));
    const auto I = T * T.inverse();
    EXPECT_LT(I.translation().norm(), 1e-9);
    EXPECT_LT(quaternion_angle(I.rotation(), Quat::Identity()), 1e-9);
    EXPECT_NEAR(I.rotation().norm(), 1.0, 1e-9);
  }
}

TEST(RigidTransform, RpyRoundTrip)
{
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(-3.1, 3.1), p(-1.5, 1.5);
  for (int i = 0; i < 200; ++i) {
    const Vec3 rpy(u(rng), p(rng), u(rng));
    const Vec3 back = rpy_from_quat(quat_from_rpy(rpy));
    EXPECT_LT((back - rpy).norm(), 1e-9);
  }
}

TEST(RigidTransform, RotationJacobianMatchesFiniteDifferences)
{
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int i = 0; i < 50; ++i) {
    const Vec3 rpy(u(rng), u(rng) / 2, u(rng)), v(u(rng), u(rng), u(rng));
    const Mat3 J = rotation_jacobian(rpy, v);
    for (int k = 0; k < 3; ++k) {
      Vec3 hp = rpy, hm = rpy;
      hp[k] += 1e-6;
      hm[k] -= 1e-6;
      const Vec3 fd = (quat_from_rpy(hp) * v - quat_from_rpy(hm) * v) / 2e-6;
      EXPECT_LT((fd - J.col(k)).norm(), 1e-7);
    }
  }
}

TEST(ConvexShape, RejectsInvalidShapes)
{
  EXPECT_THROW(ConvexShape::sphere(0.0), std::invalid_argument);
  EXPECT_THROW(ConvexShape::box(Vec3(1.0, 0.0, 1.0)), std::invalid_argument);
  EXPECT_THROW(ConvexShape::hull({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0), Vec3(1, 1, 0)}),
               std::invalid_argument);
  EXPECT_THROW(ConvexShape::hull({Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)}), std::invalid_argument);
}

TEST(ConvexShape, SupportMatchesVertexEnumeration)
{
  std::mt19937 rng(4);
  std::normal_distribution<double> g;
  const auto box = ConvexShape::box(Vec3(0.5, 1.0, 0.2), RigidTransform::from_rpy(Vec3(1, 2, 3), Vec3(0.3, 0.2, 0.1)));
  std::vector<Vec3> hv;
  for (int i = 0; i < 12; ++i) hv.emplace_back(g(rng), g(rng), g(rng));
  const auto hull = ConvexShape::hull(hv, RigidTransform::from_rpy(Vec3(-1, 0, 2), Vec3(1.0, -0.4, 2.0)));
  for (int i = 0; i < 100; ++i) {
    const Vec3 d(g(rng), g(rng), g(rng));
    for (const auto* s : {&box, &hull}) {
      double best = -1e300;
      for (const auto& v : s->world_core()) best = std::max(best, d.dot(v));
      EXPECT_NEAR(s->support_value(d), best, 1e-9);
    }
  }
}

TEST(SignedDistance, SpheresApart) { EXPECT_NEAR(signed_distance(ConvexShape::sphere(1.0), ConvexShape::sphere(1.0, RigidTransform::translation_only(Vec3(3, 0, 0)))), 1.0, 1e-9); }

TEST(SignedDistance, SpheresOverlapping)
{
  EXPECT_NEAR(signed_distance(ConvexShape::sphere(1.0), ConvexShape::sphere(1.0, RigidTransform::translation_only(Vec3(1, 0, 0)))),
              -1.0, 1e-9);
}

TEST(SignedDistance, BoxVersusSphereMatchesSampledOracle)
{
  const auto box = ConvexShape::box(Vec3::Constant(0.5));
  const auto sph = ConvexShape::sphere(0.25, RigidTransform::translation_only(Vec3(2, 0, 0)));
  const double sd = signed_distance(box, sph);
  EXPECT_NEAR(sd, brute_force_distance(box, sph, 40), 1e-3);
  EXPECT_NEAR(sd, 1.25, 1e-9);
}

TEST(SignedDistance, OverlappingBoxesGivePenetrationDepth)
{
  const auto a = ConvexShape::box(Vec3::Constant(0.5));
  const auto b = ConvexShape::box(Vec3::Constant(0.5), RigidTransform::translation_only(Vec3(0.8, 0.1, 0.0)));
  EXPECT_NEAR(signed_distance(a, b), -0.2, 1e-6);
  EXPECT_NEAR(signed_distance(b, a), -0.2, 1e-6);
}

TEST(SignedDistance, TouchingIsZero)
{
  const auto a = ConvexShape::box(Vec3::Constant(0.5));
  const auto b = ConvexShape::box(Vec3::Constant(0.5), RigidTransform::translation_only(Vec3(1.0, 0.3, 0.0)));
  EXPECT_NEAR(signed_distance(a, b), 0.0, 1e-9);
}

TEST(SignedDistanceProperty, SymmetricOverRandomPairs)
{
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 1000; ++i) {
    const auto a = random_shape(rng, Vec3(u(rng), u(rng), u(rng)));
    const auto b = random_shape(rng, Vec3(u(rng), u(rng), u(rng)));
    EXPECT_NEAR(signed_distance(a, b), signed_distance(b, a), 1e-6) << "pair " << i;
  }
}

TEST(SignedDistanceProperty, DisjointPairsMatchSampledMinimum)
{
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int checked = 0;
  while (checked < 30) {
    const auto a = random_shape(rng, Vec3::Zero());
    const auto b = random_shape(rng, Vec3(3.5 + u(rng), u(rng), u(rng)));
    const double sd = signed_distance(a, b);
    if (sd <= 0.0) continue;
    // samples can only over-estimate the true minimum
    const double sampled = brute_force_distance(a, b, 36);
    EXPECT_GE(sampled, sd - 1e-9);
    // the witness pair must be attained on both surfaces
    const auto q = distance_query(a, b);
    EXPECT_NEAR((q.witness_a - q.witness_b).norm(), sd, 1e-6);
    EXPECT_NEAR(signed_distance(q.witness_a, b), sd, 1e-6);
    if (a.is_sphere() || b.is_sphere() || (!a.is_hull() && !b.is_hull())) {
      EXPECT_NEAR(sampled, sd, 1e-3 + 0.05 * sd);
    }
    ++checked;
  }
}

TEST(SignedDistanceProperty, TranslationInvariant)
{
  std::mt19937 rng(9);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 300; ++i) {
    const auto a = random_shape(rng, Vec3(u(rng), u(rng), u(rng)));
    const auto b = random_shape(rng, Vec3(u(rng), u(rng), u(rng)));
    const auto shift = RigidTransform::translation_only(Vec3(u(rng), u(rng), u(rng)));
    const double sd0 = signed_distance(a, b);
    const double sd1 = signed_distance(a.with_pose(shift * a.pose()), b.with_pose(shift * b.pose()));
    EXPECT_NEAR(sd0, sd1, sd0 > 0 ? 1e-9 : 1e-6) << "pair " << i;
  }
}

TEST(SignedDistance, PointQueries)
{
  const auto box = ConvexShape::box(Vec3::Constant(0.5));
  EXPECT_NEAR(signed_distance(Vec3(2, 0, 0), box), 1.5, 1e-9);
  EXPECT_NEAR(signed_distance(Vec3(0.3, 0, 0), box), -0.2, 1e-9);
}

TEST(SweptHull, TranslatedBoxSpansBothPoses)
{
  const auto box = ConvexShape::box(Vec3::Constant(0.5));
  const auto h = swept_hull(box, RigidTransform{}, RigidTransform::translation_only(Vec3(2, 0, 0)));
  EXPECT_NEAR(h.support_value(Vec3::UnitX()), 2.5, 1e-12);
  EXPECT_NEAR(h.support_value(-Vec3::UnitX()), 0.5, 1e-12);
  EXPECT_NEAR(h.support_value(Vec3::UnitY()), 0.5, 1e-12);
}

TEST(SweptHull, SphereSweepContainsBothEndSpheres)
{
  const auto s = ConvexShape::sphere(0.3);
  const auto Ta = RigidTransform::from_rpy(Vec3(0, 0, 0), Vec3(0.1, 0.2, 0.3));
  const auto Tb = RigidTransform::from_rpy(Vec3(1.5, -0.4, 0.7), Vec3(-0.4, 0.1, 1.3));
  const auto h = swept_hull(s, Ta, Tb);
  for (const auto* T : {&Ta, &Tb})
    for (const auto& p : sample_surface(s.with_pose(*T), 24)) EXPECT_LE(signed_distance(p, h), 1e-9);
  // outer surface stays within the discretization tolerance
  std::mt19937 rng(11);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    const Vec3 d = Vec3(g(rng), g(rng), g(rng)).normalized();
    const double exact = std::max(d.dot(Ta.translation()), d.dot(Tb.translation())) + 0.3;
    EXPECT_GE(h.support_value(d), exact - 1e-9);
    // circumscribed icosphere: outward error bounded by r (1 / inradius - 1)
    EXPECT_LE(h.support_value(d) - exact, 0.3 * (1.0 / detail::icosphere().inradius - 1.0) + 1e-12);
  }
}

TEST(SweptHull, CoincidentPosesKeepSupport)
{
  std::mt19937 rng(10);
  std::normal_distribution<double> g;
  const auto box = ConvexShape::box(Vec3(0.3, 0.2, 0.1), RigidTransform::translation_only(Vec3(0.1, 0, 0)));
  const auto T = RigidTransform::from_rpy(Vec3(1, 2, 3), Vec3(0.5, 0.1, -0.2));
  const auto h = swept_hull(box, T, T);
  const auto ref = box.with_pose(T * box.pose());
  for (int i = 0; i < 100; ++i) {
    const Vec3 d(g(rng), g(rng), g(rng));
    EXPECT_NEAR(h.support_value(d), ref.support_value(d), 1e-9);
  }
}

TEST(ProjectPoint, Examples)
{
  EXPECT_LT((project_point(RigidTransform{}, RigidTransform{}, 1.0) - Vec3(1, 0, 0)).norm(), 1e-12);
  const auto yawed = RigidTransform::from_rpy(Vec3::Zero(), Vec3(0, 0, kPi / 2));
  EXPECT_LT((project_point(yawed, RigidTransform{}, 1.0) - Vec3(0, 1, 0)).norm(), 1e-12);
  const auto cam = RigidTransform::from_rpy(Vec3::Zero(), Vec3(0, deg2rad(40.0), 0));
  const Vec3 expected(std::cos(deg2rad(40.0)), 0.0, -std::sin(deg2rad(40.0)));
  EXPECT_LT((project_point(RigidTransform{}, cam, 1.0) - expected).norm(), 1e-12);
}

TEST(RayCast, AnalyticShapes)
{
  const auto s = ConvexShape::sphere(1.0, RigidTransform::translation_only(Vec3(5, 0, 0)));
  EXPECT_NEAR(*ray_cast(s, Vec3::Zero(), Vec3::UnitX(), 10.0), 4.0, 1e-9);
  EXPECT_FALSE(ray_cast(s, Vec3::Zero(), Vec3::UnitY(), 10.0));
  const auto b = ConvexShape::box(Vec3::Constant(0.5), RigidTransform::translation_only(Vec3(3, 0, 0)));
  EXPECT_NEAR(*ray_cast(b, Vec3::Zero(), Vec3::UnitX(), 10.0), 2.5, 1e-9);
  EXPECT_FALSE(ray_cast(b, Vec3::Zero(), Vec3::UnitX(), 2.0));
  const auto h = ConvexShape::hull(box_corners(Vec3::Constant(0.5)), RigidTransform::translation_only(Vec3(3, 0, 0)));
  EXPECT_NEAR(*ray_cast(h, Vec3::Zero(), Vec3::UnitX(), 10.0), 2.5, 1e-6);
}

TEST(SignedDistance, FlatSimplexDoesNotFakeContact)
{
  // a swept hull and a hull 0.0187 apart; GJK once built a flat tetrahedron here and reported contact
  const std::vector<Vec3> a = {
      Vec3(0x1.5a31a1535427ep-1, -0x1.9f02d0a4aa3d3p-3, 0x1.0a8e22e3ac893p+0),
      Vec3(0x1.0f46c1fe20d67p-1, -0x1.9f2e48fde92d8p-1, 0x1.74545c145f409p-1),
      Vec3(0x1.f1f6e1f2af2f4p-1, -0x1.39789534dcc1cp-4, 0x1.5152c9530b33dp-1),
      Vec3(0x1.a70c029d7bdddp-1, -0x1.5e9ca77b5a368p-1, 0x1.6115bf4022c41p-2),
      Vec3(0x1.a9d4c79521886p-1, -0x1.26b6ef4e0ef58p-2, 0x1.223b50f9779b8p+0),
      Vec3(0x1.5ee9e83fee36fp-1, -0x1.cac90c7bc619p-1, 0x1.a3aeb83ff5655p-1),
      Vec3(0x1.20cd041a3e47ep+0, -0x1.4b275891e20ecp-3, 0x1.80ad257ea1588p-1),
      Vec3(0x1.f6af28df493e5p-1, -0x1.8a376af93721ep-1, 0x1.bfca77974f0d8p-2),
      Vec3(-0x1.8b640282cc46ep-1, 0x1.e258b73fab145p-1, 0x1.bbc9bd1e94cdfp-2),
      Vec3(-0x1.000f19ed6acdbp+0, 0x1.268d037647d58p-2, 0x1.106ae7fbb506ap-1),
      Vec3(-0x1.66ea4db1ae20ap-2, 0x1.aa0a0a73299ddp-1, 0x1.5b58c9fa92f0ep-1),
      Vec3(-0x1.282f5830e064dp-1, 0x1.6bdf53ba89d1p-3, 0x1.8dded366fd909p-1),
      Vec3(-0x1.b7215f355609cp-1, 0x1.feddb5ced0635p-1, 0x1.35fb0554ed3b3p-1),
      Vec3(-0x1.15edc846afaf2p+0, 0x1.5f97009492736p-2, 0x1.68810ec157daep-1),
      Vec3(-0x1.be650716c1a68p-2, 0x1.c68f09024eeccp-1, 0x1.b36ef0c035c52p-1),
      Vec3(-0x1.53ecb4e36a27bp-1, 0x1.ddf34df71f0c8p-3, 0x1.e5f4fa2ca064cp-1),
  };
  const std::vector<Vec3> b = {
      Vec3(0x1.824fe648796ddp-1, -0x1.fb67c4f9623c6p+0, 0x1.2b3b1e00db2d2p+0),
      Vec3(0x1.10c90ab7f8e26p-2, -0x1.1c286d2b893ep+0, 0x1.66a58083178p-3),
      Vec3(-0x1.e5f697c2d8723p-1, -0x1.0166666c35b32p+0, 0x1.59f6a97d42c4p-4),
      Vec3(0x1.45ca05a4cd07p-5, -0x1.34bdf23a365e4p-3, 0x1.30c7ff03d6db6p+0),
      Vec3(0x1.7045edda60b9fp-2, -0x1.02a31012520a7p-1, 0x1.14fd8cdb730c2p+0),
      Vec3(-0x1.0b744db498717p+0, -0x1.67e01b1033d3dp-1, 0x1.863697eb312ep-3),
      Vec3(-0x1.e39d7255980f8p-3, -0x1.495741ad278d8p+0, 0x1.1a1e792f7d78p-5),
      Vec3(0x1.954682adb3ba4p-2, -0x1.1aa4f73caa1f8p+0, 0x1.9567b8c074cd8p+0),
  };
  EXPECT_NEAR(convex_distance(a, 0.0, b, 0.0).distance, 0.0186534, 1e-6);
  EXPECT_NEAR(convex_distance(b, 0.0, a, 0.0).distance, 0.0186534, 1e-6);
}
