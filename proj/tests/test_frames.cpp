#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dls/frames.hpp"
#include "test_util.hpp"

namespace dls {
namespace {

using testing::Gen;
constexpr double kPi = std::numbers::pi;

void expect_pose_near(const PlanarPose& a, const PlanarPose& b, double tol) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
  EXPECT_NEAR(wrap_angle(a.theta() - b.theta()), 0.0, tol);
}

TEST(WrapAngle, MapsIntoHalfOpenInterval) {
  EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
  EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
  EXPECT_NEAR(wrap_angle(3.0 * kPi), kPi, 1e-12);
  EXPECT_NEAR(wrap_angle(0.5 + 4.0 * kPi), 0.5, 1e-12);
  Gen gen(1);
  for (int i = 0; i < 1000; ++i) {
    const double a = wrap_angle(gen.uniform(-50.0, 50.0));
    EXPECT_GT(a, -kPi);
    EXPECT_LE(a, kPi);
  }
}

TEST(PlanarPose, ConstructorWrapsTheta) {
  const PlanarPose p(1.0, 2.0, 2.0 * kPi + 0.25);
  EXPECT_NEAR(p.theta(), 0.25, 1e-12);
  EXPECT_EQ(PlanarPose(0.0, 0.0, -kPi).theta(), wrap_angle(kPi));
}

TEST(Compose, IdentityOnTheLeft) {
  expect_pose_near(compose(PlanarPose(), PlanarPose(1.0, 2.0, 0.3)), PlanarPose(1.0, 2.0, 0.3),
                   1e-12);
}

TEST(Compose, QuarterTurn) {
  expect_pose_near(compose(PlanarPose(1.0, 0.0, kPi / 2.0), PlanarPose(1.0, 0.0, 0.0)),
                   PlanarPose(1.0, 1.0, kPi / 2.0), 1e-12);
}

TEST(Compose, GroupAxiomsOnRandomPoses) {
  Gen gen(2);
  for (int i = 0; i < 10000; ++i) {
    const PlanarPose a = gen.pose();
    const PlanarPose b = gen.pose();
    const PlanarPose c = gen.pose();
    expect_pose_near(compose(a, compose(b, inverse(b))), a, 1e-10);
    expect_pose_near(compose(compose(a, b), c), compose(a, compose(b, c)), 1e-10);
    expect_pose_near(compose(a, PlanarPose()), a, 1e-12);
    expect_pose_near(compose(inverse(a), a), PlanarPose(), 1e-10);
  }
}

TEST(IntegratePose, AlignedFrame) {
  expect_pose_near(integrate_pose(PlanarPose(), {0.01, 0.0, 0.0}), PlanarPose(0.01, 0.0, 0.0),
                   1e-15);
}

TEST(IntegratePose, RotatedFrameMapsXToY) {
  expect_pose_near(integrate_pose(PlanarPose(0.0, 0.0, kPi / 2.0), {0.01, 0.0, 0.0}),
                   PlanarPose(0.0, 0.01, kPi / 2.0), 1e-15);
}

TEST(IntegratePose, GeneralCase) {
  const PlanarPose out = integrate_pose(PlanarPose(0.1, 0.2, 0.3), {0.01, -0.02, 0.05});
  const double c = std::cos(0.3);
  const double s = std::sin(0.3);
  EXPECT_NEAR(out.x(), 0.1 + c * 0.01 + s * 0.02, 1e-15);
  EXPECT_NEAR(out.y(), 0.2 + s * 0.01 - c * 0.02, 1e-15);
  EXPECT_NEAR(out.theta(), 0.35, 1e-15);
}

TEST(IntegratePose, ZeroTwistIsIdentity) {
  Gen gen(3);
  for (int i = 0; i < 100; ++i) {
    const PlanarPose p = gen.pose();
    EXPECT_EQ(integrate_pose(p, Twist{}), p);
  }
}

TEST(IntegratePose, RewrapsTheta) {
  const PlanarPose out = integrate_pose(PlanarPose(0.0, 0.0, kPi - 0.01), {0.0, 0.0, 0.02});
  EXPECT_NEAR(out.theta(), -kPi + 0.01, 1e-12);
}

TEST(GravityDecompose, HorizontalGraspIsPureNormalLoad) {
  const GravityLoad g = gravity_decompose(0.5, 9.81, 0.0, 0.0);
  EXPECT_EQ(g.g_f.f_x, 0.0);
  EXPECT_EQ(g.g_f.f_y, 0.0);
  EXPECT_EQ(g.g_f.m_z, 0.0);
  EXPECT_NEAR(g.g_n, 4.905, 1e-12);
}

TEST(GravityDecompose, VerticalLimit) {
  const GravityLoad g = gravity_decompose(0.5, 9.81, kPi / 2.0 - 1e-9, 0.3);
  EXPECT_NEAR(std::hypot(g.g_f.f_x, g.g_f.f_y), 4.905, 1e-8);
  EXPECT_NEAR(g.g_n, 0.0, 1e-8);
}

TEST(GravityDecompose, ThirtyDegreesAlongY) {
  const GravityLoad g = gravity_decompose(0.5, 9.81, kPi / 6.0, kPi / 2.0);
  EXPECT_NEAR(g.g_f.f_x, 0.0, 1e-12);
  EXPECT_NEAR(g.g_f.f_y, 2.4525, 1e-12);
  EXPECT_EQ(g.g_f.m_z, 0.0);
  EXPECT_NEAR(g.g_n, 4.905 * std::cos(kPi / 6.0), 1e-12);
  EXPECT_NEAR(g.g_n, 4.2479, 1e-4);
}

TEST(GravityDecompose, MagnitudesOnRandomInputs) {
  Gen gen(4);
  for (int i = 0; i < 10000; ++i) {
    const double m = gen.uniform(0.01, 5.0);
    const double gr = gen.uniform(1.0, 20.0);
    const double phi = gen.uniform(0.0, kPi / 2.0 - 1e-6);
    const GravityLoad g = gravity_decompose(m, gr, phi, gen.uniform(-kPi, kPi));
    const double w = m * gr;
    EXPECT_EQ(g.g_f.m_z, 0.0);
    EXPECT_NEAR(std::hypot(g.g_f.f_x, g.g_f.f_y), w * std::sin(phi), 1e-12 * w);
    EXPECT_NEAR(std::abs(g.g_n), w * std::cos(phi), 1e-12 * w);
    const double total = g.g_f.vec().squaredNorm() + g.g_n * g.g_n;
    EXPECT_NEAR(total, w * w, 1e-10 * w * w);
  }
}

TEST(GravityDecompose, RejectsInvalidInputs) {
  EXPECT_THROW(gravity_decompose(0.5, 9.81, -0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(gravity_decompose(0.5, 9.81, kPi / 2.0, 0.0), std::invalid_argument);
  EXPECT_THROW(gravity_decompose(0.0, 9.81, 0.1, 0.0), std::invalid_argument);
  EXPECT_THROW(gravity_decompose(0.5, -1.0, 0.1, 0.0), std::invalid_argument);
}

TEST(TwistWrench, Finiteness) {
  EXPECT_TRUE((Twist{1.0, 2.0, 3.0}).is_finite());
  EXPECT_FALSE((Twist{1.0, NAN, 3.0}).is_finite());
  EXPECT_FALSE((Wrench{INFINITY, 0.0, 0.0}).is_finite());
  EXPECT_TRUE(Twist{}.is_zero());
}

}  // namespace
}  // namespace dls
