#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "dls/contact_sim.hpp"
#include "dls/errors.hpp"
#include "dls/rollout.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dls {
namespace {

using testing::deg;
using testing::Gen;
using testing::steep_grasp;

TEST(NormalForces, HorizontalGrasp) {
  GraspConfig g;
  g.squeeze_force = 10.0;
  const NormalForces n = normal_forces(g);
  EXPECT_NEAR(n.moving_palm, 14.905, 1e-12);
  EXPECT_DOUBLE_EQ(n.static_palm, 10.0);
}

TEST(NormalForces, VerticalAndMasslessLimits) {
  GraspConfig g;
  g.incline_phi = deg(90.0) - 1e-9;
  EXPECT_NEAR(normal_forces(g).moving_palm, g.squeeze_force, 1e-7);
  g = GraspConfig{};
  g.mass = 1e-12;
  const NormalForces n = normal_forces(g);
  EXPECT_NEAR(n.moving_palm, g.squeeze_force, 1e-10);
  EXPECT_DOUBLE_EQ(n.static_palm, g.squeeze_force);
}

TEST(GraspConfig, ValidateRejectsNonPhysicalValues) {
  EXPECT_NO_THROW(GraspConfig{}.validate());
  auto bad = [](auto mutate) {
    GraspConfig g;
    mutate(g);
    EXPECT_THROW(g.validate(), std::invalid_argument);
  };
  bad([](GraspConfig& g) { g.mass = 0.0; });
  bad([](GraspConfig& g) { g.squeeze_force = -1.0; });
  bad([](GraspConfig& g) { g.incline_phi = -0.1; });
  bad([](GraspConfig& g) { g.mu_moving_palm = 0.0; });
  bad([](GraspConfig& g) { g.radius_static_palm = 0.0; });
  bad([](GraspConfig& g) { g.palm_radius = 0.0; });
}

TEST(PhaseMechanics, GravityIsFixedInTheWorld) {
  GraspConfig g = steep_grasp();
  const PhaseMechanics m0 = phase_mechanics(g, 0.0);
  const PhaseMechanics m1 = phase_mechanics(g, deg(90.0));
  // Downhill is -y at heading 0. After the object turns a quarter, the
  // object-frame downhill angle is -90 - 90 = -180 degrees, i.e. -x.
  EXPECT_NEAR(m0.gravity.g_f.f_y, -0.5 * 9.81 * std::sin(deg(45.0)), 1e-12);
  EXPECT_NEAR(m1.gravity.g_f.f_x, -0.5 * 9.81 * std::sin(deg(45.0)), 1e-12);
  EXPECT_NEAR(m1.gravity.g_f.f_y, 0.0, 1e-12);
  EXPECT_NEAR(c_ratio(m0), 25.0 / (m0.normals.moving_palm * m0.normals.moving_palm), 1e-15);
}

TEST(CheckMode, ZeroTwistSticks) {
  EXPECT_EQ(check_mode({}, steep_grasp()).mode, ContactMode::AllStick);
}

TEST(CheckMode, HorizontalEqualContactsAlwaysSlideOnStatic) {
  Gen gen(50);
  for (int i = 0; i < 2000; ++i) {
    GraspConfig g = gen.grasp(true);
    g.incline_phi = 0.0;
    EXPECT_EQ(check_mode(gen.twist(), g).mode, ContactMode::StickMovingSlideStatic);
  }
}

// Fixture found by evaluating the wrench margin: 45 degrees, 5 N squeeze,
// palm pushed straight uphill (+y, downhill is -y).
TEST(CheckMode, SteepUphillTranslationSlipsAtMovingPalm) {
  const GraspConfig g = steep_grasp();
  const Twist uphill{0.0, 0.004, 0.0};
  const PhaseMechanics m = phase_mechanics(g, 0.0);
  EXPECT_GT(slip_free_wrench_margin(twist_to_wrench(m.A, uphill), m.A, m.B, m.gravity).value, 0.0);
  const ModeCheck mc = check_mode(uphill, g);
  EXPECT_EQ(mc.mode, ContactMode::SlipAtMoving);
  EXPECT_GT(mc.margin, 0.0);
  EXPECT_EQ(check_mode({0.0, -0.004, 0.0}, g).mode, ContactMode::StickMovingSlideStatic);
}

TEST(CheckMode, DegenerateWhenTheGraspCannotHold) {
  GraspConfig g = steep_grasp();
  g.incline_phi = deg(85.0);
  g.squeeze_force = 0.5;
  g.mu_static_palm = g.mu_moving_palm = 0.2;
  EXPECT_FALSE(grasp_can_hold(g));
  EXPECT_EQ(check_mode({0.001, 0.0, 0.0}, g).mode, ContactMode::Degenerate);
}

TEST(CheckMode, AgreesWithWrenchMarginSign) {
  Gen gen(51);
  for (int i = 0; i < 10000; ++i) {
    const GraspConfig g = gen.grasp(gen.integer(0, 1) == 1);
    if (!grasp_can_hold(g)) continue;
    const double heading = gen.uniform(-3.0, 3.0);
    const Twist v = gen.twist();
    const PhaseMechanics m = phase_mechanics(g, heading);
    const double margin =
        slip_free_wrench_margin(twist_to_wrench(m.A, v), m.A, m.B, m.gravity).value;
    const ModeCheck mc = check_mode(v, g, heading);
    EXPECT_NEAR(mc.margin, margin, 1e-12 * (1.0 + std::abs(margin)));
    if (std::abs(margin) > 1e-12) {
      EXPECT_EQ(mc.mode == ContactMode::StickMovingSlideStatic, margin < 0.0);
    }
  }
}

TEST(ResolveSlip, ReturnsPalmTwistWhenMovingPalmSticks) {
  GraspConfig g = steep_grasp();
  const Twist down{0.0, -0.004, 0.001};
  const SlipSolution sol = resolve_slip_twist(down, g);
  EXPECT_EQ(sol.regime, SlipRegime::StickMoving);
  EXPECT_EQ(sol.object_twist, down);
}

TEST(ResolveSlip, UphillPalmMotionLosesUphillProgress) {
  const GraspConfig g = steep_grasp();
  const Twist uphill{0.0, 0.004, 0.0};
  const SlipSolution sol = resolve_slip_twist(uphill, g);
  EXPECT_LT(sol.object_twist.v_y, uphill.v_y);
  EXPECT_LT(sol.residual_norm, 1e-8);
  const testing::BruteForceResult ref = testing::brute_force_slip(phase_mechanics(g, 0.0), uphill);
  EXPECT_LT(ref.v.y(), uphill.v_y);
  EXPECT_LE(std::abs(sol.object_twist.v_y - ref.v.y()), ref.tolerance().y());
}

TEST(ResolveSlip, MatchesBruteForceAndBalances) {
  Gen gen(52);
  int solved = 0;
  for (int attempt = 0; attempt < 400 && solved < 8; ++attempt) {
    GraspConfig g = gen.grasp(gen.integer(0, 1) == 1);
    g.incline_phi = deg(gen.uniform(30.0, 50.0));
    g.squeeze_force = gen.uniform(2.0, 6.0);
    if (!grasp_can_hold(g)) continue;
    const Twist v = gen.twist();
    if (check_mode(v, g).mode != ContactMode::SlipAtMoving) continue;
    const SlipSolution sol = resolve_slip_twist(v, g);
    ++solved;
    EXPECT_LT(sol.residual_norm, 1e-8);
    const PhaseMechanics m = phase_mechanics(g, 0.0);
    const testing::BruteForceResult ref = testing::brute_force_slip(m, v);
    const Eigen::Vector3d diff = (sol.object_twist.vec() - ref.v).cwiseAbs();
    for (int k = 0; k < 3; ++k) EXPECT_LE(diff[k], ref.tolerance()[k]) << "component " << k;
    EXPECT_LE(testing::slip_potential(sol.object_twist.vec(), m, v.vec()), ref.value + 1e-12);
    // Both sliding contacts dissipate.
    if (sol.regime == SlipRegime::DualSlide) {
      const double diss = -sol.w_static.vec().dot(sol.object_twist.vec()) -
                          sol.w_moving.vec().dot(sol.object_twist.vec() - v.vec());
      EXPECT_GE(diss, 0.0);
    }
  }
  EXPECT_EQ(solved, 8);
}

TEST(ResolveSlip, ZeroTwistIsDegenerate) {
  EXPECT_THROW(resolve_slip_twist({}, steep_grasp()), DegenerateInput);
}

TEST(Step, ZeroTwistLeavesStateUnchanged) {
  SimState s;
  s.pose_obj_in_left = PlanarPose(0.01, 0.02, 0.3);
  s.pose_obj_in_right = PlanarPose(-0.01, 0.0, -0.2);
  const StepResult r = step(s, {}, steep_grasp());
  EXPECT_EQ(r.mode, ContactMode::AllStick);
  EXPECT_EQ(r.state.pose_obj_in_left, s.pose_obj_in_left);
  EXPECT_EQ(r.state.pose_obj_in_right, s.pose_obj_in_right);
  EXPECT_EQ(r.state.heading, s.heading);
}

TEST(Step, StickSlideAdvancesOnlyTheStaticRelativePose) {
  SimState s;
  s.pose_obj_in_left = PlanarPose(0.01, 0.0, 0.1);
  s.pose_obj_in_right = PlanarPose(0.0, 0.01, -0.1);
  s.active_moving_palm = Palm::Right;
  const Twist v{0.001, -0.002, 0.01};
  GraspConfig g;
  const StepResult r = step(s, v, g);
  EXPECT_EQ(r.mode, ContactMode::StickMovingSlideStatic);
  EXPECT_EQ(r.state.pose_obj_in_right, s.pose_obj_in_right);
  EXPECT_EQ(r.state.pose_obj_in_left, integrate_pose(s.pose_obj_in_left, v));
  EXPECT_EQ(r.state.heading, v.omega_z);
  EXPECT_LT(r.residual_norm, 1e-12);
}

TEST(Step, StickingPreservesRelativePoseBitExactly) {
  GraspConfig g;
  SimState s;
  s.pose_obj_in_left = PlanarPose(0.003, -0.001, 0.7);
  s.active_moving_palm = Palm::Left;
  const PlanarPose held = s.pose_obj_in_left;
  Gen gen(53);
  for (int i = 0; i < 500; ++i) {
    const StepResult r = step(s, gen.twist(0.0005, 0.005), g);
    ASSERT_EQ(r.mode, ContactMode::StickMovingSlideStatic);
    s = r.state;
  }
  EXPECT_EQ(s.pose_obj_in_left, held);
}

TEST(Step, SlipMovesBothPosesConsistently) {
  const GraspConfig g = steep_grasp();
  SimState s;
  s.pose_obj_in_left = PlanarPose(0.0, 0.0, 0.2);
  s.pose_obj_in_right = PlanarPose(0.01, -0.01, 0.2);
  s.active_moving_palm = Palm::Left;
  const Twist v{0.001, 0.004, 0.0};
  const StepResult r = step(s, v, g);
  ASSERT_EQ(r.mode, ContactMode::SlipAtMoving);
  const Eigen::Vector2d d_static = r.state.pose_obj_in_right.position() - s.pose_obj_in_right.position();
  const Eigen::Vector2d d_moving = r.state.pose_obj_in_left.position() - s.pose_obj_in_left.position();
  EXPECT_GT(d_moving.norm(), 0.0);
  const Eigen::Vector2d palm = integrate_pose(PlanarPose(0.0, 0.0, 0.2), v).position();
  EXPECT_NEAR((d_static - d_moving - palm).norm(), 0.0, 1e-9);
  EXPECT_LT(r.residual_norm, 1e-8);
}

TEST(Step, FlagsWorkspaceExit) {
  SimState s;
  s.pose_obj_in_right = PlanarPose(0.0599, 0.0, 0.0);
  s.active_moving_palm = Palm::Left;
  const StepResult r = step(s, {0.001, 0.0, 0.0}, GraspConfig{});
  EXPECT_TRUE(r.outside_workspace);
}

TEST(Rollout, EmptyPlanEchoesInitialErrors) {
  Scenario sc;
  sc.start_left = PlanarPose(0.0, 0.0, 0.0);
  sc.start_right = PlanarPose(0.0, 0.0, 0.0);
  sc.goal_left = PlanarPose(0.003, 0.004, 0.0);
  sc.goal_right = PlanarPose(0.0, 0.0, 0.5);
  const RolloutResult r = rollout(Plan{}, sc);
  EXPECT_EQ(r.slip_events, 0);
  ASSERT_EQ(r.states.size(), 1u);
  EXPECT_NEAR(r.final_error_left.trans, 0.005, 1e-15);
  EXPECT_NEAR(r.final_error_right.rot, 0.5, 1e-15);
}

TEST(Rollout, CountsSlipEventsAndKeepsLengths) {
  Scenario sc;
  sc.grasp = steep_grasp();
  sc.goal_left = sc.goal_right = PlanarPose(0.0, 0.02, 0.0);
  Plan p;
  for (int t = 0; t < 6; ++t) {
    p.twists.push_back(t < 4 ? Twist{0.0, 0.004, 0.0} : Twist{});
    p.phases.push_back(phase_at(t));
  }
  const RolloutResult r = rollout(p, sc);
  EXPECT_EQ(r.states.size(), p.twists.size() + 1);
  EXPECT_EQ(r.modes.size(), p.twists.size());
  int expected = 0;
  for (std::size_t t = 0; t < p.twists.size(); ++t) {
    if (r.modes[t] != ContactMode::StickMovingSlideStatic && !p.twists[t].is_zero()) ++expected;
    EXPECT_LT(r.residual_norms[t], 1e-8);
  }
  EXPECT_EQ(r.slip_events, expected);
  EXPECT_GE(r.slip_events, 1);
}

}  // namespace
}  // namespace dls
