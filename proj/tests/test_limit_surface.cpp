#include <gtest/gtest.h>

#include <cmath>
#include <stdexcept>

#include "dls/errors.hpp"
#include "dls/limit_surface.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

namespace dls {
namespace {

using testing::Gen;

const EllipsoidMatrix kIdentity(1.0, 1.0);
const GravityLoad kNoGravity{};

GravityLoad tangential(double fx, double fy) { return {{fx, fy, 0.0}, 0.0}; }

// Uniform point on the boundary w^T A w = 1.
Wrench boundary_wrench(Gen& gen, const EllipsoidMatrix& A) {
  Eigen::Vector3d u(gen.normal(), gen.normal(), gen.normal());
  u.normalize();
  return Wrench::from(u.cwiseQuotient(A.diag().cwiseSqrt()));
}

TEST(LsMatrix, UnitCase) {
  const EllipsoidMatrix A = ls_matrix({1.0, 1.0, 1.0, 1.0});
  EXPECT_DOUBLE_EQ(A.diag().x(), 1.0);
  EXPECT_DOUBLE_EQ(A.diag().y(), 1.0);
  EXPECT_DOUBLE_EQ(A.diag().z(), 1.0);
}

TEST(LsMatrix, FormulaEvaluation) {
  const EllipsoidMatrix A = ls_matrix({0.5, 10.0, 0.05, 0.6});
  EXPECT_NEAR(A.force_entry(), 0.04, 1e-15);
  EXPECT_NEAR(A.diag().y(), 0.04, 1e-15);
  EXPECT_NEAR(A.moment_entry(), 1.0 / (0.15 * 0.15), 1e-11);
  EXPECT_NEAR(A.moment_entry(), 44.4444444444, 1e-8);
}

TEST(LsMatrix, DoublingNormalForceQuartersEntries) {
  Gen gen(10);
  for (int i = 0; i < 100; ++i) {
    LimitSurfaceParams p = gen.ls_params();
    const EllipsoidMatrix a = ls_matrix(p);
    p.normal_force *= 2.0;
    const EllipsoidMatrix b = ls_matrix(p);
    EXPECT_NEAR(b.force_entry(), a.force_entry() / 4.0, 1e-14 * a.force_entry());
    EXPECT_NEAR(b.moment_entry(), a.moment_entry() / 4.0, 1e-14 * a.moment_entry());
  }
}

TEST(LsMatrix, RejectsNonPhysicalParameters) {
  EXPECT_THROW(ls_matrix({0.0, 1.0, 1.0, 0.6}), std::invalid_argument);
  EXPECT_THROW(ls_matrix({1.0, -1.0, 1.0, 0.6}), std::invalid_argument);
  EXPECT_THROW(ls_matrix({1.0, 1.0, 0.0, 0.6}), std::invalid_argument);
  EXPECT_THROW(ls_matrix({1.0, 1.0, 1.0, 1.5}), std::invalid_argument);
  EXPECT_THROW(EllipsoidMatrix(0.0, 1.0), std::invalid_argument);
  EXPECT_THROW(EllipsoidMatrix(1.0, NAN), std::invalid_argument);
}

TEST(TwistToWrench, UnitEllipsoidPureTranslation) {
  const Wrench w = twist_to_wrench(kIdentity, {1.0, 0.0, 0.0});
  EXPECT_NEAR(w.f_x, -1.0, 1e-15);
  EXPECT_EQ(w.f_y, 0.0);
  EXPECT_EQ(w.m_z, 0.0);
}

TEST(TwistToWrench, ForceMagnitudeIsMuN) {
  const Wrench w = twist_to_wrench(ls_matrix({0.5, 10.0, 0.05, 0.6}), {1.0, 0.0, 0.0});
  EXPECT_NEAR(w.f_x, -5.0, 1e-12);
  EXPECT_NEAR(w.f_y, 0.0, 1e-15);
  EXPECT_NEAR(w.m_z, 0.0, 1e-15);
}

TEST(TwistToWrench, PureRotationGivesMomentCapacity) {
  Gen gen(11);
  for (int i = 0; i < 100; ++i) {
    const LimitSurfaceParams p = gen.ls_params();
    const Wrench w = twist_to_wrench(ls_matrix(p), {0.0, 0.0, 1.0});
    EXPECT_EQ(w.f_x, 0.0);
    EXPECT_EQ(w.f_y, 0.0);
    const double cap = p.mu * p.pressure_constant * p.patch_radius * p.normal_force;
    EXPECT_NEAR(w.m_z, -cap, 1e-12 * cap);
  }
}

TEST(TwistToWrench, ZeroTwistIsDegenerate) {
  EXPECT_THROW(twist_to_wrench(kIdentity, {}), DegenerateInput);
}

TEST(TwistToWrench, StaysOnBoundary) {
  Gen gen(12);
  for (int i = 0; i < 10000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const Wrench w = twist_to_wrench(A, gen.twist(gen.log_uniform(1e-6, 1.0), 1.0));
    EXPECT_NEAR(boundary_residual(A, w), 0.0, 1e-9);
  }
}

// Independent oracle: the wrench must maximise dissipation over the surface.
TEST(TwistToWrench, MaximisesDissipationAgainstSampledBoundary) {
  Gen gen(13);
  for (int i = 0; i < 20; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const Twist v = gen.twist(1.0, 1.0);
    const double best = -twist_to_wrench(A, v).vec().dot(v.vec());
    for (int k = 0; k < 5000; ++k) {
      const Wrench w = boundary_wrench(gen, A);
      EXPECT_LE(-w.vec().dot(v.vec()), best + 1e-8);
    }
  }
}

TEST(BoundaryResidual, Examples) {
  EXPECT_DOUBLE_EQ(boundary_residual(kIdentity, {1.0, 0.0, 0.0}), 0.0);
  EXPECT_DOUBLE_EQ(boundary_residual(kIdentity, {0.5, 0.0, 0.0}), -0.75);
}

TEST(StickingMargin, Examples) {
  EXPECT_DOUBLE_EQ(sticking_margin(kIdentity, {}), -1.0);
  EXPECT_DOUBLE_EQ(sticking_margin(kIdentity, {1.0, 0.0, 0.0}), 0.0);
  const EllipsoidMatrix B = ls_matrix({0.5, 10.0, 0.05, 0.6});
  EXPECT_NEAR(sticking_margin(B, {-5.0, 0.0, 0.0}), 0.0, 1e-14);
}

TEST(QuasiStaticResidual, Examples) {
  EXPECT_EQ(quasi_static_residual({-1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, kNoGravity).vec(),
            Eigen::Vector3d::Zero());
  EXPECT_EQ(quasi_static_residual({-1.0, 0.0, 0.0}, {0.5, 0.0, 0.0}, tangential(0.5, 0.0)).vec(),
            Eigen::Vector3d::Zero());
  Gen gen(14);
  for (int i = 0; i < 1000; ++i) {
    const Wrench w_a{gen.uniform(-5, 5), gen.uniform(-5, 5), gen.uniform(-1, 1)};
    const GravityLoad g = gen.gravity();
    const Wrench w_b = Wrench::from(-w_a.vec() - g.g_f.vec());
    EXPECT_LT(quasi_static_residual(w_a, w_b, g).vec().norm(), 1e-14);
  }
}

TEST(WrenchMargin, IdenticalSurfacesWithoutGravityAreOnTheBoundary) {
  Gen gen(15);
  for (int i = 0; i < 100; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const Wrench w{gen.uniform(-5, 5), gen.uniform(-5, 5), gen.uniform(-1, 1)};
    EXPECT_EQ(slip_free_wrench_margin(w, A, A, kNoGravity).value, 0.0);
  }
}

TEST(WrenchMargin, QuarterSurface) {
  Gen gen(16);
  const EllipsoidMatrix A = gen.ellipsoid();
  const EllipsoidMatrix B = A.scaled(0.25);
  for (int i = 0; i < 100; ++i) {
    const Wrench w = boundary_wrench(gen, A);
    EXPECT_NEAR(slip_free_wrench_margin(w, A, B, kNoGravity).value, -0.75, 1e-12);
  }
}

// Re-derivation: on the A boundary, the margin is the sticking margin of the
// balancing moving-palm wrench.
TEST(WrenchMargin, EqualsStickingMarginOfBalancingWrench) {
  Gen gen(17);
  for (int i = 0; i < 10000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const EllipsoidMatrix B = gen.ellipsoid();
    const GravityLoad g = gen.gravity();
    const Wrench w_a = boundary_wrench(gen, A);
    const Wrench w_b = Wrench::from(-w_a.vec() - g.g_f.vec());
    const double expected = sticking_margin(B, w_b);
    EXPECT_NEAR(slip_free_wrench_margin(w_a, A, B, g).value, expected,
                1e-10 * (1.0 + std::abs(expected)));
  }
}

TEST(TwistMargin, IdenticalSurfacesWithoutGravity) {
  Gen gen(18);
  for (int i = 0; i < 100; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    EXPECT_NEAR(slip_free_twist_margin(gen.twist(), A, A, kNoGravity).value, 0.0, 1e-15);
  }
}

TEST(TwistMargin, ScalesWithWrenchMargin) {
  Gen gen(19);
  for (int i = 0; i < 1000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const EllipsoidMatrix B = gen.ellipsoid();
    const GravityLoad g = gen.gravity();
    const Twist v = gen.twist();
    const double s2 = A.inverse_quad(v.vec());
    const double wrench = slip_free_wrench_margin(twist_to_wrench(A, v), A, B, g).value;
    const double twist = slip_free_twist_margin(v, A, B, g).value;
    EXPECT_NEAR(twist, s2 * wrench, 1e-9 * s2 * (1.0 + std::abs(wrench)));
  }
}

TEST(TwistMargin, ZeroTwistIsDegenerate) {
  EXPECT_THROW(slip_free_twist_margin({}, kIdentity, kIdentity, kNoGravity), DegenerateInput);
  EXPECT_THROW(leading_coeff_margin({}, kIdentity, kIdentity), DegenerateInput);
  EXPECT_THROW(soc_equal_radius_margin({}, kIdentity, 0.5, kNoGravity), DegenerateInput);
  EXPECT_THROW(decomposed_margins({}, kIdentity, kIdentity, tangential(1.0, 0.0)),
               DegenerateInput);
}

TEST(LeadingCoeff, EqualNormalisedSurfacesGiveZero) {
  Gen gen(20);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(leading_coeff_margin(gen.twist(), kIdentity, kIdentity).value, 0.0);
    EXPECT_EQ(
        leading_coeff_margin(gen.twist(), kIdentity, kIdentity, LeadingCoeffForm::InvertedMiddle)
            .value,
        0.0);
  }
}

TEST(LeadingCoeff, ExpandedFormOnScaledIdentity) {
  const EllipsoidMatrix b_hat(4.0, 4.0);
  EXPECT_DOUBLE_EQ(leading_coeff_margin({1.0, 0.0, 0.0}, kIdentity, b_hat).value, 3.0);
  EXPECT_DOUBLE_EQ(
      leading_coeff_margin({1.0, 0.0, 0.0}, kIdentity, b_hat, LeadingCoeffForm::InvertedMiddle)
          .value,
      -0.75);
}

TEST(LeadingCoeff, ExpandedFormMatchesQuarticFit) {
  Gen gen(21);
  for (int i = 0; i < 30; ++i) {
    const double mu_a = gen.uniform(0.2, 1.2);
    const double mu_b = gen.uniform(0.2, 1.2);
    const double r_a = gen.uniform(0.01, 0.06);
    const double r_b = gen.uniform(0.01, 0.06);
    const GravityLoad g = gen.gravity();
    const Twist v = gen.twist();
    const double lo = g.g_n + 1.0;
    const double hi = lo + 40.0;
    const double fitted = testing::fitted_leading_coeff(mu_a, r_a, mu_b, r_b, 0.6, g, v, lo, hi);
    const double closed = leading_coeff_margin(v, ls_matrix({mu_a, 1.0, r_a, 0.6}),
                                               ls_matrix({mu_b, 1.0, r_b, 0.6}))
                              .value;
    // The fit is exact up to conditioning, so compare magnitudes as well.
    EXPECT_NEAR(fitted / std::pow(hi, 4), closed, 1e-6 * std::abs(closed)) << i;
  }
}

TEST(LeadingCoeff, NormalisedEllipsoidRemovesNormalForce) {
  const EllipsoidMatrix a = ls_matrix({0.6, 7.0, 0.03, 0.6});
  const EllipsoidMatrix a_hat = normalized_ellipsoid(a, 7.0);
  const EllipsoidMatrix ref = ls_matrix({0.6, 1.0, 0.03, 0.6});
  EXPECT_NEAR(a_hat.force_entry(), ref.force_entry(), 1e-12 * ref.force_entry());
  EXPECT_NEAR(a_hat.moment_entry(), ref.moment_entry(), 1e-12 * ref.moment_entry());
  EXPECT_THROW(normalized_ellipsoid(a, 0.0), std::invalid_argument);
}

TEST(SocEqualRadius, UnitRatioWithoutGravity) {
  Gen gen(21);
  for (int i = 0; i < 100; ++i) {
    EXPECT_EQ(soc_equal_radius_margin(gen.twist(), gen.ellipsoid(), 1.0, kNoGravity).value, 0.0);
  }
}

TEST(SocEqualRadius, QuarterRatioWithoutGravity) {
  Gen gen(22);
  for (int i = 0; i < 100; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const Twist v = gen.twist();
    const double norm = std::sqrt(A.inverse_quad(v.vec()));
    EXPECT_NEAR(soc_equal_radius_margin(v, A, 0.25, kNoGravity).value, -0.75 * norm, 1e-12 * norm);
  }
}

TEST(SocEqualRadius, SignMatchesTwistMargin) {
  Gen gen(23);
  int compared = 0;
  for (int i = 0; i < 10000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const double c = gen.uniform(0.1, 0.99);
    const GravityLoad g = gen.gravity();
    const Twist v = gen.twist();
    const double full = slip_free_twist_margin(v, A, A.scaled(c), g).value;
    const double cone = soc_equal_radius_margin(v, A, c, g).value;
    const double s = std::sqrt(A.inverse_quad(v.vec()));
    EXPECT_NEAR(full, s * cone, 1e-9 * s * (std::abs(cone) + s));
    if (std::abs(full) < 1e-8 * s * s) continue;
    ++compared;
    EXPECT_EQ(full < 0.0, cone < 0.0);
  }
  EXPECT_GT(compared, 9000);
}

TEST(Fallback, Examples) {
  const GravityLoad g = tangential(0.0, -1.0);
  EXPECT_DOUBLE_EQ(nonconvex_fallback_margin({0.0, -0.01, 0.0}, g).value, -0.01);
  EXPECT_DOUBLE_EQ(nonconvex_fallback_margin({0.0, 0.01, 0.0}, g).value, 0.01);
}

TEST(Fallback, ImpliesTwistMarginWhenConeConstantIsNegative) {
  Gen gen(24);
  int checked = 0;
  for (int i = 0; i < 20000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const double c = gen.uniform(0.1, 0.99);
    const GravityLoad g = gen.gravity();
    if (soc_constant(A, c, g) >= 0.0) continue;
    const Twist v = gen.twist();
    if (!(nonconvex_fallback_margin(v, g).value < 0.0)) continue;
    ++checked;
    EXPECT_LT(slip_free_twist_margin(v, A, A.scaled(c), g).value, 0.0);
  }
  EXPECT_GT(checked, 100);
}

TEST(Decomposed, Examples) {
  Gen gen(25);
  const EllipsoidMatrix A = gen.ellipsoid();
  for (int i = 0; i < 100; ++i) {
    EXPECT_NEAR(decomposed_margins(gen.twist(), A, A, gen.gravity()).first.value, 0.0, 1e-12);
  }
  const auto [first, second] =
      decomposed_margins({1.0, 0.0, 0.0}, kIdentity, kIdentity, tangential(1.0, 0.0));
  EXPECT_EQ(first.kind, MarginKind::DecomposedQuadratic);
  EXPECT_EQ(second.kind, MarginKind::DecomposedSoc);
  EXPECT_DOUBLE_EQ(second.value, -1.0);
  EXPECT_THROW(decomposed_margins({1.0, 0.0, 0.0}, kIdentity, kIdentity, kNoGravity),
               DegenerateInput);
}

TEST(Decomposed, BothNegativeImpliesTwistMargin) {
  Gen gen(26);
  int checked = 0;
  for (int i = 0; i < 10000; ++i) {
    LimitSurfaceParams pa = gen.ls_params();
    LimitSurfaceParams pb = pa;
    pb.patch_radius = gen.uniform(0.01, 0.06);
    pb.normal_force = pa.normal_force * gen.uniform(1.0, 3.0);
    const EllipsoidMatrix A = ls_matrix(pa);
    const EllipsoidMatrix B = ls_matrix(pb);
    const GravityLoad g = gen.gravity();
    const Twist v = gen.twist();
    const auto [first, second] = decomposed_margins(v, A, B, g);
    if (first.value < 0.0 && second.value < 0.0) {
      ++checked;
      EXPECT_LT(slip_free_twist_margin(v, A, B, g).value, 0.0);
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Homogeneity, TwistMarginsScaleByDegree) {
  Gen gen(27);
  for (int i = 0; i < 1000; ++i) {
    const EllipsoidMatrix A = gen.ellipsoid();
    const EllipsoidMatrix B = gen.ellipsoid();
    const GravityLoad g = gen.gravity();
    const Twist v = gen.twist();
    const double c = gen.uniform(0.1, 0.99);
    for (double lambda : {0.1, 2.0, 10.0}) {
      const Twist lv = Twist::from(lambda * v.vec());
      auto check = [&](double base, double scaled, int degree) {
        const double expected = std::pow(lambda, degree) * base;
        EXPECT_NEAR(scaled, expected, 1e-9 * std::abs(expected) + 1e-300);
      };
      check(slip_free_twist_margin(v, A, B, g).value, slip_free_twist_margin(lv, A, B, g).value, 2);
      check(leading_coeff_margin(v, A, B).value, leading_coeff_margin(lv, A, B).value, 2);
      check(soc_equal_radius_margin(v, A, c, g).value,
            soc_equal_radius_margin(lv, A, c, g).value, 1);
      check(nonconvex_fallback_margin(v, g).value, nonconvex_fallback_margin(lv, g).value, 1);
      const auto base = decomposed_margins(v, A, B, g);
      const auto scaled = decomposed_margins(lv, A, B, g);
      check(base.first.value, scaled.first.value, 2);
      check(base.second.value, scaled.second.value, 1);
    }
  }
}

TEST(MarginKind, Names) {
  EXPECT_EQ(to_string(MarginKind::SocEqualRadius), "soc_equal_radius");
  EXPECT_EQ(to_string(MarginKind::DecomposedSoc), "decomposed_soc");
  EXPECT_TRUE((ConstraintMargin{-1.0, MarginKind::TwistFull}).satisfied());
  EXPECT_FALSE((ConstraintMargin{0.0, MarginKind::TwistFull}).satisfied());
}

}  // namespace
}  // namespace dls
