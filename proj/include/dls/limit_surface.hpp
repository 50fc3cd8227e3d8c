#pragma once

#include <Eigen/Core>
#include <string_view>
#include <utility>

#include "dls/frames.hpp"

namespace dls {

/// Ellipsoidal limit surface of one circular patch contact.
struct LimitSurfaceParams {
  double mu = 0.0;
  double normal_force = 0.0;
  double patch_radius = 0.0;
  /// Torque-capacity factor of the ellipsoid; 0.6 for uniform pressure.
  double pressure_constant = 0.6;
};

/// Diagonal ellipsoid matrix, w^T A w = 1 on the limit surface.
/// The two force entries are always equal (isotropic friction).
class EllipsoidMatrix {
 public:
  /// Throws std::invalid_argument unless both entries are positive and finite.
  EllipsoidMatrix(double force_entry, double moment_entry);

  double force_entry() const { return diag_.x(); }
  double moment_entry() const { return diag_.z(); }
  const Eigen::Vector3d& diag() const { return diag_; }
  Eigen::Vector3d inverse_diag() const { return diag_.cwiseInverse(); }

  /// Returns s * matrix.
  EllipsoidMatrix scaled(double s) const;

  /// x^T M x
  double quad(const Eigen::Vector3d& x) const;
  /// x^T M^-1 x
  double inverse_quad(const Eigen::Vector3d& x) const;

 private:
  Eigen::Vector3d diag_;
};

enum class MarginKind {
  WrenchSpace,
  TwistFull,
  LeadingCoeff,
  SocEqualRadius,
  NonconvexFallback,
  DecomposedQuadratic,
  DecomposedSoc,
};

std::string_view to_string(MarginKind kind);

/// Signed constraint value; negative means the slippage-free condition holds.
struct ConstraintMargin {
  double value = 0.0;
  MarginKind kind = MarginKind::WrenchSpace;

  bool satisfied() const { return value < 0.0; }
};

/// Diag{(mu N)^-2, (mu N)^-2, (mu c r N)^-2}
EllipsoidMatrix ls_matrix(const LimitSurfaceParams& p);

/// Friction wrench of a sliding patch by maximum dissipation:
///   w = -A^-1 v / sqrt(v^T A^-1 v).
/// Throws DegenerateInput for v == 0, where the map is undefined.
Wrench twist_to_wrench(const EllipsoidMatrix& A, const Twist& v);

/// w^T A w - 1: zero on the limit surface, negative inside.
double boundary_residual(const EllipsoidMatrix& A, const Wrench& w);

/// w^T B w - 1: negative iff the contact can carry w without slipping.
double sticking_margin(const EllipsoidMatrix& B, const Wrench& w);

/// w_a + w_b + g_f
Wrench quasi_static_residual(const Wrench& w_a, const Wrench& w_b,
                             const GravityLoad& gl);

/// Wrench-space slippage-free condition for a static-palm wrench on its
/// limit surface:  w_a^T (B - A) w_a + 2 g_f^T B w_a + g_f^T B g_f.
ConstraintMargin slip_free_wrench_margin(const Wrench& w_a,
                                         const EllipsoidMatrix& A,
                                         const EllipsoidMatrix& B,
                                         const GravityLoad& gl);

/// The wrench condition rewritten in the static-palm twist:
///   v^T(A^-1 B A^-1 - A^-1)v - 2 sqrt(v^T A^-1 v) v^T A^-1 B g_f
///     + (g_f^T B g_f) v^T A^-1 v
/// Equal to (v^T A^-1 v) times the wrench margin at w_a = twist_to_wrench(A, v).
ConstraintMargin slip_free_twist_margin(const Twist& v, const EllipsoidMatrix& A,
                                        const EllipsoidMatrix& B,
                                        const GravityLoad& gl);

/// Middle factor used in the leading-coefficient condition.
enum class LeadingCoeffForm {
  /// v^T (Ahat^-1 Bhat Ahat^-1 - Ahat^-1) v. This is the actual N_b^4
  /// coefficient of the twist margin (times N_b^2); checked by polynomial fit.
  Expanded,
  /// v^T (Ahat^-1 Bhat^-1 Ahat^-1 - Ahat^-1) v, the inverted-middle variant.
  InvertedMiddle,
};

/// Normal-force-free ellipsoid Ahat = N^2 A.
EllipsoidMatrix normalized_ellipsoid(const EllipsoidMatrix& A, double normal_force);

/// Leading coefficient of the twist margin viewed as a quartic in N_b.
ConstraintMargin leading_coeff_margin(const Twist& v, const EllipsoidMatrix& A_hat,
                                      const EllipsoidMatrix& B_hat,
                                      LeadingCoeffForm form = LeadingCoeffForm::Expanded);

/// c - 1 + c g_f^T A g_f. Positive: the equal-radius condition is a convex
/// second-order cone. Negative: its feasible set is nonconvex.
double soc_constant(const EllipsoidMatrix& A, double c_ratio, const GravityLoad& gl);

/// Equal radius and friction, B = c_ratio A with c_ratio = N_a^2 / N_b^2:
///   (c - 1 + c g_f^T A g_f) ||A^-1/2 v|| - 2 c g_f^T v.
ConstraintMargin soc_equal_radius_margin(const Twist& v, const EllipsoidMatrix& A,
                                         double c_ratio, const GravityLoad& gl);

/// -g_f^T v. A sufficient condition when soc_constant() < 0.
ConstraintMargin nonconvex_fallback_margin(const Twist& v, const GravityLoad& gl);

/// Unequal-radius decomposition. first: v^T(A^-1 B A^-1 - A^-1)v;
/// second: ||A^-1/2 v|| - (2 / g_f^T B g_f) g_f^T A^-1 B v.
/// Both negative implies slip_free_twist_margin() < 0.
/// Throws DegenerateInput for v == 0 or g_f == 0.
std::pair<ConstraintMargin, ConstraintMargin> decomposed_margins(
    const Twist& v, const EllipsoidMatrix& A, const EllipsoidMatrix& B,
    const GravityLoad& gl);

}  // namespace dls
