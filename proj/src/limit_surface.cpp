#include "dls/limit_surface.hpp"

#include <cmath>
#include <stdexcept>

#include "dls/errors.hpp"

namespace dls {
namespace {

void require_nonzero(const Twist& v, const char* where) {
  if (v.is_zero()) {
    throw DegenerateInput(std::string(where) + ": undefined for a zero twist");
  }
}

}  // namespace

EllipsoidMatrix::EllipsoidMatrix(double force_entry, double moment_entry)
    : diag_(force_entry, force_entry, moment_entry) {
  if (!(force_entry > 0.0) || !(moment_entry > 0.0) || !std::isfinite(force_entry) ||
      !std::isfinite(moment_entry)) {
    throw std::invalid_argument("EllipsoidMatrix: entries must be positive and finite");
  }
}

EllipsoidMatrix EllipsoidMatrix::scaled(double s) const {
  return {s * diag_.x(), s * diag_.z()};
}

double EllipsoidMatrix::quad(const Eigen::Vector3d& x) const {
  return x.dot(diag_.cwiseProduct(x));
}

double EllipsoidMatrix::inverse_quad(const Eigen::Vector3d& x) const {
  return x.dot(x.cwiseQuotient(diag_));
}

std::string_view to_string(MarginKind kind) {
  switch (kind) {
    case MarginKind::WrenchSpace: return "wrench_space";
    case MarginKind::TwistFull: return "twist_full";
    case MarginKind::LeadingCoeff: return "leading_coeff";
    case MarginKind::SocEqualRadius: return "soc_equal_radius";
    case MarginKind::NonconvexFallback: return "nonconvex_fallback";
    case MarginKind::DecomposedQuadratic: return "decomposed_quadratic";
    case MarginKind::DecomposedSoc: return "decomposed_soc";
  }
  return "unknown";
}

EllipsoidMatrix ls_matrix(const LimitSurfaceParams& p) {
  if (!(p.mu > 0.0)) throw std::invalid_argument("ls_matrix: mu must be positive");
  if (!(p.normal_force > 0.0)) throw std::invalid_argument("ls_matrix: normal force must be positive");
  if (!(p.patch_radius > 0.0)) throw std::invalid_argument("ls_matrix: patch radius must be positive");
  if (!(p.pressure_constant > 0.0 && p.pressure_constant <= 1.0)) {
    throw std::invalid_argument("ls_matrix: pressure constant must lie in (0, 1]");
  }
  const double force_cap = p.mu * p.normal_force;
  const double moment_cap = p.mu * p.pressure_constant * p.patch_radius * p.normal_force;
  return {1.0 / (force_cap * force_cap), 1.0 / (moment_cap * moment_cap)};
}

Wrench twist_to_wrench(const EllipsoidMatrix& A, const Twist& v) {
  require_nonzero(v, "twist_to_wrench");
  const Eigen::Vector3d a_inv_v = v.vec().cwiseQuotient(A.diag());
  const double norm = std::sqrt(v.vec().dot(a_inv_v));
  return Wrench::from(-a_inv_v / norm);
}

double boundary_residual(const EllipsoidMatrix& A, const Wrench& w) {
  return A.quad(w.vec()) - 1.0;
}

double sticking_margin(const EllipsoidMatrix& B, const Wrench& w) {
  return B.quad(w.vec()) - 1.0;
}

Wrench quasi_static_residual(const Wrench& w_a, const Wrench& w_b,
                             const GravityLoad& gl) {
  return Wrench::from(w_a.vec() + w_b.vec() + gl.g_f.vec());
}

ConstraintMargin slip_free_wrench_margin(const Wrench& w_a, const EllipsoidMatrix& A,
                                         const EllipsoidMatrix& B,
                                         const GravityLoad& gl) {
  const Eigen::Vector3d w = w_a.vec();
  const Eigen::Vector3d g = gl.g_f.vec();
  const Eigen::Vector3d b_minus_a = B.diag() - A.diag();
  const double value = w.dot(b_minus_a.cwiseProduct(w)) +
                       2.0 * g.dot(B.diag().cwiseProduct(w)) + B.quad(g);
  return {value, MarginKind::WrenchSpace};
}

ConstraintMargin slip_free_twist_margin(const Twist& v, const EllipsoidMatrix& A,
                                        const EllipsoidMatrix& B,
                                        const GravityLoad& gl) {
  require_nonzero(v, "slip_free_twist_margin");
  const Eigen::Vector3d x = v.vec();
  const Eigen::Vector3d g = gl.g_f.vec();
  const Eigen::Vector3d a_inv = A.inverse_diag();
  const Eigen::Vector3d a_inv_x = a_inv.cwiseProduct(x);
  const double s2 = x.dot(a_inv_x);
  // A^-1 B A^-1 - A^-1, diagonal
  const Eigen::Vector3d quad_diag =
      a_inv.cwiseProduct(B.diag()).cwiseProduct(a_inv) - a_inv;
  const double value = x.dot(quad_diag.cwiseProduct(x)) -
                       2.0 * std::sqrt(s2) * a_inv_x.dot(B.diag().cwiseProduct(g)) +
                       B.quad(g) * s2;
  return {value, MarginKind::TwistFull};
}

EllipsoidMatrix normalized_ellipsoid(const EllipsoidMatrix& A, double normal_force) {
  if (!(normal_force > 0.0)) {
    throw std::invalid_argument("normalized_ellipsoid: normal force must be positive");
  }
  return A.scaled(normal_force * normal_force);
}

ConstraintMargin leading_coeff_margin(const Twist& v, const EllipsoidMatrix& A_hat,
                                      const EllipsoidMatrix& B_hat,
                                      LeadingCoeffForm form) {
  require_nonzero(v, "leading_coeff_margin");
  const Eigen::Vector3d x = v.vec();
  const Eigen::Vector3d a_inv = A_hat.inverse_diag();
  const Eigen::Vector3d middle =
      form == LeadingCoeffForm::Expanded ? B_hat.diag() : B_hat.inverse_diag();
  const Eigen::Vector3d quad_diag = a_inv.cwiseProduct(middle).cwiseProduct(a_inv) - a_inv;
  return {x.dot(quad_diag.cwiseProduct(x)), MarginKind::LeadingCoeff};
}

double soc_constant(const EllipsoidMatrix& A, double c_ratio, const GravityLoad& gl) {
  return c_ratio - 1.0 + c_ratio * A.quad(gl.g_f.vec());
}

ConstraintMargin soc_equal_radius_margin(const Twist& v, const EllipsoidMatrix& A,
                                         double c_ratio, const GravityLoad& gl) {
  require_nonzero(v, "soc_equal_radius_margin");
  const double norm = std::sqrt(A.inverse_quad(v.vec()));
  const double value =
      soc_constant(A, c_ratio, gl) * norm - 2.0 * c_ratio * gl.g_f.vec().dot(v.vec());
  return {value, MarginKind::SocEqualRadius};
}

ConstraintMargin nonconvex_fallback_margin(const Twist& v, const GravityLoad& gl) {
  return {-gl.g_f.vec().dot(v.vec()), MarginKind::NonconvexFallback};
}

std::pair<ConstraintMargin, ConstraintMargin> decomposed_margins(
    const Twist& v, const EllipsoidMatrix& A, const EllipsoidMatrix& B,
    const GravityLoad& gl) {
  require_nonzero(v, "decomposed_margins");
  const Eigen::Vector3d g = gl.g_f.vec();
  const double g_b_g = B.quad(g);
  if (!(g_b_g > 0.0)) {
    throw DegenerateInput("decomposed_margins: tangential gravity is zero");
  }
  const Eigen::Vector3d x = v.vec();
  const Eigen::Vector3d a_inv = A.inverse_diag();
  const Eigen::Vector3d quad_diag =
      a_inv.cwiseProduct(B.diag()).cwiseProduct(a_inv) - a_inv;
  const double first = x.dot(quad_diag.cwiseProduct(x));
  const double norm = std::sqrt(x.dot(a_inv.cwiseProduct(x)));
  const double second =
      norm - (2.0 / g_b_g) * g.dot(a_inv.cwiseProduct(B.diag()).cwiseProduct(x));
  return {{first, MarginKind::DecomposedQuadratic}, {second, MarginKind::DecomposedSoc}};
}

}  // namespace dls
