#include "dls/contact_sim.hpp"

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include "dls/errors.hpp"
#include "dls/kernels.hpp"

namespace dls {
namespace {

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) {
    throw std::invalid_argument(std::string("GraspConfig: ") + name + " must be positive");
  }
}

// Dissipation potential of both patches plus gravity work, in twist space:
//   F(v) = |v|_{A^-1} + |v - v_p|_{B^-1} - g_f^T v
// Its stationary points are exactly the quasi-static balances with both
// contacts sliding; F is convex, so the minimiser is the unique answer.
struct DualSlideProblem {
  Eigen::Vector3d a_inv;
  Eigen::Vector3d b_inv;
  Eigen::Vector3d v_palm;
  Eigen::Vector3d g;

  double value(const Eigen::Vector3d& v) const {
    const Eigen::Vector3d y = v - v_palm;
    return std::sqrt(v.dot(a_inv.cwiseProduct(v))) + std::sqrt(y.dot(b_inv.cwiseProduct(y))) -
           g.dot(v);
  }

  // w_A + w_B + g_f, i.e. minus the gradient of F.
  Eigen::Vector3d residual(const Eigen::Vector3d& v) const {
    const Eigen::Vector3d y = v - v_palm;
    const Eigen::Vector3d ax = a_inv.cwiseProduct(v);
    const Eigen::Vector3d by = b_inv.cwiseProduct(y);
    return -ax / std::sqrt(v.dot(ax)) - by / std::sqrt(y.dot(by)) + g;
  }

  Eigen::Matrix3d hessian(const Eigen::Vector3d& v) const {
    auto norm_hessian = [](const Eigen::Vector3d& m_inv, const Eigen::Vector3d& x) {
      const Eigen::Vector3d mx = m_inv.cwiseProduct(x);
      const double s = std::sqrt(x.dot(mx));
      Eigen::Matrix3d h = Eigen::Matrix3d(m_inv.asDiagonal()) - mx * mx.transpose() / (s * s);
      return Eigen::Matrix3d(h / s);
    };
    return norm_hessian(a_inv, v) + norm_hessian(b_inv, v - v_palm);
  }
};

struct NewtonOutcome {
  Eigen::Vector3d v;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

bool smooth_point(const DualSlideProblem& p, const Eigen::Vector3d& v) {
  return v.squaredNorm() > 0.0 && (v - p.v_palm).squaredNorm() > 0.0 && v.allFinite();
}

NewtonOutcome damped_newton(const DualSlideProblem& p, Eigen::Vector3d v, double tol,
                            int max_iters) {
  NewtonOutcome out{v, std::numeric_limits<double>::infinity(), 0};
  double lambda = 1e-6;
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it + 1;
    if (!smooth_point(p, v)) break;
    const Eigen::Vector3d r = p.residual(v);
    const double rnorm = r.norm();
    if (rnorm < out.residual) {
      out.residual = rnorm;
      out.v = v;
    }
    if (rnorm < tol) break;

    const Eigen::Matrix3d H = p.hessian(v);
    const double f0 = p.value(v);
    bool accepted = false;
    for (int tries = 0; tries < 40 && !accepted; ++tries) {
      Eigen::Matrix3d damped = H;
      damped.diagonal() += lambda * H.diagonal().cwiseMax(1e-12);
      // gradient of F is -r
      const Eigen::Vector3d delta = damped.ldlt().solve(r);
      double t = 1.0;
      for (int ls = 0; ls < 30; ++ls) {
        const Eigen::Vector3d trial = v + t * delta;
        if (smooth_point(p, trial)) {
          const double f1 = p.value(trial);
          if (f1 <= f0 - 1e-4 * t * r.dot(delta) || p.residual(trial).norm() < rnorm) {
            v = trial;
            accepted = true;
            break;
          }
        }
        t *= 0.5;
      }
      if (accepted) {
        lambda = std::max(lambda * 0.1, 1e-12);
      } else {
        lambda *= 10.0;
      }
    }
    if (!accepted) break;
  }
  if (smooth_point(p, v)) {
    const double rnorm = p.residual(v).norm();
    if (rnorm < out.residual) {
      out.residual = rnorm;
      out.v = v;
    }
  }
  return out;
}

constexpr double kBalanceTol = 1e-11;
constexpr double kAcceptTol = 1e-8;

}  // namespace

void GraspConfig::validate() const {
  require_positive(mass, "mass");
  require_positive(gravity, "gravity");
  require_positive(squeeze_force, "squeeze_force");
  require_positive(mu_static_palm, "mu_static_palm");
  require_positive(mu_moving_palm, "mu_moving_palm");
  require_positive(radius_static_palm, "radius_static_palm");
  require_positive(radius_moving_palm, "radius_moving_palm");
  require_positive(palm_radius, "palm_radius");
  if (!(incline_phi >= 0.0 && incline_phi < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("GraspConfig: incline_phi must lie in [0, pi/2)");
  }
  if (!std::isfinite(downhill_alpha)) {
    throw std::invalid_argument("GraspConfig: downhill_alpha must be finite");
  }
  if (!(pressure_constant > 0.0 && pressure_constant <= 1.0)) {
    throw std::invalid_argument("GraspConfig: pressure_constant must lie in (0, 1]");
  }
}

NormalForces normal_forces(const GraspConfig& cfg) {
  const double g_n = cfg.mass * cfg.gravity * std::cos(cfg.incline_phi);
  return {cfg.squeeze_force, cfg.squeeze_force + g_n};
}

PhaseMechanics phase_mechanics(const GraspConfig& cfg, double heading) {
  const NormalForces n = normal_forces(cfg);
  const EllipsoidMatrix A = ls_matrix(
      {cfg.mu_static_palm, n.static_palm, cfg.radius_static_palm, cfg.pressure_constant});
  const EllipsoidMatrix B = ls_matrix(
      {cfg.mu_moving_palm, n.moving_palm, cfg.radius_moving_palm, cfg.pressure_constant});
  const GravityLoad gl =
      gravity_decompose(cfg.mass, cfg.gravity, cfg.incline_phi, cfg.downhill_alpha - heading);
  return {A, B, gl, n};
}

bool grasp_can_hold(const GraspConfig& cfg) {
  const NormalForces n = normal_forces(cfg);
  const double tangential = cfg.mass * cfg.gravity * std::sin(cfg.incline_phi);
  return tangential <= cfg.mu_static_palm * n.static_palm + cfg.mu_moving_palm * n.moving_palm;
}

std::string_view to_string(ContactMode mode) {
  switch (mode) {
    case ContactMode::StickMovingSlideStatic: return "stick_slide";
    case ContactMode::SlipAtMoving: return "slip_at_moving";
    case ContactMode::AllStick: return "all_stick";
    case ContactMode::Degenerate: return "degenerate";
  }
  return "unknown";
}

std::string_view to_string(Palm palm) { return palm == Palm::Left ? "left" : "right"; }

std::string_view to_string(SlipRegime regime) {
  switch (regime) {
    case SlipRegime::StickMoving: return "stick_moving";
    case SlipRegime::StickStatic: return "stick_static";
    case SlipRegime::DualSlide: return "dual_slide";
  }
  return "unknown";
}

ModeCheck check_mode(const Twist& v_cmd, const GraspConfig& cfg, double heading) {
  const PhaseMechanics m = phase_mechanics(cfg, heading);
  ModeCheck out;
  if (v_cmd.is_zero()) {
    out.mode = ContactMode::AllStick;
    out.w_moving = Wrench::from(-m.gravity.g_f.vec());
    out.margin = sticking_margin(m.B, out.w_moving);
    return out;
  }
  if (!grasp_can_hold(cfg)) {
    out.mode = ContactMode::Degenerate;
    out.margin = std::numeric_limits<double>::infinity();
    return out;
  }
  out.w_static = twist_to_wrench(m.A, v_cmd);
  out.w_moving = Wrench::from(-out.w_static.vec() - m.gravity.g_f.vec());
  out.margin = sticking_margin(m.B, out.w_moving);
  out.mode = out.margin < 0.0 ? ContactMode::StickMovingSlideStatic : ContactMode::SlipAtMoving;
  return out;
}

SlipSolution resolve_slip_twist(const Twist& v_palm, const GraspConfig& cfg, double heading) {
  if (v_palm.is_zero()) throw DegenerateInput("resolve_slip_twist: zero palm twist");
  if (!grasp_can_hold(cfg)) {
    throw SolverFailure("resolve_slip_twist: gravity exceeds both friction patches",
                        std::numeric_limits<double>::infinity());
  }
  const PhaseMechanics m = phase_mechanics(cfg, heading);
  const Eigen::Vector3d g = m.gravity.g_f.vec();

  SlipSolution sol;
  {
    const Wrench w_a = twist_to_wrench(m.A, v_palm);
    const Wrench w_b = Wrench::from(-w_a.vec() - g);
    if (sticking_margin(m.B, w_b) < 0.0) {
      sol.object_twist = v_palm;
      sol.regime = SlipRegime::StickMoving;
      sol.w_static = w_a;
      sol.w_moving = w_b;
      sol.residual_norm = quasi_static_residual(w_a, w_b, m.gravity).vec().norm();
      return sol;
    }
  }
  {
    const Wrench w_b = twist_to_wrench(m.B, Twist::from(-v_palm.vec()));
    const Wrench w_a = Wrench::from(-w_b.vec() - g);
    if (sticking_margin(m.A, w_a) <= 0.0) {
      sol.object_twist = Twist{};
      sol.regime = SlipRegime::StickStatic;
      sol.w_static = w_a;
      sol.w_moving = w_b;
      sol.residual_norm = quasi_static_residual(w_a, w_b, m.gravity).vec().norm();
      return sol;
    }
  }

  // Both contacts slide. Work with the palm twist normalised to unit A-norm;
  // wrenches are invariant to the twist scale.
  const double scale = std::sqrt(m.A.inverse_quad(v_palm.vec()));
  DualSlideProblem prob{m.A.inverse_diag(), m.B.inverse_diag(), v_palm.vec() / scale, g};
  const Eigen::Vector3d vp = prob.v_palm;
  const Eigen::Vector3d downhill = g.squaredNorm() > 0.0
                                       ? Eigen::Vector3d(g / std::sqrt(m.A.inverse_quad(g)))
                                       : Eigen::Vector3d(vp);
  const Eigen::Vector3d nudge(0.0, 0.0, 1e-3 * std::sqrt(m.A.diag().z()));
  const std::array<Eigen::Vector3d, 5> starts = {
      0.9 * vp + nudge, 0.1 * vp + nudge, 0.5 * vp - nudge, downhill + nudge,
      0.5 * (vp + downhill) + nudge};

  NewtonOutcome best;
  int total_iters = 0;
  for (const Eigen::Vector3d& start : starts) {
    NewtonOutcome trial = damped_newton(prob, start, kBalanceTol, 100);
    total_iters += trial.iterations;
    if (trial.residual < best.residual) best = trial;
    if (best.residual < kBalanceTol) break;
  }
  if (!(best.residual < kAcceptTol)) {
    const Eigen::Vector3d half_width = 2.0 * m.A.diag().cwiseSqrt();
    const Eigen::Vector3d centre = 0.5 * vp;
    const kernels::GridMin grid = kernels::refined_grid_argmin(
        [&prob](const Eigen::Vector3d& v) { return prob.value(v); }, centre - half_width,
        centre + half_width, 41, 2);
    NewtonOutcome polished = damped_newton(prob, grid.point + 1e-3 * nudge, kBalanceTol, 200);
    total_iters += polished.iterations;
    sol.used_grid_fallback = true;
    if (polished.residual < best.residual) best = polished;
  }
  if (!(best.residual < kAcceptTol)) {
    throw SolverFailure("resolve_slip_twist: dual-slide balance did not converge",
                        best.residual);
  }
  const Eigen::Vector3d v_obj = best.v * scale;
  sol.object_twist = Twist::from(v_obj);
  sol.regime = SlipRegime::DualSlide;
  sol.w_static = twist_to_wrench(m.A, sol.object_twist);
  sol.w_moving = twist_to_wrench(m.B, Twist::from(v_obj - v_palm.vec()));
  sol.residual_norm = quasi_static_residual(sol.w_static, sol.w_moving, m.gravity).vec().norm();
  sol.iterations = total_iters;
  return sol;
}

StepResult step(const SimState& s, const Twist& v_cmd, const GraspConfig& cfg) {
  StepResult out;
  out.state = s;
  const Palm moving = s.active_moving_palm;
  const Palm fixed = other(moving);
  const ModeCheck check = check_mode(v_cmd, cfg, s.heading);
  out.mode = check.mode;

  switch (check.mode) {
    case ContactMode::AllStick:
    case ContactMode::Degenerate:
      break;
    case ContactMode::StickMovingSlideStatic: {
      const PhaseMechanics m = phase_mechanics(cfg, s.heading);
      out.object_twist = v_cmd;
      out.state.pose_in(fixed) = integrate_pose(s.pose_in(fixed), v_cmd);
      out.state.heading = s.heading + v_cmd.omega_z;
      out.residual_norm =
          quasi_static_residual(check.w_static, check.w_moving, m.gravity).vec().norm();
      break;
    }
    case ContactMode::SlipAtMoving: {
      const SlipSolution sol = resolve_slip_twist(v_cmd, cfg, s.heading);
      out.object_twist = sol.object_twist;
      out.state.pose_in(fixed) = integrate_pose(s.pose_in(fixed), sol.object_twist);
      out.state.pose_in(moving) =
          integrate_pose(s.pose_in(moving), Twist::from(sol.object_twist.vec() - v_cmd.vec()));
      out.state.heading = s.heading + sol.object_twist.omega_z;
      out.residual_norm = sol.residual_norm;
      break;
    }
  }
  const double r2 = cfg.palm_radius * cfg.palm_radius;
  out.outside_workspace = out.state.pose_obj_in_left.position().squaredNorm() > r2 ||
                          out.state.pose_obj_in_right.position().squaredNorm() > r2;
  return out;
}

}  // namespace dls
