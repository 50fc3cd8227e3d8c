#pragma once

// Quasi-static stick/slip simulator for an object squeezed between two palms.
// Given the commanded motion of the moving palm, it decides which contact
// slides and integrates the object pose relative to each palm.

#include <string_view>
#include <vector>

#include "dls/frames.hpp"
#include "dls/limit_surface.hpp"

namespace dls {

/// Physical grasp description. Contact fields are role based: "static" is
/// whichever palm holds still during a step, "moving" the one that moves.
struct GraspConfig {
  double mass = 0.5;                 // kg
  double gravity = 9.81;             // m/s^2
  double incline_phi = 0.0;          // rad, palm plane from horizontal
  double downhill_alpha = 0.0;       // rad, downhill direction at heading 0
  double squeeze_force = 10.0;       // N
  double mu_static_palm = 0.6;
  double mu_moving_palm = 0.6;
  double radius_static_palm = 0.04;  // m, patch radius
  double radius_moving_palm = 0.04;  // m
  double palm_radius = 0.06;         // m, workspace disc
  double pressure_constant = 0.6;

  /// Throws std::invalid_argument on a non-physical configuration.
  void validate() const;
  bool equal_contacts() const {
    return mu_static_palm == mu_moving_palm && radius_static_palm == radius_moving_palm;
  }
};

struct NormalForces {
  double static_palm = 0.0;
  double moving_palm = 0.0;
};

/// The moving palm is the one under the object and also carries m g cos(phi).
NormalForces normal_forces(const GraspConfig& cfg);

/// Both limit surfaces and the gravity load for one step. A belongs to the
/// static palm, B to the moving palm.
struct PhaseMechanics {
  EllipsoidMatrix A;
  EllipsoidMatrix B;
  GravityLoad gravity;
  NormalForces normals;
};

/// `heading` is the object's accumulated in-plane rotation; gravity is fixed
/// in the world, so its direction in the object frame is alpha - heading.
PhaseMechanics phase_mechanics(const GraspConfig& cfg, double heading);

/// c_ratio = N_static^2 / N_moving^2
inline double c_ratio(const PhaseMechanics& m) {
  return (m.normals.static_palm * m.normals.static_palm) /
         (m.normals.moving_palm * m.normals.moving_palm);
}

/// True unless gravity exceeds what both patches can carry together
/// (|g_f| > mu_s N_s + mu_m N_m).
bool grasp_can_hold(const GraspConfig& cfg);

enum class ContactMode { StickMovingSlideStatic, SlipAtMoving, AllStick, Degenerate };
enum class Palm { Left, Right };

std::string_view to_string(ContactMode mode);
std::string_view to_string(Palm palm);
inline Palm other(Palm p) { return p == Palm::Left ? Palm::Right : Palm::Left; }

struct SimState {
  PlanarPose pose_obj_in_left;
  PlanarPose pose_obj_in_right;
  Palm active_moving_palm = Palm::Left;
  /// Accumulated object rotation in the world since the start of the rollout.
  double heading = 0.0;

  const PlanarPose& pose_in(Palm p) const {
    return p == Palm::Left ? pose_obj_in_left : pose_obj_in_right;
  }
  PlanarPose& pose_in(Palm p) { return p == Palm::Left ? pose_obj_in_left : pose_obj_in_right; }
};

struct ModeCheck {
  ContactMode mode = ContactMode::AllStick;
  Wrench w_static;  // friction on the object from the static palm
  Wrench w_moving;  // friction on the object from the moving palm
  double margin = 0.0;  // sticking margin of w_moving on B
};

/// Hypothesises "stick to the moving palm, slide on the static one" for the
/// commanded twist and keeps it iff the moving-palm wrench stays inside B.
ModeCheck check_mode(const Twist& v_cmd, const GraspConfig& cfg, double heading = 0.0);

enum class SlipRegime { StickMoving, StickStatic, DualSlide };
std::string_view to_string(SlipRegime regime);

struct SlipSolution {
  Twist object_twist;  // object twist relative to the static palm
  SlipRegime regime = SlipRegime::DualSlide;
  Wrench w_static;
  Wrench w_moving;
  double residual_norm = 0.0;  // |w_static + w_moving + g_f|
  int iterations = 0;
  bool used_grid_fallback = false;
};

/// Object twist when the moving palm slips. Tries, in order: sticking to the
/// moving palm, sticking to the static palm, and sliding on both (damped
/// Newton on the balance residual, multi-start, with a refined grid search as
/// a last resort). Throws SolverFailure carrying the best residual otherwise.
SlipSolution resolve_slip_twist(const Twist& v_palm, const GraspConfig& cfg,
                                double heading = 0.0);

struct StepResult {
  SimState state;
  ContactMode mode = ContactMode::AllStick;
  Twist object_twist;       // relative to the static palm
  double residual_norm = 0.0;
  bool outside_workspace = false;
};

/// Advances one step with the palm `s.active_moving_palm` moving by `v_cmd`.
StepResult step(const SimState& s, const Twist& v_cmd, const GraspConfig& cfg);

}  // namespace dls
