#pragma once

#include <vector>

#include "dls/contact_sim.hpp"
#include "dls/plan_types.hpp"

namespace dls {

struct PoseError {
  double trans = 0.0;  // m
  double rot = 0.0;    // rad, absolute wrapped difference
};

PoseError pose_error(const PlanarPose& actual, const PlanarPose& goal);

struct RolloutResult {
  std::vector<SimState> states;
  std::vector<ContactMode> modes;
  std::vector<Twist> object_twists;
  std::vector<double> residual_norms;
  int slip_events = 0;
  int workspace_exits = 0;
  PoseError final_error_left;
  PoseError final_error_right;
  std::vector<PoseError> waypoint_errors_left;
  std::vector<PoseError> waypoint_errors_right;
};

/// Plays a plan through the simulator. Phases select the moving palm.
/// Propagates SolverFailure from slip resolution.
RolloutResult rollout(const Plan& plan, const SimState& s0, const GraspConfig& cfg,
                      const std::vector<Waypoint>& goals);

RolloutResult rollout(const Plan& plan, const Scenario& scenario);

}  // namespace dls
