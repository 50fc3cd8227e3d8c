#include "dls/rollout.hpp"

#include <algorithm>
#include <cmath>

namespace dls {

std::string_view to_string(Phase p) {
  return p == Phase::LeftMoves ? "left_moves" : "right_moves";
}

PoseError pose_error(const PlanarPose& actual, const PlanarPose& goal) {
  return {(actual.position() - goal.position()).norm(),
          std::abs(wrap_angle(actual.theta() - goal.theta()))};
}

RolloutResult rollout(const Plan& plan, const SimState& s0, const GraspConfig& cfg,
                      const std::vector<Waypoint>& goals) {
  RolloutResult out;
  out.states.reserve(plan.twists.size() + 1);
  SimState state = s0;
  if (!plan.phases.empty()) state.active_moving_palm = moving_palm(plan.phases.front());
  out.states.push_back(state);
  for (std::size_t t = 0; t < plan.twists.size(); ++t) {
    state.active_moving_palm = moving_palm(plan.phases[t]);
    const StepResult r = step(state, plan.twists[t], cfg);
    state = r.state;
    out.states.push_back(state);
    out.modes.push_back(r.mode);
    out.object_twists.push_back(r.object_twist);
    out.residual_norms.push_back(r.residual_norm);
    if (r.mode != ContactMode::StickMovingSlideStatic && !plan.twists[t].is_zero()) {
      ++out.slip_events;
    }
    if (r.outside_workspace) ++out.workspace_exits;
  }
  if (!goals.empty()) {
    out.final_error_left = pose_error(state.pose_obj_in_left, goals.back().goal_left);
    out.final_error_right = pose_error(state.pose_obj_in_right, goals.back().goal_right);
  }
  const std::size_t last = out.states.size() - 1;
  for (std::size_t k = 0; k < goals.size(); ++k) {
    const std::size_t idx =
        k < plan.waypoint_steps.size() ? std::min(plan.waypoint_steps[k], last) : last;
    out.waypoint_errors_left.push_back(
        pose_error(out.states[idx].pose_obj_in_left, goals[k].goal_left));
    out.waypoint_errors_right.push_back(
        pose_error(out.states[idx].pose_obj_in_right, goals[k].goal_right));
  }
  return out;
}

RolloutResult rollout(const Plan& plan, const Scenario& scenario) {
  return rollout(plan, scenario.initial_state(), scenario.grasp, scenario.goals());
}

}  // namespace dls
