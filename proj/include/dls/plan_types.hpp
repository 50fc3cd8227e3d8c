#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "dls/contact_sim.hpp"
#include "dls/frames.hpp"
#include "dls/limit_surface.hpp"

namespace dls {

/// Even steps move the left palm (the right-relative pose changes), odd steps
/// move the right palm (the left-relative pose changes).
enum class Phase { LeftMoves, RightMoves };

inline Phase phase_at(std::size_t t) { return t % 2 == 0 ? Phase::LeftMoves : Phase::RightMoves; }
inline Palm moving_palm(Phase p) { return p == Phase::LeftMoves ? Palm::Left : Palm::Right; }
inline Palm static_palm(Phase p) { return other(moving_palm(p)); }
std::string_view to_string(Phase p);

struct Waypoint {
  PlanarPose goal_left;
  PlanarPose goal_right;
};

struct Scenario {
  PlanarPose start_left;
  PlanarPose start_right;
  PlanarPose goal_left;
  PlanarPose goal_right;
  GraspConfig grasp;
  /// Intermediate goals visited, in order, before the final goal.
  std::vector<Waypoint> waypoints;

  /// Intermediate waypoints followed by the final goal.
  std::vector<Waypoint> goals() const;
  SimState initial_state() const;
  /// Throws InfeasibleScenario if any start or goal leaves the palm disc.
  void validate() const;
};

struct Plan {
  std::vector<Twist> twists;
  std::vector<Phase> phases;
  std::vector<SimState> predicted_states;  // twists.size() + 1 entries
  /// Slippage-free margin of each step; empty for zero twists.
  std::vector<std::optional<ConstraintMargin>> margins;
  /// State index at which each goal of Scenario::goals() is due.
  std::vector<std::size_t> waypoint_steps;
  double objective_value = 0.0;
  bool converged = false;
  int iterations = 0;
};

}  // namespace dls
