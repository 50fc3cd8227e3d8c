#pragma once

// Alternating-palm trajectory optimizer. Each step moves one palm while the
// object sticks to it and slides on the other; the twist of every moving step
// is kept inside the slippage-free region of the dual limit surfaces.

#include <cstdint>
#include <optional>
#include <vector>

#include "dls/contact_sim.hpp"
#include "dls/plan_types.hpp"

namespace dls {

/// What to enforce when the equal-radius cone constant is negative.
enum class NonconvexPolicy {
  /// The exact (nonconvex) equal-radius margin.
  ExactMargin,
  /// The sufficient half-space g_f^T v > 0. Cannot move against gravity.
  HalfSpaceFallback,
};

struct SolverConfig {
  int horizon_n = 32;             // steps per waypoint, even
  double slip_margin_eps = 1e-4;  // margins must be <= -eps
  double max_step_trans = 0.005;  // m per step
  double max_step_rot = 0.05;     // rad per step
  int max_outer_iters = 60;
  int max_inner_iters = 400;
  double tol_stationarity = 1e-7;
  double tol_constraint = 1e-9;
  double penalty_init = 10.0;
  double penalty_growth = 5.0;
  double tol_terminal_trans = 1e-6;  // m
  double tol_terminal_rot = 1e-6;    // rad
  double rotation_weight = 0.02;     // m per rad in the tracking cost
  NonconvexPolicy nonconvex = NonconvexPolicy::ExactMargin;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument.
  void validate() const;
};

/// One augmented-Lagrangian outer iteration: the merit before and after the
/// inner solve at fixed multipliers and penalty.
struct MeritRecord {
  int segment = 0;
  int attempt = 0;
  int outer = 0;
  double merit_before = 0.0;
  double merit_after = 0.0;
  double penalty = 0.0;
  double max_violation = 0.0;
};

struct PlanReport {
  Plan plan;
  std::vector<MeritRecord> merit_log;
};

/// The slippage-free margin enforced for a step: the equal-radius cone when
/// both contacts share mu and r (or the half-space fallback, by policy, when
/// the cone constant is negative), otherwise max(quadratic / |v|_{A^-1},
/// decomposed cone). The quadratic part is divided by |v|_{A^-1} so every
/// returned kind is homogeneous of degree one in v.
ConstraintMargin step_margin(const Twist& v, const PhaseMechanics& m, bool equal_contacts,
                             NonconvexPolicy policy);

/// Plans every waypoint segment in turn. Never throws for non-convergence;
/// Plan::converged reports it. Throws InfeasibleScenario for goals outside
/// the workspace and std::invalid_argument for a bad config.
PlanReport plan_with_report(const Scenario& s, const SolverConfig& cfg);
Plan plan(const Scenario& s, const SolverConfig& cfg);

/// Straight-line interpolation in relative-pose space on the same schedule,
/// without any slippage-free constraint.
Plan baseline_plan(const Scenario& s, const SolverConfig& cfg);

struct PlanErrors {
  double rmse_trans_left_mm = 0.0;
  double rmse_rot_left_deg = 0.0;
  double rmse_trans_right_mm = 0.0;
  double rmse_rot_right_deg = 0.0;
};

/// Rolls the plan out in the simulator and returns RMSE over the goals.
PlanErrors evaluate_plan(const Plan& p, const Scenario& s);

struct RolloutResult;
/// RMSE over the per-goal errors of an existing rollout.
PlanErrors plan_errors(const RolloutResult& r);

namespace detail {

/// Augmented-Lagrangian merit of the first goal segment with every step
/// active, all multipliers set to `multiplier` and penalty `penalty`.
/// `z` holds twists divided by the step bounds, three per step. Exposed for
/// gradient checks.
double segment_merit(const Scenario& s, const SolverConfig& cfg, const std::vector<double>& z,
                     double multiplier, double penalty, std::vector<double>* grad);

}  // namespace detail

}  // namespace dls
