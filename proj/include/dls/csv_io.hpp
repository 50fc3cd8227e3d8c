#pragma once

// Plain CSV tables. Numbers are printed with 17 significant digits so a CSV
// written twice from the same data is byte-identical; angles are in degrees.

#include <string>
#include <vector>

#include "dls/plan_types.hpp"
#include "dls/rollout.hpp"
#include "dls/scenario_io.hpp"

namespace dls::io {

std::string format_double(double v);

/// One row per step: the twist, its margin and the predicted state after it.
std::string plan_csv(const Plan& p);
/// Reads the twists, phases and goal boundaries back from plan_csv() output.
/// Throws ParseError on a malformed table or phases off the alternation.
Plan parse_plan_csv(const std::string& text);

std::string rollout_csv(const RolloutResult& r, const Plan& p, double palm_radius);

std::string plan_summary(const Plan& p);
std::string rollout_summary(const RolloutResult& r);

/// One sweep cell, for one planner.
struct CellResult {
  std::string object;
  std::string path;
  double incline_deg = 0.0;
  std::string planner;  // "ours" or "baseline"
  std::string status;   // "ok", "not_converged" or "oracle_failure"
  bool converged = false;
  int slip_events = 0;
  int workspace_exits = 0;
  double seconds = 0.0;
  std::vector<PoseError> errors_top;     // left palm, one per goal
  std::vector<PoseError> errors_bottom;  // right palm
};

struct TableRow {
  std::string object;
  std::string planner;
  std::string side;  // "top" (left palm) or "bottom" (right palm)
  int samples = 0;
  double rmse_mm = 0.0;
  double stdev_mm = 0.0;
  double rmse_deg = 0.0;
  double stdev_deg = 0.0;
};

/// Aggregates per-goal errors over every path and incline of each object.
/// Rows are ordered by object (first appearance), then baseline before
/// ours, then top before bottom. Cells without errors are skipped.
std::vector<TableRow> aggregate(const std::vector<CellResult>& cells);

std::string cells_csv(const std::vector<CellResult>& cells);
std::string table_csv(const std::vector<TableRow>& rows);
std::string table_text(const std::vector<TableRow>& rows);

}  // namespace dls::io
