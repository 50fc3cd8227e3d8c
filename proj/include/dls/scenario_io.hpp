#pragma once

// JSON scenario and suite files. Files use meters, kilograms, newtons and
// degrees; everything past the parse boundary is in radians.

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dls/plan_types.hpp"
#include "dls/planner.hpp"

namespace dls::io {

/// Malformed or schema-violating input. `field` is a JSON path such as
/// "scenario.grasp.mass"; `line` is 1-based, 0 when unknown.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& field, int line, const std::string& message);
  const std::string& field() const { return field_; }
  int line() const { return line_; }

 private:
  std::string field_;
  int line_;
};

/// Solver settings a file may override. Absent fields keep SolverConfig
/// defaults. Angles here are in degrees.
struct SolverOverrides {
  std::optional<int> horizon_n;
  std::optional<double> slip_margin_eps;
  std::optional<double> max_step_trans;
  std::optional<double> max_step_rot_deg;
  std::optional<int> max_outer_iters;
  std::optional<int> max_inner_iters;
  std::optional<double> tol_stationarity;
  std::optional<double> tol_constraint;
  std::optional<double> penalty_init;
  std::optional<double> penalty_growth;
  std::optional<double> tol_terminal_trans;
  std::optional<double> tol_terminal_rot_deg;
  std::optional<double> rotation_weight;
  std::optional<std::string> nonconvex;  // "exact" or "half_space"
  std::optional<std::uint64_t> seed;

  void apply(SolverConfig& cfg) const;
  bool operator==(const SolverOverrides&) const = default;
};

struct PoseDeg {
  double x = 0.0;
  double y = 0.0;
  double theta_deg = 0.0;
  PlanarPose to_pose() const;
  bool operator==(const PoseDeg&) const = default;
};

struct WaypointDeg {
  PoseDeg left;
  PoseDeg right;
  bool operator==(const WaypointDeg&) const = default;
};

struct GraspDeg {
  double mass = 0.5;
  double gravity = 9.81;
  double incline_deg = 0.0;
  double downhill_alpha_deg = 0.0;
  double squeeze_force = 10.0;
  double mu_static_palm = 0.6;
  double mu_moving_palm = 0.6;
  double radius_static_palm = 0.04;
  double radius_moving_palm = 0.04;
  double palm_radius = 0.06;
  double pressure_constant = 0.6;
  GraspConfig to_config() const;
  bool operator==(const GraspDeg&) const = default;
};

/// A scenario as written on disk. Keeping the file's degree values makes
/// parse -> serialize byte-identical.
struct ScenarioFile {
  int schema_version = 1;
  std::map<std::string, std::string> labels;
  PoseDeg start_left;
  PoseDeg start_right;
  std::vector<WaypointDeg> waypoints;
  PoseDeg goal_left;
  PoseDeg goal_right;
  GraspDeg grasp;
  SolverOverrides solver;

  Scenario to_scenario() const;
  SolverConfig solver_config() const;
  bool operator==(const ScenarioFile&) const = default;
};

ScenarioFile parse_scenario(const std::string& text);
ScenarioFile load_scenario(const std::filesystem::path& path);
/// Canonical form: fixed field order, two-space indent, trailing newline.
std::string serialize_scenario(const ScenarioFile& f);

struct SuiteObject {
  std::string label;
  double patch_radius = 0.0;  // m, both contacts
};

struct SuiteFile {
  int schema_version = 1;
  std::vector<std::string> scenarios;  // paths relative to the suite file
  std::vector<double> inclines_deg;
  std::vector<SuiteObject> objects;
  SolverOverrides solver;
};

SuiteFile parse_suite(const std::string& text);
SuiteFile load_suite(const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
/// Writes through a temporary file in the same directory, then renames.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace dls::io
