#pragma once

// Subcommands of the dls tool. Each returns a process exit code and never
// lets an exception escape.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "dls/csv_io.hpp"
#include "dls/scenario_io.hpp"

namespace dls::cli {

enum ExitCode : int {
  kSuccess = 0,
  kParseError = 2,
  kNotConverged = 3,
  kOracleFailure = 4,
};

/// Command-line overrides, applied on top of the file's solver settings.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<double> margin_eps;
  std::optional<int> horizon;

  void apply(SolverConfig& cfg) const;
};

int cmd_check(const std::filesystem::path& scenario, const Twist& v, std::ostream& out);
int cmd_plan(const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
             const Overrides& ov, std::ostream& out);
int cmd_simulate(const std::filesystem::path& plan_csv_path,
                 const std::filesystem::path& scenario, const std::filesystem::path& out_dir,
                 std::ostream& out);
int cmd_sweep(const std::filesystem::path& suite, const std::filesystem::path& out_dir,
              const Overrides& ov, std::ostream& out);

/// One (scenario, incline, object) combination of a suite.
struct SuiteCell {
  std::string object;
  std::string path;
  double incline_deg = 0.0;
  Scenario scenario;
  SolverConfig solver;
};

/// Loads every scenario a suite names and crosses it with inclines and
/// objects. Throws io::ParseError.
std::vector<SuiteCell> expand_suite(const io::SuiteFile& suite,
                                    const std::filesystem::path& suite_dir,
                                    const Overrides& ov = {});

/// Plans, rolls out and scores one cell with both planners.
/// Returns {ours, baseline}; oracle failures are recorded in `status`.
std::pair<io::CellResult, io::CellResult> run_cell(const SuiteCell& cell, Plan* ours_out = nullptr,
                                                   Plan* baseline_out = nullptr);

}  // namespace dls::cli
