#include <spdlog/spdlog.h>

#include <cstdlib>
#include <iostream>
#include <numbers>

#include "CLI11.hpp"
#include "dls/commands.hpp"

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  if (const char* level = std::getenv("DLS_LOG")) spdlog::set_level(spdlog::level::from_str(level));

  CLI::App app{"Dual limit surface mechanics and alternating-palm regrasp planning"};
  app.require_subcommand(1);

  std::string scenario;
  std::string suite;
  std::string out_dir = "out";
  std::string plan_file;
  std::vector<double> twist;
  dls::cli::Overrides ov;
  std::uint64_t seed = 0;
  double margin_eps = 0.0;
  int horizon = 0;
  bool verbose = false;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--seed", seed, "Random seed for retry perturbations");
    cmd->add_option("--margin-eps", margin_eps, "Required slippage-free margin")
        ->check(CLI::PositiveNumber);
    cmd->add_option("--horizon", horizon, "Steps per goal (even)")->check(CLI::PositiveNumber);
    cmd->add_flag("--verbose,-v", verbose, "Debug logging");
  };

  CLI::App* check = app.add_subcommand("check", "Print every slippage-free margin for a twist");
  check->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  check->add_option("--twist", twist, "v_x v_y (m) omega_z (deg)")->expected(3)->required();
  add_common(check);

  CLI::App* plan = app.add_subcommand("plan", "Plan a scenario and write CSV, summary and SVG");
  plan->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  plan->add_option("--out", out_dir, "Output directory");
  add_common(plan);

  CLI::App* simulate = app.add_subcommand("simulate", "Roll a plan CSV out in the simulator");
  simulate->add_option("--plan", plan_file, "Plan CSV")->required()->check(CLI::ExistingFile);
  simulate->add_option("--scenario", scenario, "Scenario JSON")->required()->check(CLI::ExistingFile);
  simulate->add_option("--out", out_dir, "Output directory");
  add_common(simulate);

  CLI::App* sweep = app.add_subcommand("sweep", "Run a suite with both planners");
  sweep->add_option("--suite", suite, "Suite JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory");
  add_common(sweep);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dls::cli::kParseError;
  }

  if (verbose) spdlog::set_level(spdlog::level::debug);
  for (CLI::App* cmd : {check, plan, simulate, sweep}) {
    if (!cmd->parsed()) continue;
    if (cmd->count("--seed")) ov.seed = seed;
    if (cmd->count("--margin-eps")) ov.margin_eps = margin_eps;
    if (cmd->count("--horizon")) ov.horizon = horizon;
  }

  if (check->parsed()) {
    const dls::Twist v{twist[0], twist[1], twist[2] * std::numbers::pi / 180.0};
    return dls::cli::cmd_check(scenario, v, std::cout);
  }
  if (plan->parsed()) return dls::cli::cmd_plan(scenario, out_dir, ov, std::cout);
  if (simulate->parsed()) return dls::cli::cmd_simulate(plan_file, scenario, out_dir, std::cout);
  return dls::cli::cmd_sweep(suite, out_dir, ov, std::cout);
}
