#include "dls/commands.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "dls/errors.hpp"
#include "dls/rollout.hpp"
#include "dls/svg.hpp"

namespace dls::cli {
namespace {

namespace fs = std::filesystem;

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::string fmt_margin(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%+.6e", v);
  return buf;
}

void print_margin(std::ostream& out, const std::string& name, double value) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "  %-22s %s\n", name.c_str(), fmt_margin(value).c_str());
  out << buf;
}

// Runs `body`, mapping the error taxonomy onto exit codes.
template <class Fn>
int guarded(std::ostream& out, Fn&& body) {
  try {
    return body();
  } catch (const io::ParseError& e) {
    out << "parse error: " << e.what() << "\n";
    return kParseError;
  } catch (const InfeasibleScenario& e) {
    out << "infeasible scenario: " << e.what() << "\n";
    return kParseError;
  } catch (const SolverFailure& e) {
    out << "oracle failure: " << e.what() << " (best residual " << e.best_residual() << ")\n";
    return kOracleFailure;
  } catch (const std::invalid_argument& e) {
    out << "invalid input: " << e.what() << "\n";
    return kParseError;
  } catch (const std::exception& e) {
    out << "error: " << e.what() << "\n";
    return kOracleFailure;
  }
}

std::string merit_csv(const std::vector<MeritRecord>& log) {
  std::ostringstream out;
  out << "segment,attempt,outer,merit_before,merit_after,penalty,max_violation\n";
  for (const MeritRecord& r : log) {
    out << r.segment << "," << r.attempt << "," << r.outer << "," << io::format_double(r.merit_before)
        << "," << io::format_double(r.merit_after) << "," << io::format_double(r.penalty) << ","
        << io::format_double(r.max_violation) << "\n";
  }
  return out.str();
}

std::string cell_dir_name(const SuiteCell& c) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", c.incline_deg);
  return c.object + "_" + c.path + "_" + buf;
}

}  // namespace

void Overrides::apply(SolverConfig& cfg) const {
  if (seed) cfg.seed = *seed;
  if (margin_eps) cfg.slip_margin_eps = *margin_eps;
  if (horizon) cfg.horizon_n = *horizon;
}

int cmd_check(const fs::path& scenario_path, const Twist& v, std::ostream& out) {
  return guarded(out, [&] {
    const io::ScenarioFile file = io::load_scenario(scenario_path);
    const Scenario s = file.to_scenario();
    s.validate();
    const GraspConfig& g = s.grasp;
    out << "twist: v_x=" << v.v_x << " m, v_y=" << v.v_y
        << " m, omega_z=" << v.omega_z * kRadToDeg << " deg\n";
    const ModeCheck mc = check_mode(v, g);
    if (mc.mode == ContactMode::AllStick || mc.mode == ContactMode::Degenerate) {
      out << "verdict: " << to_string(mc.mode) << "\n";
      if (mc.mode == ContactMode::AllStick) out << "no margins for a zero twist\n";
      return static_cast<int>(kSuccess);
    }
    const PhaseMechanics m = phase_mechanics(g, 0.0);
    const double c = c_ratio(m);
    const Wrench w_a = twist_to_wrench(m.A, v);
    out << "normal forces: static " << m.normals.static_palm << " N, moving "
        << m.normals.moving_palm << " N\n";
    out << "margins (negative means slippage-free):\n";
    print_margin(out, "wrench_space", slip_free_wrench_margin(w_a, m.A, m.B, m.gravity).value);
    print_margin(out, "twist_full", slip_free_twist_margin(v, m.A, m.B, m.gravity).value);
    const EllipsoidMatrix a_hat = normalized_ellipsoid(m.A, m.normals.static_palm);
    const EllipsoidMatrix b_hat = normalized_ellipsoid(m.B, m.normals.moving_palm);
    print_margin(out, "leading_coeff", leading_coeff_margin(v, a_hat, b_hat).value);
    if (g.equal_contacts()) {
      const double k = soc_constant(m.A, c, m.gravity);
      out << "  cone constant          " << fmt_margin(k) << (k > 0.0 ? " (convex)" : " (nonconvex)")
          << "\n";
      print_margin(out, "soc_equal_radius", soc_equal_radius_margin(v, m.A, c, m.gravity).value);
      if (k <= 0.0) {
        print_margin(out, "nonconvex_fallback", nonconvex_fallback_margin(v, m.gravity).value);
      }
    }
    if (m.gravity.g_f.vec().squaredNorm() > 0.0) {
      const auto [quad, cone] = decomposed_margins(v, m.A, m.B, m.gravity);
      print_margin(out, "decomposed_quadratic", quad.value);
      print_margin(out, "decomposed_soc", cone.value);
    } else {
      out << "  decomposed margins     n/a (no tangential gravity)\n";
    }
    const ConstraintMargin enforced =
        step_margin(v, m, g.equal_contacts(), NonconvexPolicy::ExactMargin);
    out << "  enforced               " << fmt_margin(enforced.value) << " ("
        << to_string(enforced.kind) << ")\n";
    out << "verdict: " << to_string(mc.mode) << " (moving-palm sticking margin "
        << fmt_margin(mc.margin) << ")\n";
    return static_cast<int>(kSuccess);
  });
}

int cmd_plan(const fs::path& scenario_path, const fs::path& out_dir, const Overrides& ov,
             std::ostream& out) {
  return guarded(out, [&] {
    const io::ScenarioFile file = io::load_scenario(scenario_path);
    const Scenario s = file.to_scenario();
    SolverConfig cfg = file.solver_config();
    ov.apply(cfg);
    spdlog::info("planning {} with horizon {} per goal", scenario_path.string(), cfg.horizon_n);
    const PlanReport report = plan_with_report(s, cfg);
    const Plan base = baseline_plan(s, cfg);
    for (const MeritRecord& r : report.merit_log) {
      spdlog::debug("segment {} attempt {} outer {}: merit {:.6e} -> {:.6e}, violation {:.3e}",
                    r.segment, r.attempt, r.outer, r.merit_before, r.merit_after, r.max_violation);
    }
    io::write_atomic(out_dir / "plan.csv", io::plan_csv(report.plan));
    io::write_atomic(out_dir / "baseline_plan.csv", io::plan_csv(base));
    io::write_atomic(out_dir / "merit_log.csv", merit_csv(report.merit_log));
    const std::string summary = io::plan_summary(report.plan);
    io::write_atomic(out_dir / "summary.txt", summary);
    io::write_atomic(out_dir / "trajectory.svg", io::trajectory_svg(report.plan, &base, s));
    out << summary;
    return static_cast<int>(report.plan.converged ? kSuccess : kNotConverged);
  });
}

int cmd_simulate(const fs::path& plan_path, const fs::path& scenario_path, const fs::path& out_dir,
                 std::ostream& out) {
  return guarded(out, [&] {
    const Scenario s = io::load_scenario(scenario_path).to_scenario();
    s.validate();
    const Plan p = io::parse_plan_csv(io::read_text(plan_path));
    const std::vector<Waypoint> goals = s.goals();
    if (!p.twists.empty() && p.waypoint_steps.size() != goals.size()) {
      throw io::ParseError("goal_index", 0,
                           "plan covers " + std::to_string(p.waypoint_steps.size()) +
                               " goals but the scenario has " + std::to_string(goals.size()));
    }
    const RolloutResult r = rollout(p, s);
    io::write_atomic(out_dir / "rollout.csv", io::rollout_csv(r, p, s.grasp.palm_radius));
    const std::string summary = io::rollout_summary(r);
    io::write_atomic(out_dir / "rollout_summary.txt", summary);
    out << summary;
    return static_cast<int>(kSuccess);
  });
}

std::vector<SuiteCell> expand_suite(const io::SuiteFile& suite, const fs::path& suite_dir,
                                    const Overrides& ov) {
  std::vector<SuiteCell> cells;
  for (const std::string& rel : suite.scenarios) {
    const io::ScenarioFile file = io::load_scenario(suite_dir / rel);
    const auto label = file.labels.find("path");
    const std::string path_name =
        label != file.labels.end() ? label->second : fs::path(rel).stem().string();
    for (double incline : suite.inclines_deg) {
      for (const io::SuiteObject& obj : suite.objects) {
        io::ScenarioFile f = file;
        f.grasp.incline_deg = incline;
        f.grasp.radius_static_palm = obj.patch_radius;
        f.grasp.radius_moving_palm = obj.patch_radius;
        SuiteCell cell;
        cell.object = obj.label;
        cell.path = path_name;
        cell.incline_deg = incline;
        cell.scenario = f.to_scenario();
        cell.solver = f.solver_config();
        suite.solver.apply(cell.solver);
        ov.apply(cell.solver);
        cells.push_back(std::move(cell));
      }
    }
  }
  return cells;
}

std::pair<io::CellResult, io::CellResult> run_cell(const SuiteCell& cell, Plan* ours_out,
                                                   Plan* baseline_out) {
  auto score = [&cell](const Plan& p, const char* planner, double seconds) {
    io::CellResult r;
    r.object = cell.object;
    r.path = cell.path;
    r.incline_deg = cell.incline_deg;
    r.planner = planner;
    r.converged = p.converged;
    r.seconds = seconds;
    try {
      const RolloutResult ro = rollout(p, cell.scenario);
      r.slip_events = ro.slip_events;
      r.workspace_exits = ro.workspace_exits;
      r.errors_top = ro.waypoint_errors_left;
      r.errors_bottom = ro.waypoint_errors_right;
      r.status = p.converged ? "ok" : "not_converged";
    } catch (const SolverFailure& e) {
      r.status = "oracle_failure";
      spdlog::warn("{} {} {}: oracle failure: {}", cell.object, cell.path, cell.incline_deg,
                   e.what());
    }
    return r;
  };
  const auto t0 = std::chrono::steady_clock::now();
  const Plan ours = plan(cell.scenario, cell.solver);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const Plan base = baseline_plan(cell.scenario, cell.solver);
  auto result = std::make_pair(score(ours, "ours", secs), score(base, "baseline", 0.0));
  if (ours_out) *ours_out = ours;
  if (baseline_out) *baseline_out = base;
  return result;
}

int cmd_sweep(const fs::path& suite_path, const fs::path& out_dir, const Overrides& ov,
              std::ostream& out) {
  return guarded(out, [&] {
    const io::SuiteFile suite = io::load_suite(suite_path);
    const std::vector<SuiteCell> cells = expand_suite(suite, suite_path.parent_path(), ov);
    std::vector<io::CellResult> results(2 * cells.size());
    const int n = static_cast<int>(cells.size());
    spdlog::info("sweep: {} cells", n);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < n; ++i) {
      const SuiteCell& cell = cells[i];
      io::CellResult ours;
      io::CellResult base;
      try {
        Plan ours_plan;
        Plan base_plan;
        std::tie(ours, base) = run_cell(cell, &ours_plan, &base_plan);
        const fs::path dir = out_dir / "cells" / cell_dir_name(cell);
        io::write_atomic(dir / "plan.csv", io::plan_csv(ours_plan));
        io::write_atomic(dir / "baseline_plan.csv", io::plan_csv(base_plan));
      } catch (const std::exception& e) {
        for (io::CellResult* r : {&ours, &base}) {
          r->object = cell.object;
          r->path = cell.path;
          r->incline_deg = cell.incline_deg;
          r->status = "error";
        }
        ours.planner = "ours";
        base.planner = "baseline";
        spdlog::error("cell {}: {}", cell_dir_name(cell), e.what());
      }
      spdlog::info("cell {}: ours {} ({} slips), baseline {} slips", cell_dir_name(cell),
                   ours.status, ours.slip_events, base.slip_events);
      results[2 * i] = std::move(ours);
      results[2 * i + 1] = std::move(base);
    }
    const std::vector<io::TableRow> table = io::aggregate(results);
    io::write_atomic(out_dir / "results.csv", io::cells_csv(results));
    io::write_atomic(out_dir / "table.csv", io::table_csv(table));
    const std::string text = io::table_text(table);
    io::write_atomic(out_dir / "table.txt", text);
    out << text;
    int code = kSuccess;
    for (const io::CellResult& r : results) {
      if (r.status == "oracle_failure" || r.status == "error") code = kOracleFailure;
      if (r.status == "not_converged" && code == kSuccess) code = kNotConverged;
    }
    return code;
  });
}

}  // namespace dls::cli
