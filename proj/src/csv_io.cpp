#include "dls/csv_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <sstream>
#include <tuple>

namespace dls::io {
namespace {

constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

std::string pose_cols(const PlanarPose& p) {
  return format_double(p.x()) + "," + format_double(p.y()) + "," +
         format_double(p.theta() * kRadToDeg);
}

double to_double(const std::string& s, const std::string& field, int line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(field, line, "expected a number, got '" + s + "'");
  }
}

long to_long(const std::string& s, const std::string& field, int line) {
  try {
    std::size_t used = 0;
    const long v = std::stol(s, &used);
    if (used != s.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ParseError(field, line, "expected an integer, got '" + s + "'");
  }
}

const char* kPlanHeader =
    "t,phase,goal_index,v_x,v_y,omega_z_deg,margin,margin_kind,"
    "left_x,left_y,left_theta_deg,right_x,right_y,right_theta_deg,heading_deg";

struct Stats {
  int n = 0;
  double sum2 = 0.0;
  double sum = 0.0;
  void add(double x) {
    ++n;
    sum += x;
    sum2 += x * x;
  }
  double rmse() const { return n ? std::sqrt(sum2 / n) : 0.0; }
  double stdev() const {
    if (n == 0) return 0.0;
    const double mean = sum / n;
    return std::sqrt(std::max(sum2 / n - mean * mean, 0.0));
  }
};

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string plan_csv(const Plan& p) {
  std::ostringstream out;
  out << kPlanHeader << "\n";
  std::size_t goal = 0;
  for (std::size_t t = 0; t < p.twists.size(); ++t) {
    while (goal < p.waypoint_steps.size() && t >= p.waypoint_steps[goal]) ++goal;
    const Twist& v = p.twists[t];
    out << t << "," << to_string(p.phases[t]) << "," << goal << "," << format_double(v.v_x) << ","
        << format_double(v.v_y) << "," << format_double(v.omega_z * kRadToDeg) << ",";
    if (t < p.margins.size() && p.margins[t]) {
      out << format_double(p.margins[t]->value) << "," << to_string(p.margins[t]->kind);
    } else {
      out << ",";
    }
    if (t + 1 < p.predicted_states.size()) {
      const SimState& s = p.predicted_states[t + 1];
      out << "," << pose_cols(s.pose_obj_in_left) << "," << pose_cols(s.pose_obj_in_right) << ","
          << format_double(s.heading * kRadToDeg);
    } else {
      out << ",,,,,,,";
    }
    out << "\n";
  }
  return out.str();
}

Plan parse_plan_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ParseError("header", 1, "empty plan file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kPlanHeader) throw ParseError("header", 1, "unexpected plan CSV header");
  Plan p;
  int lineno = 1;
  long last_goal = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cols = split(line, ',');
    if (cols.size() != 15) throw ParseError("row", lineno, "expected 15 columns");
    const long t = to_long(cols[0], "t", lineno);
    if (t != static_cast<long>(p.twists.size())) throw ParseError("t", lineno, "steps out of order");
    if (cols[1] != to_string(phase_at(t))) {
      throw ParseError("phase", lineno, "phase breaks the left/right alternation");
    }
    const long goal = to_long(cols[2], "goal_index", lineno);
    if (goal < last_goal || goal > last_goal + 1) {
      throw ParseError("goal_index", lineno, "goal indices must be contiguous and ascending");
    }
    if (goal != last_goal) p.waypoint_steps.push_back(p.twists.size());
    last_goal = goal;
    Twist v{to_double(cols[3], "v_x", lineno), to_double(cols[4], "v_y", lineno),
            to_double(cols[5], "omega_z_deg", lineno) / kRadToDeg};
    p.twists.push_back(v);
    p.phases.push_back(phase_at(t));
  }
  if (!p.twists.empty()) p.waypoint_steps.push_back(p.twists.size());
  p.converged = true;
  return p;
}

std::string rollout_csv(const RolloutResult& r, const Plan& p, double palm_radius) {
  std::ostringstream out;
  out << "t,phase,moving_palm,mode,slip,residual_norm,workspace_exit,obj_v_x,obj_v_y,"
         "obj_omega_z_deg,left_x,left_y,left_theta_deg,right_x,right_y,right_theta_deg\n";
  for (std::size_t t = 0; t < r.modes.size(); ++t) {
    const SimState& s = r.states[t + 1];
    const Palm fixed = static_palm(p.phases[t]);
    const bool slip = r.modes[t] != ContactMode::StickMovingSlideStatic && !p.twists[t].is_zero();
    const bool exit = s.pose_in(fixed).position().norm() > palm_radius;
    const Twist& ov = r.object_twists[t];
    out << t << "," << to_string(p.phases[t]) << "," << to_string(moving_palm(p.phases[t])) << ","
        << to_string(r.modes[t]) << "," << (slip ? 1 : 0) << ","
        << format_double(r.residual_norms[t]) << "," << (exit ? 1 : 0) << ","
        << format_double(ov.v_x) << "," << format_double(ov.v_y) << ","
        << format_double(ov.omega_z * kRadToDeg) << "," << pose_cols(s.pose_obj_in_left) << ","
        << pose_cols(s.pose_obj_in_right) << "\n";
  }
  return out.str();
}

std::string plan_summary(const Plan& p) {
  std::ostringstream out;
  out << "objective=" << format_double(p.objective_value)
      << " converged=" << (p.converged ? "true" : "false") << " iterations=" << p.iterations
      << " steps=" << p.twists.size() << "\n";
  return out.str();
}

std::string rollout_summary(const RolloutResult& r) {
  std::ostringstream out;
  out << "slip_events=" << r.slip_events << " workspace_exits=" << r.workspace_exits
      << " final_error_left_m=" << format_double(r.final_error_left.trans)
      << " final_error_left_deg=" << format_double(r.final_error_left.rot * kRadToDeg)
      << " final_error_right_m=" << format_double(r.final_error_right.trans)
      << " final_error_right_deg=" << format_double(r.final_error_right.rot * kRadToDeg) << "\n";
  return out.str();
}

std::vector<TableRow> aggregate(const std::vector<CellResult>& cells) {
  std::vector<std::string> objects;
  std::map<std::tuple<std::string, std::string, std::string>, std::pair<Stats, Stats>> acc;
  for (const CellResult& c : cells) {
    if (std::find(objects.begin(), objects.end(), c.object) == objects.end()) {
      objects.push_back(c.object);
    }
    for (const auto& [side, errs] : {std::pair{"top", &c.errors_top}, {"bottom", &c.errors_bottom}}) {
      auto& [trans, rot] = acc[{c.object, c.planner, side}];
      for (const PoseError& e : *errs) {
        trans.add(1e3 * e.trans);
        rot.add(kRadToDeg * e.rot);
      }
    }
  }
  std::vector<TableRow> rows;
  for (const std::string& obj : objects) {
    for (const char* planner : {"baseline", "ours"}) {
      for (const char* side : {"top", "bottom"}) {
        const auto it = acc.find({obj, planner, side});
        if (it == acc.end() || it->second.first.n == 0) continue;
        const auto& [trans, rot] = it->second;
        rows.push_back({obj, planner, side, trans.n, trans.rmse(), trans.stdev(), rot.rmse(),
                        rot.stdev()});
      }
    }
  }
  return rows;
}

std::string cells_csv(const std::vector<CellResult>& cells) {
  std::ostringstream out;
  out << "object,path,incline_deg,planner,status,converged,slip_events,workspace_exits,seconds,"
         "rmse_top_mm,rmse_top_deg,rmse_bottom_mm,rmse_bottom_deg\n";
  for (const CellResult& c : cells) {
    Stats tt, tr, bt, br;
    for (const PoseError& e : c.errors_top) {
      tt.add(1e3 * e.trans);
      tr.add(kRadToDeg * e.rot);
    }
    for (const PoseError& e : c.errors_bottom) {
      bt.add(1e3 * e.trans);
      br.add(kRadToDeg * e.rot);
    }
    char secs[32];
    std::snprintf(secs, sizeof secs, "%.3f", c.seconds);
    out << c.object << "," << c.path << "," << format_double(c.incline_deg) << "," << c.planner
        << "," << c.status << "," << (c.converged ? 1 : 0) << "," << c.slip_events << ","
        << c.workspace_exits << "," << secs << "," << format_double(tt.rmse()) << ","
        << format_double(tr.rmse()) << "," << format_double(bt.rmse()) << ","
        << format_double(br.rmse()) << "\n";
  }
  return out.str();
}

std::string table_csv(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  out << "object,planner,side,samples,rmse_mm,stdev_mm,rmse_deg,stdev_deg\n";
  for (const TableRow& r : rows) {
    out << r.object << "," << r.planner << "," << r.side << "," << r.samples << ","
        << format_double(r.rmse_mm) << "," << format_double(r.stdev_mm) << ","
        << format_double(r.rmse_deg) << "," << format_double(r.stdev_deg) << "\n";
  }
  return out.str();
}

std::string table_text(const std::vector<TableRow>& rows) {
  std::ostringstream out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %-9s %-7s %10s %10s %10s %10s\n", "object", "planner",
                "side", "RMSE(mm)", "STDEV(mm)", "RMSE(deg)", "STDEV(deg)");
  out << buf;
  for (const TableRow& r : rows) {
    std::snprintf(buf, sizeof buf, "%-10s %-9s %-7s %10.3f %10.3f %10.3f %10.3f\n",
                  r.object.c_str(), r.planner.c_str(), r.side.c_str(), r.rmse_mm, r.stdev_mm,
                  r.rmse_deg, r.stdev_deg);
    out << buf;
  }
  out << "top = object pose relative to the left palm, bottom = relative to the right palm\n";
  return out.str();
}

}  // namespace dls::io
