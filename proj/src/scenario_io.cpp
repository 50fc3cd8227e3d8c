#include "dls/scenario_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>
#include <system_error>

#include "json.hpp"

namespace dls::io {
namespace {

using nlohmann::json;
using nlohmann::ordered_json;

constexpr double kDegToRad = std::numbers::pi / 180.0;

int line_of_offset(const std::string& text, std::size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + offset, '\n'));
}

// Best-effort line of the last named component of a dotted field path.
int line_of_field(const std::string& text, const std::string& field) {
  std::string leaf = field;
  while (!leaf.empty()) {
    const auto bracket = leaf.rfind('[');
    const auto dot = leaf.rfind('.');
    if (bracket != std::string::npos && (dot == std::string::npos || bracket > dot)) {
      leaf = leaf.substr(0, bracket);
      continue;
    }
    const std::string key = dot == std::string::npos ? leaf : leaf.substr(dot + 1);
    const auto pos = text.find('"' + key + '"');
    if (pos != std::string::npos) return line_of_offset(text, pos);
    if (dot == std::string::npos) break;
    leaf = leaf.substr(0, dot);
  }
  return 0;
}

// Strict object reader: every key must be consumed, and types are checked.
class Reader {
 public:
  Reader(const json& j, std::string path, const std::string& text)
      : j_(j), path_(std::move(path)), text_(text) {
    if (!j_.is_object()) fail(path_, "expected an object");
  }

  [[noreturn]] void fail(const std::string& field, const std::string& msg) const {
    throw ParseError(field, line_of_field(text_, field), msg);
  }

  std::string child(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  const json& raw(const std::string& key) {
    if (!j_.contains(key)) fail(child(key), "missing required field");
    seen_.insert(key);
    return j_.at(key);
  }

  double number(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number()) fail(child(key), "expected a number");
    const double d = v.get<double>();
    if (!std::isfinite(d)) fail(child(key), "expected a finite number");
    return d;
  }

  long long integer(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_number_integer()) fail(child(key), "expected an integer");
    return v.get<long long>();
  }

  std::string string(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_string()) fail(child(key), "expected a string");
    return v.get<std::string>();
  }

  Reader object(const std::string& key) { return Reader(raw(key), child(key), text_); }

  const json& array(const std::string& key) {
    const json& v = raw(key);
    if (!v.is_array()) fail(child(key), "expected an array");
    return v;
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(child(key), "unknown field");
    }
  }

  const std::string& text() const { return text_; }
  const std::string& path() const { return path_; }

 private:
  const json& j_;
  std::string path_;
  const std::string& text_;
  std::set<std::string> seen_;
};

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", line_of_offset(text, e.byte > 0 ? e.byte - 1 : 0),
                     std::string("invalid JSON: ") + e.what());
  }
}

void check_schema(Reader& r) {
  const long long v = r.integer("schema_version");
  if (v != 1) r.fail(r.child("schema_version"), "unsupported schema_version, expected 1");
}

PoseDeg read_pose(Reader r) {
  PoseDeg p;
  p.x = r.number("x");
  p.y = r.number("y");
  p.theta_deg = r.number("theta_deg");
  r.finish();
  return p;
}

GraspDeg read_grasp(Reader r) {
  GraspDeg g;
  g.mass = r.number("mass");
  g.gravity = r.number("gravity");
  g.incline_deg = r.number("incline_deg");
  g.downhill_alpha_deg = r.number("downhill_alpha_deg");
  g.squeeze_force = r.number("squeeze_force");
  g.mu_static_palm = r.number("mu_static_palm");
  g.mu_moving_palm = r.number("mu_moving_palm");
  g.radius_static_palm = r.number("radius_static_palm");
  g.radius_moving_palm = r.number("radius_moving_palm");
  g.palm_radius = r.number("palm_radius");
  g.pressure_constant = r.number("pressure_constant");
  r.finish();
  try {
    g.to_config().validate();
  } catch (const std::invalid_argument& e) {
    r.fail(r.path(), e.what());
  }
  return g;
}

SolverOverrides read_solver(Reader r) {
  SolverOverrides s;
  auto opt_num = [&r](const char* key, std::optional<double>& out) {
    if (r.has(key)) out = r.number(key);
  };
  auto opt_int = [&r](const char* key, std::optional<int>& out) {
    if (r.has(key)) {
      const long long v = r.integer(key);
      if (v < 0 || v > 1000000) r.fail(r.child(key), "integer out of range");
      out = static_cast<int>(v);
    }
  };
  opt_int("horizon_n", s.horizon_n);
  opt_num("slip_margin_eps", s.slip_margin_eps);
  opt_num("max_step_trans", s.max_step_trans);
  opt_num("max_step_rot_deg", s.max_step_rot_deg);
  opt_int("max_outer_iters", s.max_outer_iters);
  opt_int("max_inner_iters", s.max_inner_iters);
  opt_num("tol_stationarity", s.tol_stationarity);
  opt_num("tol_constraint", s.tol_constraint);
  opt_num("penalty_init", s.penalty_init);
  opt_num("penalty_growth", s.penalty_growth);
  opt_num("tol_terminal_trans", s.tol_terminal_trans);
  opt_num("tol_terminal_rot_deg", s.tol_terminal_rot_deg);
  opt_num("rotation_weight", s.rotation_weight);
  if (r.has("nonconvex")) {
    s.nonconvex = r.string("nonconvex");
    if (*s.nonconvex != "exact" && *s.nonconvex != "half_space") {
      r.fail(r.child("nonconvex"), "expected \"exact\" or \"half_space\"");
    }
  }
  if (r.has("seed")) {
    const long long v = r.integer("seed");
    if (v < 0) r.fail(r.child("seed"), "seed must be non-negative");
    s.seed = static_cast<std::uint64_t>(v);
  }
  r.finish();
  SolverConfig cfg;
  s.apply(cfg);
  try {
    cfg.validate();
  } catch (const std::invalid_argument& e) {
    r.fail(r.path(), e.what());
  }
  return s;
}

ordered_json pose_json(const PoseDeg& p) {
  ordered_json j;
  j["x"] = p.x;
  j["y"] = p.y;
  j["theta_deg"] = p.theta_deg;
  return j;
}

ordered_json solver_json(const SolverOverrides& s) {
  ordered_json j = ordered_json::object();
  if (s.horizon_n) j["horizon_n"] = *s.horizon_n;
  if (s.slip_margin_eps) j["slip_margin_eps"] = *s.slip_margin_eps;
  if (s.max_step_trans) j["max_step_trans"] = *s.max_step_trans;
  if (s.max_step_rot_deg) j["max_step_rot_deg"] = *s.max_step_rot_deg;
  if (s.max_outer_iters) j["max_outer_iters"] = *s.max_outer_iters;
  if (s.max_inner_iters) j["max_inner_iters"] = *s.max_inner_iters;
  if (s.tol_stationarity) j["tol_stationarity"] = *s.tol_stationarity;
  if (s.tol_constraint) j["tol_constraint"] = *s.tol_constraint;
  if (s.penalty_init) j["penalty_init"] = *s.penalty_init;
  if (s.penalty_growth) j["penalty_growth"] = *s.penalty_growth;
  if (s.tol_terminal_trans) j["tol_terminal_trans"] = *s.tol_terminal_trans;
  if (s.tol_terminal_rot_deg) j["tol_terminal_rot_deg"] = *s.tol_terminal_rot_deg;
  if (s.rotation_weight) j["rotation_weight"] = *s.rotation_weight;
  if (s.nonconvex) j["nonconvex"] = *s.nonconvex;
  if (s.seed) j["seed"] = *s.seed;
  return j;
}

}  // namespace

ParseError::ParseError(const std::string& field, int line, const std::string& message)
    : std::runtime_error([&] {
        std::string where = field.empty() ? std::string("<document>") : field;
        if (line > 0) where += " (line " + std::to_string(line) + ")";
        return where + ": " + message;
      }()),
      field_(field),
      line_(line) {}

void SolverOverrides::apply(SolverConfig& cfg) const {
  if (horizon_n) cfg.horizon_n = *horizon_n;
  if (slip_margin_eps) cfg.slip_margin_eps = *slip_margin_eps;
  if (max_step_trans) cfg.max_step_trans = *max_step_trans;
  if (max_step_rot_deg) cfg.max_step_rot = *max_step_rot_deg * kDegToRad;
  if (max_outer_iters) cfg.max_outer_iters = *max_outer_iters;
  if (max_inner_iters) cfg.max_inner_iters = *max_inner_iters;
  if (tol_stationarity) cfg.tol_stationarity = *tol_stationarity;
  if (tol_constraint) cfg.tol_constraint = *tol_constraint;
  if (penalty_init) cfg.penalty_init = *penalty_init;
  if (penalty_growth) cfg.penalty_growth = *penalty_growth;
  if (tol_terminal_trans) cfg.tol_terminal_trans = *tol_terminal_trans;
  if (tol_terminal_rot_deg) cfg.tol_terminal_rot = *tol_terminal_rot_deg * kDegToRad;
  if (rotation_weight) cfg.rotation_weight = *rotation_weight;
  if (nonconvex) {
    cfg.nonconvex =
        *nonconvex == "half_space" ? NonconvexPolicy::HalfSpaceFallback : NonconvexPolicy::ExactMargin;
  }
  if (seed) cfg.seed = *seed;
}

PlanarPose PoseDeg::to_pose() const { return PlanarPose(x, y, theta_deg * kDegToRad); }

GraspConfig GraspDeg::to_config() const {
  GraspConfig g;
  g.mass = mass;
  g.gravity = gravity;
  g.incline_phi = incline_deg * kDegToRad;
  g.downhill_alpha = downhill_alpha_deg * kDegToRad;
  g.squeeze_force = squeeze_force;
  g.mu_static_palm = mu_static_palm;
  g.mu_moving_palm = mu_moving_palm;
  g.radius_static_palm = radius_static_palm;
  g.radius_moving_palm = radius_moving_palm;
  g.palm_radius = palm_radius;
  g.pressure_constant = pressure_constant;
  return g;
}

Scenario ScenarioFile::to_scenario() const {
  Scenario s;
  s.start_left = start_left.to_pose();
  s.start_right = start_right.to_pose();
  s.goal_left = goal_left.to_pose();
  s.goal_right = goal_right.to_pose();
  s.grasp = grasp.to_config();
  for (const WaypointDeg& w : waypoints) s.waypoints.push_back({w.left.to_pose(), w.right.to_pose()});
  return s;
}

SolverConfig ScenarioFile::solver_config() const {
  SolverConfig cfg;
  solver.apply(cfg);
  return cfg;
}

ScenarioFile parse_scenario(const std::string& text) {
  const json doc = parse_json(text);
  Reader root(doc, "", text);
  ScenarioFile f;
  check_schema(root);
  if (root.has("labels")) {
    Reader labels = root.object("labels");
    for (const auto& [key, value] : doc.at("labels").items()) {
      f.labels[key] = labels.string(key);
    }
    labels.finish();
  }
  Reader sc = root.object("scenario");
  f.start_left = read_pose(sc.object("start_left"));
  f.start_right = read_pose(sc.object("start_right"));
  if (sc.has("waypoints")) {
    const json& arr = sc.array("waypoints");
    for (std::size_t i = 0; i < arr.size(); ++i) {
      Reader w(arr[i], sc.child("waypoints") + "[" + std::to_string(i) + "]", text);
      WaypointDeg wd;
      wd.left = read_pose(w.object("left"));
      wd.right = read_pose(w.object("right"));
      w.finish();
      f.waypoints.push_back(wd);
    }
  }
  f.goal_left = read_pose(sc.object("goal_left"));
  f.goal_right = read_pose(sc.object("goal_right"));
  f.grasp = read_grasp(sc.object("grasp"));
  sc.finish();
  if (root.has("solver")) f.solver = read_solver(root.object("solver"));
  root.finish();
  return f;
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  return parse_scenario(read_text(path));
}

std::string serialize_scenario(const ScenarioFile& f) {
  ordered_json j;
  j["schema_version"] = f.schema_version;
  ordered_json labels = ordered_json::object();
  for (const auto& [k, v] : f.labels) labels[k] = v;
  j["labels"] = labels;
  ordered_json sc;
  sc["start_left"] = pose_json(f.start_left);
  sc["start_right"] = pose_json(f.start_right);
  ordered_json wps = ordered_json::array();
  for (const WaypointDeg& w : f.waypoints) {
    ordered_json wj;
    wj["left"] = pose_json(w.left);
    wj["right"] = pose_json(w.right);
    wps.push_back(wj);
  }
  sc["waypoints"] = wps;
  sc["goal_left"] = pose_json(f.goal_left);
  sc["goal_right"] = pose_json(f.goal_right);
  const GraspDeg& g = f.grasp;
  ordered_json gj;
  gj["mass"] = g.mass;
  gj["gravity"] = g.gravity;
  gj["incline_deg"] = g.incline_deg;
  gj["downhill_alpha_deg"] = g.downhill_alpha_deg;
  gj["squeeze_force"] = g.squeeze_force;
  gj["mu_static_palm"] = g.mu_static_palm;
  gj["mu_moving_palm"] = g.mu_moving_palm;
  gj["radius_static_palm"] = g.radius_static_palm;
  gj["radius_moving_palm"] = g.radius_moving_palm;
  gj["palm_radius"] = g.palm_radius;
  gj["pressure_constant"] = g.pressure_constant;
  sc["grasp"] = gj;
  j["scenario"] = sc;
  j["solver"] = solver_json(f.solver);
  return j.dump(2) + "\n";
}

SuiteFile parse_suite(const std::string& text) {
  const json doc = parse_json(text);
  Reader root(doc, "", text);
  SuiteFile s;
  check_schema(root);
  const json& scen = root.array("scenarios");
  for (std::size_t i = 0; i < scen.size(); ++i) {
    if (!scen[i].is_string()) {
      root.fail("scenarios[" + std::to_string(i) + "]", "expected a string path");
    }
    s.scenarios.push_back(scen[i].get<std::string>());
  }
  const json& inc = root.array("inclines_deg");
  for (std::size_t i = 0; i < inc.size(); ++i) {
    const std::string field = "inclines_deg[" + std::to_string(i) + "]";
    if (!inc[i].is_number()) root.fail(field, "expected a number");
    const double d = inc[i].get<double>();
    if (!(d >= 0.0 && d < 90.0)) root.fail(field, "incline must lie in [0, 90) degrees");
    s.inclines_deg.push_back(d);
  }
  const json& objs = root.array("objects");
  for (std::size_t i = 0; i < objs.size(); ++i) {
    Reader o(objs[i], "objects[" + std::to_string(i) + "]", text);
    SuiteObject obj;
    obj.label = o.string("label");
    obj.patch_radius = o.number("patch_radius");
    if (!(obj.patch_radius > 0.0)) o.fail(o.child("patch_radius"), "must be positive");
    o.finish();
    s.objects.push_back(obj);
  }
  if (root.has("solver")) s.solver = read_solver(root.object("solver"));
  root.finish();
  return s;
}

SuiteFile load_suite(const std::filesystem::path& path) { return parse_suite(read_text(path)); }

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("", 0, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp.string());
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dls::io
