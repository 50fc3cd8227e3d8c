#include "dls/svg.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

namespace dls::io {
namespace {

constexpr double kPanel = 320.0;
constexpr double kMargin = 20.0;

struct Panel {
  double cx = 0.0;
  double cy = 0.0;
  double scale = 1.0;  // px per meter
  double px(double x) const { return cx + scale * x; }
  double py(double y) const { return cy - scale * y; }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

void polyline(std::ostringstream& out, const Panel& p, const Plan& plan, Palm palm,
              const char* color) {
  if (plan.predicted_states.empty()) return;
  out << "  <polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
  for (const SimState& s : plan.predicted_states) {
    const PlanarPose& q = s.pose_in(palm);
    out << num(p.px(q.x())) << "," << num(p.py(q.y())) << " ";
  }
  out << "\"/>\n";
}

void star(std::ostringstream& out, const Panel& p, const PlanarPose& q) {
  const double r_out = 7.0;
  const double r_in = 3.0;
  out << "  <polygon fill=\"green\" points=\"";
  for (int k = 0; k < 10; ++k) {
    const double a = std::numbers::pi / 2.0 + k * std::numbers::pi / 5.0;
    const double r = k % 2 == 0 ? r_out : r_in;
    out << num(p.px(q.x()) + r * std::cos(a)) << "," << num(p.py(q.y()) - r * std::sin(a)) << " ";
  }
  out << "\"/>\n";
}

}  // namespace

std::string trajectory_svg(const Plan& ours, const Plan* baseline, const Scenario& s) {
  const double width = 2.0 * kPanel + 3.0 * kMargin;
  const double height = kPanel + 2.0 * kMargin + 20.0;
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(width) << "\" height=\""
      << num(height) << "\" viewBox=\"0 0 " << num(width) << " " << num(height) << "\">\n";
  out << "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  const std::vector<Waypoint> goals = s.goals();
  for (int i = 0; i < 2; ++i) {
    const Palm palm = i == 0 ? Palm::Left : Palm::Right;
    Panel p;
    p.cx = kMargin + i * (kPanel + kMargin) + kPanel / 2.0;
    p.cy = kMargin + 20.0 + kPanel / 2.0;
    p.scale = 0.45 * kPanel / s.grasp.palm_radius;
    out << "  <text x=\"" << num(p.cx) << "\" y=\"" << num(kMargin + 8.0)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">object in "
        << to_string(palm) << " palm</text>\n";
    out << "  <circle cx=\"" << num(p.cx) << "\" cy=\"" << num(p.cy) << "\" r=\""
        << num(p.scale * s.grasp.palm_radius)
        << "\" fill=\"none\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
    if (baseline) polyline(out, p, *baseline, palm, "red");
    polyline(out, p, ours, palm, "blue");
    const PlanarPose& start = palm == Palm::Left ? s.start_left : s.start_right;
    out << "  <circle cx=\"" << num(p.px(start.x())) << "\" cy=\"" << num(p.py(start.y()))
        << "\" r=\"3\" fill=\"black\"/>\n";
    for (const Waypoint& w : goals) star(out, p, palm == Palm::Left ? w.goal_left : w.goal_right);
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace dls::io
