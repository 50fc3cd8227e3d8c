#include "dls/frames.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace dls {

double wrap_angle(double angle) {
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) wrapped += 2.0 * std::numbers::pi;
  return wrapped;
}

PlanarPose::PlanarPose(double x, double y, double theta)
    : x_(x), y_(y), theta_(wrap_angle(theta)) {}

bool Twist::is_finite() const {
  return std::isfinite(v_x) && std::isfinite(v_y) && std::isfinite(omega_z);
}

bool Wrench::is_finite() const {
  return std::isfinite(f_x) && std::isfinite(f_y) && std::isfinite(m_z);
}

PlanarPose compose(const PlanarPose& a, const PlanarPose& b) {
  const double c = std::cos(a.theta());
  const double s = std::sin(a.theta());
  return {a.x() + c * b.x() - s * b.y(), a.y() + s * b.x() + c * b.y(),
          a.theta() + b.theta()};
}

PlanarPose inverse(const PlanarPose& p) {
  const double c = std::cos(p.theta());
  const double s = std::sin(p.theta());
  return {-(c * p.x() + s * p.y()), -(-s * p.x() + c * p.y()), -p.theta()};
}

PlanarPose integrate_pose(const PlanarPose& x, const Twist& v) {
  const double c = std::cos(x.theta());
  const double s = std::sin(x.theta());
  return {x.x() + (c * v.v_x - s * v.v_y), x.y() + (s * v.v_x + c * v.v_y),
          x.theta() + v.omega_z};
}

GravityLoad gravity_decompose(double mass, double g, double incline_phi,
                              double downhill_alpha) {
  if (!(mass > 0.0)) throw std::invalid_argument("gravity_decompose: mass must be positive");
  if (!(g > 0.0)) throw std::invalid_argument("gravity_decompose: gravity must be positive");
  if (!(incline_phi >= 0.0 && incline_phi < std::numbers::pi / 2.0)) {
    throw std::invalid_argument("gravity_decompose: incline must lie in [0, pi/2)");
  }
  const double weight = mass * g;
  const double tangential = weight * std::sin(incline_phi);
  GravityLoad load;
  load.g_f = {tangential * std::cos(downhill_alpha),
              tangential * std::sin(downhill_alpha), 0.0};
  load.g_n = weight * std::cos(incline_phi);
  return load;
}

}  // namespace dls
