#pragma once

#include <Eigen/Core>

namespace dls {

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// SE(2) pose of the object relative to a palm. theta is kept in (-pi, pi].
class PlanarPose {
 public:
  PlanarPose() = default;
  PlanarPose(double x, double y, double theta);

  double x() const { return x_; }
  double y() const { return y_; }
  double theta() const { return theta_; }
  Eigen::Vector2d position() const { return {x_, y_}; }

  friend bool operator==(const PlanarPose&, const PlanarPose&) = default;

 private:
  double x_ = 0.0;
  double y_ = 0.0;
  double theta_ = 0.0;
};

/// Planar body twist (v_x, v_y, omega_z), in displacement per planner step.
struct Twist {
  double v_x = 0.0;
  double v_y = 0.0;
  double omega_z = 0.0;

  Eigen::Vector3d vec() const { return {v_x, v_y, omega_z}; }
  static Twist from(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }
  bool is_zero() const { return v_x == 0.0 && v_y == 0.0 && omega_z == 0.0; }
  bool is_finite() const;

  friend bool operator==(const Twist&, const Twist&) = default;
};

/// Planar friction load (f_x, f_y, m_z).
struct Wrench {
  double f_x = 0.0;
  double f_y = 0.0;
  double m_z = 0.0;

  Eigen::Vector3d vec() const { return {f_x, f_y, m_z}; }
  static Wrench from(const Eigen::Vector3d& w) { return {w.x(), w.y(), w.z()}; }
  bool is_finite() const;

  friend bool operator==(const Wrench&, const Wrench&) = default;
};

/// Gravity in the contact frame: tangential wrench g_f (m_z == 0) and the
/// normal component g_n that loads the lower palm.
struct GravityLoad {
  Wrench g_f;
  double g_n = 0.0;
};

PlanarPose compose(const PlanarPose& a, const PlanarPose& b);
PlanarPose inverse(const PlanarPose& p);

/// First-order pose update used by both the planner and the simulator:
/// translation advances by R_z(theta) (v_x, v_y), heading by omega_z.
PlanarPose integrate_pose(const PlanarPose& x, const Twist& v);

/// Splits m*g on a palm inclined by `incline_phi` into the in-plane part,
/// pointing along `downhill_alpha` in the contact frame, and the normal part.
/// Throws std::invalid_argument unless mass > 0, g > 0, 0 <= phi < pi/2.
GravityLoad gravity_decompose(double mass, double g, double incline_phi,
                              double downhill_alpha);

}  // namespace dls
