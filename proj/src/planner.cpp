#include "dls/planner.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include "dls/errors.hpp"
#include "dls/rollout.hpp"

namespace dls {
namespace {

constexpr int kLeft = 0;
constexpr int kRight = 1;

// The relative pose that changes at step t: left moving => right-relative.
int updated_chain(std::size_t t) {
  return phase_at(t) == Phase::LeftMoves ? kRight : kLeft;
}

Eigen::Matrix2d rot(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << c, -s, s, c;
  return r;
}

Eigen::Matrix2d rot_derivative(double theta) {
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  Eigen::Matrix2d r;
  r << -s, -c, c, -s;
  return r;
}

struct ChainPose {
  Eigen::Vector2d pos = Eigen::Vector2d::Zero();
  double theta = 0.0;
};

ChainPose to_chain(const PlanarPose& p) { return {p.position(), p.theta()}; }

// Goal heading unwrapped to the branch nearest the start heading.
ChainPose goal_near(const PlanarPose& goal, double start_theta) {
  return {goal.position(), start_theta + wrap_angle(goal.theta() - start_theta)};
}

// Everything the per-step slippage-free constraint needs, independent of the
// object heading (gravity direction is the only heading-dependent part).
struct SlipModel {
  Eigen::Vector3d a_inv;
  Eigen::Vector3d b_diag;
  Eigen::Vector3d quad_diag;  // A^-1 B A^-1 - A^-1
  double gravity_tangential = 0.0;
  double alpha = 0.0;
  double c_ratio = 1.0;
  double cone_constant = 0.0;
  double g_b_g = 0.0;
  bool equal = true;
  NonconvexPolicy policy = NonconvexPolicy::ExactMargin;

  enum class Form { ConeConvex, ConeExact, HalfSpace, DecomposedQuadOnly, Decomposed };
  Form form = Form::ConeExact;

  int term_count() const {
    switch (form) {
      case Form::ConeConvex: return 2;
      case Form::ConeExact: return 1;
      case Form::HalfSpace: return 1;
      case Form::DecomposedQuadOnly: return 1;
      case Form::Decomposed: return 3;
    }
    return 0;
  }

  Eigen::Vector3d gravity(double psi) const {
    return {gravity_tangential * std::cos(alpha - psi), gravity_tangential * std::sin(alpha - psi),
            0.0};
  }
  Eigen::Vector3d gravity_dpsi(double psi) const {
    return {gravity_tangential * std::sin(alpha - psi), -gravity_tangential * std::cos(alpha - psi),
            0.0};
  }
};

SlipModel make_slip_model(const GraspConfig& grasp, NonconvexPolicy policy) {
  const PhaseMechanics m = phase_mechanics(grasp, 0.0);
  SlipModel model;
  model.a_inv = m.A.inverse_diag();
  model.b_diag = m.B.diag();
  model.quad_diag = model.a_inv.cwiseProduct(model.b_diag).cwiseProduct(model.a_inv) - model.a_inv;
  model.gravity_tangential = m.gravity.g_f.vec().norm();
  model.alpha = grasp.downhill_alpha;
  model.c_ratio = c_ratio(m);
  model.cone_constant = soc_constant(m.A, model.c_ratio, m.gravity);
  model.g_b_g = m.B.quad(m.gravity.g_f.vec());
  model.equal = grasp.equal_contacts();
  model.policy = policy;
  const bool has_gravity = model.gravity_tangential > 0.0;
  if (model.equal) {
    if (model.cone_constant > 0.0) {
      model.form = SlipModel::Form::ConeConvex;
    } else if (policy == NonconvexPolicy::HalfSpaceFallback && has_gravity) {
      model.form = SlipModel::Form::HalfSpace;
    } else {
      model.form = SlipModel::Form::ConeExact;
    }
  } else {
    model.form = has_gravity ? SlipModel::Form::Decomposed : SlipModel::Form::DecomposedQuadOnly;
  }
  return model;
}

struct SlipTerm {
  double value = 0.0;
  Eigen::Vector3d dv = Eigen::Vector3d::Zero();
  double dpsi = 0.0;
};

// Smooth, mostly square-root-free forms of the slippage-free margin <= -eps,
// normalised by `scale` (the A-norm of a full translational step).
int slip_terms(const SlipModel& m, const Eigen::Vector3d& v, double psi, double eps,
               double scale, std::array<SlipTerm, 3>& out) {
  const Eigen::Vector3d g = m.gravity(psi);
  const Eigen::Vector3d dg = m.gravity_dpsi(psi);
  const Eigen::Vector3d a_inv_v = m.a_inv.cwiseProduct(v);
  const double s2 = v.dot(a_inv_v);
  const double scale2 = scale * scale;
  switch (m.form) {
    case SlipModel::Form::ConeConvex: {
      // K |v| <= 2 c g^T v - eps  <=>  q >= 0  and  K^2 |v|^2 <= q^2
      const double k = m.cone_constant;
      const double q = 2.0 * m.c_ratio * g.dot(v) - eps;
      out[0] = {-q / scale, -2.0 * m.c_ratio * g / scale, -2.0 * m.c_ratio * dg.dot(v) / scale};
      out[1] = {(k * k * s2 - q * q) / scale2,
                (2.0 * k * k * a_inv_v - 4.0 * q * m.c_ratio * g) / scale2,
                -4.0 * q * m.c_ratio * dg.dot(v) / scale2};
      return 2;
    }
    case SlipModel::Form::ConeExact: {
      // eps - 2 c g^T v <= |K| |v|, squared on the side where it binds
      const double k = m.cone_constant;
      const double q = eps - 2.0 * m.c_ratio * g.dot(v);
      const double qp = std::max(q, 0.0);
      out[0] = {(qp * qp - k * k * s2) / scale2,
                (-4.0 * qp * m.c_ratio * g - 2.0 * k * k * a_inv_v) / scale2,
                -4.0 * qp * m.c_ratio * dg.dot(v) / scale2};
      return 1;
    }
    case SlipModel::Form::HalfSpace: {
      const double norm = m.gravity_tangential * scale /
                          std::sqrt(m.a_inv.x());  // |g| times a full translational step
      out[0] = {(eps - g.dot(v)) / norm, -g / norm, -dg.dot(v) / norm};
      return 1;
    }
    case SlipModel::Form::DecomposedQuadOnly:
    case SlipModel::Form::Decomposed: {
      const double s = std::sqrt(std::max(s2, 1e-300));
      out[0] = {(v.dot(m.quad_diag.cwiseProduct(v)) + eps * s) / scale2,
                (2.0 * m.quad_diag.cwiseProduct(v) + eps * a_inv_v / s) / scale2, 0.0};
      if (m.form == SlipModel::Form::DecomposedQuadOnly) return 1;
      // |v| <= p,  p = (2 / g^T B g) (A^-1 B g)^T v - eps
      const double coef = 2.0 / m.g_b_g;
      const Eigen::Vector3d h = m.a_inv.cwiseProduct(m.b_diag).cwiseProduct(g);
      const Eigen::Vector3d dh = m.a_inv.cwiseProduct(m.b_diag).cwiseProduct(dg);
      const double p = coef * h.dot(v) - eps;
      out[1] = {-p / scale, -coef * h / scale, -coef * dh.dot(v) / scale};
      out[2] = {(s2 - p * p) / scale2, (2.0 * a_inv_v - 2.0 * p * coef * h) / scale2,
                -2.0 * p * coef * dh.dot(v) / scale2};
      return 3;
    }
  }
  return 0;
}

struct SegmentSpec {
  int horizon = 0;
  std::array<ChainPose, 2> start;
  std::array<ChainPose, 2> goal;
  double heading0 = 0.0;
  std::array<int, 2> active{0, 0};  // active steps per chain, front-loaded
};

// Direct transcription of one waypoint segment over its active twists, with
// an augmented-Lagrangian merit. Variables are twists divided by the per-step
// bounds.
class SegmentProblem {
 public:
  SegmentProblem(const SegmentSpec& spec, const SlipModel& slip, const SolverConfig& cfg,
                 double palm_radius, double margin_scale)
      : spec_(spec),
        slip_(slip),
        cfg_(cfg),
        palm_radius_(palm_radius),
        margin_scale_(margin_scale),
        eps_internal_(1.25 * cfg.slip_margin_eps),
        scale_(cfg.max_step_trans, cfg.max_step_trans, cfg.max_step_rot) {
    var_of_step_.assign(spec.horizon, -1);
    std::array<int, 2> seen{0, 0};
    for (int t = 0; t < spec.horizon; ++t) {
      const int c = updated_chain(t);
      if (seen[c] < spec.active[c]) var_of_step_[t] = num_active_++;
      ++seen[c];
    }
    num_ineq_ = num_active_ * (2 + slip_.term_count()) + spec.horizon;
    num_eq_ = 6;
    lambda_ineq_ = Eigen::VectorXd::Zero(num_ineq_);
    lambda_eq_ = Eigen::VectorXd::Zero(num_eq_);
    rho_ = cfg.penalty_init;
  }

  int num_vars() const { return 3 * num_active_; }
  int horizon() const { return spec_.horizon; }
  int var_of_step(int t) const { return var_of_step_[t]; }
  double penalty() const { return rho_; }

  Twist twist_at(const Eigen::VectorXd& z, int t) const {
    const int k = var_of_step_[t];
    if (k < 0) return {};
    return Twist::from(z.segment<3>(3 * k).cwiseProduct(scale_));
  }

  Eigen::VectorXd to_vars(const std::vector<Twist>& twists) const {
    Eigen::VectorXd z = Eigen::VectorXd::Zero(num_vars());
    for (int t = 0; t < spec_.horizon; ++t) {
      const int k = var_of_step_[t];
      if (k >= 0) z.segment<3>(3 * k) = twists[t].vec().cwiseQuotient(scale_);
    }
    return z;
  }

  double merit(const Eigen::VectorXd& z, Eigen::VectorXd* grad) const {
    return evaluate(z, grad, nullptr, nullptr, nullptr);
  }

  double objective(const Eigen::VectorXd& z) const {
    double obj = 0.0;
    evaluate(z, nullptr, nullptr, nullptr, &obj);
    return obj;
  }

  double max_violation(const Eigen::VectorXd& z) const {
    std::vector<double> ineq;
    std::vector<double> eq;
    evaluate(z, nullptr, &ineq, &eq, nullptr);
    double worst = 0.0;
    for (double c : ineq) worst = std::max(worst, c);
    for (double h : eq) worst = std::max(worst, std::abs(h));
    return worst;
  }

  // Returns the violation before the update.
  double update_multipliers(const Eigen::VectorXd& z) {
    std::vector<double> ineq;
    std::vector<double> eq;
    evaluate(z, nullptr, &ineq, &eq, nullptr);
    double worst = 0.0;
    for (int i = 0; i < num_ineq_; ++i) {
      worst = std::max(worst, ineq[i]);
      lambda_ineq_[i] = std::max(0.0, lambda_ineq_[i] + rho_ * ineq[i]);
    }
    for (int j = 0; j < num_eq_; ++j) {
      worst = std::max(worst, std::abs(eq[j]));
      lambda_eq_[j] += rho_ * eq[j];
    }
    return worst;
  }

  void set_multipliers(double value, double penalty) {
    lambda_ineq_.setConstant(value);
    lambda_eq_.setConstant(value);
    rho_ = penalty;
  }

  void grow_penalty() { rho_ = std::min(rho_ * cfg_.penalty_growth, 1e12); }

 private:
  // One pass over dynamics, cost and every constraint. With `grad` set, the
  // merit gradient is accumulated by reverse sweep through the dynamics.
  double evaluate(const Eigen::VectorXd& z, Eigen::VectorXd* grad, std::vector<double>* ineq_out,
                  std::vector<double>* eq_out, double* objective_out) const {
    const int n = spec_.horizon;
    std::vector<Eigen::Vector3d> v(n, Eigen::Vector3d::Zero());
    for (int t = 0; t < n; ++t) {
      const int k = var_of_step_[t];
      if (k >= 0) v[t] = z.segment<3>(3 * k).cwiseProduct(scale_);
    }
    std::array<std::vector<Eigen::Vector2d>, 2> pos;
    std::array<std::vector<double>, 2> th;
    std::vector<double> psi(n + 1);
    for (int c = 0; c < 2; ++c) {
      pos[c].resize(n + 1);
      th[c].resize(n + 1);
      pos[c][0] = spec_.start[c].pos;
      th[c][0] = spec_.start[c].theta;
    }
    psi[0] = spec_.heading0;
    for (int t = 0; t < n; ++t) {
      const int u = updated_chain(t);
      const int o = 1 - u;
      pos[o][t + 1] = pos[o][t];
      th[o][t + 1] = th[o][t];
      pos[u][t + 1] = pos[u][t] + rot(th[u][t]) * v[t].head<2>();
      th[u][t + 1] = th[u][t] + v[t].z();
      psi[t + 1] = psi[t] + v[t].z();
    }

    const bool want_grad = grad != nullptr;
    std::array<std::vector<Eigen::Vector2d>, 2> gpos;
    std::array<std::vector<double>, 2> gth;
    std::vector<double> gpsi;
    std::vector<Eigen::Vector3d> gv;
    if (want_grad) {
      for (int c = 0; c < 2; ++c) {
        gpos[c].assign(n + 1, Eigen::Vector2d::Zero());
        gth[c].assign(n + 1, 0.0);
      }
      gpsi.assign(n + 1, 0.0);
      gv.assign(n, Eigen::Vector3d::Zero());
    }

    double total = 0.0;
    int ii = 0;
    int ei = 0;
    const bool measure = ineq_out != nullptr || eq_out != nullptr;
    auto ineq = [&](double c) -> double {
      if (measure) {
        if (ineq_out) ineq_out->push_back(c);
        ++ii;
        return 0.0;
      }
      const double lam = lambda_ineq_[ii++];
      const double shifted = lam + rho_ * c;
      if (shifted > 0.0) {
        total += (shifted * shifted - lam * lam) / (2.0 * rho_);
        return shifted;
      }
      total -= lam * lam / (2.0 * rho_);
      return 0.0;
    };
    auto eq = [&](double h) -> double {
      if (measure) {
        if (eq_out) eq_out->push_back(h);
        ++ei;
        return 0.0;
      }
      const double lam = lambda_eq_[ei++];
      total += lam * h + 0.5 * rho_ * h * h;
      return lam + rho_ * h;
    };

    // Tracking cost.
    const double trans2 = cfg_.max_step_trans * cfg_.max_step_trans;
    const double w_obj = 1.0 / (static_cast<double>(n) * trans2);
    const double w_rot2 = cfg_.rotation_weight * cfg_.rotation_weight;
    double obj = 0.0;
    for (int t = 1; t <= n; ++t) {
      for (int c = 0; c < 2; ++c) {
        const Eigen::Vector2d dp = pos[c][t] - spec_.goal[c].pos;
        const double dth = th[c][t] - spec_.goal[c].theta;
        obj += dp.squaredNorm() + w_rot2 * dth * dth;
        if (want_grad) {
          gpos[c][t] += 2.0 * w_obj * dp;
          gth[c][t] += 2.0 * w_obj * w_rot2 * dth;
        }
      }
    }
    if (objective_out) *objective_out = obj;
    if (!measure) total += w_obj * obj;

    // Per-step bounds and slippage-free constraints.
    const double rot2 = cfg_.max_step_rot * cfg_.max_step_rot;
    std::array<SlipTerm, 3> terms;
    for (int t = 0; t < n; ++t) {
      if (var_of_step_[t] < 0) continue;
      const Eigen::Vector3d& vt = v[t];
      double k = ineq(vt.head<2>().squaredNorm() / trans2 - 1.0);
      if (want_grad && k != 0.0) gv[t].head<2>() += k * 2.0 * vt.head<2>() / trans2;
      k = ineq(vt.z() * vt.z() / rot2 - 1.0);
      if (want_grad && k != 0.0) gv[t].z() += k * 2.0 * vt.z() / rot2;
      const int count = slip_terms(slip_, vt, psi[t], eps_internal_, margin_scale_, terms);
      for (int j = 0; j < count; ++j) {
        k = ineq(terms[j].value);
        if (want_grad && k != 0.0) {
          gv[t] += k * terms[j].dv;
          gpsi[t] += k * terms[j].dpsi;
        }
      }
    }

    // Containment on every state the step changes.
    const double r2 = palm_radius_ * palm_radius_;
    for (int t = 0; t < n; ++t) {
      const int u = updated_chain(t);
      const Eigen::Vector2d& p = pos[u][t + 1];
      const double k = ineq(p.squaredNorm() / r2 - 1.0);
      if (want_grad && k != 0.0) gpos[u][t + 1] += k * 2.0 * p / r2;
    }

    // Terminal equalities.
    for (int c = 0; c < 2; ++c) {
      const Eigen::Vector2d dp = (pos[c][n] - spec_.goal[c].pos) / cfg_.max_step_trans;
      const double dth = (th[c][n] - spec_.goal[c].theta) / cfg_.max_step_rot;
      for (int a = 0; a < 2; ++a) {
        const double k = eq(dp[a]);
        if (want_grad && k != 0.0) gpos[c][n][a] += k / cfg_.max_step_trans;
      }
      const double k = eq(dth);
      if (want_grad && k != 0.0) gth[c][n] += k / cfg_.max_step_rot;
    }

    if (want_grad) {
      for (int t = n - 1; t >= 0; --t) {
        const int u = updated_chain(t);
        const int o = 1 - u;
        gpos[o][t] += gpos[o][t + 1];
        gth[o][t] += gth[o][t + 1];
        const Eigen::Vector2d& a = gpos[u][t + 1];
        const double b = gth[u][t + 1];
        gv[t].head<2>() += rot(th[u][t]).transpose() * a;
        gv[t].z() += b + gpsi[t + 1];
        gth[u][t] += b + a.dot(rot_derivative(th[u][t]) * v[t].head<2>());
        gpos[u][t] += a;
        gpsi[t] += gpsi[t + 1];
      }
      grad->setZero(num_vars());
      for (int t = 0; t < n; ++t) {
        const int k = var_of_step_[t];
        if (k >= 0) grad->segment<3>(3 * k) = gv[t].cwiseProduct(scale_);
      }
    }
    return total;
  }

  SegmentSpec spec_;
  SlipModel slip_;
  SolverConfig cfg_;
  double palm_radius_;
  double margin_scale_;
  double eps_internal_;
  Eigen::Vector3d scale_;
  std::vector<int> var_of_step_;
  int num_active_ = 0;
  int num_ineq_ = 0;
  int num_eq_ = 0;
  Eigen::VectorXd lambda_ineq_;
  Eigen::VectorXd lambda_eq_;
  double rho_ = 10.0;
};

struct LbfgsOutcome {
  double value = 0.0;
  double grad_inf = 0.0;
  int iterations = 0;
};

// Limited-memory BFGS with Armijo backtracking; the merit never increases.
template <class Fn>
LbfgsOutcome lbfgs_minimize(Fn&& fn, Eigen::VectorXd& x, int max_iters, double gtol) {
  constexpr int kMemory = 10;
  std::vector<Eigen::VectorXd> s_hist;
  std::vector<Eigen::VectorXd> y_hist;
  std::vector<double> rho_hist;
  Eigen::VectorXd g(x.size());
  double f = fn(x, &g);
  LbfgsOutcome out;
  Eigen::VectorXd g_new(x.size());
  for (int it = 0; it < max_iters; ++it) {
    out.iterations = it;
    if (x.size() == 0 || g.lpNorm<Eigen::Infinity>() <= gtol) break;
    Eigen::VectorXd q = -g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha(m);
    for (int i = m - 1; i >= 0; --i) {
      alpha[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alpha[i] * y_hist[i];
    }
    if (m > 0) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      const double beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alpha[i] - beta) * s_hist[i];
    }
    double slope = g.dot(q);
    if (!(slope < 0.0)) {
      q = -g;
      slope = g.dot(q);
      s_hist.clear();
      y_hist.clear();
      rho_hist.clear();
    }
    double step = m == 0 ? std::min(1.0, 0.1 / std::max(q.lpNorm<Eigen::Infinity>(), 1e-300)) : 1.0;
    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = f;
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + step * q;
      f_new = fn(x_new, &g_new);
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    Eigen::VectorXd s = x_new - x;
    Eigen::VectorXd y = g_new - g;
    const double sy = s.dot(y);
    if (sy > 1e-14 * s.norm() * y.norm()) {
      if (static_cast<int>(s_hist.size()) == kMemory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
        rho_hist.erase(rho_hist.begin());
      }
      s_hist.push_back(std::move(s));
      y_hist.push_back(std::move(y));
      rho_hist.push_back(1.0 / sy);
    }
    const double decrease = f - f_new;
    x = x_new;
    f = f_new;
    g = g_new;
    out.iterations = it + 1;
    if (decrease <= 1e-15 * std::max(1.0, std::abs(f)) &&
        g.lpNorm<Eigen::Infinity>() <= 1e3 * gtol) {
      break;
    }
  }
  out.value = f;
  out.grad_inf = g.lpNorm<Eigen::Infinity>();
  return out;
}

struct SegmentResult {
  std::vector<Twist> twists;
  bool converged = false;
  double objective = 0.0;
  double violation = std::numeric_limits<double>::infinity();
  int iterations = 0;
};

struct Certification {
  bool ok = false;
  double worst_margin = -std::numeric_limits<double>::infinity();
  PoseError terminal_left;
  PoseError terminal_right;
};

class SegmentPlanner {
 public:
  SegmentPlanner(const Scenario& scenario, const SolverConfig& cfg)
      : grasp_(scenario.grasp),
        cfg_(cfg),
        slip_(make_slip_model(scenario.grasp, cfg.nonconvex)) {
    const NormalForces nf = normal_forces(grasp_);
    margin_scale_ = grasp_.mu_static_palm * nf.static_palm * cfg.max_step_trans;
  }

  // Plans from `start` (object pose in each palm, and heading) to `goal`.
  SegmentResult solve(const SimState& start, const Waypoint& goal, int segment,
                      std::vector<MeritRecord>& log) const {
    SegmentSpec spec;
    spec.horizon = cfg_.horizon_n;
    spec.start = {to_chain(start.pose_obj_in_left), to_chain(start.pose_obj_in_right)};
    spec.goal = {goal_near(goal.goal_left, start.pose_obj_in_left.theta()),
                 goal_near(goal.goal_right, start.pose_obj_in_right.theta())};
    spec.heading0 = start.heading;
    const int half = cfg_.horizon_n / 2;
    for (int c = 0; c < 2; ++c) spec.active[c] = estimate_steps(spec, c);

    SegmentResult best;
    int total_iters = 0;
    constexpr int kAttempts = 5;
    std::optional<std::vector<Twist>> warm;
    for (int attempt = 0; attempt < kAttempts; ++attempt) {
      SegmentResult r = solve_attempt(spec, start, goal, segment, attempt, log,
                                      warm ? &*warm : nullptr);
      total_iters += r.iterations;
      const bool better = (r.converged && !best.converged) ||
                          (r.converged == best.converged && r.violation < best.violation);
      if (better || attempt == 0) best = r;
      if (best.converged) break;
      warm = prune_collapsed(spec, r.twists);
      if (warm) continue;
      for (int c = 0; c < 2; ++c) {
        if (spec.active[c] > 0) {
          spec.active[c] = std::min(half, spec.active[c] + std::max(2, spec.active[c] / 2));
        }
      }
    }
    best.iterations = total_iters;
    return best;
  }

  Certification certify(const SimState& start, const Waypoint& goal,
                        const std::vector<Twist>& twists) const {
    Certification cert;
    cert.ok = true;
    SimState s = start;
    const double tol_bound = 1.0 + 1e-9;
    const double r2 = grasp_.palm_radius * grasp_.palm_radius * (1.0 + 1e-12);
    for (std::size_t t = 0; t < twists.size(); ++t) {
      const Twist& v = twists[t];
      const Palm fixed = static_palm(phase_at(t));
      if (!v.is_zero()) {
        const ConstraintMargin m =
            step_margin(v, phase_mechanics(grasp_, s.heading), grasp_.equal_contacts(),
                        cfg_.nonconvex);
        cert.worst_margin = std::max(cert.worst_margin, m.value);
        if (!(m.value <= -cfg_.slip_margin_eps)) cert.ok = false;
        if (std::hypot(v.v_x, v.v_y) > cfg_.max_step_trans * tol_bound ||
            std::abs(v.omega_z) > cfg_.max_step_rot * tol_bound) {
          cert.ok = false;
        }
      }
      s.pose_in(fixed) = integrate_pose(s.pose_in(fixed), v);
      s.heading += v.omega_z;
      if (s.pose_in(fixed).position().squaredNorm() > r2) cert.ok = false;
    }
    cert.terminal_left = pose_error(s.pose_obj_in_left, goal.goal_left);
    cert.terminal_right = pose_error(s.pose_obj_in_right, goal.goal_right);
    for (const PoseError& e : {cert.terminal_left, cert.terminal_right}) {
      if (!(e.trans <= cfg_.tol_terminal_trans && e.rot <= cfg_.tol_terminal_rot)) cert.ok = false;
    }
    return cert;
  }

 private:
  double margin_at(const Eigen::Vector3d& v, double heading) const {
    if (v.isZero(0.0)) return std::numeric_limits<double>::infinity();
    return step_margin(Twist::from(v), phase_mechanics(grasp_, heading), grasp_.equal_contacts(),
                       cfg_.nonconvex)
        .value;
  }

  // A homogeneous margin cannot reach -eps near v = 0, and the penalty pulls
  // a short leftover step further in, so such steps are dropped and the rest
  // reused as a warm start with fewer active steps. Empty if nothing collapsed.
  std::optional<std::vector<Twist>> prune_collapsed(SegmentSpec& spec,
                                                    const std::vector<Twist>& twists) const {
    std::array<std::vector<Twist>, 2> kept;
    std::array<int, 2> seen{0, 0};
    bool pruned = false;
    double heading = spec.heading0;
    for (int t = 0; t < spec.horizon; ++t) {
      const int c = updated_chain(t);
      const Twist& v = twists[t];
      if (seen[c]++ < spec.active[c]) {
        const double size = std::hypot(v.v_x, v.v_y) / cfg_.max_step_trans +
                            std::abs(v.omega_z) / cfg_.max_step_rot;
        if (size < 0.1 && !(margin_at(v.vec(), heading) <= -cfg_.slip_margin_eps)) {
          pruned = true;
        } else {
          kept[c].push_back(v);
        }
      }
      heading += v.omega_z;
    }
    if (!pruned || (kept[0].empty() && spec.active[0] > 0) ||
        (kept[1].empty() && spec.active[1] > 0)) {
      return std::nullopt;
    }
    std::vector<Twist> out(spec.horizon);
    std::array<std::size_t, 2> next{0, 0};
    for (int t = 0; t < spec.horizon; ++t) {
      const int c = updated_chain(t);
      if (next[c] < kept[c].size()) out[t] = kept[c][next[c]++];
    }
    for (int c = 0; c < 2; ++c) spec.active[c] = static_cast<int>(kept[c].size());
    return out;
  }

  // Smallest number of front-loaded steps that can plausibly cover the chain's
  // displacement, given how far a feasible twist must turn away from the
  // straight line.
  int estimate_steps(const SegmentSpec& spec, int c) const {
    const Eigen::Vector2d delta = spec.goal[c].pos - spec.start[c].pos;
    const double dtheta = spec.goal[c].theta - spec.start[c].theta;
    const int half = spec.horizon / 2;
    if (delta.norm() == 0.0 && dtheta == 0.0) return 0;
    const double reach = 0.8 * cfg_.max_step_trans;
    double progress = reach;
    if (delta.norm() > 0.0) {
      const Eigen::Vector2d dir = rot(-spec.start[c].theta) * delta.normalized();
      double best_cos = 0.0;
      for (int deg = 0; deg <= 88; deg += 2) {
        const double beta = deg * std::numbers::pi / 180.0;
        bool found = false;
        for (double sign : {1.0, -1.0}) {
          const Eigen::Vector2d d = rot(sign * beta) * dir * reach;
          if (margin_at({d.x(), d.y(), 0.0}, spec.heading0) <= -3.0 * cfg_.slip_margin_eps) {
            found = true;
          }
        }
        if (found) {
          best_cos = std::cos(beta);
          break;
        }
      }
      progress = std::max(reach * best_cos, 0.05 * reach);
    }
    int k = static_cast<int>(std::ceil(delta.norm() / progress));
    k = std::max(k, static_cast<int>(std::ceil(std::abs(dtheta) / (0.8 * cfg_.max_step_rot))));
    k = std::max(k, 1);
    if (progress < reach && k % 2 == 1) ++k;
    return std::min(k, half);
  }

  // Straight-line split of the remaining displacement, turned aside (sides
  // alternating) wherever the straight twist would violate the margin.
  std::vector<Twist> initial_guess(const SegmentSpec& spec, int attempt) const {
    const int n = spec.horizon;
    std::vector<Twist> twists(n);
    std::array<ChainPose, 2> cur = spec.start;
    std::array<int, 2> done{0, 0};
    double heading = spec.heading0;
    std::mt19937_64 rng(cfg_.seed * 7919ULL + static_cast<std::uint64_t>(attempt));
    std::uniform_real_distribution<double> jitter(-1.0, 1.0);
    const double trans_cap = 0.95 * cfg_.max_step_trans;
    const double rot_cap = 0.95 * cfg_.max_step_rot;
    for (int t = 0; t < n; ++t) {
      const int c = updated_chain(t);
      if (done[c] >= spec.active[c]) continue;
      const int remaining = spec.active[c] - done[c];
      const Eigen::Vector2d d = (spec.goal[c].pos - cur[c].pos) / remaining;
      double omega = std::clamp((spec.goal[c].theta - cur[c].theta) / remaining, -rot_cap, rot_cap);
      Eigen::Vector2d vxy = rot(-cur[c].theta) * d;
      if (vxy.norm() > trans_cap) vxy *= trans_cap / vxy.norm();
      const double target = -3.0 * cfg_.slip_margin_eps;
      if (!(margin_at({vxy.x(), vxy.y(), omega}, heading) <= target)) {
        if (vxy.norm() < 1e-3 * cfg_.max_step_trans) {
          vxy = Eigen::Vector2d(1e-3 * cfg_.max_step_trans, 0.0);
        }
        const double first_side = (done[c] % 2 == 0) ? 1.0 : -1.0;
        bool fixed = false;
        for (int deg = 4; deg <= 176 && !fixed; deg += 4) {
          const double beta = deg * std::numbers::pi / 180.0;
          for (double sign : {first_side, -first_side}) {
            Eigen::Vector2d cand = rot(sign * beta) * vxy / std::max(std::cos(beta), 0.25);
            if (cand.norm() > trans_cap) cand *= trans_cap / cand.norm();
            if (margin_at({cand.x(), cand.y(), omega}, heading) <= target) {
              vxy = cand;
              fixed = true;
              break;
            }
          }
        }
      }
      if (attempt > 0) {
        vxy += 0.1 * cfg_.max_step_trans * Eigen::Vector2d(jitter(rng), jitter(rng));
        omega += 0.1 * cfg_.max_step_rot * jitter(rng);
      }
      twists[t] = {vxy.x(), vxy.y(), omega};
      cur[c].pos += rot(cur[c].theta) * vxy;
      cur[c].theta += omega;
      heading += omega;
      ++done[c];
    }
    return twists;
  }

  SegmentResult solve_attempt(const SegmentSpec& spec, const SimState& start,
                              const Waypoint& goal, int segment, int attempt,
                              std::vector<MeritRecord>& log,
                              const std::vector<Twist>* warm) const {
    SegmentProblem prob(spec, slip_, cfg_, grasp_.palm_radius, margin_scale_);
    SegmentResult result;
    Eigen::VectorXd z = prob.to_vars(warm ? *warm : initial_guess(spec, attempt));
    auto fn = [&prob](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return prob.merit(x, g); };
    double prev_violation = std::numeric_limits<double>::infinity();
    int iters = 0;
    auto extract = [&]() {
      std::vector<Twist> tw(spec.horizon);
      for (int t = 0; t < spec.horizon; ++t) tw[t] = prob.twist_at(z, t);
      return tw;
    };
    for (int outer = 0; outer < cfg_.max_outer_iters; ++outer) {
      MeritRecord rec;
      rec.segment = segment;
      rec.attempt = attempt;
      rec.outer = outer;
      rec.penalty = prob.penalty();
      rec.merit_before = prob.merit(z, nullptr);
      const LbfgsOutcome inner = lbfgs_minimize(fn, z, cfg_.max_inner_iters, cfg_.tol_stationarity);
      rec.merit_after = inner.value;
      iters += inner.iterations;
      const double violation = prob.update_multipliers(z);
      rec.max_violation = violation;
      log.push_back(rec);
      result.violation = violation;
      if (violation <= cfg_.tol_constraint && inner.grad_inf <= 1e3 * cfg_.tol_stationarity) {
        break;
      }
      if (violation > 0.25 * prev_violation) prob.grow_penalty();
      prev_violation = std::min(prev_violation, violation);
    }
    result.twists = extract();
    result.iterations = iters;
    result.objective = prob.objective(z);
    result.converged = certify(start, goal, result.twists).ok;
    return result;
  }

  GraspConfig grasp_;
  SolverConfig cfg_;
  SlipModel slip_;
  double margin_scale_ = 1.0;
};

void fill_predictions(Plan& p, const Scenario& s, const SolverConfig& cfg) {
  p.predicted_states.clear();
  p.margins.clear();
  SimState state = s.initial_state();
  p.predicted_states.push_back(state);
  for (std::size_t t = 0; t < p.twists.size(); ++t) {
    const Twist& v = p.twists[t];
    state.active_moving_palm = moving_palm(p.phases[t]);
    if (v.is_zero()) {
      p.margins.emplace_back(std::nullopt);
    } else {
      p.margins.emplace_back(step_margin(v, phase_mechanics(s.grasp, state.heading),
                                         s.grasp.equal_contacts(), cfg.nonconvex));
      const Palm fixed = static_palm(p.phases[t]);
      state.pose_in(fixed) = integrate_pose(state.pose_in(fixed), v);
      state.heading = state.heading + v.omega_z;
    }
    p.predicted_states.push_back(state);
  }
}

double tracking_objective(const Plan& p, const std::vector<Waypoint>& goals,
                          const SolverConfig& cfg) {
  double total = 0.0;
  const double w2 = cfg.rotation_weight * cfg.rotation_weight;
  for (std::size_t t = 1; t < p.predicted_states.size(); ++t) {
    const std::size_t seg = std::min((t - 1) / static_cast<std::size_t>(cfg.horizon_n),
                                     goals.size() - 1);
    const SimState& st = p.predicted_states[t];
    const PoseError el = pose_error(st.pose_obj_in_left, goals[seg].goal_left);
    const PoseError er = pose_error(st.pose_obj_in_right, goals[seg].goal_right);
    total += el.trans * el.trans + er.trans * er.trans + w2 * (el.rot * el.rot + er.rot * er.rot);
  }
  return total;
}

}  // namespace

void SolverConfig::validate() const {
  if (horizon_n < 2 || horizon_n % 2 != 0) {
    throw std::invalid_argument("SolverConfig: horizon_n must be even and at least 2");
  }
  const double positives[] = {slip_margin_eps,  max_step_trans,     max_step_rot,
                              tol_stationarity, tol_constraint,     penalty_init,
                              tol_terminal_trans, tol_terminal_rot, rotation_weight};
  for (double v : positives) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw std::invalid_argument("SolverConfig: tolerances, bounds and weights must be positive");
    }
  }
  if (!(penalty_growth > 1.0)) throw std::invalid_argument("SolverConfig: penalty_growth must exceed 1");
  if (max_outer_iters < 1 || max_inner_iters < 1) {
    throw std::invalid_argument("SolverConfig: iteration limits must be positive");
  }
}

std::vector<Waypoint> Scenario::goals() const {
  std::vector<Waypoint> out = waypoints;
  out.push_back({goal_left, goal_right});
  return out;
}

SimState Scenario::initial_state() const {
  SimState s;
  s.pose_obj_in_left = start_left;
  s.pose_obj_in_right = start_right;
  s.active_moving_palm = moving_palm(phase_at(0));
  s.heading = 0.0;
  return s;
}

void Scenario::validate() const {
  grasp.validate();
  const double r = grasp.palm_radius;
  auto check = [r](const PlanarPose& p, const char* what) {
    if (p.position().norm() > r) {
      throw InfeasibleScenario(std::string("scenario: ") + what + " lies outside the palm workspace");
    }
  };
  check(start_left, "start_left");
  check(start_right, "start_right");
  for (const Waypoint& w : goals()) {
    check(w.goal_left, "goal_left");
    check(w.goal_right, "goal_right");
  }
}

ConstraintMargin step_margin(const Twist& v, const PhaseMechanics& m, bool equal_contacts,
                             NonconvexPolicy policy) {
  const bool has_gravity = m.gravity.g_f.vec().squaredNorm() > 0.0;
  if (equal_contacts) {
    const double c = c_ratio(m);
    if (soc_constant(m.A, c, m.gravity) <= 0.0 && has_gravity &&
        policy == NonconvexPolicy::HalfSpaceFallback) {
      return nonconvex_fallback_margin(v, m.gravity);
    }
    return soc_equal_radius_margin(v, m.A, c, m.gravity);
  }
  const double norm = std::sqrt(m.A.inverse_quad(v.vec()));
  if (!has_gravity) {
    // Without tangential gravity the full twist margin is the quadratic part.
    const Eigen::Vector3d a_inv = m.A.inverse_diag();
    const Eigen::Vector3d quad = a_inv.cwiseProduct(m.B.diag()).cwiseProduct(a_inv) - a_inv;
    if (v.is_zero()) throw DegenerateInput("step_margin: zero twist");
    return {v.vec().dot(quad.cwiseProduct(v.vec())) / norm, MarginKind::DecomposedQuadratic};
  }
  const auto [first, second] = decomposed_margins(v, m.A, m.B, m.gravity);
  const ConstraintMargin quad{first.value / norm, first.kind};
  return quad.value >= second.value ? quad : second;
}

PlanReport plan_with_report(const Scenario& s, const SolverConfig& cfg) {
  cfg.validate();
  s.validate();
  PlanReport report;
  Plan& p = report.plan;
  const std::vector<Waypoint> goals = s.goals();
  SegmentPlanner planner(s, cfg);
  SimState state = s.initial_state();
  p.converged = true;
  for (std::size_t k = 0; k < goals.size(); ++k) {
    const SegmentResult seg = planner.solve(state, goals[k], static_cast<int>(k), report.merit_log);
    p.converged = p.converged && seg.converged;
    p.iterations += seg.iterations;
    for (int t = 0; t < cfg.horizon_n; ++t) {
      const std::size_t global = p.twists.size();
      p.twists.push_back(seg.twists[t]);
      p.phases.push_back(phase_at(global));
      const Palm fixed = static_palm(phase_at(global));
      if (!seg.twists[t].is_zero()) {
        state.pose_in(fixed) = integrate_pose(state.pose_in(fixed), seg.twists[t]);
        state.heading = state.heading + seg.twists[t].omega_z;
      }
    }
    p.waypoint_steps.push_back(p.twists.size());
  }
  fill_predictions(p, s, cfg);
  p.objective_value = tracking_objective(p, goals, cfg);
  return report;
}

Plan plan(const Scenario& s, const SolverConfig& cfg) { return plan_with_report(s, cfg).plan; }

Plan baseline_plan(const Scenario& s, const SolverConfig& cfg) {
  cfg.validate();
  s.validate();
  Plan p;
  const std::vector<Waypoint> goals = s.goals();
  const int half = cfg.horizon_n / 2;
  std::array<ChainPose, 2> cur = {to_chain(s.start_left), to_chain(s.start_right)};
  for (const Waypoint& w : goals) {
    const std::array<ChainPose, 2> target = {goal_near(w.goal_left, cur[kLeft].theta),
                                             goal_near(w.goal_right, cur[kRight].theta)};
    std::array<ChainPose, 2> step_delta;
    for (int c = 0; c < 2; ++c) {
      step_delta[c].pos = (target[c].pos - cur[c].pos) / half;
      step_delta[c].theta = (target[c].theta - cur[c].theta) / half;
    }
    for (int t = 0; t < cfg.horizon_n; ++t) {
      const std::size_t global = p.twists.size();
      const int c = updated_chain(global);
      const Eigen::Vector2d vxy = rot(-cur[c].theta) * step_delta[c].pos;
      const Twist v{vxy.x(), vxy.y(), step_delta[c].theta};
      p.twists.push_back(v);
      p.phases.push_back(phase_at(global));
      const PlanarPose next = integrate_pose(PlanarPose(cur[c].pos.x(), cur[c].pos.y(), cur[c].theta), v);
      cur[c].pos = next.position();
      cur[c].theta += v.omega_z;
    }
    p.waypoint_steps.push_back(p.twists.size());
  }
  fill_predictions(p, s, cfg);
  p.objective_value = tracking_objective(p, goals, cfg);
  p.converged = true;
  return p;
}

namespace detail {

double segment_merit(const Scenario& s, const SolverConfig& cfg, const std::vector<double>& z,
                     double multiplier, double penalty, std::vector<double>* grad) {
  cfg.validate();
  const SimState start = s.initial_state();
  const Waypoint goal = s.goals().front();
  SegmentSpec spec;
  spec.horizon = cfg.horizon_n;
  spec.start = {to_chain(start.pose_obj_in_left), to_chain(start.pose_obj_in_right)};
  spec.goal = {goal_near(goal.goal_left, start.pose_obj_in_left.theta()),
               goal_near(goal.goal_right, start.pose_obj_in_right.theta())};
  spec.heading0 = start.heading;
  spec.active = {cfg.horizon_n / 2, cfg.horizon_n / 2};
  const NormalForces nf = normal_forces(s.grasp);
  SegmentProblem prob(spec, make_slip_model(s.grasp, cfg.nonconvex), cfg, s.grasp.palm_radius,
                      s.grasp.mu_static_palm * nf.static_palm * cfg.max_step_trans);
  if (static_cast<int>(z.size()) != prob.num_vars()) {
    throw std::invalid_argument("segment_merit: expected 3 * horizon_n variables");
  }
  prob.set_multipliers(multiplier, penalty);
  const Eigen::VectorXd x = Eigen::Map<const Eigen::VectorXd>(z.data(), prob.num_vars());
  Eigen::VectorXd g;
  const double value = prob.merit(x, grad ? &g : nullptr);
  if (grad) grad->assign(g.data(), g.data() + g.size());
  return value;
}

}  // namespace detail

PlanErrors plan_errors(const RolloutResult& r) {
  auto rms = [](const std::vector<PoseError>& errs, bool rotation) {
    if (errs.empty()) return 0.0;
    double acc = 0.0;
    for (const PoseError& e : errs) {
      const double x = rotation ? e.rot : e.trans;
      acc += x * x;
    }
    return std::sqrt(acc / static_cast<double>(errs.size()));
  };
  constexpr double kDeg = 180.0 / std::numbers::pi;
  return {1e3 * rms(r.waypoint_errors_left, false), kDeg * rms(r.waypoint_errors_left, true),
          1e3 * rms(r.waypoint_errors_right, false), kDeg * rms(r.waypoint_errors_right, true)};
}

PlanErrors evaluate_plan(const Plan& p, const Scenario& s) { return plan_errors(rollout(p, s)); }

}  // namespace dls
