#include "barl/env.hpp"

#include <cmath>

#include "barl/angles.hpp"
#include "barl/errors.hpp"

namespace barl {

namespace {

double clip(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

void check_finite(const Eigen::VectorXd& s, const Eigen::VectorXd& a) {
  if (!s.allFinite() || !a.allFinite())
    throw ContractViolation("env step: non-finite input");
}

}  // namespace

Eigen::VectorXd EnvSpec::candidate_low() const {
  Eigen::VectorXd lo(input_dim());
  lo << query_low, action_low;
  return lo;
}

Eigen::VectorXd EnvSpec::candidate_high() const {
  Eigen::VectorXd hi(input_dim());
  hi << query_high, action_high;
  return hi;
}

Eigen::VectorXd Env::sample_start(Rng& rng) const {
  Eigen::VectorXd s = rng.uniform_vec(spec_.start_low, spec_.start_high);
  wrap_angle_entries(s, spec_.angle_dims);
  return s;
}

void Env::reward_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                       const Eigen::MatrixXd& s_next, Eigen::VectorXd& out) const {
  out.resize(s.rows());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    out[i] = reward(s.row(i).transpose(), a.row(i).transpose(), s_next.row(i).transpose());
}

void EnvDynamics::step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                             Eigen::MatrixXd& out) const {
  out.resize(s.rows(), s.cols());
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    out.row(i) = env_.step(s.row(i).transpose(), a.row(i).transpose()).transpose();
}

// ---------------------------------------------------------------------------
// Pendulum swing-up. State (theta, theta_dot), theta = 0 upright, unwrapped in
// the dynamics; the reward wraps the angle. Semi-implicit Euler, gym constants.
// ---------------------------------------------------------------------------
namespace {

class PendulumEnv final : public Env {
 public:
  explicit PendulumEnv(int horizon) {
    spec_.name = "pendulum";
    spec_.state_dim = 2;
    spec_.action_dim = 1;
    spec_.horizon = horizon > 0 ? horizon : 200;
    spec_.dt = 0.05;
    spec_.action_low = Eigen::VectorXd::Constant(1, -2.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 2.0);
    spec_.query_low.resize(2);
    spec_.query_low << -M_PI, -8.0;
    spec_.query_high.resize(2);
    spec_.query_high << M_PI, 8.0;
    spec_.start_low.resize(2);
    spec_.start_low << -M_PI, -1.0;
    spec_.start_high.resize(2);
    spec_.start_high << M_PI, 1.0;
    spec_.angle_dims = {0};
  }

  Eigen::VectorXd step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const override {
    check_finite(s, a);
    const double g = 10.0, m = 1.0, l = 1.0, dt = spec_.dt;
    double th = s[0], thdot = s[1];
    double u = clip(a[0], -2.0, 2.0);
    double thddot = 3.0 * g / (2.0 * l) * std::sin(th) + 3.0 / (m * l * l) * u;
    double thdot_next = clip(thdot + thddot * dt, -8.0, 8.0);
    double th_next = wrap_pi(th + thdot_next * dt);
    Eigen::VectorXd out(2);
    out << th_next, thdot_next;
    return out;
  }

  double reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                const Eigen::VectorXd&) const override {
    double u = clip(a[0], -2.0, 2.0);
    double th = wrap_pi(s[0]);
    return -(th * th + 0.1 * s[1] * s[1] + 0.001 * u * u);
  }
};

// ---------------------------------------------------------------------------
// Cartpole swing-up. State (x, x_dot, theta, theta_dot), theta = 0 upright;
// starts hanging near theta = pi. Reward is a negative logistic of the
// pole-tip distance to the upright goal, evaluated on the reached state.
// dt = 0.1 so the 15-step planning window spans 1.5 s; swing-up plus catch
// is not expressible in a shorter window under the force limit.
// ---------------------------------------------------------------------------
class CartpoleEnv final : public Env {
 public:
  explicit CartpoleEnv(int horizon) {
    spec_.name = "cartpole";
    spec_.state_dim = 4;
    spec_.action_dim = 1;
    spec_.horizon = horizon > 0 ? horizon : 100;
    spec_.dt = 0.1;
    spec_.action_low = Eigen::VectorXd::Constant(1, -10.0);
    spec_.action_high = Eigen::VectorXd::Constant(1, 10.0);
    spec_.query_low.resize(4);
    spec_.query_low << -3.0, -6.0, -M_PI, -10.0;
    spec_.query_high.resize(4);
    spec_.query_high << 3.0, 6.0, M_PI, 10.0;
    spec_.start_low.resize(4);
    spec_.start_low << -0.05, -0.05, M_PI - 0.05, -0.05;
    spec_.start_high.resize(4);
    spec_.start_high << 0.05, 0.05, M_PI + 0.05, 0.05;
    spec_.angle_dims = {2};
  }

  Eigen::VectorXd step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const override {
    check_finite(s, a);
    const double mc = 1.0, mp = 0.1, l = 0.5, g = 9.8, dt = spec_.dt;
    double x = s[0], xdot = s[1], th = s[2], thdot = s[3];
    double f = clip(a[0], -10.0, 10.0);
    double sth = std::sin(th), cth = std::cos(th);
    double tmp = (f + mp * l * thdot * thdot * sth) / (mc + mp);
    double thddot = (g * sth - cth * tmp) / (l * (4.0 / 3.0 - mp * cth * cth / (mc + mp)));
    double xddot = tmp - mp * l * thddot * cth / (mc + mp);
    // semi-implicit: velocities first, positions with the updated velocities
    double xdot_next = xdot + dt * xddot;
    double thdot_next = thdot + dt * thddot;
    Eigen::VectorXd out(4);
    out << x + dt * xdot_next, xdot_next, wrap_pi(th + dt * thdot_next), thdot_next;
    return out;
  }

  double reward(const Eigen::VectorXd&, const Eigen::VectorXd&,
                const Eigen::VectorXd& s_next) const override {
    const double l = 0.5;
    double tip_x = s_next[0] + 2.0 * l * std::sin(s_next[2]);
    double tip_y = 2.0 * l * std::cos(s_next[2]);
    double dist = std::sqrt(tip_x * tip_x + (tip_y - 2.0 * l) * (tip_y - 2.0 * l));
    return -1.0 / (1.0 + std::exp(-8.0 * (dist - 0.4)));
  }
};

// ---------------------------------------------------------------------------
// Lava path. 2-D double integrator (position, velocity), two lava rectangles
// with a corridor at y in (0.45, 0.55); goal at (0.9, 0.5).
// ---------------------------------------------------------------------------
class LavaPathEnv final : public Env {
 public:
  explicit LavaPathEnv(int horizon) {
    spec_.name = "lavapath";
    spec_.state_dim = 4;
    spec_.action_dim = 2;
    spec_.horizon = horizon > 0 ? horizon : 50;
    spec_.dt = 0.1;
    spec_.action_low = Eigen::VectorXd::Constant(2, -1.0);
    spec_.action_high = Eigen::VectorXd::Constant(2, 1.0);
    spec_.query_low.resize(4);
    spec_.query_low << 0.0, 0.0, -1.0, -1.0;
    spec_.query_high.resize(4);
    spec_.query_high << 1.0, 1.0, 1.0, 1.0;
    spec_.start_low.resize(4);
    spec_.start_low << 0.05, 0.45, 0.0, 0.0;
    spec_.start_high.resize(4);
    spec_.start_high << 0.15, 0.55, 0.0, 0.0;
  }

  static bool in_lava(double px, double py) {
    return px >= 0.3 && px <= 0.7 &&
           ((py >= 0.0 && py <= 0.45) || (py >= 0.55 && py <= 1.0));
  }

  Eigen::VectorXd step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const override {
    check_finite(s, a);
    const double dt = spec_.dt;
    double ax = clip(a[0], -1.0, 1.0), ay = clip(a[1], -1.0, 1.0);
    double vx = clip(s[2] + ax * dt, -1.0, 1.0);
    double vy = clip(s[3] + ay * dt, -1.0, 1.0);
    Eigen::VectorXd out(4);
    out << s[0] + vx * dt, s[1] + vy * dt, vx, vy;
    return out;
  }

  double reward(const Eigen::VectorXd&, const Eigen::VectorXd&,
                const Eigen::VectorXd& s_next) const override {
    const double gx = 0.9, gy = 0.5;
    double dx = s_next[0] - gx, dy = s_next[1] - gy;
    double r = -(dx * dx + dy * dy);
    if (in_lava(s_next[0], s_next[1])) r -= 500.0;
    return r;
  }
};

}  // namespace

std::unique_ptr<Env> make_env(const std::string& name, int horizon_override) {
  if (name == "pendulum") return std::make_unique<PendulumEnv>(horizon_override);
  if (name == "cartpole") return std::make_unique<CartpoleEnv>(horizon_override);
  if (name == "lavapath") return std::make_unique<LavaPathEnv>(horizon_override);
  throw ContractViolation("unknown environment: " + name);
}

}  // namespace barl
