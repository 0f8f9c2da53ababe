#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "barl/env.hpp"
#include "barl/errors.hpp"
#include "barl/gp.hpp"

using namespace barl;

TEST_SUITE_BEGIN("envs");

TEST_CASE("pendulum equilibrium at upright rest") {
  auto env = make_env("pendulum");
  Eigen::Vector2d s(0.0, 0.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd sn = env->step(s, a);
  CHECK(sn[0] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(sn[1] == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("pendulum step matches hand integration") {
  auto env = make_env("pendulum");
  // theta = pi, torque 2: thddot = 15 sin(pi) + 3 * 2 = 6
  // thdot' = 0 + 6 * 0.05 = 0.3; theta' = pi + 0.3 * 0.05, wrapped
  Eigen::Vector2d s(M_PI, 0.0);
  Eigen::VectorXd a = Eigen::VectorXd::Constant(1, 2.0);
  Eigen::VectorXd sn = env->step(s, a);
  double thddot = 15.0 * std::sin(M_PI) + 6.0;
  double th_next = M_PI + 0.05 * (0.0 + thddot * 0.05);
  CHECK(sn[1] == doctest::Approx(0.3).epsilon(1e-12));
  CHECK(sn[0] == doctest::Approx(th_next - 2.0 * M_PI).epsilon(1e-12));
}

TEST_CASE("angle coordinates stay on the circle across the seam") {
  auto env = make_env("pendulum");
  Rng rng(101);
  for (int i = 0; i < 200; ++i) {
    Eigen::VectorXd s = rng.uniform_vec(env->spec().query_low, env->spec().query_high);
    Eigen::VectorXd a = rng.uniform_vec(env->spec().action_low, env->spec().action_high);
    Eigen::VectorXd sn = env->step(s, a);
    CHECK(sn[0] >= -M_PI);
    CHECK(sn[0] < M_PI);
  }
  // geodesic delta across the seam is the physical step, not +-2 pi
  Eigen::Vector2d near_seam(M_PI - 0.01, 7.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  Eigen::VectorXd sn = env->step(near_seam, a);
  Dataset data;
  data.add(near_seam, a, sn);
  Eigen::MatrixXd deltas = data.deltas(env->spec().angle_dims);
  CHECK(deltas(0, 0) == doctest::Approx(sn[1] * 0.05).epsilon(1e-9));
  CHECK(std::fabs(deltas(0, 0)) < 1.0);
}

TEST_CASE("pendulum reward is zero at the goal") {
  auto env = make_env("pendulum");
  Eigen::Vector2d s(0.0, 0.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  CHECK(env->reward(s, a, env->step(s, a)) == doctest::Approx(0.0));
  // wrapped angle: 2*pi is the goal too
  Eigen::Vector2d s2(2.0 * M_PI, 0.0);
  CHECK(env->reward(s2, a, s2) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("lava path free drift") {
  auto env = make_env("lavapath");
  Eigen::VectorXd s(4);
  s << 0.2, 0.5, 0.3, -0.1;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  Eigen::VectorXd sn = env->step(s, a);
  CHECK(sn[0] == doctest::Approx(0.2 + 0.3 * 0.1).epsilon(1e-15));
  CHECK(sn[1] == doctest::Approx(0.5 - 0.1 * 0.1).epsilon(1e-15));
  CHECK(sn[2] == doctest::Approx(0.3));
  CHECK(sn[3] == doctest::Approx(-0.1));
}

TEST_CASE("lava path rewards: goal and lava") {
  auto env = make_env("lavapath");
  Eigen::VectorXd at_goal(4);
  at_goal << 0.9, 0.5, 0.0, 0.0;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(2);
  CHECK(env->reward(at_goal, a, env->step(at_goal, a)) == doctest::Approx(0.0));

  // inside lava at distance 0.5 from the goal: (0.4, 0.5) is in the corridor,
  // use (0.5, 0.2) -> dist^2 = 0.16 + 0.09 = 0.25
  Eigen::VectorXd in_lava(4);
  in_lava << 0.5, 0.2, 0.0, 0.0;
  CHECK(env->reward(at_goal, a, in_lava) == doctest::Approx(-0.25 - 500.0));
}

TEST_CASE("cartpole reward is bounded and best near the goal") {
  auto env = make_env("cartpole");
  Eigen::VectorXd up(4), down(4);
  up << 0.0, 0.0, 0.0, 0.0;
  down << 0.0, 0.0, M_PI, 0.0;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  double r_up = env->reward(up, a, up);
  double r_down = env->reward(down, a, down);
  CHECK(r_up < 0.0);
  CHECK(r_up > -0.05);
  CHECK(r_down < -0.95);
}

TEST_CASE("sample_start stays in the stated support and is seed-deterministic") {
  for (const char* name : {"pendulum", "cartpole", "lavapath"}) {
    auto env = make_env(name);
    const auto& spec = env->spec();
    auto is_angle = [&](int d) {
      return std::count(spec.angle_dims.begin(), spec.angle_dims.end(), d) > 0;
    };
    Rng r1(5), r2(5);
    for (int i = 0; i < 50; ++i) {
      Eigen::VectorXd s = env->sample_start(r1);
      Eigen::VectorXd s2 = env->sample_start(r2);
      CHECK(s == s2);
      for (int d = 0; d < spec.state_dim; ++d) {
        bool in_box = false;
        // angle coordinates report the wrapped representative of the support
        for (double shift : {0.0, 2.0 * M_PI, -2.0 * M_PI}) {
          double v = s[d] + (is_angle(d) ? shift : 0.0);
          in_box = in_box || (v >= spec.start_low[d] - 1e-12 &&
                              v <= spec.start_high[d] + 1e-12);
        }
        CHECK(in_box);
      }
    }
  }
}

TEST_CASE("10000 random in-box steps stay finite and rewards stay nonpositive") {
  for (const char* name : {"pendulum", "cartpole", "lavapath"}) {
    auto env = make_env(name);
    Rng rng(17);
    bool all_finite = true, all_nonpos = true;
    for (int i = 0; i < 10000; ++i) {
      Eigen::VectorXd s = rng.uniform_vec(env->spec().query_low, env->spec().query_high);
      Eigen::VectorXd a = rng.uniform_vec(env->spec().action_low, env->spec().action_high);
      Eigen::VectorXd sn = env->step(s, a);
      all_finite = all_finite && sn.allFinite();
      all_nonpos = all_nonpos && (env->reward(s, a, sn) <= 1e-12);
    }
    CHECK(all_finite);
    CHECK(all_nonpos);
  }
}

TEST_CASE("transition oracle is stateless: interleaved queries match") {
  auto env = make_env("pendulum");
  Rng rng(3);
  std::vector<Eigen::VectorXd> states, actions, sequential;
  for (int i = 0; i < 20; ++i) {
    states.push_back(rng.uniform_vec(env->spec().query_low, env->spec().query_high));
    actions.push_back(rng.uniform_vec(env->spec().action_low, env->spec().action_high));
  }
  for (int i = 0; i < 20; ++i) sequential.push_back(env->step(states[i], actions[i]));
  // interleave two "episodes" worth of queries in a scrambled order
  for (int i = 19; i >= 0; i -= 2) CHECK(env->step(states[i], actions[i]) == sequential[i]);
  for (int i = 18; i >= 0; i -= 2) CHECK(env->step(states[i], actions[i]) == sequential[i]);
}

TEST_CASE("non-finite input is rejected") {
  auto env = make_env("pendulum");
  Eigen::Vector2d s(std::nan(""), 0.0);
  Eigen::VectorXd a = Eigen::VectorXd::Zero(1);
  CHECK_THROWS_AS(env->step(s, a), ContractViolation);
}

TEST_CASE("unknown environment name is rejected") {
  CHECK_THROWS_AS(make_env("reacher"), ContractViolation);
}

TEST_CASE("query box contains the start distribution support") {
  for (const char* name : {"pendulum", "cartpole", "lavapath"}) {
    auto env = make_env(name);
    const auto& spec = env->spec();
    Rng rng(7);
    for (int i = 0; i < 200; ++i) {
      Eigen::VectorXd s = env->sample_start(rng);
      CHECK(((s - spec.query_low).array() >= -1e-12).all());
      CHECK(((spec.query_high - s).array() >= -1e-12).all());
    }
    CHECK(spec.query_low.allFinite());
    CHECK(spec.query_high.allFinite());
  }
}
