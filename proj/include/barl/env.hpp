#pragma once

#include <memory>
#include <string>

#include <Eigen/Core>

#include "barl/dynamics.hpp"
#include "barl/rng.hpp"

namespace barl {

// Static description of one control problem: dimensions, bounds, horizon,
// start distribution support and the query box used for candidate sampling.
struct EnvSpec {
  std::string name;
  int state_dim = 0;
  int action_dim = 0;
  int horizon = 0;
  double dt = 0.0;
  Eigen::VectorXd action_low, action_high;
  Eigen::VectorXd query_low, query_high;  // state part of the query box
  Eigen::VectorXd start_low, start_high;  // support of p_0 (uniform box)
  // state coordinates that live on the circle; step() wraps them to
  // [-pi, pi), which keeps optimal trajectories inside the query box
  std::vector<int> angle_dims;

  int input_dim() const { return state_dim + action_dim; }
  // full (state, action) candidate box
  Eigen::VectorXd candidate_low() const;
  Eigen::VectorXd candidate_high() const;
};

// Ground-truth environment: deterministic transition oracle plus known reward.
// step/reward are pure; the transition oracle has no episode state (queries at
// arbitrary (s, a) are the point of the setting).
class Env {
 public:
  virtual ~Env() = default;

  const EnvSpec& spec() const { return spec_; }

  // Deterministic next state; the action is clipped to bounds first.
  virtual Eigen::VectorXd step(const Eigen::VectorXd& s,
                               const Eigen::VectorXd& a) const = 0;

  virtual double reward(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                        const Eigen::VectorXd& s_next) const = 0;

  Eigen::VectorXd sample_start(Rng& rng) const;

  void reward_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                    const Eigen::MatrixXd& s_next, Eigen::VectorXd& out) const;

 protected:
  EnvSpec spec_;
};

std::unique_ptr<Env> make_env(const std::string& name, int horizon_override = 0);

// Adapter exposing the ground-truth step as planner dynamics.
class EnvDynamics final : public DynamicsFn {
 public:
  explicit EnvDynamics(const Env& env) : env_(env) {}
  void step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                  Eigen::MatrixXd& out) const override;

 private:
  const Env& env_;
};

}  // namespace barl
