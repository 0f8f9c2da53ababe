#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barl/dynamics.hpp"
#include "barl/rng.hpp"

namespace barl {

struct EnvSpec;

// Improved-CEM hyperparameters. Per-environment defaults carry the planner
// settings used throughout the experiments.
struct PlanSpec {
  int base_samples = 25;
  int elites = 3;
  int horizon = 20;
  int iterations = 3;
  int replan_period = 6;
  double beta = 3.0;    // colored-noise exponent
  double gamma = 1.25;  // population decay
  double xi = 0.3;      // elite caching fraction
  Eigen::VectorXd action_low, action_high;

  int action_dim() const { return static_cast<int>(action_low.size()); }
  void validate() const;
  static PlanSpec defaults_for(const EnvSpec& env);
};

struct Plan {
  Eigen::MatrixXd actions;  // horizon x n_a, the best-seen sequence
  Eigen::MatrixXd mean;     // final sampling mean
  Eigen::MatrixXd stddev;   // final sampling stddev
  double predicted_return = 0.0;
  // instrumentation: fresh samples drawn per round, best-seen after each round
  std::vector<int> round_populations;
  std::vector<double> round_best;
};

// Gaussian noise with power spectral density ~ 1/f^beta per (sample, action
// dim) time series, synthesized in the frequency domain and normalized to
// unit variance per timestep. beta = 0 gives exact white noise.
std::vector<Eigen::MatrixXd> colored_noise(double beta, int horizon, int n_a,
                                           int count, Rng& rng);

// One receding-horizon optimization: decaying population, colored-noise
// sampling around the running mean, elite caching across rounds, the current
// mean added as a candidate in the final round. Returns the best-seen
// sequence over all rounds.
Plan icem_plan(const DynamicsFn& dynamics, const RewardFn& reward,
               const Eigen::VectorXd& s0, const PlanSpec& spec,
               const Plan* warm_start, Rng& rng);

// MPC policy state: replans every replan_period steps (warm-started by
// shifting the previous mean) and plays back the stored sequence in between.
class MpcController {
 public:
  explicit MpcController(PlanSpec spec);

  Eigen::VectorXd act(const Eigen::VectorXd& s, const DynamicsFn& dynamics,
                      const RewardFn& reward, Rng& rng);
  void reset();
  int plan_count() const { return plan_count_; }

 private:
  PlanSpec spec_;
  std::optional<Plan> plan_;
  int step_in_plan_ = 0;
  int plan_count_ = 0;
};

struct EpisodeResult {
  double ret = 0.0;
  Eigen::MatrixXd states;   // (steps + 1) x d
  Eigen::MatrixXd actions;  // steps x n_a
};

// Rolls the MPC policy out for `steps` steps: plans against plan_dynamics,
// executes on exec_dynamics, accumulates the given reward.
EpisodeResult run_mpc_episode(const Eigen::VectorXd& s0, int steps,
                              const DynamicsFn& plan_dynamics, const RewardFn& reward,
                              const DynamicsFn& exec_dynamics, const PlanSpec& spec,
                              Rng& rng);

}  // namespace barl
