#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "barl/acquisition.hpp"
#include "barl/env.hpp"
#include "barl/gp.hpp"
#include "barl/icem.hpp"

namespace barl {

enum class AcquisitionKind { kBarl, kEigT, kRandom, kRolloutMpc };

AcquisitionKind acquisition_from_string(const std::string& name);
std::string to_string(AcquisitionKind kind);

// Fully resolved configuration of one run. defaults_for() fills the
// per-environment budgets, evaluation cadence and planner settings.
struct RunConfig {
  std::string env_name = "pendulum";
  AcquisitionKind acquisition = AcquisitionKind::kBarl;
  std::uint64_t seed = 0;
  int budget = 200;
  int candidates = 1000;       // acquisition candidate set size
  int path_samples = 15;       // posterior function samples per iteration
  int eval_episodes = 5;
  int eval_period = 5;         // iterations between policy evaluations
  int refit_period = 10;       // acquired points between hyperparameter refits
  int fit_restarts = 5;
  int feature_count = 512;
  int env_horizon = 0;         // 0: environment default
  int threads = 0;             // 0: BARL_THREADS or hardware
  bool stop_on_solved = false;
  PlanSpec plan_rollout;       // budget for posterior-sample rollouts
  PlanSpec plan_eval;          // budget for evaluation / data collection

  static RunConfig defaults_for(const std::string& env_name);
};

struct QueryRecord {
  int iteration = 0;            // 0 is the initial random query
  Eigen::VectorXd input;        // (s, a), d + n_a entries
  Eigen::VectorXd next_state;
  double acq_value = 0.0;
  // posterior predictive entropy at the query input just before and after
  // incorporating it (diagnostics; not serialized)
  double entropy_before = 0.0;
  double entropy_after = 0.0;
};

struct EvalRecord {
  int n_queries = 0;            // dataset size when evaluated
  double mean_return = 0.0;
  double se_return = 0.0;
  double normalized = 0.0;
  bool solved = false;
  std::vector<Eigen::MatrixXd> episode_states;
  std::vector<Eigen::MatrixXd> episode_actions;
};

struct PhaseTime {
  int iteration = 0;
  std::string phase;            // fit | sample_paths | rollout_tau | score | query | eval
  double seconds = 0.0;
};

struct RunLog {
  RunConfig config;
  std::vector<QueryRecord> queries;
  std::vector<EvalRecord> evals;
  std::vector<PhaseTime> timings;
  double gt_return = 0.0;
  double rand_return = 0.0;
  int solved_at = -1;           // dataset size at the first solved evaluation
  std::vector<Eigen::VectorXd> eval_starts;
  Dataset final_dataset;
  KernelParams final_params;
};

struct EvalResult {
  double mean = 0.0;
  double se = 0.0;
  std::vector<Eigen::MatrixXd> states;
  std::vector<Eigen::MatrixXd> actions;
};

// Runs the MPC policy that plans against plan_dynamics on the ground-truth
// environment for seed-fixed start states; returns mean and standard error
// of the episodic return.
EvalResult evaluate_policy_dynamics(const DynamicsFn& plan_dynamics, const Env& env,
                                    const PlanSpec& spec, int episodes,
                                    std::uint64_t seed, int threads = 0);

EvalResult evaluate_policy(const GpModel& model, const Env& env, const PlanSpec& spec,
                           int episodes, std::uint64_t seed, int threads = 0);

// Ground-truth MPC return and uniform-random-policy return over the same
// seed-fixed start states; a run is solved when
// (R - rand) / (gt - rand) >= 0.9. Throws if gt <= rand.
std::pair<double, double> solved_threshold(const Env& env, const PlanSpec& eval_spec,
                                           std::uint64_t seed, int threads = 0);

inline constexpr double kSolvedBand = 0.9;

// Algorithm front end: the query strategies (barl, eig_t, random) and the
// episodic rollout-MPC baseline, all sharing the evaluation protocol.
RunLog run_barl(const RunConfig& config);

}  // namespace barl
