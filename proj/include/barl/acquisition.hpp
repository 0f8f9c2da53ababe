#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "barl/env.hpp"
#include "barl/gp.hpp"
#include "barl/icem.hpp"
#include "barl/posterior_path.hpp"

namespace barl {

// One sampled optimal trajectory: the states visited by the MPC policy on a
// posterior function sample, plus the (s_t, a_t) conditioning inputs.
struct Trajectory {
  Eigen::MatrixXd states;   // (H + 1) x d
  Eigen::MatrixXd actions;  // H x n_a
  Eigen::MatrixXd inputs;   // H x (d + n_a)
};

// Draws one start state, samples n posterior paths and rolls the MPC policy
// out on each path for the environment horizon. base_seed must already
// encode the run seed and iteration; per-path streams are derived from it by
// index, so results are identical for any thread count.
std::vector<Trajectory> sample_optimal_trajectories(
    const GpModel& model, const Env& env, const PlanSpec& rollout_spec, int n,
    std::uint64_t base_seed, int threads = 0, int feature_count = kDefaultFeatureCount,
    double* sample_seconds = nullptr, double* rollout_seconds = nullptr,
    std::vector<PosteriorPath>* paths_out = nullptr);

// Expected information gain about the optimal trajectory, Monte-Carlo form:
// prior predictive entropy minus the average entropy after conditioning on
// each trajectory's inputs as noiseless datapoints. Builds the augmented
// factorizations once, then scores any number of candidates.
class EigTauStar {
 public:
  EigTauStar(const GpModel& model, const std::vector<Trajectory>& trajectories,
             int threads = 0);

  double value(const Eigen::VectorXd& candidate) const;
  Eigen::VectorXd values(const Eigen::MatrixXd& candidates, int threads = 0) const;

 private:
  const GpModel* model_;
  std::vector<ConditionedGp> conditioners_;
  Eigen::VectorXd noise_, floor_;
};

double eig_tau_star(const GpModel& model, const std::vector<Trajectory>& trajectories,
                    const Eigen::VectorXd& candidate);

// Baseline acquisition: predictive entropy of the transition model.
double eig_t(const GpModel& model, const Eigen::VectorXd& candidate);
Eigen::VectorXd eig_t_batch(const GpModel& model, const Eigen::MatrixXd& candidates);

struct AcqScore {
  Eigen::VectorXd candidate;
  double value = 0.0;
};

// Argmax over scores; ties break toward the lowest index.
std::size_t choose_query_index(const std::vector<AcqScore>& scores);
const Eigen::VectorXd& choose_query(const std::vector<AcqScore>& scores);

}  // namespace barl
