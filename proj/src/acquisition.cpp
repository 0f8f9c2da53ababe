#include "barl/acquisition.hpp"

#include <chrono>
#include <cmath>

#include "barl/errors.hpp"
#include "barl/thread_pool.hpp"

namespace barl {

namespace {

// stream tags within one acquisition iteration
constexpr std::uint64_t kTagStart = 0x51;
constexpr std::uint64_t kTagPath = 0x52;
constexpr std::uint64_t kTagRollout = 0x53;

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

std::vector<Trajectory> sample_optimal_trajectories(
    const GpModel& model, const Env& env, const PlanSpec& rollout_spec, int n,
    std::uint64_t base_seed, int threads, int feature_count,
    double* sample_seconds, double* rollout_seconds,
    std::vector<PosteriorPath>* paths_out) {
  if (n < 1) throw ContractViolation("sample_optimal_trajectories: n must be >= 1");
  const int steps = env.spec().horizon;

  Rng start_rng = Rng::derive(base_seed, {kTagStart});
  const Eigen::VectorXd s0 = env.sample_start(start_rng);

  auto t0 = std::chrono::steady_clock::now();
  std::vector<PosteriorPath> paths;
  paths.reserve(n);
  for (int l = 0; l < n; ++l) {
    Rng rng = Rng::derive(base_seed, {kTagPath, static_cast<std::uint64_t>(l)});
    paths.emplace_back(model, rng, feature_count);
  }
  if (sample_seconds != nullptr) *sample_seconds = seconds_since(t0);

  t0 = std::chrono::steady_clock::now();
  RewardFn reward = [&env](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& sn, Eigen::VectorXd& out) {
    env.reward_batch(s, a, sn, out);
  };
  std::vector<Trajectory> trajectories(n);
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t l) {
        Rng rng = Rng::derive(base_seed, {kTagRollout, static_cast<std::uint64_t>(l)});
        PathDynamics dyn(paths[l]);
        EpisodeResult ep = run_mpc_episode(s0, steps, dyn, reward, dyn, rollout_spec, rng);
        Trajectory& tr = trajectories[l];
        tr.states = std::move(ep.states);
        tr.actions = std::move(ep.actions);
        tr.inputs.resize(steps, model.input_dim());
        tr.inputs << tr.states.topRows(steps), tr.actions;
      },
      threads);
  if (rollout_seconds != nullptr) *rollout_seconds = seconds_since(t0);
  if (paths_out != nullptr) *paths_out = std::move(paths);
  return trajectories;
}

EigTauStar::EigTauStar(const GpModel& model, const std::vector<Trajectory>& trajectories,
                       int threads)
    : model_(&model) {
  if (trajectories.empty())
    throw ContractViolation("eig_tau_star: need at least one trajectory");
  noise_ = model.noise_vector();
  floor_ = model.jitter_vector();
  conditioners_.resize(trajectories.size(),
                       ConditionedGp(model, Eigen::MatrixXd(0, model.input_dim())));
  parallel_for(
      trajectories.size(),
      [&](std::size_t l) {
        conditioners_[l] = ConditionedGp(model, trajectories[l].inputs);
      },
      threads);
}

double EigTauStar::value(const Eigen::VectorXd& candidate) const {
  return values(candidate.transpose(), 1)[0];
}

Eigen::VectorXd EigTauStar::values(const Eigen::MatrixXd& candidates, int threads) const {
  const Eigen::Index b = candidates.rows();
  const int n = static_cast<int>(conditioners_.size());
  const int out_dims = model_->params().output_dims();

  // base triangular solves are shared by the prior entropy and by every
  // trajectory conditioner
  std::vector<Eigen::MatrixXd> base_solves(out_dims);
  Eigen::MatrixXd base_var(b, out_dims);
  if (model_->data().size() > 0) {
    for (int d = 0; d < out_dims; ++d) {
      base_solves[d] = model_->kernel_cross_block(d, candidates);
      model_->chol_factor(d).triangularView<Eigen::Lower>().solveInPlace(base_solves[d]);
      base_var.col(d) = (model_->params().dims[d].signal_var -
                         base_solves[d].colwise().squaredNorm().transpose().array())
                            .max(0.0);
    }
  } else {
    for (int d = 0; d < out_dims; ++d)
      base_var.col(d).setConstant(model_->params().dims[d].signal_var);
  }

  // conditioned entropies per trajectory; parallel over trajectories so the
  // per-candidate arithmetic never depends on the thread count
  Eigen::MatrixXd cond_entropy(b, n);
  parallel_for(
      static_cast<std::size_t>(n),
      [&](std::size_t l) {
        Eigen::MatrixXd v = conditioners_[l].variance_batch_presolved(candidates, base_solves);
        for (Eigen::Index i = 0; i < b; ++i)
          cond_entropy(i, l) = predictive_entropy(
              v.row(i).transpose().cwiseMax(floor_), noise_);
      },
      threads);

  Eigen::VectorXd out(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    double h0 = predictive_entropy(base_var.row(i).transpose().cwiseMax(floor_), noise_);
    out[i] = h0 - cond_entropy.row(i).mean();
  }
  return out;
}

double eig_tau_star(const GpModel& model, const std::vector<Trajectory>& trajectories,
                    const Eigen::VectorXd& candidate) {
  return EigTauStar(model, trajectories, 1).value(candidate);
}

double eig_t(const GpModel& model, const Eigen::VectorXd& candidate) {
  GpPrediction p = model.predict(candidate);
  return predictive_entropy(p.variance.cwiseMax(model.jitter_vector()),
                            model.noise_vector());
}

Eigen::VectorXd eig_t_batch(const GpModel& model, const Eigen::MatrixXd& candidates) {
  Eigen::MatrixXd var;
  model.predict_variance_rows(candidates, var);
  const Eigen::VectorXd noise = model.noise_vector();
  const Eigen::VectorXd floor = model.jitter_vector();
  Eigen::VectorXd out(candidates.rows());
  for (Eigen::Index i = 0; i < candidates.rows(); ++i)
    out[i] = predictive_entropy(var.row(i).transpose().cwiseMax(floor), noise);
  return out;
}

std::size_t choose_query_index(const std::vector<AcqScore>& scores) {
  if (scores.empty()) throw ContractViolation("choose_query: empty score list");
  std::size_t best = 0;
  for (std::size_t i = 1; i < scores.size(); ++i)
    if (scores[i].value > scores[best].value) best = i;
  return best;
}

const Eigen::VectorXd& choose_query(const std::vector<AcqScore>& scores) {
  return scores[choose_query_index(scores)].candidate;
}

}  // namespace barl
