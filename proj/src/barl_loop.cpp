#include "barl/barl_loop.hpp"

#include <chrono>
#include <cmath>

#include "barl/errors.hpp"
#include "barl/thread_pool.hpp"

namespace barl {

namespace {

// stream tags (run-level)
constexpr std::uint64_t kTagInit = 0x11;
constexpr std::uint64_t kTagFit = 0x12;
constexpr std::uint64_t kTagIter = 0x13;
constexpr std::uint64_t kTagCandidates = 0x14;
constexpr std::uint64_t kTagPick = 0x15;
constexpr std::uint64_t kTagEvalStart = 0x16;
constexpr std::uint64_t kTagEvalCtrl = 0x17;
constexpr std::uint64_t kTagRandPolicy = 0x19;
constexpr std::uint64_t kTagCollect = 0x1A;
constexpr std::uint64_t kTagCollectCtrl = 0x1B;

class PhaseTimer {
 public:
  explicit PhaseTimer(RunLog& log) : log_(log) {}
  template <typename F>
  auto time(int iteration, const char* phase, F&& fn) {
    auto t0 = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      log_.timings.push_back({iteration, phase, elapsed(t0)});
    } else {
      auto result = fn();
      log_.timings.push_back({iteration, phase, elapsed(t0)});
      return result;
    }
  }
  void record(int iteration, const char* phase, double seconds) {
    log_.timings.push_back({iteration, phase, seconds});
  }

 private:
  static double elapsed(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  RunLog& log_;
};

RewardFn make_reward(const Env& env) {
  return [&env](const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                const Eigen::MatrixXd& sn, Eigen::VectorXd& out) {
    env.reward_batch(s, a, sn, out);
  };
}

Eigen::VectorXd fixed_eval_start(const Env& env, std::uint64_t seed, int episode) {
  Rng rng = Rng::derive(seed, {kTagEvalStart, static_cast<std::uint64_t>(episode)});
  return env.sample_start(rng);
}

double entropy_at(const GpModel& model, const Eigen::VectorXd& input) {
  GpPrediction p = model.predict(input);
  return predictive_entropy(p.variance.cwiseMax(model.jitter_vector()),
                            model.noise_vector());
}

}  // namespace

AcquisitionKind acquisition_from_string(const std::string& name) {
  if (name == "barl") return AcquisitionKind::kBarl;
  if (name == "eig_t") return AcquisitionKind::kEigT;
  if (name == "random") return AcquisitionKind::kRandom;
  if (name == "rollout_mpc") return AcquisitionKind::kRolloutMpc;
  throw ContractViolation("unknown acquisition kind: " + name);
}

std::string to_string(AcquisitionKind kind) {
  switch (kind) {
    case AcquisitionKind::kBarl: return "barl";
    case AcquisitionKind::kEigT: return "eig_t";
    case AcquisitionKind::kRandom: return "random";
    case AcquisitionKind::kRolloutMpc: return "rollout_mpc";
  }
  return "?";
}

RunConfig RunConfig::defaults_for(const std::string& env_name) {
  RunConfig cfg;
  cfg.env_name = env_name;
  auto env = make_env(env_name);
  cfg.plan_eval = PlanSpec::defaults_for(env->spec());
  cfg.plan_rollout = cfg.plan_eval;
  if (env_name == "pendulum") {
    cfg.budget = 200;
    cfg.eval_period = 5;
  } else if (env_name == "cartpole") {
    cfg.budget = 300;
    cfg.eval_period = 10;
  } else if (env_name == "lavapath") {
    cfg.budget = 100;
    cfg.eval_period = 5;
  }
  return cfg;
}

EvalResult evaluate_policy_dynamics(const DynamicsFn& plan_dynamics, const Env& env,
                                    const PlanSpec& spec, int episodes,
                                    std::uint64_t seed, int threads) {
  if (episodes < 1) throw ContractViolation("evaluate_policy: episodes must be >= 1");
  RewardFn reward = make_reward(env);
  EnvDynamics exec(env);
  const int steps = env.spec().horizon;

  EvalResult res;
  res.states.resize(episodes);
  res.actions.resize(episodes);
  Eigen::VectorXd returns(episodes);
  parallel_for(
      static_cast<std::size_t>(episodes),
      [&](std::size_t e) {
        Eigen::VectorXd s0 = fixed_eval_start(env, seed, static_cast<int>(e));
        Rng rng = Rng::derive(seed, {kTagEvalCtrl, static_cast<std::uint64_t>(e)});
        EpisodeResult ep = run_mpc_episode(s0, steps, plan_dynamics, reward, exec, spec, rng);
        returns[e] = ep.ret;
        res.states[e] = std::move(ep.states);
        res.actions[e] = std::move(ep.actions);
      },
      threads);

  res.mean = returns.mean();
  if (episodes > 1) {
    double var = (returns.array() - res.mean).square().sum() / (episodes - 1);
    res.se = std::sqrt(var / episodes);
  }
  return res;
}

EvalResult evaluate_policy(const GpModel& model, const Env& env, const PlanSpec& spec,
                           int episodes, std::uint64_t seed, int threads) {
  GpMeanDynamics dyn(model);
  return evaluate_policy_dynamics(dyn, env, spec, episodes, seed, threads);
}

std::pair<double, double> solved_threshold(const Env& env, const PlanSpec& eval_spec,
                                           std::uint64_t seed, int threads) {
  const int episodes = 5;
  const int steps = env.spec().horizon;
  RewardFn reward = make_reward(env);
  EnvDynamics exec(env);

  Eigen::VectorXd gt_returns(episodes), rand_returns(episodes);
  parallel_for(
      static_cast<std::size_t>(episodes),
      [&](std::size_t e) {
        // same start states and controller streams as evaluate_policy, so the
        // injected ground-truth oracle normalizes to exactly 1
        Eigen::VectorXd s0 = fixed_eval_start(env, seed, static_cast<int>(e));
        Rng rng = Rng::derive(seed, {kTagEvalCtrl, static_cast<std::uint64_t>(e)});
        gt_returns[e] = run_mpc_episode(s0, steps, exec, reward, exec, eval_spec, rng).ret;

        Rng rng_pol = Rng::derive(seed, {kTagRandPolicy, static_cast<std::uint64_t>(e)});
        Eigen::VectorXd s = s0, r1(1);
        double ret = 0.0;
        for (int t = 0; t < steps; ++t) {
          Eigen::VectorXd a = rng_pol.uniform_vec(eval_spec.action_low, eval_spec.action_high);
          Eigen::VectorXd sn = env.step(s, a);
          reward(s.transpose(), a.transpose(), sn.transpose(), r1);
          ret += r1[0];
          s = sn;
        }
        rand_returns[e] = ret;
      },
      threads);

  double gt = gt_returns.mean();
  double rnd = rand_returns.mean();
  if (!(gt > rnd))
    throw ContractViolation("solved_threshold: ground-truth MPC does not beat the random "
                            "policy; environment misconfigured");
  return {gt, rnd};
}

namespace {

struct LoopState {
  RunLog log;
  Dataset dataset;
  KernelParams params;
  int points_at_last_fit = 0;
};

void refit_if_due(LoopState& st, const RunConfig& cfg, const Env& env, PhaseTimer& timer,
                  int iteration) {
  if (!st.params.dims.empty() &&
      st.dataset.size() - st.points_at_last_fit < cfg.refit_period)
    return;
  timer.time(iteration, "fit", [&] {
    Rng rng = Rng::derive(cfg.seed, {kTagFit, static_cast<std::uint64_t>(st.dataset.size())});
    // quarter box widths stand in for the input std while it is degenerate
    Eigen::VectorXd fallback =
        (env.spec().candidate_high() - env.spec().candidate_low()) / 4.0;
    st.params = fit_hyperparams(st.dataset, cfg.fit_restarts, rng, &fallback,
                                env.spec().angle_dims);
    st.points_at_last_fit = st.dataset.size();
  });
}

// Shared evaluation step; returns true when the run just became solved.
bool evaluate_now(LoopState& st, const RunConfig& cfg, const Env& env,
                  const GpModel& model, PhaseTimer& timer, int iteration) {
  EvalResult ev = timer.time(iteration, "eval", [&] {
    return evaluate_policy(model, env, cfg.plan_eval, cfg.eval_episodes, cfg.seed,
                           cfg.threads);
  });
  EvalRecord rec;
  rec.n_queries = st.dataset.size();
  rec.mean_return = ev.mean;
  rec.se_return = ev.se;
  rec.normalized = (ev.mean - st.log.rand_return) /
                   (st.log.gt_return - st.log.rand_return);
  // the normalized band alone degenerates when the random floor is dominated
  // by catastrophic penalties (lava), so also require the return to be within
  // a factor of two of the ground-truth MPC return (rewards are goal-anchored
  // at zero)
  rec.solved = rec.normalized >= kSolvedBand &&
               ev.mean >= st.log.gt_return - std::fabs(st.log.gt_return);
  rec.episode_states = std::move(ev.states);
  rec.episode_actions = std::move(ev.actions);
  bool newly_solved = rec.solved && st.log.solved_at < 0;
  if (newly_solved) st.log.solved_at = rec.n_queries;
  st.log.evals.push_back(std::move(rec));
  return newly_solved;
}

// Evaluates when the dataset size lands on the grid (1, 1 + p, 1 + 2p, ...).
bool maybe_evaluate(LoopState& st, const RunConfig& cfg, const Env& env,
                    const GpModel& model, PhaseTimer& timer, int iteration) {
  if ((st.dataset.size() - 1) % cfg.eval_period != 0) return false;
  return evaluate_now(st, cfg, env, model, timer, iteration);
}

void query_ground_truth(LoopState& st, const Env& env,
                        const GpModel& model, const Eigen::VectorXd& input,
                        double acq_value, PhaseTimer& timer, int iteration) {
  const int d = env.spec().state_dim;
  QueryRecord rec;
  rec.iteration = iteration;
  rec.input = input;
  rec.acq_value = acq_value;
  rec.entropy_before = entropy_at(model, input);
  timer.time(iteration, "query", [&] {
    rec.next_state = env.step(input.head(d), input.tail(env.spec().action_dim));
  });
  st.dataset.add(input.head(d), input.tail(env.spec().action_dim), rec.next_state);
  st.log.queries.push_back(std::move(rec));
}

RunLog run_query_strategies(const RunConfig& cfg, const Env& env) {
  LoopState st;
  st.log.config = cfg;
  PhaseTimer timer(st.log);

  std::tie(st.log.gt_return, st.log.rand_return) =
      solved_threshold(env, cfg.plan_eval, cfg.seed, cfg.threads);
  for (int e = 0; e < cfg.eval_episodes; ++e)
    st.log.eval_starts.push_back(fixed_eval_start(env, cfg.seed, e));

  const Eigen::VectorXd box_lo = env.spec().candidate_low();
  const Eigen::VectorXd box_hi = env.spec().candidate_high();
  const int d = env.spec().state_dim;
  const int na = env.spec().action_dim;

  // initial random query (iteration 0)
  {
    Rng rng = Rng::derive(cfg.seed, {kTagInit});
    Eigen::VectorXd x0 = rng.uniform_vec(box_lo, box_hi);
    QueryRecord rec;
    rec.iteration = 0;
    rec.input = x0;
    timer.time(0, "query", [&] { rec.next_state = env.step(x0.head(d), x0.tail(na)); });
    st.dataset.add(x0.head(d), x0.tail(na), rec.next_state);
    st.log.queries.push_back(std::move(rec));
  }

  refit_if_due(st, cfg, env, timer, 0);
  bool stop = false;
  {
    GpModel model(st.params, st.dataset, env.spec().angle_dims);
    stop = maybe_evaluate(st, cfg, env, model, timer, 0) && cfg.stop_on_solved;
  }

  for (int iter = 1; iter <= cfg.budget && !stop; ++iter) {
    try {
      refit_if_due(st, cfg, env, timer, iter);
      GpModel model(st.params, st.dataset, env.spec().angle_dims);

      // candidate set, fresh each iteration
      Eigen::MatrixXd candidates(cfg.candidates, d + na);
      {
        Rng rng = Rng::derive(cfg.seed, {kTagCandidates, static_cast<std::uint64_t>(iter)});
        for (int i = 0; i < cfg.candidates; ++i)
          candidates.row(i) = rng.uniform_vec(box_lo, box_hi).transpose();
      }

      Eigen::Index chosen = 0;
      double acq_value = 0.0;
      if (cfg.acquisition == AcquisitionKind::kBarl) {
        double sample_s = 0.0, rollout_s = 0.0;
        std::vector<Trajectory> trajectories = sample_optimal_trajectories(
            model, env, cfg.plan_rollout, cfg.path_samples,
            hash_stream(cfg.seed, {kTagIter, static_cast<std::uint64_t>(iter)}),
            cfg.threads, cfg.feature_count, &sample_s, &rollout_s);
        timer.record(iter, "sample_paths", sample_s);
        timer.record(iter, "rollout_tau", rollout_s);

        Eigen::VectorXd scores = timer.time(iter, "score", [&] {
          return EigTauStar(model, trajectories, cfg.threads)
              .values(candidates, cfg.threads);
        });
        scores.maxCoeff(&chosen);
        acq_value = scores[chosen];
      } else if (cfg.acquisition == AcquisitionKind::kEigT) {
        Eigen::VectorXd scores =
            timer.time(iter, "score", [&] { return eig_t_batch(model, candidates); });
        scores.maxCoeff(&chosen);
        acq_value = scores[chosen];
      } else {  // random
        Rng rng = Rng::derive(cfg.seed, {kTagPick, static_cast<std::uint64_t>(iter)});
        chosen = static_cast<Eigen::Index>(rng.uniform_index(cfg.candidates));
      }

      query_ground_truth(st, env, model, candidates.row(chosen).transpose(), acq_value,
                         timer, iter);

      GpModel updated(st.params, st.dataset, env.spec().angle_dims);
      st.log.queries.back().entropy_after =
          entropy_at(updated, st.log.queries.back().input);

      if (maybe_evaluate(st, cfg, env, updated, timer, iter) && cfg.stop_on_solved)
        stop = true;
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(iter) + ": " + e.what());
    }
  }

  st.log.final_dataset = st.dataset;
  st.log.final_params = st.params;
  return std::move(st.log);
}

RunLog run_rollout_mpc(const RunConfig& cfg, const Env& env) {
  LoopState st;
  st.log.config = cfg;
  PhaseTimer timer(st.log);

  std::tie(st.log.gt_return, st.log.rand_return) =
      solved_threshold(env, cfg.plan_eval, cfg.seed, cfg.threads);
  for (int e = 0; e < cfg.eval_episodes; ++e)
    st.log.eval_starts.push_back(fixed_eval_start(env, cfg.seed, e));

  const Eigen::VectorXd box_lo = env.spec().candidate_low();
  const Eigen::VectorXd box_hi = env.spec().candidate_high();
  const int d = env.spec().state_dim;
  const int na = env.spec().action_dim;
  RewardFn reward = make_reward(env);

  {
    Rng rng = Rng::derive(cfg.seed, {kTagInit});
    Eigen::VectorXd x0 = rng.uniform_vec(box_lo, box_hi);
    QueryRecord rec;
    rec.iteration = 0;
    rec.input = x0;
    timer.time(0, "query", [&] { rec.next_state = env.step(x0.head(d), x0.tail(na)); });
    st.dataset.add(x0.head(d), x0.tail(na), rec.next_state);
    st.log.queries.push_back(std::move(rec));
  }

  refit_if_due(st, cfg, env, timer, 0);
  GpModel model(st.params, st.dataset, env.spec().angle_dims);
  bool stop = maybe_evaluate(st, cfg, env, model, timer, 0) && cfg.stop_on_solved;

  // standard-RL collection: the policy's model stays frozen within an
  // episode; conditioning, hyperparameter refits and evaluation happen at
  // episode boundaries
  int iteration = 0;
  int episode = 0;
  while (!stop && iteration < cfg.budget) {
    Rng start_rng = Rng::derive(cfg.seed, {kTagCollect, static_cast<std::uint64_t>(episode)});
    Eigen::VectorXd s = env.sample_start(start_rng);
    Rng ctrl_rng =
        Rng::derive(cfg.seed, {kTagCollectCtrl, static_cast<std::uint64_t>(episode)});
    MpcController controller(cfg.plan_eval);
    GpMeanDynamics dyn(model);

    for (int t = 0; t < env.spec().horizon && iteration < cfg.budget; ++t) {
      ++iteration;
      try {
        Eigen::VectorXd a;
        timer.time(iteration, "score", [&] { a = controller.act(s, dyn, reward, ctrl_rng); });
        Eigen::VectorXd input(d + na);
        input << s, a;
        query_ground_truth(st, env, model, input, 0.0, timer, iteration);
        st.log.queries.back().entropy_after = st.log.queries.back().entropy_before;
        s = st.log.queries.back().next_state;
      } catch (const std::exception& e) {
        throw std::runtime_error("iteration " + std::to_string(iteration) + ": " + e.what());
      }
    }
    ++episode;

    try {
      refit_if_due(st, cfg, env, timer, iteration);
      model = GpModel(st.params, st.dataset, env.spec().angle_dims);
      if (evaluate_now(st, cfg, env, model, timer, iteration) && cfg.stop_on_solved)
        stop = true;
    } catch (const std::exception& e) {
      throw std::runtime_error("iteration " + std::to_string(iteration) + ": " + e.what());
    }
  }

  st.log.final_dataset = st.dataset;
  st.log.final_params = st.params;
  return std::move(st.log);
}

}  // namespace

RunLog run_barl(const RunConfig& cfg) {
  auto env = make_env(cfg.env_name, cfg.env_horizon);
  cfg.plan_rollout.validate();
  cfg.plan_eval.validate();
  if (cfg.budget < 0 || cfg.candidates < 1 || cfg.path_samples < 1 ||
      cfg.eval_episodes < 1 || cfg.eval_period < 1 || cfg.refit_period < 1)
    throw ContractViolation("run_barl: invalid configuration");
  if (cfg.acquisition == AcquisitionKind::kRolloutMpc) return run_rollout_mpc(cfg, *env);
  return run_query_strategies(cfg, *env);
}

}  // namespace barl
