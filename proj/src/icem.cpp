#include "barl/icem.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "barl/env.hpp"
#include "barl/errors.hpp"

namespace barl {

void PlanSpec::validate() const {
  if (base_samples < 2 || elites < 1 || 2 * elites > base_samples)
    throw ContractViolation("PlanSpec: need 2 * elites <= base_samples");
  if (horizon < 1 || iterations < 1)
    throw ContractViolation("PlanSpec: horizon and iterations must be >= 1");
  if (replan_period < 1 || replan_period > horizon)
    throw ContractViolation("PlanSpec: need 1 <= replan_period <= horizon");
  if (beta < 0.0 || gamma < 1.0 || xi < 0.0 || xi > 1.0)
    throw ContractViolation("PlanSpec: invalid beta/gamma/xi");
  if (action_low.size() == 0 || action_low.size() != action_high.size())
    throw ContractViolation("PlanSpec: action bounds unset");
}

PlanSpec PlanSpec::defaults_for(const EnvSpec& env) {
  PlanSpec s;
  s.action_low = env.action_low;
  s.action_high = env.action_high;
  if (env.name == "pendulum") {
    s.base_samples = 25; s.elites = 3; s.horizon = 20; s.iterations = 3; s.replan_period = 6;
  } else if (env.name == "cartpole") {
    s.base_samples = 30; s.elites = 6; s.horizon = 15; s.iterations = 5; s.replan_period = 1;
  } else if (env.name == "lavapath") {
    s.base_samples = 25; s.elites = 4; s.horizon = 20; s.iterations = 3; s.replan_period = 6;
  }
  s.beta = 3.0;
  s.gamma = 1.25;
  s.xi = 0.3;
  return s;
}

std::vector<Eigen::MatrixXd> colored_noise(double beta, int horizon, int n_a,
                                           int count, Rng& rng) {
  if (horizon < 1) throw ContractViolation("colored_noise: horizon must be >= 1");
  const int h = horizon;
  const bool even = (h % 2) == 0;
  const int mid_hi = even ? h / 2 - 1 : (h - 1) / 2;  // inclusive top middle bin

  // amplitudes f_k^(-beta/2), DC bin tied to the first nonzero frequency;
  // DC and Nyquist carry half the spectral weight (one degree of freedom)
  std::vector<double> amp(h / 2 + 1, 0.0);
  for (int k = 1; k <= h / 2; ++k) amp[k] = std::pow(static_cast<double>(k) / h, -beta / 2.0);
  amp[0] = (h > 1) ? amp[1] : 1.0;

  double var = amp[0] * amp[0] / 2.0;
  for (int k = 1; k <= mid_hi; ++k) var += amp[k] * amp[k];
  if (even && h > 1) var += amp[h / 2] * amp[h / 2] / 2.0;
  const double inv_norm = 1.0 / std::sqrt(var);

  // basis tables
  Eigen::MatrixXd cos_tab(h / 2 + 1, h), sin_tab(h / 2 + 1, h);
  for (int k = 0; k <= h / 2; ++k)
    for (int t = 0; t < h; ++t) {
      double w = 2.0 * M_PI * k * t / h;
      cos_tab(k, t) = std::cos(w);
      sin_tab(k, t) = std::sin(w);
    }

  std::vector<Eigen::MatrixXd> out(count);
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int c = 0; c < count; ++c) {
    Eigen::MatrixXd sample = Eigen::MatrixXd::Zero(h, n_a);
    for (int dim = 0; dim < n_a; ++dim) {
      double a0 = rng.normal() * amp[0] * inv_sqrt2;
      for (int t = 0; t < h; ++t) sample(t, dim) = a0;
      for (int k = 1; k <= mid_hi; ++k) {
        double ak = rng.normal() * amp[k];
        double bk = rng.normal() * amp[k];
        for (int t = 0; t < h; ++t)
          sample(t, dim) += ak * cos_tab(k, t) + bk * sin_tab(k, t);
      }
      if (even && h > 1) {
        double an = rng.normal() * amp[h / 2] * inv_sqrt2;
        for (int t = 0; t < h; ++t) sample(t, dim) += an * cos_tab(h / 2, t);
      }
      sample.col(dim) *= inv_norm;
    }
    out[c] = std::move(sample);
  }
  return out;
}

namespace {

void clip_actions(Eigen::MatrixXd& actions, const Eigen::VectorXd& lo,
                  const Eigen::VectorXd& hi) {
  for (Eigen::Index c = 0; c < actions.cols(); ++c)
    actions.col(c) = actions.col(c).cwiseMax(lo[c]).cwiseMin(hi[c]);
}

// Evaluates every candidate sequence from s0; one batched pass per timestep.
Eigen::VectorXd rollout_returns(const DynamicsFn& dynamics, const RewardFn& reward,
                                const Eigen::VectorXd& s0,
                                const std::vector<Eigen::MatrixXd>& candidates) {
  const int pop = static_cast<int>(candidates.size());
  const int h = static_cast<int>(candidates[0].rows());
  const int na = static_cast<int>(candidates[0].cols());
  const int d = static_cast<int>(s0.size());

  Eigen::MatrixXd states = s0.transpose().replicate(pop, 1);
  Eigen::MatrixXd actions(pop, na), next(pop, d);
  Eigen::VectorXd returns = Eigen::VectorXd::Zero(pop), r(pop);
  for (int t = 0; t < h; ++t) {
    for (int c = 0; c < pop; ++c) actions.row(c) = candidates[c].row(t);
    dynamics.step_batch(states, actions, next);
    reward(states, actions, next, r);
    returns += r;
    states.swap(next);
  }
  return returns;
}

}  // namespace

Plan icem_plan(const DynamicsFn& dynamics, const RewardFn& reward,
               const Eigen::VectorXd& s0, const PlanSpec& spec,
               const Plan* warm_start, Rng& rng) {
  spec.validate();
  const int h = spec.horizon;
  const int na = spec.action_dim();
  const Eigen::VectorXd& lo = spec.action_low;
  const Eigen::VectorXd& hi = spec.action_high;

  Eigen::MatrixXd mean(h, na);
  if (warm_start != nullptr && warm_start->mean.rows() == h) {
    const int shift = std::min(spec.replan_period, h);
    mean.topRows(h - shift) = warm_start->mean.bottomRows(h - shift);
    mean.bottomRows(shift).setZero();
  } else {
    mean = ((lo + hi) / 2.0).transpose().replicate(h, 1);
  }
  Eigen::MatrixXd stddev = ((hi - lo) / 4.0).transpose().replicate(h, 1);
  const Eigen::RowVectorXd stddev_floor = (1e-3 * (hi - lo)).transpose();

  Plan plan;
  plan.predicted_return = -std::numeric_limits<double>::infinity();
  const int n_cache = static_cast<int>(std::ceil(spec.xi * spec.elites));
  std::vector<Eigen::MatrixXd> cached;

  for (int round = 0; round < spec.iterations; ++round) {
    const int n_fresh = std::max(
        static_cast<int>(std::ceil(spec.base_samples * std::pow(spec.gamma, -round))),
        2 * spec.elites);
    plan.round_populations.push_back(n_fresh);

    std::vector<Eigen::MatrixXd> candidates = colored_noise(spec.beta, h, na, n_fresh, rng);
    for (auto& cand : candidates) {
      cand = mean + stddev.cwiseProduct(cand);
      clip_actions(cand, lo, hi);
    }
    for (const auto& e : cached) candidates.push_back(e);
    if (round == spec.iterations - 1) candidates.push_back(mean);

    Eigen::VectorXd returns = rollout_returns(dynamics, reward, s0, candidates);
    if (!returns.allFinite()) {
      Eigen::Index bad = 0;
      for (; bad < returns.size(); ++bad)
        if (!std::isfinite(returns[bad])) break;
      throw PlanningError("icem_plan: non-finite return for candidate " +
                          std::to_string(bad) + " in round " + std::to_string(round));
    }

    std::vector<int> order(candidates.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return returns[a] > returns[b]; });

    if (returns[order[0]] > plan.predicted_return) {
      plan.predicted_return = returns[order[0]];
      plan.actions = candidates[order[0]];
    }
    plan.round_best.push_back(plan.predicted_return);

    const int n_elite = std::min<int>(spec.elites, static_cast<int>(order.size()));
    mean.setZero();
    for (int e = 0; e < n_elite; ++e) mean += candidates[order[e]];
    mean /= n_elite;
    Eigen::MatrixXd var = Eigen::MatrixXd::Zero(h, na);
    for (int e = 0; e < n_elite; ++e) {
      Eigen::MatrixXd diff = candidates[order[e]] - mean;
      var += diff.cwiseProduct(diff);
    }
    stddev = (var / n_elite).cwiseSqrt();
    stddev = stddev.cwiseMax(stddev_floor.replicate(h, 1));

    cached.clear();
    for (int e = 0; e < std::min(n_cache, n_elite); ++e)
      cached.push_back(candidates[order[e]]);
  }

  plan.mean = mean;
  plan.stddev = stddev;
  return plan;
}

MpcController::MpcController(PlanSpec spec) : spec_(std::move(spec)) {
  spec_.validate();
}

void MpcController::reset() {
  plan_.reset();
  step_in_plan_ = 0;
}

Eigen::VectorXd MpcController::act(const Eigen::VectorXd& s, const DynamicsFn& dynamics,
                                   const RewardFn& reward, Rng& rng) {
  if (!plan_.has_value() || step_in_plan_ >= spec_.replan_period) {
    const Plan* warm = plan_.has_value() ? &*plan_ : nullptr;
    plan_ = icem_plan(dynamics, reward, s, spec_, warm, rng);
    step_in_plan_ = 0;
    ++plan_count_;
  }
  return plan_->actions.row(step_in_plan_++).transpose();
}

EpisodeResult run_mpc_episode(const Eigen::VectorXd& s0, int steps,
                              const DynamicsFn& plan_dynamics, const RewardFn& reward,
                              const DynamicsFn& exec_dynamics, const PlanSpec& spec,
                              Rng& rng) {
  const int d = static_cast<int>(s0.size());
  EpisodeResult res;
  res.states.resize(steps + 1, d);
  res.actions.resize(steps, spec.action_dim());
  res.states.row(0) = s0.transpose();

  MpcController controller(spec);
  Eigen::VectorXd s = s0;
  Eigen::VectorXd r1(1);
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd a = controller.act(s, plan_dynamics, reward, rng);
    Eigen::VectorXd s_next = exec_dynamics.step(s, a);
    reward(s.transpose(), a.transpose(), s_next.transpose(), r1);
    res.ret += r1[0];
    res.states.row(t + 1) = s_next.transpose();
    res.actions.row(t) = a.transpose();
    s = s_next;
  }
  return res;
}

}  // namespace barl
