#pragma once

#include <vector>

#include <Eigen/Core>

#include "barl/dynamics.hpp"
#include "barl/gp.hpp"
#include "barl/rng.hpp"

namespace barl {

inline constexpr int kDefaultFeatureCount = 512;

// One deterministic function sample from the GP posterior over dynamics:
// a random-feature prior draw plus an exact kernel-basis pathwise update.
// Immutable; evaluating it is pure, so a sample can be rolled out like any
// other deterministic model. The generating GpModel must outlive the path.
class PosteriorPath {
 public:
  PosteriorPath(const GpModel& model, Rng& rng, int feature_count);

  // Split-stream variant: spectral frequencies and phases come from
  // feature_rng, prior weights and simulated noise from weight_rng. Passing
  // the same stream twice is not equivalent to the single-stream form; this
  // exists to build shared-feature ensembles when diagnosing the
  // random-feature approximation.
  PosteriorPath(const GpModel& model, Rng& feature_rng, Rng& weight_rng,
                int feature_count);

  int state_dim() const { return model_->state_dim(); }

  // Sampled state change at input x = (s, a).
  Eigen::VectorXd eval_delta(const Eigen::VectorXd& x) const;

  // Next state s + delta(s, a).
  Eigen::VectorXd eval(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const;

  void eval_rows(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                 Eigen::MatrixXd& out) const;

 private:
  // The random-feature prior is evaluated in single precision: the feature
  // sum is a Monte-Carlo object with O(1/sqrt(M)) accuracy, so float noise
  // (~1e-6 of the signal scale) is far below the approximation error, and
  // Eigen vectorizes float trig. The kernel-basis update stays double.
  struct PerDim {
    Eigen::MatrixXf omega;    // M x (d + n_a) spectral frequencies
    Eigen::VectorXf phase;    // M
    Eigen::VectorXf weight;   // M prior weights, prescaled by sqrt(2 sf^2 / M)
    Eigen::VectorXd update;   // |D| pathwise-update coefficients
  };

  const GpModel* model_;
  std::vector<PerDim> per_dim_;
};

// Draws a posterior function sample; the stream determines frequencies,
// phases, prior weights and the simulated observation noise in the update.
PosteriorPath sample_path(const GpModel& model, Rng& rng,
                          int feature_count = kDefaultFeatureCount);

class PathDynamics final : public DynamicsFn {
 public:
  explicit PathDynamics(const PosteriorPath& path) : path_(path) {}
  void step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                  Eigen::MatrixXd& out) const override;

 private:
  const PosteriorPath& path_;
};

}  // namespace barl
