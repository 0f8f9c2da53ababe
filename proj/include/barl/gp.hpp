#pragma once

#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "barl/dynamics.hpp"
#include "barl/rng.hpp"

namespace barl {

// One observed transition (s, a, s').
struct Transition {
  Eigen::VectorXd s, a, s_next;
};

// Ordered collection of transitions sharing one (d, n_a) signature.
struct Dataset {
  std::vector<Transition> transitions;

  int size() const { return static_cast<int>(transitions.size()); }
  bool empty() const { return transitions.empty(); }
  int state_dim() const { return empty() ? 0 : static_cast<int>(transitions[0].s.size()); }
  int action_dim() const { return empty() ? 0 : static_cast<int>(transitions[0].a.size()); }

  void add(const Eigen::VectorXd& s, const Eigen::VectorXd& a, const Eigen::VectorXd& s_next);

  // N x (d + n_a) matrix of inputs (s_i, a_i)
  Eigen::MatrixXd inputs() const;
  // N x d matrix of delta-state targets s' - s; angle coordinates take the
  // geodesic difference, which equals the physical per-step change as long
  // as a single step never moves an angle by more than pi
  Eigen::MatrixXd deltas(const std::vector<int>& angle_dims = {}) const;
};

// SE-ARD kernel hyperparameters for one output dimension.
struct KernelParamsDim {
  Eigen::VectorXd lengthscales;  // d + n_a entries, strictly positive
  double signal_var = 1.0;
  double noise_var = 1e-3;
};

// One KernelParamsDim per output dimension.
struct KernelParams {
  std::vector<KernelParamsDim> dims;

  int output_dims() const { return static_cast<int>(dims.size()); }
  static KernelParams isotropic(int out_dims, int in_dims, double lengthscale,
                                double signal_var, double noise_var);
};

inline constexpr double kNoiseFloorRatio = 1e-6;   // sigma_n^2 >= ratio * sigma_f^2
inline constexpr double kJitterRatio = 1e-8;       // initial jitter, times sigma_f^2
inline constexpr double kJitterCapRatio = 1e-4;    // escalation cap, times sigma_f^2

// k(x, x2) = sigma_f^2 exp(-1/2 sum_j ((x_j - x2_j) / l_j)^2)
double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                   const KernelParamsDim& params);

// Entropy of independent Gaussians: sum_d 1/2 ln(2 pi e (var_d + noise_d)).
// Observation noise is included because the queried s' is a noisy sample.
double predictive_entropy(const Eigen::VectorXd& variance, const Eigen::VectorXd& noise);

// Log marginal likelihood of targets y under the SE-ARD GP with the given
// parameters; if grad is non-null it receives d lml / d log(theta) in the
// order (log l_1..l_k, log sigma_f^2, log sigma_n^2).
double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const KernelParamsDim& params,
                               Eigen::VectorXd* grad = nullptr);

// Type-II MLE per output dimension: multi-restart quasi-Newton ascent of the
// log marginal likelihood in log-parameter space. Targets are standardized
// internally; returned parameters live in raw delta-state space and satisfy
// the noise floor. Initial lengthscales are the per-coordinate input standard
// deviations; when those degenerate (single point, constant coordinate) the
// optional fallback scales are used instead.
KernelParams fit_hyperparams(const Dataset& data, int restarts, Rng& rng,
                             const Eigen::VectorXd* lengthscale_fallback = nullptr,
                             const std::vector<int>& angle_dims = {});

struct GpPrediction {
  Eigen::VectorXd mean;      // next-state coordinates (s + predicted delta)
  Eigen::VectorXd variance;  // latent predictive variance, excludes noise
};

// Exact GP posterior over the state change, one independent SE-ARD GP per
// output dimension. Immutable after construction; all queries are pure.
class GpModel {
 public:
  GpModel(KernelParams params, Dataset data, std::vector<int> angle_dims = {});

  const KernelParams& params() const { return params_; }
  const Dataset& data() const { return data_; }
  int state_dim() const { return state_dim_; }
  int input_dim() const { return input_dim_; }
  const std::vector<int>& angle_dims() const { return angle_dims_; }

  // Per-dimension observation noise and jitter floor (jitter ratio times
  // signal variance), as vectors for entropy computations.
  Eigen::VectorXd noise_vector() const;
  Eigen::VectorXd jitter_vector() const;
  // Mean offsets of the delta targets (zero for an empty dataset).
  const Eigen::VectorXd& delta_mean() const { return mu_; }

  GpPrediction predict(const Eigen::VectorXd& x) const;

  // Latent variance after conditioning on extra noiseless inputs; targets
  // never enter. extra is E x (d + n_a); E = 0 reduces to predict().
  Eigen::VectorXd condition_variance(const Eigen::MatrixXd& extra,
                                     const Eigen::VectorXd& x) const;

  // Batched queries (X is B x (d + n_a)). Deterministic for a given batch
  // shape; callers keep shapes independent of the thread count.
  void predict_delta_mean_rows(const Eigen::MatrixXd& X, Eigen::MatrixXd& delta_out) const;
  void predict_variance_rows(const Eigen::MatrixXd& X, Eigen::MatrixXd& var_out) const;
  Eigen::MatrixXd kernel_cross_block(int dim, const Eigen::MatrixXd& Q) const;

  // Internals shared with the pathwise sampler and the trajectory conditioner.
  const Eigen::MatrixXd& scaled_inputs(int dim) const { return per_dim_[dim].Xs; }
  const Eigen::VectorXd& scaled_row_norms(int dim) const { return per_dim_[dim].row_norms; }
  const Eigen::MatrixXd& chol_factor(int dim) const { return per_dim_[dim].L; }
  const Eigen::VectorXd& centered_targets(int dim) const { return per_dim_[dim].y_centered; }
  const Eigen::VectorXd& alpha(int dim) const { return per_dim_[dim].alpha; }

  // Kernel row k(x, X) for one output dimension (length N).
  Eigen::VectorXd kernel_row(int dim, const Eigen::VectorXd& x) const;

 private:
  struct PerDim {
    Eigen::MatrixXd Xs;        // inputs scaled by 1/lengthscale
    Eigen::VectorXd row_norms; // squared norms of Xs rows
    Eigen::MatrixXd L;         // chol(sigma_f^2 C + sigma_n^2 I + jitter I)
    Eigen::VectorXd y_centered;
    Eigen::VectorXd alpha;
    double jitter_used = 0.0;
  };

  KernelParams params_;
  Dataset data_;
  std::vector<int> angle_dims_;
  int state_dim_ = 0;
  int input_dim_ = 0;
  Eigen::VectorXd mu_;
  std::vector<PerDim> per_dim_;
};

// Incremental conditioner: augments a model's factorization with extra
// noiseless inputs once, then answers variance queries for many candidates.
class ConditionedGp {
 public:
  ConditionedGp(const GpModel& model, const Eigen::MatrixXd& extra_inputs);

  Eigen::VectorXd variance(const Eigen::VectorXd& x) const;
  // B x d latent variances for B candidate inputs.
  Eigen::MatrixXd variance_batch(const Eigen::MatrixXd& X) const;
  // Same, with the base triangular solves L^-1 k(X_D, Q) precomputed once by
  // the caller (one per output dim); they are shared across conditioners.
  Eigen::MatrixXd variance_batch_presolved(
      const Eigen::MatrixXd& X, const std::vector<Eigen::MatrixXd>& base_solves) const;

 private:
  struct PerDim {
    Eigen::MatrixXd Ts;         // extras scaled by 1/lengthscale
    Eigen::VectorXd t_row_norms;
    Eigen::MatrixXd V;          // L^-1 K(X, T)
    Eigen::MatrixXd Ls;         // chol of the Schur complement
  };

  const GpModel* model_;
  int n_extra_ = 0;
  std::vector<PerDim> per_dim_;
};

// Posterior-mean dynamics for the planner: s' = s + E[delta | D].
class GpMeanDynamics final : public DynamicsFn {
 public:
  explicit GpMeanDynamics(const GpModel& model) : model_(model) {}
  void step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                  Eigen::MatrixXd& out) const override;

 private:
  const GpModel& model_;
};

}  // namespace barl
