#include "barl/posterior_path.hpp"

#include <cmath>

#include "barl/angles.hpp"
#include "barl/errors.hpp"

namespace barl {

PosteriorPath::PosteriorPath(const GpModel& model, Rng& rng, int feature_count)
    : PosteriorPath(model, rng, rng, feature_count) {}

PosteriorPath::PosteriorPath(const GpModel& model, Rng& feature_rng, Rng& weight_rng,
                             int feature_count)
    : model_(&model) {
  const auto& params = model.params();
  const int out_dims = params.output_dims();
  const int in_dims = model.input_dim();
  const int n = model.data().size();

  per_dim_.resize(out_dims);
  for (int d = 0; d < out_dims; ++d) {
    const auto& pd = params.dims[d];
    auto& st = per_dim_[d];

    // SE-ARD spectral density: omega_j ~ N(0, 1 / l_j^2)
    st.omega.resize(feature_count, in_dims);
    for (int i = 0; i < feature_count; ++i)
      for (int j = 0; j < in_dims; ++j)
        st.omega(i, j) = static_cast<float>(feature_rng.normal() / pd.lengthscales[j]);

    st.phase.resize(feature_count);
    for (int i = 0; i < feature_count; ++i)
      st.phase[i] = static_cast<float>(feature_rng.uniform(0.0, 2.0 * M_PI));

    const double amp = std::sqrt(2.0 * pd.signal_var / feature_count);
    st.weight.resize(feature_count);
    for (int i = 0; i < feature_count; ++i)
      st.weight[i] = static_cast<float>(amp * weight_rng.normal());

    if (n > 0) {
      // residuals of the prior sample at the training inputs, with simulated
      // observation noise, mapped through the cached factorization
      const double noise_sd = std::sqrt(pd.noise_var);
      Eigen::VectorXd eps(n);
      for (int i = 0; i < n; ++i) eps[i] = noise_sd * weight_rng.normal();

      Eigen::MatrixXf Xf = model.data().inputs().cast<float>();
      Eigen::ArrayXXf args = (Xf * st.omega.transpose()).array().rowwise() +
                             st.phase.transpose().array();
      Eigen::VectorXd prior_at_x = (args.cos().matrix() * st.weight).cast<double>();

      Eigen::VectorXd resid = model.centered_targets(d) - prior_at_x - eps;
      const auto& L = model.chol_factor(d);
      st.update = L.triangularView<Eigen::Lower>().solve(resid);
      st.update = L.transpose().triangularView<Eigen::Upper>().solve(st.update);
    }
  }
}

Eigen::VectorXd PosteriorPath::eval_delta(const Eigen::VectorXd& x) const {
  if (x.size() != model_->input_dim())
    throw ContractViolation("path eval: input dimension mismatch");
  const int d_state = model_->state_dim();
  Eigen::MatrixXd s = x.head(d_state).transpose();
  Eigen::MatrixXd a = x.tail(x.size() - d_state).transpose();
  Eigen::MatrixXd out(1, d_state);
  eval_rows(s, a, out);
  return (out.row(0) - s.row(0)).transpose();
}

Eigen::VectorXd PosteriorPath::eval(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const {
  Eigen::MatrixXd out(1, s.size());
  eval_rows(s.transpose(), a.transpose(), out);
  return out.row(0).transpose();
}

void PosteriorPath::eval_rows(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                              Eigen::MatrixXd& out) const {
  const int out_dims = static_cast<int>(per_dim_.size());
  const Eigen::Index b = s.rows();
  const int n = model_->data().size();
  if (s.cols() + a.cols() != model_->input_dim())
    throw ContractViolation("path eval: input dimension mismatch");
  out = s;

  Eigen::MatrixXd X(b, s.cols() + a.cols());
  X << s, a;
  Eigen::MatrixXf Xf = X.cast<float>();
  Eigen::ArrayXXf args;
  Eigen::MatrixXd qs;
  Eigen::VectorXd qnorm;
  for (int d = 0; d < out_dims; ++d) {
    const auto& st = per_dim_[d];
    args = (Xf * st.omega.transpose()).array().rowwise() +
           st.phase.transpose().array();
    out.col(d) += (args.cos().matrix() * st.weight).cast<double>();
    if (n > 0) {
      const auto& pd = model_->params().dims[d];
      qs = X.array().rowwise() / pd.lengthscales.transpose().array();
      qnorm = qs.rowwise().squaredNorm();
      // squared distances to the training inputs, then the update dot
      Eigen::ArrayXXd sq = (-2.0 * (qs * model_->scaled_inputs(d).transpose())).array();
      sq.colwise() += qnorm.array();
      sq.rowwise() += model_->scaled_row_norms(d).transpose().array();
      out.col(d).noalias() +=
          ((-0.5 * sq).exp() * pd.signal_var).matrix() * st.update;
      out.col(d).array() += model_->delta_mean()[d];
    }
  }
  wrap_angle_cols(out, model_->angle_dims());
}

PosteriorPath sample_path(const GpModel& model, Rng& rng, int feature_count) {
  return PosteriorPath(model, rng, feature_count);
}

void PathDynamics::step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                              Eigen::MatrixXd& out) const {
  path_.eval_rows(s, a, out);
}

}  // namespace barl
