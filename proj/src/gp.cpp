#include "barl/gp.hpp"

#include <cmath>

#include "barl/angles.hpp"
#include "barl/errors.hpp"

namespace barl {

namespace {

constexpr double kTwoPiE = 17.079468445347132;  // 2 pi e

// Cholesky with the shared jitter policy: first attempt uses base_reg on the
// diagonal; on failure, escalate jitter from kJitterRatio * sigma_f^2 by
// factors of 10 up to the cap, then give up.
bool chol_with_jitter(const Eigen::MatrixXd& K, double base_reg, double signal_var,
                      Eigen::MatrixXd& L, double& jitter_used) {
  Eigen::MatrixXd A = K;
  A.diagonal().array() += base_reg;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() == Eigen::Success) {
    L = llt.matrixL();
    jitter_used = 0.0;
    return true;
  }
  double jitter = kJitterRatio * signal_var;
  const double cap = kJitterCapRatio * signal_var;
  while (jitter <= cap * (1.0 + 1e-12)) {
    Eigen::MatrixXd B = A;
    B.diagonal().array() += jitter;
    llt.compute(B);
    if (llt.info() == Eigen::Success) {
      L = llt.matrixL();
      jitter_used = jitter;
      return true;
    }
    jitter *= 10.0;
  }
  return false;
}

}  // namespace

void Dataset::add(const Eigen::VectorXd& s, const Eigen::VectorXd& a,
                  const Eigen::VectorXd& s_next) {
  if (!empty()) {
    if (s.size() != state_dim() || a.size() != action_dim() || s_next.size() != state_dim())
      throw ContractViolation("dataset: transition signature mismatch");
  }
  if (s.size() != s_next.size())
    throw ContractViolation("dataset: s and s_next dimensions differ");
  transitions.push_back({s, a, s_next});
}

Eigen::MatrixXd Dataset::inputs() const {
  const int n = size();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd X(n, state_dim() + action_dim());
  for (int i = 0; i < n; ++i)
    X.row(i) << transitions[i].s.transpose(), transitions[i].a.transpose();
  return X;
}

Eigen::MatrixXd Dataset::deltas(const std::vector<int>& angle_dims) const {
  const int n = size();
  if (n == 0) return Eigen::MatrixXd(0, 0);
  Eigen::MatrixXd Y(n, state_dim());
  for (int i = 0; i < n; ++i)
    Y.row(i) = (transitions[i].s_next - transitions[i].s).transpose();
  for (int d : angle_dims)
    for (int i = 0; i < n; ++i) Y(i, d) = wrap_pi(Y(i, d));
  return Y;
}

KernelParams KernelParams::isotropic(int out_dims, int in_dims, double lengthscale,
                                     double signal_var, double noise_var) {
  KernelParams p;
  p.dims.resize(out_dims);
  for (auto& d : p.dims) {
    d.lengthscales = Eigen::VectorXd::Constant(in_dims, lengthscale);
    d.signal_var = signal_var;
    d.noise_var = noise_var;
  }
  return p;
}

double kernel_eval(const Eigen::VectorXd& x, const Eigen::VectorXd& x2,
                   const KernelParamsDim& params) {
  if (x.size() != x2.size() || x.size() != params.lengthscales.size())
    throw ContractViolation("kernel_eval: dimension mismatch");
  double q = ((x - x2).array() / params.lengthscales.array()).square().sum();
  return params.signal_var * std::exp(-0.5 * q);
}

double predictive_entropy(const Eigen::VectorXd& variance, const Eigen::VectorXd& noise) {
  if (variance.size() != noise.size())
    throw ContractViolation("predictive_entropy: dimension mismatch");
  double h = 0.0;
  for (Eigen::Index i = 0; i < variance.size(); ++i) {
    if (!(variance[i] > 0.0) || !(noise[i] > 0.0))
      throw ContractViolation("predictive_entropy: nonpositive entry");
    h += 0.5 * std::log(kTwoPiE * (variance[i] + noise[i]));
  }
  return h;
}

GpModel::GpModel(KernelParams params, Dataset data, std::vector<int> angle_dims)
    : params_(std::move(params)), data_(std::move(data)), angle_dims_(std::move(angle_dims)) {
  const int out_dims = params_.output_dims();
  if (out_dims == 0) throw ContractViolation("GpModel: no output dimensions");
  input_dim_ = static_cast<int>(params_.dims[0].lengthscales.size());
  const int n = data_.size();
  if (n > 0) {
    state_dim_ = data_.state_dim();
    if (state_dim_ != out_dims)
      throw ContractViolation("GpModel: params/output dimension mismatch");
    if (data_.state_dim() + data_.action_dim() != input_dim_)
      throw ContractViolation("GpModel: params/input dimension mismatch");
  } else {
    state_dim_ = out_dims;
  }
  for (const auto& pd : params_.dims) {
    if (pd.signal_var <= 0.0 || pd.noise_var <= 0.0 || (pd.lengthscales.array() <= 0.0).any())
      throw ContractViolation("GpModel: kernel parameters must be positive");
    if (pd.noise_var < kNoiseFloorRatio * pd.signal_var * (1.0 - 1e-12))
      throw ContractViolation("GpModel: noise variance below the floor");
  }

  mu_ = Eigen::VectorXd::Zero(out_dims);
  per_dim_.resize(out_dims);
  if (n == 0) return;

  const Eigen::MatrixXd X = data_.inputs();
  const Eigen::MatrixXd Y = data_.deltas(angle_dims_);
  // one observation cannot estimate an offset; keep the prior mean
  if (n >= 2) mu_ = Y.colwise().mean().transpose();

  for (int d = 0; d < out_dims; ++d) {
    const auto& pd = params_.dims[d];
    auto& st = per_dim_[d];
    st.Xs = X.array().rowwise() / pd.lengthscales.transpose().array();
    st.row_norms = st.Xs.rowwise().squaredNorm();

    // sigma_f^2 * C with C_ij = exp(-1/2 |xs_i - xs_j|^2)
    Eigen::MatrixXd K(n, n);
    for (int i = 0; i < n; ++i) {
      K.col(i) = (-0.5 * (st.row_norms.array() - 2.0 * (st.Xs * st.Xs.row(i).transpose()).array() +
                          st.row_norms[i]))
                     .exp() *
                 pd.signal_var;
      K(i, i) = pd.signal_var;
    }
    if (!chol_with_jitter(K, pd.noise_var, pd.signal_var, st.L, st.jitter_used))
      throw FactorizationFailure("GpModel: kernel matrix not factorizable at jitter cap (dim " +
                                 std::to_string(d) + ")");
    st.y_centered = Y.col(d).array() - mu_[d];
    st.alpha = st.L.triangularView<Eigen::Lower>().solve(st.y_centered);
    st.alpha = st.L.transpose().triangularView<Eigen::Upper>().solve(st.alpha);
  }
}

Eigen::VectorXd GpModel::noise_vector() const {
  Eigen::VectorXd v(params_.output_dims());
  for (int d = 0; d < params_.output_dims(); ++d) v[d] = params_.dims[d].noise_var;
  return v;
}

Eigen::VectorXd GpModel::jitter_vector() const {
  Eigen::VectorXd v(params_.output_dims());
  for (int d = 0; d < params_.output_dims(); ++d)
    v[d] = kJitterRatio * params_.dims[d].signal_var;
  return v;
}

Eigen::VectorXd GpModel::kernel_row(int dim, const Eigen::VectorXd& x) const {
  const auto& pd = params_.dims[dim];
  const auto& st = per_dim_[dim];
  Eigen::VectorXd xs = x.array() / pd.lengthscales.array();
  double xn = xs.squaredNorm();
  return ((-0.5 * (st.row_norms.array() - 2.0 * (st.Xs * xs).array() + xn)).exp() *
          pd.signal_var)
      .matrix();
}

GpPrediction GpModel::predict(const Eigen::VectorXd& x) const {
  if (x.size() != input_dim_) throw ContractViolation("predict: input dimension mismatch");
  const int out_dims = params_.output_dims();
  GpPrediction p;
  p.mean = x.head(state_dim_);
  p.variance.resize(out_dims);
  if (data_.empty()) {
    for (int d = 0; d < out_dims; ++d) p.variance[d] = params_.dims[d].signal_var;
    return p;
  }
  for (int d = 0; d < out_dims; ++d) {
    const auto& st = per_dim_[d];
    Eigen::VectorXd kv = kernel_row(d, x);
    p.mean[d] += mu_[d] + kv.dot(st.alpha);
    Eigen::VectorXd v = st.L.triangularView<Eigen::Lower>().solve(kv);
    p.variance[d] = std::max(params_.dims[d].signal_var - v.squaredNorm(), 0.0);
  }
  wrap_angle_entries(p.mean, angle_dims_);
  return p;
}

// N x B cross-kernel block for one output dimension (queries in columns)
Eigen::MatrixXd GpModel::kernel_cross_block(int dim, const Eigen::MatrixXd& Q) const {
  const auto& pd = params_.dims[dim];
  const auto& st = per_dim_[dim];
  Eigen::MatrixXd qs = Q.array().rowwise() / pd.lengthscales.transpose().array();
  Eigen::VectorXd qnorm = qs.rowwise().squaredNorm();
  Eigen::ArrayXXd sq = (-2.0 * (st.Xs * qs.transpose())).array();  // n x b
  sq.rowwise() += qnorm.transpose().array();
  sq.colwise() += st.row_norms.array();
  return ((-0.5 * sq).exp() * pd.signal_var).matrix();
}

void GpModel::predict_delta_mean_rows(const Eigen::MatrixXd& X, Eigen::MatrixXd& delta_out) const {
  const int out_dims = params_.output_dims();
  delta_out.resize(X.rows(), out_dims);
  if (data_.empty()) {
    delta_out.setZero();
    return;
  }
  for (int d = 0; d < out_dims; ++d) {
    delta_out.col(d).noalias() = kernel_cross_block(d, X).transpose() * per_dim_[d].alpha;
    delta_out.col(d).array() += mu_[d];
  }
}

void GpModel::predict_variance_rows(const Eigen::MatrixXd& X, Eigen::MatrixXd& var_out) const {
  const int out_dims = params_.output_dims();
  var_out.resize(X.rows(), out_dims);
  if (data_.empty()) {
    for (int d = 0; d < out_dims; ++d) var_out.col(d).setConstant(params_.dims[d].signal_var);
    return;
  }
  for (int d = 0; d < out_dims; ++d) {
    Eigen::MatrixXd a = kernel_cross_block(d, X);
    per_dim_[d].L.triangularView<Eigen::Lower>().solveInPlace(a);
    var_out.col(d) =
        (params_.dims[d].signal_var - a.colwise().squaredNorm().array()).max(0.0);
  }
}

Eigen::VectorXd GpModel::condition_variance(const Eigen::MatrixXd& extra,
                                            const Eigen::VectorXd& x) const {
  ConditionedGp cond(*this, extra);
  return cond.variance(x);
}

ConditionedGp::ConditionedGp(const GpModel& model, const Eigen::MatrixXd& extra_inputs)
    : model_(&model), n_extra_(static_cast<int>(extra_inputs.rows())) {
  if (n_extra_ > 0 && extra_inputs.cols() != model.input_dim())
    throw ContractViolation("ConditionedGp: extra input dimension mismatch");
  const auto& params = model.params();
  const int out_dims = params.output_dims();
  per_dim_.resize(out_dims);
  if (n_extra_ == 0) return;

  const int n = model.data().size();
  for (int d = 0; d < out_dims; ++d) {
    const auto& pd = params.dims[d];
    auto& st = per_dim_[d];
    st.Ts = extra_inputs.array().rowwise() / pd.lengthscales.transpose().array();
    st.t_row_norms = st.Ts.rowwise().squaredNorm();

    Eigen::MatrixXd Ktt(n_extra_, n_extra_);
    for (int i = 0; i < n_extra_; ++i) {
      Ktt.col(i) = (-0.5 * (st.t_row_norms.array() -
                            2.0 * (st.Ts * st.Ts.row(i).transpose()).array() +
                            st.t_row_norms[i]))
                       .exp() *
                   pd.signal_var;
      Ktt(i, i) = pd.signal_var;
    }
    Eigen::MatrixXd schur;
    if (n > 0) {
      Eigen::MatrixXd Kxt = model.kernel_cross_block(d, extra_inputs);
      st.V = model.chol_factor(d).triangularView<Eigen::Lower>().solve(Kxt);
      schur = Ktt - st.V.transpose() * st.V;
    } else {
      schur = Ktt;
    }
    // extras are noiseless; jitter is the only regularizer here
    double jitter = kJitterRatio * pd.signal_var;
    const double cap = kJitterCapRatio * pd.signal_var;
    bool ok = false;
    while (jitter <= cap * (1.0 + 1e-12)) {
      Eigen::MatrixXd S = schur;
      S.diagonal().array() += jitter;
      Eigen::LLT<Eigen::MatrixXd> llt(S);
      if (llt.info() == Eigen::Success) {
        st.Ls = llt.matrixL();
        ok = true;
        break;
      }
      jitter *= 10.0;
    }
    if (!ok)
      throw FactorizationFailure(
          "ConditionedGp: augmented kernel not factorizable at jitter cap (dim " +
          std::to_string(d) + ")");
  }
}

Eigen::VectorXd ConditionedGp::variance(const Eigen::VectorXd& x) const {
  return variance_batch(x.transpose()).row(0).transpose();
}

Eigen::MatrixXd ConditionedGp::variance_batch(const Eigen::MatrixXd& X) const {
  const auto& model = *model_;
  const int out_dims = model.params().output_dims();
  std::vector<Eigen::MatrixXd> base_solves(out_dims);
  if (model.data().size() > 0) {
    for (int d = 0; d < out_dims; ++d) {
      base_solves[d] = model.kernel_cross_block(d, X);
      model.chol_factor(d).triangularView<Eigen::Lower>().solveInPlace(base_solves[d]);
    }
  }
  return variance_batch_presolved(X, base_solves);
}

Eigen::MatrixXd ConditionedGp::variance_batch_presolved(
    const Eigen::MatrixXd& X, const std::vector<Eigen::MatrixXd>& base_solves) const {
  const auto& model = *model_;
  const auto& params = model.params();
  const int out_dims = params.output_dims();
  const int n = model.data().size();
  Eigen::MatrixXd out(X.rows(), out_dims);
  if (n_extra_ == 0) {
    for (int d = 0; d < out_dims; ++d) {
      if (n > 0)
        out.col(d) = (params.dims[d].signal_var -
                      base_solves[d].colwise().squaredNorm().transpose().array())
                         .max(0.0);
      else
        out.col(d).setConstant(params.dims[d].signal_var);
    }
    return out;
  }
  for (int d = 0; d < out_dims; ++d) {
    const auto& pd = params.dims[d];
    const auto& st = per_dim_[d];

    Eigen::MatrixXd qs = X.array().rowwise() / pd.lengthscales.transpose().array();
    Eigen::VectorXd qnorm = qs.rowwise().squaredNorm();
    Eigen::ArrayXXd sq = (-2.0 * (st.Ts * qs.transpose())).array();  // e x b
    sq.rowwise() += qnorm.transpose().array();
    sq.colwise() += st.t_row_norms.array();
    Eigen::MatrixXd kt = ((-0.5 * sq).exp() * pd.signal_var).matrix();

    Eigen::ArrayXd reduction = Eigen::ArrayXd::Zero(X.rows());
    if (n > 0) {
      kt.noalias() -= st.V.transpose() * base_solves[d];
      reduction += base_solves[d].colwise().squaredNorm().transpose().array();
    }
    st.Ls.triangularView<Eigen::Lower>().solveInPlace(kt);
    reduction += kt.colwise().squaredNorm().transpose().array();
    out.col(d) = (pd.signal_var - reduction).max(0.0);
  }
  return out;
}

void GpMeanDynamics::step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                                Eigen::MatrixXd& out) const {
  Eigen::MatrixXd X(s.rows(), s.cols() + a.cols());
  X << s, a;
  Eigen::MatrixXd delta;
  model_.predict_delta_mean_rows(X, delta);
  out = s + delta;
  wrap_angle_cols(out, model_.angle_dims());
}

}  // namespace barl
