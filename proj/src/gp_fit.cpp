#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "barl/errors.hpp"
#include "barl/gp.hpp"
#include "barl/thread_pool.hpp"

namespace barl {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kLogParamBox = 12.0;  // |log theta| cap during optimization

// Negative LML and gradient in log-parameter space, with per-coordinate
// squared-difference matrices precomputed once per fit.
struct LmlProblem {
  const Eigen::MatrixXd& X;
  Eigen::VectorXd y;
  std::vector<Eigen::MatrixXd> sqdiff;  // one N x N matrix per input coordinate

  explicit LmlProblem(const Eigen::MatrixXd& X_in, Eigen::VectorXd y_in)
      : X(X_in), y(std::move(y_in)) {
    const int n = static_cast<int>(X.rows());
    sqdiff.resize(X.cols());
    for (Eigen::Index j = 0; j < X.cols(); ++j) {
      sqdiff[j].resize(n, n);
      for (int i = 0; i < n; ++i)
        sqdiff[j].col(i) = (X.col(j).array() - X(i, j)).square();
    }
  }

  // theta = (log l_1..k, log sf2, log sn2); returns -lml, fills grad of -lml
  double eval(const Eigen::VectorXd& theta, Eigen::VectorXd* grad) const {
    const int n = static_cast<int>(X.rows());
    const int k = static_cast<int>(X.cols());
    Eigen::VectorXd inv_l2(k);
    for (int j = 0; j < k; ++j) inv_l2[j] = std::exp(-2.0 * theta[j]);
    const double sf2 = std::exp(theta[k]);
    const double sn2 = std::exp(theta[k + 1]);

    Eigen::MatrixXd Q = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < k; ++j) Q += inv_l2[j] * sqdiff[j];
    Eigen::MatrixXd C = (-0.5 * Q.array()).exp();
    Eigen::MatrixXd K = sf2 * C;
    K.diagonal().array() += sn2;

    Eigen::LLT<Eigen::MatrixXd> llt(K);
    if (llt.info() != Eigen::Success) {
      double jitter = kJitterRatio * sf2;
      const double cap = kJitterCapRatio * sf2;
      bool ok = false;
      while (jitter <= cap * (1.0 + 1e-12)) {
        Eigen::MatrixXd Kj = K;
        Kj.diagonal().array() += jitter;
        llt.compute(Kj);
        if (llt.info() == Eigen::Success) {
          ok = true;
          break;
        }
        jitter *= 10.0;
      }
      if (!ok) return kInf;
    }

    Eigen::VectorXd alpha = llt.solve(y);
    double lml = -0.5 * y.dot(alpha) -
                 llt.matrixLLT().diagonal().array().log().sum() -
                 0.5 * n * std::log(2.0 * M_PI);
    if (!std::isfinite(lml)) return kInf;

    if (grad != nullptr) {
      Eigen::MatrixXd G = alpha * alpha.transpose() -
                          llt.solve(Eigen::MatrixXd::Identity(n, n));
      Eigen::MatrixXd GC = G.cwiseProduct(C);
      grad->resize(k + 2);
      for (int j = 0; j < k; ++j)
        (*grad)[j] = -0.5 * sf2 * inv_l2[j] * GC.cwiseProduct(sqdiff[j]).sum();
      (*grad)[k] = -0.5 * sf2 * GC.sum();
      (*grad)[k + 1] = -0.5 * sn2 * G.trace();
      if (!grad->allFinite()) return kInf;
    }
    return -lml;
  }
};

Eigen::VectorXd clamp_box(Eigen::VectorXd v) {
  return v.cwiseMax(-kLogParamBox).cwiseMin(kLogParamBox);
}

struct OptResult {
  Eigen::VectorXd x;
  double f = kInf;
};

// L-BFGS with Armijo backtracking, projected onto the log-parameter box.
OptResult lbfgs_minimize(const LmlProblem& problem, const Eigen::VectorXd& x0,
                         int max_iter = 60) {
  const int dim = static_cast<int>(x0.size());
  const int memory = 8;
  OptResult res;
  res.x = clamp_box(x0);

  Eigen::VectorXd g(dim);
  double f = problem.eval(res.x, &g);
  if (!std::isfinite(f)) {
    res.f = f;
    return res;
  }

  std::vector<Eigen::VectorXd> s_hist, y_hist;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (g.lpNorm<Eigen::Infinity>() < 1e-6 * std::max(1.0, std::fabs(f))) break;

    // two-loop recursion
    Eigen::VectorXd d = -g;
    const int m = static_cast<int>(s_hist.size());
    std::vector<double> alpha_coef(m);
    for (int i = m - 1; i >= 0; --i) {
      double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      alpha_coef[i] = rho * s_hist[i].dot(d);
      d -= alpha_coef[i] * y_hist[i];
    }
    if (m > 0) d *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (int i = 0; i < m; ++i) {
      double rho = 1.0 / y_hist[i].dot(s_hist[i]);
      double beta = rho * y_hist[i].dot(d);
      d += (alpha_coef[i] - beta) * s_hist[i];
    }
    if (!d.allFinite() || d.dot(g) >= 0.0) d = -g;

    double step = (iter == 0) ? std::min(1.0, 1.0 / g.norm()) : 1.0;
    bool accepted = false;
    Eigen::VectorXd xn, gn(dim);
    double fn = kInf;
    for (int ls = 0; ls < 40; ++ls) {
      xn = clamp_box(res.x + step * d);
      Eigen::VectorXd move = xn - res.x;
      if (move.lpNorm<Eigen::Infinity>() < 1e-14) break;
      fn = problem.eval(xn, &gn);
      if (std::isfinite(fn) && fn <= f + 1e-4 * g.dot(move)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;

    Eigen::VectorXd s_vec = xn - res.x;
    Eigen::VectorXd y_vec = gn - g;
    if (s_vec.dot(y_vec) > 1e-10 * s_vec.norm() * y_vec.norm()) {
      s_hist.push_back(s_vec);
      y_hist.push_back(y_vec);
      if (static_cast<int>(s_hist.size()) > memory) {
        s_hist.erase(s_hist.begin());
        y_hist.erase(y_hist.begin());
      }
    }
    res.x = xn;
    f = fn;
    g = gn;
  }
  res.f = f;
  return res;
}

}  // namespace

double log_marginal_likelihood(const Eigen::MatrixXd& X, const Eigen::VectorXd& y,
                               const KernelParamsDim& params, Eigen::VectorXd* grad) {
  if (X.rows() != y.size() || X.cols() != params.lengthscales.size())
    throw ContractViolation("log_marginal_likelihood: dimension mismatch");
  LmlProblem problem(X, y);
  const int k = static_cast<int>(X.cols());
  Eigen::VectorXd theta(k + 2);
  for (int j = 0; j < k; ++j) theta[j] = std::log(params.lengthscales[j]);
  theta[k] = std::log(params.signal_var);
  theta[k + 1] = std::log(params.noise_var);
  double neg = problem.eval(theta, grad);
  if (grad != nullptr) *grad = -*grad;
  return -neg;
}

KernelParams fit_hyperparams(const Dataset& data, int restarts, Rng& rng,
                             const Eigen::VectorXd* lengthscale_fallback,
                             const std::vector<int>& angle_dims) {
  if (data.empty()) throw ContractViolation("fit_hyperparams: empty dataset");
  restarts = std::max(restarts, 1);

  const Eigen::MatrixXd X = data.inputs();
  const Eigen::MatrixXd Y = data.deltas(angle_dims);
  const int k = static_cast<int>(X.cols());
  const int out_dims = static_cast<int>(Y.cols());

  // initial lengthscales: per-coordinate input standard deviation, falling
  // back to the caller's scale hint where the std degenerates
  Eigen::VectorXd input_std(k);
  for (int j = 0; j < k; ++j) {
    double m = X.col(j).mean();
    double sd = std::sqrt((X.col(j).array() - m).square().mean());
    if (sd < 1e-8 && lengthscale_fallback != nullptr && lengthscale_fallback->size() == k)
      sd = (*lengthscale_fallback)[j];
    input_std[j] = std::max(sd, 1e-2);
  }

  // standardize targets per dimension; parameters are mapped back after.
  // A single point keeps the prior mean 0 (its empirical mean would absorb
  // the whole target and collapse the fitted signal variance).
  const int n_points = data.size();
  Eigen::VectorXd mu(out_dims), sd(out_dims);
  for (int d = 0; d < out_dims; ++d) {
    mu[d] = n_points >= 2 ? Y.col(d).mean() : 0.0;
    sd[d] = std::sqrt((Y.col(d).array() - mu[d]).square().mean());
    if (sd[d] < 1e-12) sd[d] = 1.0;
  }

  // perturbations drawn up front so the optimization can run in parallel
  std::vector<Eigen::VectorXd> perturb(static_cast<std::size_t>(out_dims) * restarts);
  for (int d = 0; d < out_dims; ++d)
    for (int r = 0; r < restarts; ++r) {
      Eigen::VectorXd p = Eigen::VectorXd::Zero(k + 2);
      if (r > 0)
        for (int j = 0; j < k + 2; ++j) p[j] = rng.uniform(-1.0, 1.0);
      perturb[static_cast<std::size_t>(d) * restarts + r] = p;
    }

  Eigen::VectorXd theta0(k + 2);
  for (int j = 0; j < k; ++j) theta0[j] = std::log(input_std[j]);
  theta0[k] = 0.0;               // log signal variance of standardized targets
  theta0[k + 1] = std::log(1e-3);  // log noise variance

  std::vector<LmlProblem> problems;
  problems.reserve(out_dims);
  for (int d = 0; d < out_dims; ++d)
    problems.emplace_back(X, ((Y.col(d).array() - mu[d]) / sd[d]).matrix());

  std::vector<OptResult> results(perturb.size());
  parallel_for(perturb.size(), [&](std::size_t i) {
    const int d = static_cast<int>(i) / restarts;
    results[i] = lbfgs_minimize(problems[d], theta0 + perturb[i]);
  });

  KernelParams out;
  out.dims.resize(out_dims);
  for (int d = 0; d < out_dims; ++d) {
    int best = -1;
    for (int r = 0; r < restarts; ++r) {
      const auto& res = results[static_cast<std::size_t>(d) * restarts + r];
      if (std::isfinite(res.f) && (best < 0 || res.f < results[static_cast<std::size_t>(d) * restarts + best].f))
        best = r;
    }
    if (best < 0)
      throw FitFailure("fit_hyperparams: kernel matrix singular at jitter cap for output dim " +
                           std::to_string(d),
                       d);
    const Eigen::VectorXd& theta = results[static_cast<std::size_t>(d) * restarts + best].x;
    auto& pd = out.dims[d];
    pd.lengthscales.resize(k);
    for (int j = 0; j < k; ++j) pd.lengthscales[j] = std::exp(theta[j]);
    double sf2 = std::exp(theta[k]);
    double sn2 = std::max(std::exp(theta[k + 1]), kNoiseFloorRatio * sf2);
    pd.signal_var = sf2 * sd[d] * sd[d];
    pd.noise_var = sn2 * sd[d] * sd[d];
  }
  return out;
}

}  // namespace barl
