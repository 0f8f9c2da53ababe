#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "barl/gp.hpp"
#include "barl/rng.hpp"

namespace barl::testing {

// Direct dense-inversion GP oracle (LU, no Cholesky anywhere). Reimplements
// the model definition from scratch: delta targets centered by their mean,
// latent variance excluding noise.
struct DenseGpOracle {
  Eigen::MatrixXd X;
  Eigen::MatrixXd Y;
  KernelParams params;
  Eigen::VectorXd mu;
  std::vector<Eigen::MatrixXd> kinv;  // per output dim

  DenseGpOracle(const Dataset& data, const KernelParams& p) : params(p) {
    X = data.inputs();
    Y = data.deltas();
    const int n = data.size();
    const int out = p.output_dims();
    // offsets follow the model definition: the delta mean once two or more
    // observations exist, the prior mean 0 otherwise
    mu = n >= 2 ? Eigen::VectorXd(Y.colwise().mean()) : Eigen::VectorXd::Zero(out);
    kinv.resize(out);
    for (int d = 0; d < out; ++d) {
      Eigen::MatrixXd K(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          K(i, j) = kernel_eval(X.row(i).transpose(), X.row(j).transpose(), p.dims[d]);
      K.diagonal().array() += p.dims[d].noise_var;
      kinv[d] = Eigen::FullPivLU<Eigen::MatrixXd>(K).inverse();
    }
  }

  // mean in next-state coordinates, latent variance per dim
  void predict(const Eigen::VectorXd& x, Eigen::VectorXd& mean, Eigen::VectorXd& var) const {
    const int out = params.output_dims();
    const int d_state = static_cast<int>(mu.size());
    mean = x.head(d_state);
    var.resize(out);
    const int n = static_cast<int>(X.rows());
    for (int d = 0; d < out; ++d) {
      Eigen::VectorXd k(n);
      for (int i = 0; i < n; ++i)
        k[i] = kernel_eval(X.row(i).transpose(), x, params.dims[d]);
      if (n > 0) {
        Eigen::VectorXd yc = Y.col(d).array() - mu[d];
        mean[d] += mu[d] + k.dot(kinv[d] * yc);
        var[d] = params.dims[d].signal_var - k.dot(kinv[d] * k);
      } else {
        var[d] = params.dims[d].signal_var;
      }
    }
  }
};

// One-sample Kolmogorov-Smirnov statistic against N(mean, sd^2).
inline double ks_statistic(std::vector<double> samples, double mean, double sd) {
  std::sort(samples.begin(), samples.end());
  const double n = static_cast<double>(samples.size());
  double d_max = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    double f = 0.5 * std::erfc(-(samples[i] - mean) / (sd * std::sqrt(2.0)));
    d_max = std::max(d_max, std::max((i + 1) / n - f, f - i / n));
  }
  return d_max;
}

// asymptotic critical value, alpha = 0.01
inline double ks_critical_001(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

inline double mean_of(const std::vector<double>& v) {
  double m = 0.0;
  for (double x : v) m += x;
  return m / static_cast<double>(v.size());
}

inline double var_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size() - 1);
}

// Random small dataset with smooth structure for oracle comparisons.
inline Dataset random_dataset(Rng& rng, int n, int d, int na, double scale = 1.0) {
  Dataset data;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd s = scale * rng.normal_vec(d);
    Eigen::VectorXd a = scale * rng.normal_vec(na);
    Eigen::VectorXd sn(d);
    for (int j = 0; j < d; ++j)
      sn[j] = s[j] + std::sin(s[j] + (na > 0 ? a[0] : 0.0)) * 0.1 + 0.05 * rng.normal();
    data.add(s, a, sn);
  }
  return data;
}

inline KernelParams random_params(Rng& rng, int out_dims, int in_dims) {
  KernelParams p;
  p.dims.resize(out_dims);
  for (auto& pd : p.dims) {
    pd.lengthscales.resize(in_dims);
    for (int j = 0; j < in_dims; ++j) pd.lengthscales[j] = std::exp(rng.uniform(-0.7, 1.2));
    pd.signal_var = std::exp(rng.uniform(-1.0, 1.0));
    pd.noise_var = pd.signal_var * std::exp(rng.uniform(std::log(1e-4), std::log(1e-1)));
  }
  return p;
}

}  // namespace barl::testing
