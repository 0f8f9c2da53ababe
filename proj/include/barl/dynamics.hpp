#pragma once

#include <functional>

#include <Eigen/Core>

namespace barl {

// Deterministic dynamics as seen by the planner: ground truth, a GP posterior
// mean, or one posterior function sample. Implementations must be pure
// functions of the batch, so identical batches give bit-identical results
// regardless of thread count; batch shapes are chosen by the planner and
// never depend on parallelism.
class DynamicsFn {
 public:
  virtual ~DynamicsFn() = default;

  // s: B x d states, a: B x n_a actions, out: B x d next states.
  virtual void step_batch(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                          Eigen::MatrixXd& out) const = 0;

  Eigen::VectorXd step(const Eigen::VectorXd& s, const Eigen::VectorXd& a) const {
    Eigen::MatrixXd out(1, s.size());
    step_batch(s.transpose(), a.transpose(), out);
    return out.row(0).transpose();
  }
};

// Batched known reward r(s, a, s'); one value per row.
using RewardFn = std::function<void(const Eigen::MatrixXd& s, const Eigen::MatrixXd& a,
                                    const Eigen::MatrixXd& s_next, Eigen::VectorXd& out)>;

}  // namespace barl
