#pragma once

#include <cmath>
#include <vector>

#include <Eigen/Core>

namespace barl {

inline double wrap_pi(double theta) {
  double w = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (w < 0) w += 2.0 * M_PI;
  return w - M_PI;
}

// Wraps the listed state coordinates of every row into [-pi, pi).
inline void wrap_angle_cols(Eigen::MatrixXd& states, const std::vector<int>& angle_dims) {
  for (int d : angle_dims)
    for (Eigen::Index i = 0; i < states.rows(); ++i) states(i, d) = wrap_pi(states(i, d));
}

inline void wrap_angle_entries(Eigen::VectorXd& state, const std::vector<int>& angle_dims) {
  for (int d : angle_dims) state[d] = wrap_pi(state[d]);
}

}  // namespace barl
