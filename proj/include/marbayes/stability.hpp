#pragma once

#include <Eigen/Dense>

#include "marbayes/model.hpp"

namespace marbayes {

struct StabilityReport {
  double spectral_radius = 0.0;
  bool stable = false;
  std::size_t matrix_dim = 0;
};

// p x p companion matrix of component k, with p the spec's maximum order.
Eigen::MatrixXd companion(const MARSpec& spec, std::size_t k);

// sum_k pi_k A_k (x) A_k, of size p^2 x p^2.
Eigen::MatrixXd stability_matrix(const MARSpec& spec);

// Stable iff the spectral radius of stability_matrix() is strictly below one.
// Throws std::runtime_error if the eigenvalue iteration does not converge.
StabilityReport is_stable(const MARSpec& spec);

}  // namespace marbayes
