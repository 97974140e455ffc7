#include "marbayes/stability.hpp"

#include <Eigen/Eigenvalues>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unsupported/Eigen/KroneckerProduct>

namespace marbayes {

Eigen::MatrixXd companion(const MARSpec& spec, std::size_t k) {
  if (k >= spec.components()) throw std::out_of_range("companion: component index");
  const auto p = static_cast<Eigen::Index>(spec.max_order());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(p, p);
  for (Eigen::Index j = 0; j < p; ++j) a(0, j) = spec.ar_coeff(k, static_cast<std::size_t>(j) + 1);
  for (Eigen::Index i = 1; i < p; ++i) a(i, i - 1) = 1.0;
  return a;
}

Eigen::MatrixXd stability_matrix(const MARSpec& spec) {
  const auto p = static_cast<Eigen::Index>(spec.max_order());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p * p, p * p);
  for (std::size_t k = 0; k < spec.components(); ++k) {
    const Eigen::MatrixXd a = companion(spec, k);
    out += spec.weights[k] * Eigen::kroneckerProduct(a, a).eval();
  }
  return out;
}

StabilityReport is_stable(const MARSpec& spec) {
  const Eigen::MatrixXd a = stability_matrix(spec);
  StabilityReport report;
  report.matrix_dim = static_cast<std::size_t>(a.rows());
  if (!a.allFinite()) {
    report.spectral_radius = std::numeric_limits<double>::infinity();
    return report;
  }
  if (a.rows() == 1) {
    report.spectral_radius = std::abs(a(0, 0));
  } else {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(a, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
      std::ostringstream msg;
      msg << "is_stable: eigenvalue iteration did not converge for a " << a.rows() << "x"
          << a.cols() << " stability matrix (max |entry| = " << a.cwiseAbs().maxCoeff() << ")";
      throw std::runtime_error(msg.str());
    }
    report.spectral_radius = solver.eigenvalues().cwiseAbs().maxCoeff();
  }
  report.stable = report.spectral_radius < 1.0;
  return report;
}

}  // namespace marbayes
