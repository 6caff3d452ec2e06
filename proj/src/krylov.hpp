#pragma once

// Lowest eigenpairs of a sparse Hermitian matrix by restarted block Krylov
// iteration with full reorthogonalization and Rayleigh-Ritz extraction.

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <cstddef>

namespace periodic_heat::detail {

struct LowestEigs {
  Eigen::VectorXd values;
  Eigen::MatrixXcd vectors;
  Eigen::VectorXd residuals;
  double norm_estimate = 0.0;
  bool converged = false;
  int restarts = 0;
};

LowestEigs block_krylov_lowest(const Eigen::SparseMatrix<std::complex<double>>& S, std::size_t m, double tol,
                               std::size_t max_subspace);

}  // namespace periodic_heat::detail
