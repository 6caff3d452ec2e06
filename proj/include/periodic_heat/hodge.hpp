#pragma once

// Discrete Hodge theory on the quotient X: 0- and 1-cochains with the inner
// products <f,g>_0 = sum mu f g and <a,b>_1 = sum w a b, harmonic
// representatives of the shift cocycles, and the effective metric.

#include "periodic_heat/periodic_complex.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <cstddef>
#include <memory>
#include <string>
#include <vector>

namespace periodic_heat::hodge {

struct SolverOptions {
  /// Vertex count up to which the Poisson problem is factorized directly.
  std::size_t direct_threshold = 4096;
  /// Relative residual target.
  double tol = 1e-12;
  /// Iteration cap for the iterative path; 0 means 20 |V|.
  int max_iterations = 0;
  /// Largest accepted condition number of the effective metric.
  double condition_cap = 1e12;
};

struct SolverInfo {
  std::string method;
  int iterations = 0;
  double residual = 0.0;
};

/// Coboundary d0 as an |E| x |V| matrix: (d0 f)_e = f(head) - f(tail).
Eigen::SparseMatrix<double> coboundary_matrix(const PeriodicComplex& c);

/// Weighted graph Laplacian K = d0^T W d0 (symmetric, kernel = constants).
Eigen::SparseMatrix<double> laplacian_matrix(const PeriodicComplex& c);

Eigen::VectorXd d0(const PeriodicComplex& c, const Eigen::VectorXd& f);

/// Adjoint of d0 for the weighted inner products: M^{-1} d0^T W a.
Eigen::VectorXd adjoint_d0(const PeriodicComplex& c, const Eigen::VectorXd& a);

double inner0(const PeriodicComplex& c, const Eigen::VectorXd& f, const Eigen::VectorXd& g);
double inner1(const PeriodicComplex& c, const Eigen::VectorXd& a, const Eigen::VectorXd& b);

/// Integer cochain carrying component j (0-based) of each edge shift.
Eigen::VectorXd shift_cocycle(const PeriodicComplex& c, int j);

/// Sum of a 1-cochain around the fundamental cycle closed by each edge.
std::vector<double> cycle_sums(const PeriodicComplex& c, const Eigen::VectorXd& a);

/// Solver for K x = b restricted to functions with <x, 1>_0 = 0.
/// Small complexes use a sparse LU of the system bordered by the mu
/// constraint; large ones use Jacobi-preconditioned conjugate gradients.
class PoissonSolver {
 public:
  explicit PoissonSolver(const PeriodicComplex& c, SolverOptions options = {});
  ~PoissonSolver();
  PoissonSolver(PoissonSolver&&) noexcept;
  PoissonSolver& operator=(PoissonSolver&&) noexcept;

  /// rhs is projected onto the range of K (sum zero) before solving.
  Eigen::VectorXd solve(const Eigen::VectorXd& rhs, SolverInfo* info = nullptr) const;

  /// Green's operator of Delta(0) = M^{-1} K on mu-mean-zero functions.
  Eigen::VectorXd green(const Eigen::VectorXd& b, SolverInfo* info = nullptr) const;

  const SolverOptions& options() const noexcept { return options_; }
  bool direct() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  SolverOptions options_;
};

struct HarmonicForm {
  Eigen::VectorXd tau;        // coclosed representative
  Eigen::VectorXd potential;  // tau = cochain - d0 potential, <potential, 1>_0 = 0
  double residual = 0.0;      // |d0^T W tau| / |d0^T W cochain|
  SolverInfo info;
};

/// Hodge projection of an arbitrary 1-cochain onto the coclosed cochains.
HarmonicForm harmonic_projection(const PeriodicComplex& c, const Eigen::VectorXd& cochain,
                                 const PoissonSolver& solver);

HarmonicForm harmonic_representative(const PeriodicComplex& c, int j, const PoissonSolver& solver);
HarmonicForm harmonic_representative(const PeriodicComplex& c, int j, SolverOptions options = {});

struct HarmonicBasis {
  std::vector<HarmonicForm> forms;

  int rank() const { return static_cast<int>(forms.size()); }
  /// |E| x k matrix whose column j is tau_h^j.
  Eigen::MatrixXd tau_matrix() const;
  /// |V| x k matrix of potentials.
  Eigen::MatrixXd potential_matrix() const;
};

HarmonicBasis harmonic_basis(const PeriodicComplex& c, const PoissonSolver& solver);
HarmonicBasis harmonic_basis(const PeriodicComplex& c, SolverOptions options = {});

struct EffectiveMetric {
  Eigen::MatrixXd A;  // Hodge Gram matrix of the integral basis divided by vol(X)
  Eigen::MatrixXd B;  // A^{-1}, the metric on R^k
  double cell_volume = 0.0;
  double vol_X = 0.0;
  double condition = 0.0;
  std::vector<double> residuals;
  SolverInfo info;

  int rank() const { return static_cast<int>(A.rows()); }
  /// <v, v>_{R^k}
  double norm2(const Eigen::VectorXd& v) const { return v.dot(B * v); }
};

EffectiveMetric effective_metric(const PeriodicComplex& c, const HarmonicBasis& basis,
                                 const SolverOptions& options = {});
EffectiveMetric effective_metric(const PeriodicComplex& c, SolverOptions options = {});

}  // namespace periodic_heat::hodge
