#pragma once

// The twisted Laplacian family Delta(theta) on the quotient, its band
// spectrum, and the second-order behaviour of the lowest band at theta = 0.
//
// Phase gauge: (d(theta) f)_e = e^{i theta.s_e} f(head) - f(tail) and
// Delta(theta) = M^{-1} d(theta)^* W d(theta). The harmonic gauge conjugates
// this by diag(e^{-i theta.f(v)}) with f the Hodge potentials, which trades
// the integer shifts s_e for the harmonic cochain tau_h.

#include "periodic_heat/hodge.hpp"
#include "periodic_heat/periodic_complex.hpp"

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include <complex>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace periodic_heat::bloch {

using Complex = std::complex<double>;
using SparseMatrixC = Eigen::SparseMatrix<Complex>;

/// A character of Z^k; components are wrapped into [-pi, pi).
class BlochPoint {
 public:
  explicit BlochPoint(Eigen::VectorXd theta);
  static BlochPoint zero(int k) { return BlochPoint(Eigen::VectorXd::Zero(k)); }

  const Eigen::VectorXd& theta() const noexcept { return theta_; }
  int dim() const noexcept { return static_cast<int>(theta_.size()); }
  double norm() const { return theta_.norm(); }

 private:
  Eigen::VectorXd theta_;
};

enum class Gauge { phase, harmonic };

std::string to_string(Gauge g);

class BlochOperator {
 public:
  BlochOperator(BlochPoint theta, Gauge gauge, SparseMatrixC energy, Eigen::VectorXd mu);

  const BlochPoint& theta() const noexcept { return theta_; }
  Gauge gauge() const noexcept { return gauge_; }
  std::size_t size() const noexcept { return static_cast<std::size_t>(mu_.size()); }

  /// L = d(theta)^* W d(theta); Delta = M^{-1} L.
  const SparseMatrixC& energy() const noexcept { return energy_; }
  const Eigen::VectorXd& mu() const noexcept { return mu_; }

  Eigen::VectorXcd apply(const Eigen::VectorXcd& f) const;
  /// Delta as a dense matrix (not Euclidean-Hermitian unless mu is constant).
  Eigen::MatrixXcd dense() const;
  /// M^{-1/2} L M^{-1/2}, unitarily equivalent to Delta and Hermitian.
  Eigen::MatrixXcd symmetric_dense() const;
  SparseMatrixC symmetric_sparse() const;
  /// max |<f_i, Delta f_j>_mu - conj(<f_j, Delta f_i>_mu)| over unit vectors, relative to max |L|.
  double hermiticity_defect() const;
  /// Rough upper bound for ||Delta||: max row sum of |M^{-1/2} L M^{-1/2}|.
  double norm_bound() const;

 private:
  BlochPoint theta_;
  Gauge gauge_;
  SparseMatrixC energy_;
  Eigen::VectorXd mu_;
};

/// Precomputed per-complex data for assembling Delta(theta) at many points.
/// Holds its own copy of the complex.
class BlochFamily {
 public:
  explicit BlochFamily(const PeriodicComplex& c, hodge::SolverOptions options = {});

  const PeriodicComplex& complex() const noexcept { return *complex_; }
  const hodge::PoissonSolver& solver() const noexcept { return solver_; }
  const hodge::HarmonicBasis& basis() const noexcept { return basis_; }
  int rank() const noexcept { return complex_->rank(); }

  BlochOperator assemble(const BlochPoint& theta, Gauge gauge = Gauge::phase) const;

  /// d^n/ds^n L(s * direction) at s = 0 for n = 1, 2, assembled from the
  /// derivatives of the edge phases (no differencing).
  SparseMatrixC energy_derivative(int order, const Eigen::VectorXd& direction, Gauge gauge = Gauge::phase) const;

  /// |d(theta) x|_W^2 / |x|_mu^2 in the phase gauge.
  double rayleigh_quotient(const BlochPoint& theta, const Eigen::VectorXcd& x) const;

 private:
  Eigen::VectorXd edge_phase(const Eigen::VectorXd& direction, Gauge gauge) const;

  std::shared_ptr<const PeriodicComplex> complex_;
  hodge::PoissonSolver solver_;
  hodge::HarmonicBasis basis_;
  Eigen::MatrixXd shifts_;  // |E| x k
  Eigen::MatrixXd tau_;     // |E| x k
  Eigen::MatrixXd potentials_;
};

/// Convenience: builds a family for a single assembly.
BlochOperator assemble(const PeriodicComplex& c, const BlochPoint& theta, Gauge gauge = Gauge::phase);

struct SpectrumOptions {
  std::size_t dense_threshold = 2048;
  bool vectors = false;
  /// Relative residual target for the iterative path.
  double tol = 1e-10;
  /// Krylov dimension cap for the iterative path; 0 picks a default.
  std::size_t max_subspace = 0;
};

struct BandData {
  BlochPoint theta = BlochPoint::zero(1);
  Eigen::VectorXd eigenvalues;  // ascending
  /// Columns are mu-orthonormal eigenvectors of Delta (when requested).
  std::optional<Eigen::MatrixXcd> eigenvectors;
  std::size_t full_size = 0;
  bool truncated = false;
  double max_residual = 0.0;
  std::string method;
};

/// Lowest m eigenvalues of Delta(theta).
BandData spectrum(const BlochOperator& op, std::size_t m, const SpectrumOptions& options = {});

struct HeatTrace {
  double value = 0.0;
  double tail_bound = 0.0;
};

/// sum_{i<=m} e^{-t lambda_i}; tail bounded by (|V| - m) e^{-t lambda_m} when truncated.
HeatTrace heat_trace(const BandData& bands, double t);
HeatTrace heat_trace(const BlochOperator& op, double t, std::optional<std::size_t> m = std::nullopt,
                     const SpectrumOptions& options = {});

/// Lowest band with the eigenvalue recomputed as an energy quotient, which
/// keeps relative accuracy near theta = 0.
double lowest_band(const BlochFamily& family, const BlochPoint& theta, const SpectrumOptions& options = {});

/// Second derivative of lambda_1 along direction at 0 from eigenvalue perturbation:
/// [<1, L'' 1> - 2 <Delta' 1, G Delta' 1>_mu] / vol(X).
double band_curvature_perturbative(const BlochFamily& family, const Eigen::VectorXd& direction,
                                   Gauge gauge = Gauge::phase);

/// Full k x k Hessian of lambda_1 at 0 from band_curvature_perturbative by polarization.
Eigen::MatrixXd band_hessian_perturbative(const BlochFamily& family, Gauge gauge = Gauge::phase);

/// Harmonic-gauge Hessian using only <1, L'' 1> / vol(X): valid because
/// Delta'(0) annihilates constants in that gauge.
Eigen::MatrixXd band_hessian_harmonic_first_term(const BlochFamily& family);

/// |Delta'(0) 1|_mu along direction (vanishes in the harmonic gauge).
double first_order_defect(const BlochFamily& family, const Eigen::VectorXd& direction, Gauge gauge);

/// Central second differences of lambda_1 with one Richardson level (h, h/2).
Eigen::MatrixXd band_hessian_fd(const BlochFamily& family, double h = 1e-3, const SpectrumOptions& options = {});

struct GapReport {
  double epsilon = 0.0;
  double min_lambda1_outside = 0.0;
  Eigen::VectorXd argmin_outside;
  std::optional<double> min_lambda2_inside;
  std::size_t points_outside = 0;
  std::size_t points_inside = 0;
  std::string note;
};

/// Samples the uniform n_g^k grid on [-pi, pi)^k plus radial projections of
/// grid directions onto the sphere |theta| = r.
GapReport gap_scan(const BlochFamily& family, int n_g, double r, const SpectrumOptions& options = {});

}  // namespace periodic_heat::bloch
