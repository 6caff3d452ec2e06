#pragma once

// Lattice-summed heat kernel k(t, v) = sum over base vertices m of the
// transition probability from (m, 0) to (m, v), evaluated by the uniform
// N^k quadrature on the Bloch torus. By Poisson summation this is exactly the
// kernel of the (N Z)^k supercell, which gives an independent dense oracle.

#include "periodic_heat/bloch.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/periodic_complex.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace periodic_heat::heat {

using Window = std::vector<LatticeVector>;

/// All v with |v_j| <= radius, first coordinate fastest.
Window box_window(int k, int radius);
/// Lattice vectors inside the ellipsoid <v, v>_B <= bound.
Window ellipsoid_window(const hodge::EffectiveMetric& metric, double bound);
int window_radius(const Window& window);

struct HeatKernelTable {
  double t = 0.0;
  int N = 0;
  Window window;
  std::vector<double> values;
  double max_imag_residue = 0.0;
  /// Eigenvalues left out of the traces (zero for dense spectra).
  double spectral_tail = 0.0;
  /// Rigorous bound on sum_{u != 0} k(t, v + N u) over the window.
  double aliasing_bound = 0.0;
  double tail_bound = 0.0;  // spectral_tail + aliasing_bound

  /// Value at v; throws ParameterError when v is not in the window.
  double at(const LatticeVector& v) const;
  double sum() const;
};

struct HeatOptions {
  bloch::SpectrumOptions spectrum;
  /// Truncated traces keep enough bands for a tail below this (|V| > dense threshold only).
  double trace_tol = 1e-14;
  /// Aliasing target for the automatic choice of N.
  double aliasing_target = 1e-12;
  /// Largest admissible number of torus points N^k.
  std::size_t max_grid_points = std::size_t{1} << 22;
};

/// Chernoff bound for the image sum sum_{u != 0} k(t, v + N u), built from
/// the harmonic cochains: for every tilt eta the walk in harmonic coordinates
/// satisfies E e^{eta.(X_t - X_0)} <= e^{t rho(eta)} with rho(eta) the
/// largest row sum of the tilted generator.
class AliasingModel {
 public:
  AliasingModel(const PeriodicComplex& c, const hodge::HarmonicBasis& basis);

  double bound(double t, int N, const LatticeVector& v) const;
  double bound(double t, int N, const Window& window) const;

 private:
  double log_bound(double t, int N, const LatticeVector& v, std::size_t eta_index) const;

  int rank_;
  double log_vertices_;
  std::vector<double> etas_;
  std::vector<double> rho_;  // max over sign patterns, per eta
};

/// Per-theta traces on the N^k torus grid, reusable across times t >= t_min.
class TorusSpectra {
 public:
  TorusSpectra(const bloch::BlochFamily& family, int N, double t_min, const HeatOptions& options = {});

  int N() const noexcept { return N_; }
  int rank() const noexcept { return rank_; }
  std::size_t points() const noexcept { return eigenvalues_.size(); }
  const Eigen::VectorXd& eigenvalues(std::size_t point) const { return eigenvalues_.at(point); }
  /// Grid point for a linear index (first coordinate fastest), wrapped to [-pi, pi).
  Eigen::VectorXd theta(std::size_t point) const;

  /// k_N(t, v) for v in window; t must be >= t_min.
  HeatKernelTable kernel(double t, const Window& window) const;

 private:
  int N_;
  int rank_;
  double t_min_;
  std::size_t full_size_;
  std::vector<Eigen::VectorXd> eigenvalues_;
  bool truncated_ = false;
};

/// Rejects windows that do not fit one N-period: requires 2 |v_j| + 1 <= N.
void check_window(const Window& window, int k, int N);

/// N = max(2 R + 1, ceil(8 sqrt(t lambda_max(A)))), then increased until the
/// aliasing bound over the window is at most target. Throws ResourceError
/// when the grid would exceed max_grid_points.
int default_quadrature_size(const AliasingModel& aliasing, const hodge::EffectiveMetric& metric, double t,
                            const Window& window, double target, std::size_t max_grid_points = std::size_t{1} << 22);

/// Quadrature of the Bloch formula. N = 0 selects default_quadrature_size.
HeatKernelTable heat_kernel_lattice(const bloch::BlochFamily& family, double t, int N, const Window& window,
                                    const HeatOptions& options = {});
HeatKernelTable heat_kernel_lattice(const PeriodicComplex& c, double t, int N, const Window& window,
                                    const HeatOptions& options = {});

inline constexpr std::size_t kDenseOracleCap = 4096;

/// Dense eigendecomposition of the supercell Laplacian; same periodization
/// as heat_kernel_lattice with the same N.
HeatKernelTable supercell_oracle(const PeriodicComplex& c, double t, int N, const Window& window,
                                 std::size_t vertex_cap = kDenseOracleCap);

/// Transition blocks P_v(m, m') = P((m, 0) -> (m', v)) on the supercell for
/// every residue v in (Z/N)^k.
class TwoPointKernel {
 public:
  TwoPointKernel(const bloch::BlochFamily& family, double t, int N);

  double t() const noexcept { return t_; }
  int N() const noexcept { return N_; }
  int rank() const noexcept { return rank_; }
  std::size_t residues() const noexcept { return blocks_.size(); }
  /// v is reduced mod N.
  const Eigen::MatrixXd& block(const LatticeVector& v) const;
  const Eigen::MatrixXd& block(std::size_t residue) const { return blocks_.at(residue); }
  LatticeVector residue_vector(std::size_t residue) const;

  /// sum_v sum_{m, m'} mu_m P_v(m, m'); equals vol(X).
  double mass(const Eigen::VectorXd& mu) const;
  /// sum_v trace P_v, the sum of k_N(t, v) over a full period.
  double trace_sum() const;
  /// Blocks of the kernel at t + other.t() by convolution over residues.
  std::vector<Eigen::MatrixXd> compose(const TwoPointKernel& other) const;

 private:
  std::size_t index(const LatticeVector& v) const;

  double t_;
  int N_;
  int rank_;
  std::vector<Eigen::MatrixXd> blocks_;
};

struct GaussianPrediction {
  double t = 0.0;
  Window window;
  std::vector<double> values;
};

/// cell_volume / (4 pi t)^{k/2} * exp(-<v, v>_B / (4 t)).
double gaussian_value(const hodge::EffectiveMetric& metric, double t, const LatticeVector& v);
GaussianPrediction gaussian_prediction(const hodge::EffectiveMetric& metric, double t, const Window& window);

struct AsymptoticPoint {
  double t = 0.0;
  int N = 0;
  std::size_t region_points = 0;
  double sup_error = 0.0;
  LatticeVector argmax;
  /// sqrt(<argmax, argmax>_B / (C t)), in [0, 1].
  double argmax_radius = 0.0;
  double kernel_at_zero = 0.0;
  double gaussian_at_zero = 0.0;
  double error_at_zero = 0.0;
  double relative_error_at_zero = 0.0;
  double aliasing_bound = 0.0;
  double spectral_tail = 0.0;
  /// sup_error * t^{(k+1)/2}: the empirical remainder constant.
  double scaled_error = 0.0;
};

struct AsymptoticReport {
  double C = 9.0;
  int rank = 0;
  std::vector<AsymptoticPoint> points;
  double slope = 0.0;
  double intercept = 0.0;
  double predicted_exponent = 0.0;  // -(k + 1) / 2
  /// True when the argmax sits in the outer 5% of the region at every t
  /// and its radius increases along the scan.
  bool boundary_drift = false;
};

struct AsymptoticOptions {
  double C = 9.0;
  /// Aliasing allowed as a fraction of t^{-(k+1)/2}.
  double aliasing_fraction = 0.01;
  HeatOptions heat;
};

/// Requires an ascending t_list with at least 4 entries.
AsymptoticReport asymptotic_error_scan(const bloch::BlochFamily& family, const std::vector<double>& t_list,
                                       const AsymptoticOptions& options = {});

/// Least-squares slope and intercept of y against x.
std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace periodic_heat::heat
