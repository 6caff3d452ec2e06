#pragma once

// Continuous-time random walk on the cover (generator -Delta(0) lifted to M)
// and shortest-path distances behind the stable norm.

#include "periodic_heat/hodge.hpp"
#include "periodic_heat/periodic_complex.hpp"

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <vector>

namespace periodic_heat::walk {

struct WalkSample {
  double t = 0.0;
  std::uint64_t seed = 0;
  std::size_t count = 0;
  /// count x k total lattice displacement of each path.
  Eigen::MatrixXi displacements;
  /// Number of jumps made by each path.
  std::vector<std::uint32_t> jumps;
};

/// Paths start at a mu-weighted vertex, hold for Exp(sum w / mu_i) and jump
/// along an incident edge end with probability proportional to w. Path i
/// draws from its own generator seeded by (seed, i), so the result does not
/// depend on the thread count.
WalkSample sample_displacements(const PeriodicComplex& c, double t, std::size_t count, std::uint64_t seed);

/// Expected number of jumps per path: t * sum_i (mu_i / vol) * rate_i.
double expected_jumps(const PeriodicComplex& c, double t);

struct CovarianceReport {
  Eigen::VectorXd mean;
  Eigen::MatrixXd covariance;
  Eigen::MatrixXd expected;    // 2 t A
  Eigen::MatrixXd std_error;   // from fourth moments
  Eigen::MatrixXd z;
  Eigen::VectorXd mean_z;
  double max_abs_z = 0.0;
  bool pass = false;
};

inline constexpr double kZThreshold = 4.0;

/// Requires count >= 1e4. Passes iff every covariance z-score is within 4.
CovarianceReport covariance_check(const WalkSample& sample, const hodge::EffectiveMetric& metric);

/// z-scores of the difference between two empirical covariances.
Eigen::MatrixXd covariance_difference_z(const WalkSample& a, const WalkSample& b);

struct StableNormOptions {
  /// Largest number of cover vertices in one search box.
  std::size_t max_nodes = std::size_t{1} << 22;
  /// Extra integer multiples of v checked for subadditivity (1..extra).
  int extra = 8;
};

struct StableNormEstimate {
  LatticeVector v;
  std::vector<int> n;          // ascending
  std::vector<double> d;       // d_n
  std::vector<double> ratios;  // d_n / n
  double norm = 0.0;           // d_{n_max} / n_max
  double c_est = 0.0;          // max_n |d_n - n norm|
  double error_bar = 0.0;      // c_est / n_max
  std::size_t pairs_checked = 0;
  double max_subadditivity_violation = 0.0;  // max(d_{a+b} - d_a - d_b, 0)
  bool subadditive = true;
};

/// min over base vertices m of the ell-distance from (m, 0) to (m, n v) on the cover.
double translation_distance(const PeriodicComplex& c, const LatticeVector& displacement,
                            const StableNormOptions& options = {});

/// n_max must be a power of two; v must be nonzero.
StableNormEstimate stable_norm(const PeriodicComplex& c, const LatticeVector& v, int n_max,
                               const StableNormOptions& options = {});

}  // namespace periodic_heat::walk
