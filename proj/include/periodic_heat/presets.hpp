#pragma once

#include "periodic_heat/periodic_complex.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace periodic_heat::presets {

/// Scalar field on the unit torus [0,1)^2.
using ScalarField = std::function<double(double x, double y)>;
/// Riemannian metric tensor field on the unit torus.
using MetricField = std::function<Eigen::Matrix2d(double x, double y)>;

/// One vertex with a single loop of the given shift.
PeriodicComplex loop_z(double mu = 1.0, double w = 1.0, double ell = 1.0, int shift = 1);

/// m vertices in series closing up with shift 1. Empty vectors mean all ones.
PeriodicComplex chain(int m, std::vector<double> w = {}, std::vector<double> mu = {},
                      std::vector<double> ell = {});

/// One vertex carrying one loop per conductance, all with shift 1.
PeriodicComplex parallel_edges(const std::vector<double>& w, double mu = 1.0);

/// n x n square grid of the unit torus with spacing h = 1/n.
PeriodicComplex grid_flat(int n);

/// Metric e^{2 phi} (dx^2 + dy^2): unit conductances, mu = e^{2 phi} h^2.
PeriodicComplex grid_conformal(int n, const ScalarField& phi);

/// General metric g(x, y) discretized on a 9-point stencil. Conductances come
/// from K = sqrt(det g) g^{-1} sampled at edge midpoints; the diagonal (or
/// anti-diagonal) edge carries |K_12| and the axis edges carry K_ii - |K_12|.
/// Requires K_ii > |K_12| everywhere.
PeriodicComplex grid_anisotropic(int n, const MetricField& g);

/// Seeded random conductances and vertex weights, log-uniform in [1/spread, spread].
/// k = 1: a ring of n vertices. k = 2: an n x n grid with random diagonals.
PeriodicComplex random_weights(int k, int n, std::uint64_t seed, double spread = 3.0);

// --- named fields used by the CLI and the acceptance checks -----------------

/// "zero", "sin_x" (amp sin 2 pi x), "sin_xy" (amp sin 2 pi x cos 2 pi y),
/// "bump" (amp cos 2 pi x + amp/2 sin 2 pi (x + y)).
ScalarField named_scalar_field(const std::string& name, double amplitude);

/// "flat", "shear" (pullback of the flat metric by (x + amp sin 2 pi y, y)),
/// "diag" (diag(1 + amp sin 2 pi x, 1 + amp cos 2 pi y)).
MetricField named_metric_field(const std::string& name, double amplitude);

/// Total volume of e^{2 phi} dx dy on the n-grid used by grid_conformal.
double conformal_volume(int n, const ScalarField& phi);

struct PresetParams {
  int m = 2;
  int n = 4;
  int k = 2;
  int shift = 1;
  double mu = 1.0;
  double a = 1.0;
  double b = 2.0;
  std::vector<double> w;
  std::vector<double> mus;
  std::vector<double> ell;
  std::string field;
  double amplitude = 0.1;
  std::uint64_t seed = 1;
  double spread = 3.0;
};

std::vector<std::string> preset_names();

/// Dispatches on {loop_z, chain, parallel_edges, grid_flat, grid_conformal,
/// grid_anisotropic, random_weights}.
PeriodicComplex build_preset(const std::string& name, const PresetParams& params);

}  // namespace periodic_heat::presets
