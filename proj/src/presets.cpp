#include "periodic_heat/presets.hpp"

#include "periodic_heat/errors.hpp"

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <random>

namespace periodic_heat::presets {

namespace {

const char* kModule = "presets";
constexpr double kTwoPi = 2.0 * std::numbers::pi;

void require_positive(double value, const char* name) {
  if (!(value > 0.0) || !std::isfinite(value)) throw ParameterError(kModule, name, "must be positive");
}

void require_all_positive(const std::vector<double>& values, const char* name) {
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!(values[i] > 0.0) || !std::isfinite(values[i]))
      throw ParameterError(kModule, std::string(name) + "[" + std::to_string(i) + "]", "must be positive");
}

LatticeVector unit(int k, int j, int sign = 1) {
  LatticeVector s = LatticeVector::Zero(k);
  if (j >= 0) s[j] = sign;
  return s;
}

Edge make_edge(int tail, int head, double w, double ell, LatticeVector shift) {
  return Edge{tail, head, w, ell, std::move(shift)};
}

// Grid bookkeeping shared by the 2D builders: vertex (i, j) at (i/n, j/n).
struct Grid {
  int n;
  double h;
  int id(int i, int j) const { return ((i % n + n) % n) + n * ((j % n + n) % n); }
  // Lattice shift picked up by stepping from (i, j) by (di, dj).
  LatticeVector shift(int i, int j, int di, int dj) const {
    LatticeVector s(2);
    s[0] = (i + di >= n) ? 1 : (i + di < 0 ? -1 : 0);
    s[1] = (j + dj >= n) ? 1 : (j + dj < 0 ? -1 : 0);
    return s;
  }
};

Grid make_grid(int n) {
  if (n < 1) throw ParameterError(kModule, "n", "grid size must be >= 1");
  return Grid{n, 1.0 / n};
}

}  // namespace

PeriodicComplex loop_z(double mu, double w, double ell, int shift) {
  require_positive(mu, "mu");
  require_positive(w, "w");
  require_positive(ell, "ell");
  if (shift == 0) throw ParameterError(kModule, "shift", "loop shift must be nonzero");
  LatticeVector s(1);
  s[0] = shift;
  return PeriodicComplex(1, {mu}, {make_edge(0, 0, w, ell, s)});
}

PeriodicComplex chain(int m, std::vector<double> w, std::vector<double> mu, std::vector<double> ell) {
  if (m < 1) throw ParameterError(kModule, "m", "chain length must be >= 1");
  if (w.empty()) w.assign(m, 1.0);
  if (mu.empty()) mu.assign(m, 1.0);
  if (ell.empty()) ell.assign(m, 1.0);
  if (static_cast<int>(w.size()) != m) throw ParameterError(kModule, "w", "expected m conductances");
  if (static_cast<int>(mu.size()) != m) throw ParameterError(kModule, "mu", "expected m vertex weights");
  if (static_cast<int>(ell.size()) != m) throw ParameterError(kModule, "ell", "expected m lengths");
  require_all_positive(w, "w");
  require_all_positive(mu, "mu");
  require_all_positive(ell, "ell");
  std::vector<Edge> edges;
  for (int i = 0; i < m; ++i) {
    const bool closing = i == m - 1;
    edges.push_back(make_edge(i, closing ? 0 : i + 1, w[i], ell[i], unit(1, closing ? 0 : -1)));
  }
  return PeriodicComplex(1, std::move(mu), std::move(edges));
}

PeriodicComplex parallel_edges(const std::vector<double>& w, double mu) {
  if (w.empty()) throw ParameterError(kModule, "w", "need at least one conductance");
  require_all_positive(w, "w");
  require_positive(mu, "mu");
  std::vector<Edge> edges;
  for (double wi : w) edges.push_back(make_edge(0, 0, wi, 1.0, unit(1, 0)));
  return PeriodicComplex(1, {mu}, std::move(edges));
}

PeriodicComplex grid_flat(int n) {
  const Grid g = make_grid(n);
  std::vector<double> mu(static_cast<std::size_t>(n) * n, g.h * g.h);
  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      edges.push_back(make_edge(g.id(i, j), g.id(i + 1, j), 1.0, g.h, g.shift(i, j, 1, 0)));
      edges.push_back(make_edge(g.id(i, j), g.id(i, j + 1), 1.0, g.h, g.shift(i, j, 0, 1)));
    }
  return PeriodicComplex(2, std::move(mu), std::move(edges));
}

PeriodicComplex grid_conformal(int n, const ScalarField& phi) {
  const Grid g = make_grid(n);
  if (!phi) throw ParameterError(kModule, "phi", "conformal factor is empty");
  std::vector<double> scale(static_cast<std::size_t>(n) * n);
  std::vector<double> mu(scale.size());
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double p = phi(i * g.h, j * g.h);
      if (!std::isfinite(p)) throw ParameterError(kModule, "phi", "conformal factor is not finite");
      scale[g.id(i, j)] = std::exp(p);
      mu[g.id(i, j)] = std::exp(2.0 * p) * g.h * g.h;
    }
  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const int here = g.id(i, j), right = g.id(i + 1, j), up = g.id(i, j + 1);
      edges.push_back(make_edge(here, right, 1.0, 0.5 * (scale[here] + scale[right]) * g.h, g.shift(i, j, 1, 0)));
      edges.push_back(make_edge(here, up, 1.0, 0.5 * (scale[here] + scale[up]) * g.h, g.shift(i, j, 0, 1)));
    }
  return PeriodicComplex(2, std::move(mu), std::move(edges));
}

PeriodicComplex grid_anisotropic(int n, const MetricField& metric) {
  const Grid g = make_grid(n);
  if (!metric) throw ParameterError(kModule, "metric", "metric field is empty");
  auto conductivity = [&](double x, double y) {
    const Eigen::Matrix2d gm = metric(x, y);
    const double det = gm.determinant();
    if (!(det > 0.0) || !(gm(0, 0) > 0.0) || std::abs(gm(0, 1) - gm(1, 0)) > 1e-12 * gm.norm())
      throw ParameterError(kModule, "metric", "metric tensor must be symmetric positive definite");
    return Eigen::Matrix2d(std::sqrt(det) * gm.inverse());
  };
  auto length = [&](double x, double y, double dx, double dy) {
    const Eigen::Vector2d d(dx, dy);
    return std::sqrt(d.dot(metric(x, y) * d));
  };

  std::vector<double> mu(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) mu[g.id(i, j)] = std::sqrt(metric(i * g.h, j * g.h).determinant()) * g.h * g.h;

  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = i * g.h, y = j * g.h;
      const Eigen::Matrix2d kx = conductivity(x + 0.5 * g.h, y);
      const Eigen::Matrix2d ky = conductivity(x, y + 0.5 * g.h);
      const double wx = kx(0, 0) - std::abs(kx(0, 1));
      const double wy = ky(1, 1) - std::abs(ky(0, 1));
      if (!(wx > 0.0) || !(wy > 0.0))
        throw ParameterError(kModule, "metric", "conductivity not diagonally dominant at (" + std::to_string(x) +
                                                    ", " + std::to_string(y) + ")");
      edges.push_back(make_edge(g.id(i, j), g.id(i + 1, j), wx, length(x + 0.5 * g.h, y, g.h, 0.0),
                                g.shift(i, j, 1, 0)));
      edges.push_back(make_edge(g.id(i, j), g.id(i, j + 1), wy, length(x, y + 0.5 * g.h, 0.0, g.h),
                                g.shift(i, j, 0, 1)));

      const double cx = x + 0.5 * g.h, cy = y + 0.5 * g.h;
      const double k12 = conductivity(cx, cy)(0, 1);
      if (k12 > 0.0) {
        edges.push_back(make_edge(g.id(i, j), g.id(i + 1, j + 1), k12, length(cx, cy, g.h, g.h),
                                  g.shift(i, j, 1, 1)));
      } else if (k12 < 0.0) {
        // from (i+1, j) to (i, j+1)
        LatticeVector s = g.shift(i, j, 0, 1) - g.shift(i, j, 1, 0);
        edges.push_back(make_edge(g.id(i + 1, j), g.id(i, j + 1), -k12, length(cx, cy, -g.h, g.h), s));
      }
    }
  return PeriodicComplex(2, std::move(mu), std::move(edges));
}

PeriodicComplex random_weights(int k, int n, std::uint64_t seed, double spread) {
  if (k != 1 && k != 2) throw ParameterError(kModule, "k", "random_weights supports k = 1 or 2");
  if (n < 1) throw ParameterError(kModule, "n", "must be >= 1");
  if (!(spread >= 1.0)) throw ParameterError(kModule, "spread", "must be >= 1");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-std::log(spread), std::log(spread));
  auto draw = [&] { return std::exp(unif(rng)); };

  if (k == 1) {
    std::vector<double> w(n), mu(n), ell(n);
    for (int i = 0; i < n; ++i) {
      w[i] = draw();
      mu[i] = draw();
      ell[i] = draw();
    }
    return chain(n, std::move(w), std::move(mu), std::move(ell));
  }

  const Grid g = make_grid(n);
  std::vector<double> mu(static_cast<std::size_t>(n) * n);
  for (double& m : mu) m = draw();
  std::vector<Edge> edges;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      edges.push_back(make_edge(g.id(i, j), g.id(i + 1, j), draw(), draw(), g.shift(i, j, 1, 0)));
      edges.push_back(make_edge(g.id(i, j), g.id(i, j + 1), draw(), draw(), g.shift(i, j, 0, 1)));
      if (unif(rng) > 0.0) {
        edges.push_back(make_edge(g.id(i, j), g.id(i + 1, j + 1), draw(), draw(), g.shift(i, j, 1, 1)));
      } else {
        LatticeVector s = g.shift(i, j, 0, 1) - g.shift(i, j, 1, 0);
        edges.push_back(make_edge(g.id(i + 1, j), g.id(i, j + 1), draw(), draw(), s));
      }
    }
  return PeriodicComplex(2, std::move(mu), std::move(edges));
}

ScalarField named_scalar_field(const std::string& name, double amp) {
  if (name.empty() || name == "zero") return [](double, double) { return 0.0; };
  if (name == "sin_x") return [amp](double x, double) { return amp * std::sin(kTwoPi * x); };
  if (name == "sin_xy")
    return [amp](double x, double y) { return amp * std::sin(kTwoPi * x) * std::cos(kTwoPi * y); };
  if (name == "bump")
    return [amp](double x, double y) {
      return amp * std::cos(kTwoPi * x) + 0.5 * amp * std::sin(kTwoPi * (x + y));
    };
  throw ParameterError(kModule, "field", "unknown scalar field '" + name + "'");
}

MetricField named_metric_field(const std::string& name, double amp) {
  if (name.empty() || name == "flat") return [](double, double) { return Eigen::Matrix2d::Identity().eval(); };
  if (name == "shear")
    return [amp](double, double y) {
      Eigen::Matrix2d jac;
      jac << 1.0, amp * kTwoPi * std::cos(kTwoPi * y), 0.0, 1.0;
      return Eigen::Matrix2d(jac.transpose() * jac);
    };
  if (name == "diag")
    return [amp](double x, double y) {
      Eigen::Matrix2d gm = Eigen::Matrix2d::Zero();
      gm(0, 0) = 1.0 + amp * std::sin(kTwoPi * x);
      gm(1, 1) = 1.0 + amp * std::cos(kTwoPi * y);
      return gm;
    };
  throw ParameterError(kModule, "field", "unknown metric field '" + name + "'");
}

double conformal_volume(int n, const ScalarField& phi) {
  const Grid g = make_grid(n);
  double vol = 0.0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) vol += std::exp(2.0 * phi(i * g.h, j * g.h)) * g.h * g.h;
  return vol;
}

std::vector<std::string> preset_names() {
  return {"loop_z", "chain", "parallel_edges", "grid_flat", "grid_conformal", "grid_anisotropic", "random_weights"};
}

PeriodicComplex build_preset(const std::string& name, const PresetParams& p) {
  if (name == "loop_z") return loop_z(p.mu, p.w.empty() ? 1.0 : p.w.front(), p.ell.empty() ? 1.0 : p.ell.front(), p.shift);
  if (name == "chain") return chain(p.m, p.w, p.mus, p.ell);
  if (name == "parallel_edges") return parallel_edges(p.w.empty() ? std::vector<double>{p.a, p.b} : p.w, p.mu);
  if (name == "grid_flat") return grid_flat(p.n);
  if (name == "grid_conformal") return grid_conformal(p.n, named_scalar_field(p.field.empty() ? "sin_x" : p.field, p.amplitude));
  if (name == "grid_anisotropic") return grid_anisotropic(p.n, named_metric_field(p.field.empty() ? "shear" : p.field, p.amplitude));
  if (name == "random_weights") return random_weights(p.k, p.n, p.seed, p.spread);
  throw ParameterError(kModule, "preset", "unknown preset '" + name + "'");
}

}  // namespace periodic_heat::presets
