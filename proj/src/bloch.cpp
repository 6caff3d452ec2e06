#include "periodic_heat/bloch.hpp"

#include "krylov.hpp"
#include "periodic_heat/errors.hpp"
#include "periodic_heat/parallel.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace periodic_heat::bloch {

namespace {

const char* kModule = "bloch";
constexpr double kPi = std::numbers::pi;

using Triplet = Eigen::Triplet<Complex>;

}  // namespace

BlochPoint::BlochPoint(Eigen::VectorXd theta) : theta_(std::move(theta)) {
  for (double& x : theta_) {
    if (!std::isfinite(x)) throw ParameterError(kModule, "theta", "must be finite");
    x -= 2.0 * kPi * std::floor((x + kPi) / (2.0 * kPi));
    if (x >= kPi) x -= 2.0 * kPi;
  }
}

std::string to_string(Gauge g) { return g == Gauge::phase ? "phase" : "harmonic"; }

// --- BlochOperator -------------------------------------------------------------

BlochOperator::BlochOperator(BlochPoint theta, Gauge gauge, SparseMatrixC energy, Eigen::VectorXd mu)
    : theta_(std::move(theta)), gauge_(gauge), energy_(std::move(energy)), mu_(std::move(mu)) {}

Eigen::VectorXcd BlochOperator::apply(const Eigen::VectorXcd& f) const {
  if (static_cast<std::size_t>(f.size()) != size()) throw ParameterError(kModule, "f", "dimension mismatch");
  Eigen::VectorXcd out = energy_ * f;
  return out.cwiseQuotient(mu_.cast<Complex>());
}

Eigen::MatrixXcd BlochOperator::dense() const {
  Eigen::MatrixXcd d = Eigen::MatrixXcd(energy_);
  return mu_.cwiseInverse().cast<Complex>().asDiagonal() * d;
}

Eigen::MatrixXcd BlochOperator::symmetric_dense() const {
  const Eigen::VectorXcd s = mu_.cwiseSqrt().cwiseInverse().cast<Complex>();
  Eigen::MatrixXcd d = Eigen::MatrixXcd(energy_);
  return s.asDiagonal() * d * s.asDiagonal();
}

SparseMatrixC BlochOperator::symmetric_sparse() const {
  const Eigen::VectorXcd s = mu_.cwiseSqrt().cwiseInverse().cast<Complex>();
  return SparseMatrixC(s.asDiagonal() * energy_ * s.asDiagonal());
}

double BlochOperator::hermiticity_defect() const {
  // <f, Delta g>_mu = f^* L g, so mu-Hermiticity of Delta is Euclidean Hermiticity of L.
  const SparseMatrixC diff = energy_ - SparseMatrixC(energy_.adjoint());
  double num = 0.0, den = 0.0;
  for (Eigen::Index col = 0; col < diff.outerSize(); ++col)
    for (SparseMatrixC::InnerIterator it(diff, col); it; ++it) num = std::max(num, std::abs(it.value()));
  for (Eigen::Index col = 0; col < energy_.outerSize(); ++col)
    for (SparseMatrixC::InnerIterator it(energy_, col); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : num;
}

double BlochOperator::norm_bound() const {
  const SparseMatrixC s = symmetric_sparse();
  Eigen::VectorXd rows = Eigen::VectorXd::Zero(s.rows());
  for (Eigen::Index col = 0; col < s.outerSize(); ++col)
    for (SparseMatrixC::InnerIterator it(s, col); it; ++it) rows[it.row()] += std::abs(it.value());
  return rows.size() ? rows.maxCoeff() : 0.0;
}

// --- BlochFamily -------------------------------------------------------------------

BlochFamily::BlochFamily(const PeriodicComplex& c, hodge::SolverOptions options)
    : complex_(std::make_shared<const PeriodicComplex>(c)),
      solver_(c, options),
      basis_(hodge::harmonic_basis(c, solver_)) {
  c.require_valid(kModule);
  const int k = c.rank();
  shifts_.resize(static_cast<Eigen::Index>(c.num_edges()), k);
  for (std::size_t e = 0; e < c.num_edges(); ++e) shifts_.row(e) = c.edge(e).shift.cast<double>().transpose();
  tau_ = basis_.tau_matrix();
  potentials_ = basis_.potential_matrix();
}

BlochOperator BlochFamily::assemble(const BlochPoint& theta, Gauge gauge) const {
  const PeriodicComplex& c = *complex_;
  if (theta.dim() != c.rank()) throw ParameterError(kModule, "theta", "dimension does not match the rank");
  const Eigen::VectorXd phase = shifts_ * theta.theta();
  Eigen::VectorXd gauge_phase;
  if (gauge == Gauge::harmonic) gauge_phase = potentials_ * theta.theta();

  std::vector<Triplet> trip;
  trip.reserve(4 * c.num_edges());
  // conj(U_a) L_ab U_b with U = diag(e^{-i theta.f})
  auto conj_factor = [&](int a, int b) {
    return gauge == Gauge::harmonic ? std::polar(1.0, gauge_phase[a] - gauge_phase[b]) : Complex(1.0);
  };
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    if (ed.head == ed.tail) {
      const double s = std::sin(0.5 * phase[e]);
      trip.emplace_back(ed.head, ed.head, 4.0 * ed.w * s * s);
      continue;
    }
    const Complex p = std::polar(1.0, phase[e]);
    trip.emplace_back(ed.head, ed.head, ed.w);
    trip.emplace_back(ed.tail, ed.tail, ed.w);
    trip.emplace_back(ed.tail, ed.head, -ed.w * p * conj_factor(ed.tail, ed.head));
    trip.emplace_back(ed.head, ed.tail, -ed.w * std::conj(p) * conj_factor(ed.head, ed.tail));
  }
  SparseMatrixC L(c.num_vertices(), c.num_vertices());
  L.setFromTriplets(trip.begin(), trip.end());
  return BlochOperator(theta, gauge, std::move(L), c.mu_vector());
}

Eigen::VectorXd BlochFamily::edge_phase(const Eigen::VectorXd& direction, Gauge gauge) const {
  if (direction.size() != rank()) throw ParameterError(kModule, "direction", "dimension does not match the rank");
  return (gauge == Gauge::phase ? shifts_ : tau_) * direction;
}

SparseMatrixC BlochFamily::energy_derivative(int order, const Eigen::VectorXd& direction, Gauge gauge) const {
  if (order != 1 && order != 2) throw ParameterError(kModule, "order", "only first and second derivatives");
  const PeriodicComplex& c = *complex_;
  const Eigen::VectorXd phi = edge_phase(direction, gauge);
  const Eigen::Index ne = static_cast<Eigen::Index>(c.num_edges());
  const Eigen::Index nv = static_cast<Eigen::Index>(c.num_vertices());

  // D(s) f = e^{i s phi} f(head) - f(tail): D(0) = d0, D'(0) = i phi H, D''(0) = -phi^2 H.
  std::vector<Triplet> t0, t1, t2;
  for (Eigen::Index e = 0; e < ne; ++e) {
    const Edge& ed = c.edge(static_cast<std::size_t>(e));
    if (ed.head != ed.tail) {
      t0.emplace_back(e, ed.head, 1.0);
      t0.emplace_back(e, ed.tail, -1.0);
    }
    t1.emplace_back(e, ed.head, Complex(0.0, phi[e]));
    t2.emplace_back(e, ed.head, -phi[e] * phi[e]);
  }
  SparseMatrixC D0(ne, nv), D1(ne, nv), D2(ne, nv);
  D0.setFromTriplets(t0.begin(), t0.end());
  D1.setFromTriplets(t1.begin(), t1.end());
  D2.setFromTriplets(t2.begin(), t2.end());
  Eigen::VectorXcd w(ne);
  for (Eigen::Index e = 0; e < ne; ++e) w[e] = c.edge(static_cast<std::size_t>(e)).w;
  const SparseMatrixC WD0 = w.asDiagonal() * D0;
  const SparseMatrixC WD1 = w.asDiagonal() * D1;
  const SparseMatrixC WD2 = w.asDiagonal() * D2;
  if (order == 1) return SparseMatrixC(D1.adjoint() * WD0) + SparseMatrixC(D0.adjoint() * WD1);
  return SparseMatrixC(D2.adjoint() * WD0) + 2.0 * SparseMatrixC(D1.adjoint() * WD1) +
         SparseMatrixC(D0.adjoint() * WD2);
}

double BlochFamily::rayleigh_quotient(const BlochPoint& theta, const Eigen::VectorXcd& x) const {
  const PeriodicComplex& c = *complex_;
  const Eigen::VectorXd phase = shifts_ * theta.theta();
  double energy = 0.0;
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    energy += ed.w * std::norm(std::polar(1.0, phase[e]) * x[ed.head] - x[ed.tail]);
  }
  double mass = 0.0;
  for (std::size_t v = 0; v < c.num_vertices(); ++v) mass += c.mu()[v] * std::norm(x[v]);
  return energy / mass;
}

BlochOperator assemble(const PeriodicComplex& c, const BlochPoint& theta, Gauge gauge) {
  c.require_valid(kModule);
  return BlochFamily(c).assemble(theta, gauge);
}

// --- spectra ------------------------------------------------------------------------

BandData spectrum(const BlochOperator& op, std::size_t m, const SpectrumOptions& options) {
  const std::size_t n = op.size();
  if (m < 1 || m > n) throw ParameterError(kModule, "m", "must satisfy 1 <= m <= |V|");
  BandData out;
  out.theta = op.theta();
  out.full_size = n;
  out.truncated = m < n;
  const Eigen::VectorXd inv_sqrt_mu = op.mu().cwiseSqrt().cwiseInverse();

  if (n <= options.dense_threshold) {
    out.method = "dense";
    const Eigen::MatrixXcd S = op.symmetric_dense();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(
        S, options.vectors ? Eigen::ComputeEigenvectors : Eigen::EigenvaluesOnly);
    if (eig.info() != Eigen::Success) throw SolverError(kModule, "dense Hermitian eigensolver failed");
    out.eigenvalues = eig.eigenvalues().head(static_cast<Eigen::Index>(m));
    if (options.vectors) {
      const Eigen::MatrixXcd Y = eig.eigenvectors().leftCols(static_cast<Eigen::Index>(m));
      for (Eigen::Index i = 0; i < Y.cols(); ++i)
        out.max_residual = std::max(out.max_residual, (S * Y.col(i) - out.eigenvalues[i] * Y.col(i)).norm());
      out.eigenvectors = inv_sqrt_mu.cast<Complex>().asDiagonal() * Y;
    }
    return out;
  }

  out.method = "krylov";
  const std::size_t subspace = options.max_subspace ? options.max_subspace : std::max<std::size_t>(200, 12 * m);
  const auto res = detail::block_krylov_lowest(op.symmetric_sparse(), m, options.tol, subspace);
  out.max_residual = res.residuals.size() ? res.residuals.maxCoeff() : 0.0;
  if (!res.converged)
    throw SolverError(kModule, "block Krylov eigensolver did not converge (max residual " +
                                   std::to_string(out.max_residual) + ")",
                      out.max_residual);
  out.eigenvalues = res.values;
  if (options.vectors) out.eigenvectors = inv_sqrt_mu.cast<Complex>().asDiagonal() * res.vectors;
  return out;
}

HeatTrace heat_trace(const BandData& bands, double t) {
  if (!(t > 0.0)) throw ParameterError(kModule, "t", "must be positive");
  HeatTrace out;
  for (double lambda : bands.eigenvalues) out.value += std::exp(-t * lambda);
  if (bands.truncated) {
    const double last = bands.eigenvalues[bands.eigenvalues.size() - 1];
    out.tail_bound = static_cast<double>(bands.full_size - bands.eigenvalues.size()) * std::exp(-t * last);
  }
  return out;
}

HeatTrace heat_trace(const BlochOperator& op, double t, std::optional<std::size_t> m, const SpectrumOptions& options) {
  return heat_trace(spectrum(op, m.value_or(op.size()), options), t);
}

double lowest_band(const BlochFamily& family, const BlochPoint& theta, const SpectrumOptions& options) {
  SpectrumOptions opts = options;
  opts.vectors = true;
  const BlochOperator op = family.assemble(theta, Gauge::phase);
  const BandData bands = spectrum(op, std::min<std::size_t>(2, op.size()), opts);
  if (bands.eigenvalues.size() > 1) {
    const double gap = bands.eigenvalues[1] - bands.eigenvalues[0];
    if (gap <= 1e-8 * std::max(1.0, std::abs(bands.eigenvalues[1])))
      throw SolverError(kModule, "lowest band is not simple here; eigenvalue tracking failed");
  }
  return family.rayleigh_quotient(theta, bands.eigenvectors->col(0));
}

// --- second-order perturbation ------------------------------------------------------

double band_curvature_perturbative(const BlochFamily& family, const Eigen::VectorXd& direction, Gauge gauge) {
  const PeriodicComplex& c = family.complex();
  const Eigen::VectorXd mu = c.mu_vector();
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(c.num_vertices()));

  const SparseMatrixC L1 = family.energy_derivative(1, direction, gauge);
  const SparseMatrixC L2 = family.energy_derivative(2, direction, gauge);
  const double second = (ones.adjoint() * (L2 * ones))(0).real();

  // b = Delta'(0) 1 = M^{-1} L' 1
  const Eigen::VectorXcd b = (L1 * ones).cwiseQuotient(mu.cast<Complex>());
  const Eigen::VectorXd g_re = family.solver().green(b.real());
  const Eigen::VectorXd g_im = family.solver().green(b.imag());
  const double green_term = (mu.array() * (b.real().array() * g_re.array() + b.imag().array() * g_im.array())).sum();
  return (second - 2.0 * green_term) / c.volume();
}

namespace {

template <typename Quadratic>
Eigen::MatrixXd polarize(int k, Quadratic&& q) {
  Eigen::MatrixXd H(k, k);
  Eigen::VectorXd diag(k);
  for (int j = 0; j < k; ++j) diag[j] = q(Eigen::VectorXd::Unit(k, j));
  for (int j = 0; j < k; ++j) {
    H(j, j) = diag[j];
    for (int l = j + 1; l < k; ++l) {
      const Eigen::VectorXd dir = Eigen::VectorXd::Unit(k, j) + Eigen::VectorXd::Unit(k, l);
      H(j, l) = H(l, j) = 0.5 * (q(dir) - diag[j] - diag[l]);
    }
  }
  return H;
}

}  // namespace

Eigen::MatrixXd band_hessian_perturbative(const BlochFamily& family, Gauge gauge) {
  return polarize(family.rank(),
                  [&](const Eigen::VectorXd& dir) { return band_curvature_perturbative(family, dir, gauge); });
}

Eigen::MatrixXd band_hessian_harmonic_first_term(const BlochFamily& family) {
  const PeriodicComplex& c = family.complex();
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(c.num_vertices()));
  return polarize(family.rank(), [&](const Eigen::VectorXd& dir) {
    const SparseMatrixC L2 = family.energy_derivative(2, dir, Gauge::harmonic);
    return (ones.adjoint() * (L2 * ones))(0).real() / c.volume();
  });
}

double first_order_defect(const BlochFamily& family, const Eigen::VectorXd& direction, Gauge gauge) {
  const PeriodicComplex& c = family.complex();
  const Eigen::VectorXd mu = c.mu_vector();
  const Eigen::VectorXcd ones = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(c.num_vertices()));
  const Eigen::VectorXcd b = (family.energy_derivative(1, direction, gauge) * ones).cwiseQuotient(mu.cast<Complex>());
  return std::sqrt((mu.array() * b.cwiseAbs2().array()).sum() / c.volume());
}

Eigen::MatrixXd band_hessian_fd(const BlochFamily& family, double h, const SpectrumOptions& options) {
  if (!(h > 0.0) || h > 0.1) throw ParameterError(kModule, "h", "step must satisfy 0 < h <= 0.1");
  const int k = family.rank();
  auto lambda = [&](const Eigen::VectorXd& theta) { return lowest_band(family, BlochPoint(theta), options); };
  const double base = lambda(Eigen::VectorXd::Zero(k));

  auto differences = [&](double step) {
    Eigen::MatrixXd D(k, k);
    for (int j = 0; j < k; ++j) {
      const Eigen::VectorXd ej = step * Eigen::VectorXd::Unit(k, j);
      D(j, j) = (lambda(ej) - 2.0 * base + lambda(-ej)) / (step * step);
      for (int l = j + 1; l < k; ++l) {
        const Eigen::VectorXd el = step * Eigen::VectorXd::Unit(k, l);
        D(j, l) = D(l, j) =
            (lambda(ej + el) - lambda(ej - el) - lambda(el - ej) + lambda(-ej - el)) / (4.0 * step * step);
      }
    }
    return D;
  };
  const Eigen::MatrixXd coarse = differences(h);
  const Eigen::MatrixXd fine = differences(0.5 * h);
  return (4.0 * fine - coarse) / 3.0;
}

// --- gap scan -----------------------------------------------------------------------

GapReport gap_scan(const BlochFamily& family, int n_g, double r, const SpectrumOptions& options) {
  if (n_g < 4) throw ParameterError(kModule, "n_g", "grid resolution must be >= 4");
  if (!(r > 0.0)) throw ParameterError(kModule, "r", "radius must be positive");
  const int k = family.rank();
  const std::size_t nv = family.complex().num_vertices();

  std::vector<Eigen::VectorXd> outside, inside;
  std::size_t total = 1;
  for (int j = 0; j < k; ++j) total *= static_cast<std::size_t>(n_g);
  for (std::size_t lin = 0; lin < total; ++lin) {
    Eigen::VectorXd theta(k);
    std::size_t rem = lin;
    for (int j = 0; j < k; ++j) {
      theta[j] = -kPi + 2.0 * kPi * static_cast<double>(rem % n_g) / n_g;
      rem /= n_g;
    }
    const double norm = theta.norm();
    (norm < r ? inside : outside).push_back(theta);
    if (norm > 0.0) outside.push_back(r * theta / norm);
  }

  GapReport rep;
  rep.points_outside = outside.size();
  rep.points_inside = inside.size();
  std::vector<double> lam1(outside.size());
  parallel_for(outside.size(), [&](std::size_t i) {
    lam1[i] = spectrum(family.assemble(BlochPoint(outside[i])), 1, options).eigenvalues[0];
  });
  const auto it = std::min_element(lam1.begin(), lam1.end());
  rep.min_lambda1_outside = *it;
  rep.argmin_outside = outside[static_cast<std::size_t>(it - lam1.begin())];
  rep.epsilon = rep.min_lambda1_outside;

  if (nv < 2) {
    rep.note = "m < 2: lambda_2 condition is vacuous";
  } else if (!inside.empty()) {
    std::vector<double> lam2(inside.size());
    parallel_for(inside.size(), [&](std::size_t i) {
      lam2[i] = spectrum(family.assemble(BlochPoint(inside[i])), 2, options).eigenvalues[1];
    });
    rep.min_lambda2_inside = *std::min_element(lam2.begin(), lam2.end());
    rep.epsilon = std::min(rep.epsilon, *rep.min_lambda2_inside);
  } else {
    rep.note = "no grid points inside the radius";
  }
  return rep;
}

}  // namespace periodic_heat::bloch
