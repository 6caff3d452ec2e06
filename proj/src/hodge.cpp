#include "periodic_heat/hodge.hpp"

#include "periodic_heat/errors.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseLU>

#include <cmath>
#include <queue>

namespace periodic_heat::hodge {

namespace {

const char* kModule = "hodge";

void check_dim(Eigen::Index got, std::size_t want, const char* what) {
  if (static_cast<std::size_t>(got) != want)
    throw ParameterError(kModule, what,
                         "dimension " + std::to_string(got) + " does not match " + std::to_string(want));
}

Eigen::VectorXd edge_weights(const PeriodicComplex& c) {
  Eigen::VectorXd w(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) w[e] = c.edge(e).w;
  return w;
}

}  // namespace

Eigen::SparseMatrix<double> coboundary_matrix(const PeriodicComplex& c) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(2 * c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    if (ed.head == ed.tail) continue;
    trip.emplace_back(e, ed.head, 1.0);
    trip.emplace_back(e, ed.tail, -1.0);
  }
  Eigen::SparseMatrix<double> d(c.num_edges(), c.num_vertices());
  d.setFromTriplets(trip.begin(), trip.end());
  return d;
}

Eigen::SparseMatrix<double> laplacian_matrix(const PeriodicComplex& c) {
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(4 * c.num_edges());
  for (const Edge& e : c.edges()) {
    if (e.head == e.tail) continue;
    trip.emplace_back(e.head, e.head, e.w);
    trip.emplace_back(e.tail, e.tail, e.w);
    trip.emplace_back(e.head, e.tail, -e.w);
    trip.emplace_back(e.tail, e.head, -e.w);
  }
  Eigen::SparseMatrix<double> k(c.num_vertices(), c.num_vertices());
  k.setFromTriplets(trip.begin(), trip.end());
  return k;
}

Eigen::VectorXd d0(const PeriodicComplex& c, const Eigen::VectorXd& f) {
  check_dim(f.size(), c.num_vertices(), "f");
  Eigen::VectorXd out(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) out[e] = f[c.edge(e).head] - f[c.edge(e).tail];
  return out;
}

Eigen::VectorXd adjoint_d0(const PeriodicComplex& c, const Eigen::VectorXd& a) {
  check_dim(a.size(), c.num_edges(), "a");
  Eigen::VectorXd out = Eigen::VectorXd::Zero(c.num_vertices());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    out[ed.head] += ed.w * a[e];
    out[ed.tail] -= ed.w * a[e];
  }
  return out.cwiseQuotient(c.mu_vector());
}

double inner0(const PeriodicComplex& c, const Eigen::VectorXd& f, const Eigen::VectorXd& g) {
  check_dim(f.size(), c.num_vertices(), "f");
  check_dim(g.size(), c.num_vertices(), "g");
  return (c.mu_vector().array() * f.array() * g.array()).sum();
}

double inner1(const PeriodicComplex& c, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  check_dim(a.size(), c.num_edges(), "a");
  check_dim(b.size(), c.num_edges(), "b");
  double s = 0.0;
  for (std::size_t e = 0; e < c.num_edges(); ++e) s += c.edge(e).w * a[e] * b[e];
  return s;
}

Eigen::VectorXd shift_cocycle(const PeriodicComplex& c, int j) {
  if (j < 0 || j >= c.rank()) throw ParameterError(kModule, "j", "direction index out of range");
  Eigen::VectorXd s(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) s[e] = c.edge(e).shift[j];
  return s;
}

std::vector<double> cycle_sums(const PeriodicComplex& c, const Eigen::VectorXd& a) {
  check_dim(a.size(), c.num_edges(), "a");
  const std::size_t n = c.num_vertices();
  std::vector<std::vector<std::pair<int, int>>> adj(n);
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    adj[ed.tail].emplace_back(static_cast<int>(e), +1);
    if (ed.head != ed.tail) adj[ed.head].emplace_back(static_cast<int>(e), -1);
  }
  std::vector<double> potential(n, 0.0);
  std::vector<char> seen(n, 0);
  std::queue<int> queue;
  queue.push(0);
  seen[0] = 1;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop();
    for (auto [e, dir] : adj[v]) {
      const Edge& ed = c.edge(e);
      const int other = dir > 0 ? ed.head : ed.tail;
      if (seen[other]) continue;
      seen[other] = 1;
      potential[other] = potential[v] + dir * a[e];
      queue.push(other);
    }
  }
  std::vector<double> sums(c.num_edges());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    sums[e] = potential[ed.tail] + a[e] - potential[ed.head];
  }
  return sums;
}

// --- Poisson solver ------------------------------------------------------------

struct PoissonSolver::Impl {
  Eigen::SparseMatrix<double> K;
  Eigen::VectorXd mu;
  bool direct = true;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  Eigen::VectorXd inv_diag;

  Eigen::VectorXd project_mean_zero(Eigen::VectorXd x) const {
    return x.array() - mu.dot(x) / mu.sum();
  }
};

PoissonSolver::PoissonSolver(const PeriodicComplex& c, SolverOptions options)
    : impl_(std::make_unique<Impl>()), options_(options) {
  c.require_valid(kModule);
  impl_->K = laplacian_matrix(c);
  impl_->mu = c.mu_vector();
  const auto n = static_cast<Eigen::Index>(c.num_vertices());
  impl_->direct = c.num_vertices() <= options_.direct_threshold;
  if (impl_->direct) {
    // [K mu; mu^T 0] is nonsingular for a connected complex.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(impl_->K.nonZeros() + 2 * n);
    for (Eigen::Index col = 0; col < impl_->K.outerSize(); ++col)
      for (Eigen::SparseMatrix<double>::InnerIterator it(impl_->K, col); it; ++it)
        trip.emplace_back(it.row(), it.col(), it.value());
    double scale = impl_->K.diagonal().maxCoeff() / impl_->mu.maxCoeff();
    if (!(scale > 0.0)) scale = 1.0 / impl_->mu.maxCoeff();
    for (Eigen::Index i = 0; i < n; ++i) {
      trip.emplace_back(i, n, scale * impl_->mu[i]);
      trip.emplace_back(n, i, scale * impl_->mu[i]);
    }
    Eigen::SparseMatrix<double> bordered(n + 1, n + 1);
    bordered.setFromTriplets(trip.begin(), trip.end());
    impl_->lu.analyzePattern(bordered);
    impl_->lu.factorize(bordered);
    if (impl_->lu.info() != Eigen::Success) throw SolverError(kModule, "factorization of the bordered Laplacian failed");
  } else {
    impl_->inv_diag = impl_->K.diagonal();
    for (double& d : impl_->inv_diag) d = d > 0.0 ? 1.0 / d : 1.0;
  }
}

PoissonSolver::~PoissonSolver() = default;
PoissonSolver::PoissonSolver(PoissonSolver&&) noexcept = default;
PoissonSolver& PoissonSolver::operator=(PoissonSolver&&) noexcept = default;

bool PoissonSolver::direct() const noexcept { return impl_->direct; }

Eigen::VectorXd PoissonSolver::solve(const Eigen::VectorXd& rhs_in, SolverInfo* info) const {
  const auto n = static_cast<Eigen::Index>(impl_->mu.size());
  check_dim(rhs_in.size(), impl_->mu.size(), "rhs");
  const Eigen::VectorXd rhs = rhs_in.array() - rhs_in.mean();
  const double rhs_norm = rhs.norm();
  SolverInfo local;
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);

  if (rhs_norm == 0.0) {
    local.method = impl_->direct ? "direct" : "cg";
  } else if (impl_->direct) {
    local.method = "direct";
    Eigen::VectorXd b(n + 1);
    b << rhs, 0.0;
    Eigen::VectorXd sol = impl_->lu.solve(b);
    x = sol.head(n);
    // one step of iterative refinement
    const Eigen::VectorXd r = rhs - impl_->K * x;
    b << r, 0.0;
    x += impl_->lu.solve(b).head(n);
    local.iterations = 2;
  } else {
    local.method = "cg";
    const int max_it = options_.max_iterations > 0 ? options_.max_iterations : static_cast<int>(20 * n);
    Eigen::VectorXd r = rhs;
    Eigen::VectorXd z = impl_->inv_diag.cwiseProduct(r);
    Eigen::VectorXd p = z;
    double rz = r.dot(z);
    int it = 0;
    for (; it < max_it; ++it) {
      if (r.norm() <= options_.tol * rhs_norm) break;
      const Eigen::VectorXd kp = impl_->K * p;
      const double alpha = rz / p.dot(kp);
      x += alpha * p;
      r -= alpha * kp;
      z = impl_->inv_diag.cwiseProduct(r);
      const double rz_new = r.dot(z);
      p = z + (rz_new / rz) * p;
      rz = rz_new;
    }
    local.iterations = it;
  }
  x = impl_->project_mean_zero(std::move(x));
  local.residual = rhs_norm == 0.0 ? 0.0 : (rhs - impl_->K * x).norm() / rhs_norm;
  if (local.residual > std::max(options_.tol, 1e-10) && !impl_->direct)
    throw SolverError(kModule, "conjugate gradients did not converge", local.residual);
  if (info) *info = local;
  return x;
}

Eigen::VectorXd PoissonSolver::green(const Eigen::VectorXd& b, SolverInfo* info) const {
  check_dim(b.size(), impl_->mu.size(), "b");
  // Delta(0) x = b  <=>  K x = M b, with b restricted to mu-mean zero.
  const Eigen::VectorXd bp = impl_->project_mean_zero(b);
  return solve(impl_->mu.cwiseProduct(bp), info);
}

// --- harmonic forms ----------------------------------------------------------------

HarmonicForm harmonic_projection(const PeriodicComplex& c, const Eigen::VectorXd& cochain,
                                 const PoissonSolver& solver) {
  check_dim(cochain.size(), c.num_edges(), "cochain");
  const auto d = coboundary_matrix(c);
  const Eigen::VectorXd w = edge_weights(c);
  const Eigen::VectorXd rhs = d.transpose() * w.cwiseProduct(cochain);
  HarmonicForm out;
  out.potential = solver.solve(rhs, &out.info);
  out.tau = cochain - d * out.potential;
  const double rhs_norm = rhs.norm();
  out.residual = rhs_norm == 0.0 ? 0.0 : (d.transpose() * w.cwiseProduct(out.tau)).norm() / rhs_norm;
  return out;
}

HarmonicForm harmonic_representative(const PeriodicComplex& c, int j, const PoissonSolver& solver) {
  return harmonic_projection(c, shift_cocycle(c, j), solver);
}

HarmonicForm harmonic_representative(const PeriodicComplex& c, int j, SolverOptions options) {
  const PoissonSolver solver(c, options);
  return harmonic_representative(c, j, solver);
}

Eigen::MatrixXd HarmonicBasis::tau_matrix() const {
  if (forms.empty()) return {};
  Eigen::MatrixXd m(forms.front().tau.size(), rank());
  for (int j = 0; j < rank(); ++j) m.col(j) = forms[j].tau;
  return m;
}

Eigen::MatrixXd HarmonicBasis::potential_matrix() const {
  if (forms.empty()) return {};
  Eigen::MatrixXd m(forms.front().potential.size(), rank());
  for (int j = 0; j < rank(); ++j) m.col(j) = forms[j].potential;
  return m;
}

HarmonicBasis harmonic_basis(const PeriodicComplex& c, const PoissonSolver& solver) {
  HarmonicBasis basis;
  for (int j = 0; j < c.rank(); ++j) basis.forms.push_back(harmonic_representative(c, j, solver));
  return basis;
}

HarmonicBasis harmonic_basis(const PeriodicComplex& c, SolverOptions options) {
  const PoissonSolver solver(c, options);
  return harmonic_basis(c, solver);
}

EffectiveMetric effective_metric(const PeriodicComplex& c, const HarmonicBasis& basis, const SolverOptions& options) {
  const int k = c.rank();
  if (basis.rank() != k) throw ParameterError(kModule, "basis", "rank mismatch");
  EffectiveMetric out;
  out.vol_X = c.volume();
  out.A.resize(k, k);
  for (int j = 0; j < k; ++j)
    for (int l = j; l < k; ++l)
      out.A(j, l) = out.A(l, j) = inner1(c, basis.forms[j].tau, basis.forms[l].tau) / out.vol_X;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(out.A);
  const double lo = eig.eigenvalues().minCoeff(), hi = eig.eigenvalues().maxCoeff();
  out.condition = lo > 0.0 ? hi / lo : INFINITY;
  if (!(lo > 0.0) || out.condition > options.condition_cap)
    throw SolverError(kModule, "effective metric is near-singular (condition " + std::to_string(out.condition) +
                                   "); homology directions are quasi-degenerate");
  out.B = out.A.inverse();
  out.B = 0.5 * (out.B + out.B.transpose()).eval();
  out.cell_volume = 1.0 / std::sqrt(out.A.determinant());
  for (const auto& f : basis.forms) {
    out.residuals.push_back(f.residual);
    out.info.iterations += f.info.iterations;
    out.info.residual = std::max(out.info.residual, f.info.residual);
    out.info.method = f.info.method;
  }
  return out;
}

EffectiveMetric effective_metric(const PeriodicComplex& c, SolverOptions options) {
  const PoissonSolver solver(c, options);
  return effective_metric(c, harmonic_basis(c, solver), options);
}

}  // namespace periodic_heat::hodge
