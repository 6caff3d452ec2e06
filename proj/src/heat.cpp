#include "periodic_heat/heat.hpp"

#include "periodic_heat/errors.hpp"
#include "periodic_heat/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SparseCore>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

namespace periodic_heat::heat {

namespace {

const char* kModule = "heat";
constexpr double kPi = std::numbers::pi;
using Complex = std::complex<double>;

std::size_t ipow(std::size_t base, int exp) {
  std::size_t out = 1;
  for (int i = 0; i < exp; ++i) out *= base;
  return out;
}

void check_time(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError(kModule, "t", "must be positive and finite");
}

// Linear residue index of v mod N, first coordinate fastest.
std::size_t residue_index(const LatticeVector& v, int N) {
  std::size_t idx = 0, stride = 1;
  for (Eigen::Index j = 0; j < v.size(); ++j) {
    const int r = ((v[j] % N) + N) % N;
    idx += static_cast<std::size_t>(r) * stride;
    stride *= static_cast<std::size_t>(N);
  }
  return idx;
}

}  // namespace

// --- windows -----------------------------------------------------------------------

Window box_window(int k, int radius) {
  if (k < 1) throw ParameterError(kModule, "k", "rank must be >= 1");
  if (radius < 0) throw ParameterError(kModule, "radius", "must be >= 0");
  const int side = 2 * radius + 1;
  const std::size_t total = ipow(static_cast<std::size_t>(side), k);
  Window out;
  out.reserve(total);
  for (std::size_t lin = 0; lin < total; ++lin) {
    LatticeVector v(k);
    std::size_t rem = lin;
    for (int j = 0; j < k; ++j) {
      v[j] = static_cast<int>(rem % side) - radius;
      rem /= side;
    }
    out.push_back(v);
  }
  return out;
}

Window ellipsoid_window(const hodge::EffectiveMetric& metric, double bound) {
  if (!(bound >= 0.0)) throw ParameterError(kModule, "bound", "must be >= 0");
  const int k = metric.rank();
  std::vector<int> radius(k);
  for (int j = 0; j < k; ++j) radius[j] = static_cast<int>(std::floor(std::sqrt(bound * metric.A(j, j)) + 1e-9));
  const int r = *std::max_element(radius.begin(), radius.end());
  Window out;
  for (const auto& v : box_window(k, r)) {
    bool inside = true;
    for (int j = 0; j < k; ++j) inside = inside && std::abs(v[j]) <= radius[j];
    if (inside && metric.norm2(v.cast<double>()) <= bound * (1.0 + 1e-12)) out.push_back(v);
  }
  return out;
}

int window_radius(const Window& window) {
  int r = 0;
  for (const auto& v : window) r = std::max(r, v.size() ? v.cwiseAbs().maxCoeff() : 0);
  return r;
}

void check_window(const Window& window, int k, int N) {
  if (N < 1) throw ParameterError(kModule, "N", "must be >= 1");
  if (window.empty()) throw ParameterError(kModule, "window", "must not be empty");
  for (const auto& v : window) {
    if (v.size() != k) throw ParameterError(kModule, "window", "vector dimension does not match the rank");
    if (2 * v.cwiseAbs().maxCoeff() + 1 > N)
      throw ParameterError(kModule, "window",
                           "lies outside one N-period (need 2|v_j| + 1 <= N, N = " + std::to_string(N) + ")");
  }
}

double HeatKernelTable::at(const LatticeVector& v) const {
  for (std::size_t i = 0; i < window.size(); ++i)
    if (window[i] == v) return values[i];
  throw ParameterError(kModule, "v", "not in the window");
}

double HeatKernelTable::sum() const {
  double s = 0.0;
  for (double x : values) s += x;
  return s;
}

// --- aliasing -------------------------------------------------------------------------

AliasingModel::AliasingModel(const PeriodicComplex& c, const hodge::HarmonicBasis& basis)
    : rank_(c.rank()), log_vertices_(std::log(static_cast<double>(c.num_vertices()))) {
  const Eigen::MatrixXd tau = basis.tau_matrix();
  const int k = rank_;
  constexpr int kEtas = 240;
  const double lo = std::log(1e-4), hi = std::log(40.0);
  for (int i = 0; i < kEtas; ++i) etas_.push_back(std::exp(lo + (hi - lo) * i / (kEtas - 1)));

  const std::size_t patterns = ipow(2, k);
  rho_.assign(etas_.size(), -std::numeric_limits<double>::infinity());
  Eigen::VectorXd rows(c.num_vertices());
  for (std::size_t i = 0; i < etas_.size(); ++i) {
    for (std::size_t p = 0; p < patterns; ++p) {
      Eigen::VectorXd eta(k);
      for (int j = 0; j < k; ++j) eta[j] = ((p >> j) & 1 ? -1.0 : 1.0) * etas_[i];
      rows.setZero();
      for (std::size_t e = 0; e < c.num_edges(); ++e) {
        const Edge& ed = c.edge(e);
        const double x = std::clamp(tau.row(e).dot(eta), -700.0, 700.0);
        rows[ed.tail] += ed.w * std::expm1(x);
        rows[ed.head] += ed.w * std::expm1(-x);
      }
      rows = rows.cwiseQuotient(c.mu_vector());
      rho_[i] = std::max(rho_[i], rows.maxCoeff());
    }
  }
}

double AliasingModel::log_bound(double t, int N, const LatticeVector& v, std::size_t i) const {
  const double eta = etas_[i];
  double log_lead = log_vertices_ + t * rho_[i];
  const double log_q = -eta * N - std::log(-std::expm1(-eta * N));
  // log(prod_j (1 + r_j) - 1), switching to log(sum_j r_j) when every r_j is tiny
  std::vector<double> log_r(rank_);
  for (int j = 0; j < rank_; ++j) {
    const double a = std::abs(v[j]);
    log_lead -= eta * a;
    const double y = 2.0 * eta * a;
    log_r[j] = y + std::log1p(std::exp(-y)) + log_q;
  }
  const double top = *std::max_element(log_r.begin(), log_r.end());
  if (top < -30.0) {
    double s = 0.0;
    for (double lr : log_r) s += std::exp(lr - top);
    return log_lead + top + std::log(s);
  }
  double s = 0.0;
  for (double lr : log_r) s += std::log1p(std::exp(lr));
  return log_lead + std::log(std::expm1(s));
}

double AliasingModel::bound(double t, int N, const LatticeVector& v) const {
  check_time(t);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < etas_.size(); ++i) best = std::min(best, log_bound(t, N, v, i));
  return std::exp(best);
}

double AliasingModel::bound(double t, int N, const Window& window) const {
  double worst = 0.0;
  for (const auto& v : window) worst = std::max(worst, bound(t, N, v));
  return worst;
}

// --- torus spectra -------------------------------------------------------------------

TorusSpectra::TorusSpectra(const bloch::BlochFamily& family, int N, double t_min, const HeatOptions& options)
    : N_(N), rank_(family.rank()), t_min_(t_min), full_size_(family.complex().num_vertices()) {
  if (N < 1) throw ParameterError(kModule, "N", "must be >= 1");
  check_time(t_min);
  const std::size_t total = ipow(static_cast<std::size_t>(N), rank_);
  if (total > options.max_grid_points)
    throw ResourceError(kModule, "torus grid of " + std::to_string(total) + " points exceeds the cap");
  eigenvalues_.resize(total);
  const std::size_t nv = full_size_;
  truncated_ = nv > options.spectrum.dense_threshold;
  parallel_for(total, [&](std::size_t p) {
    const bloch::BlochOperator op = family.assemble(bloch::BlochPoint(theta(p)));
    if (!truncated_) {
      eigenvalues_[p] = bloch::spectrum(op, nv, options.spectrum).eigenvalues;
      return;
    }
    for (std::size_t m = std::min<std::size_t>(nv, 32);; m = std::min(nv, 2 * m)) {
      const bloch::BandData bands = bloch::spectrum(op, m, options.spectrum);
      if (m == nv || bloch::heat_trace(bands, t_min).tail_bound <= options.trace_tol) {
        eigenvalues_[p] = bands.eigenvalues;
        return;
      }
    }
  });
}

Eigen::VectorXd TorusSpectra::theta(std::size_t point) const {
  Eigen::VectorXd th(rank_);
  for (int j = 0; j < rank_; ++j) {
    th[j] = 2.0 * kPi * static_cast<double>(point % N_) / N_;
    point /= N_;
  }
  return bloch::BlochPoint(th).theta();
}

HeatKernelTable TorusSpectra::kernel(double t, const Window& window) const {
  check_time(t);
  if (truncated_ && t < t_min_) throw ParameterError(kModule, "t", "below the time the spectra were truncated for");
  check_window(window, rank_, N_);

  HeatKernelTable table;
  table.t = t;
  table.N = N_;
  table.window = window;

  const std::size_t total = eigenvalues_.size();
  std::vector<Complex> data(total);
  double tail = 0.0;
  for (std::size_t p = 0; p < total; ++p) {
    const Eigen::VectorXd& lam = eigenvalues_[p];
    data[p] = (-t * lam.array()).exp().sum();
    if (static_cast<std::size_t>(lam.size()) < full_size_)
      tail += static_cast<double>(full_size_ - lam.size()) * std::exp(-t * lam[lam.size() - 1]);
  }
  table.spectral_tail = tail / static_cast<double>(total);

  // Separable inverse transform onto the bounding box of the window.
  std::vector<int> lo(rank_), hi(rank_), cur(rank_, N_);
  for (int j = 0; j < rank_; ++j) {
    lo[j] = hi[j] = window.front()[j];
    for (const auto& v : window) {
      lo[j] = std::min(lo[j], v[j]);
      hi[j] = std::max(hi[j], v[j]);
    }
  }
  std::vector<Complex> roots(N_);
  for (int r = 0; r < N_; ++r) roots[r] = std::polar(1.0, -2.0 * kPi * r / N_);
  for (int d = 0; d < rank_; ++d) {
    const int len = hi[d] - lo[d] + 1;
    std::size_t before = 1, after = 1;
    for (int j = 0; j < d; ++j) before *= cur[j];
    for (int j = d + 1; j < rank_; ++j) after *= cur[j];
    std::vector<Complex> out(before * len * after);
    for (std::size_t b = 0; b < after; ++b)
      for (int vi = 0; vi < len; ++vi) {
        const long long v = lo[d] + vi;
        for (std::size_t a = 0; a < before; ++a) {
          Complex acc = 0.0;
          for (int i = 0; i < N_; ++i) {
            const long long r = ((static_cast<long long>(i) * v) % N_ + N_) % N_;
            acc += roots[r] * data[a + before * (i + static_cast<std::size_t>(N_) * b)];
          }
          out[a + before * (vi + static_cast<std::size_t>(len) * b)] = acc;
        }
      }
    data = std::move(out);
    cur[d] = len;
  }

  const double scale = 1.0 / static_cast<double>(total);
  table.values.reserve(window.size());
  for (const auto& v : window) {
    std::size_t idx = 0, stride = 1;
    for (int j = 0; j < rank_; ++j) {
      idx += static_cast<std::size_t>(v[j] - lo[j]) * stride;
      stride *= cur[j];
    }
    table.values.push_back(data[idx].real() * scale);
    table.max_imag_residue = std::max(table.max_imag_residue, std::abs(data[idx].imag()) * scale);
  }
  table.tail_bound = table.spectral_tail;
  return table;
}

// --- quadrature -------------------------------------------------------------------------

int default_quadrature_size(const AliasingModel& aliasing, const hodge::EffectiveMetric& metric, double t,
                            const Window& window, double target, std::size_t max_grid_points) {
  check_time(t);
  const int k = metric.rank();
  const double lambda_max = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(metric.A).eigenvalues().maxCoeff();
  int N = std::max(2 * window_radius(window) + 1, static_cast<int>(std::ceil(8.0 * std::sqrt(t * lambda_max))));
  for (;;) {
    if (ipow(static_cast<std::size_t>(N), k) > max_grid_points)
      throw ResourceError(kModule, "no quadrature size within the grid cap reaches aliasing target " +
                                       std::to_string(target) + " at t = " + std::to_string(t));
    if (aliasing.bound(t, N, window) <= target) return N;
    N += std::max(1, N / 16);
  }
}

HeatKernelTable heat_kernel_lattice(const bloch::BlochFamily& family, double t, int N, const Window& window,
                                    const HeatOptions& options) {
  check_time(t);
  const PeriodicComplex& c = family.complex();
  const AliasingModel aliasing(c, family.basis());
  if (N == 0) {
    const hodge::EffectiveMetric metric = hodge::effective_metric(c, family.basis());
    N = default_quadrature_size(aliasing, metric, t, window, options.aliasing_target, options.max_grid_points);
  }
  check_window(window, c.rank(), N);
  HeatKernelTable table = TorusSpectra(family, N, t, options).kernel(t, window);
  table.aliasing_bound = aliasing.bound(t, N, window);
  table.tail_bound = table.spectral_tail + table.aliasing_bound;
  return table;
}

HeatKernelTable heat_kernel_lattice(const PeriodicComplex& c, double t, int N, const Window& window,
                                    const HeatOptions& options) {
  c.require_valid(kModule);
  const bloch::BlochFamily family(c);
  return heat_kernel_lattice(family, t, N, window, options);
}

// --- supercell oracle -------------------------------------------------------------------

HeatKernelTable supercell_oracle(const PeriodicComplex& c, double t, int N, const Window& window,
                                 std::size_t vertex_cap) {
  check_time(t);
  c.require_valid(kModule);
  check_window(window, c.rank(), N);
  const std::size_t size = c.num_vertices() * ipow(static_cast<std::size_t>(N), c.rank());
  if (size > vertex_cap)
    throw ResourceError(kModule, "supercell with " + std::to_string(size) + " vertices exceeds the dense cap " +
                                     std::to_string(vertex_cap));
  const Supercell sc = supercell(c, N, vertex_cap);
  const Eigen::VectorXd inv_sqrt = sc.complex.mu_vector().cwiseSqrt().cwiseInverse();
  const Eigen::MatrixXd K = Eigen::MatrixXd(hodge::laplacian_matrix(sc.complex));
  const Eigen::MatrixXd S = inv_sqrt.asDiagonal() * K * inv_sqrt.asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(S);
  if (eig.info() != Eigen::Success) throw SolverError(kModule, "supercell eigendecomposition failed");
  const Eigen::MatrixXd& Q = eig.eigenvectors();
  const Eigen::VectorXd decay = (-t * eig.eigenvalues().array()).exp();

  HeatKernelTable table;
  table.t = t;
  table.N = N;
  table.window = window;
  const int k = c.rank();
  std::vector<int> zero(k, 0), cell(k);
  for (const auto& v : window) {
    for (int j = 0; j < k; ++j) cell[j] = ((v[j] % N) + N) % N;
    double value = 0.0;
    for (std::size_t m = 0; m < c.num_vertices(); ++m) {
      const std::size_t a = sc.vertex(static_cast<int>(m), zero);
      const std::size_t b = sc.vertex(static_cast<int>(m), cell);
      // same base vertex, so the mu conjugation cancels
      value += (Q.row(a).transpose().array() * decay.array() * Q.row(b).transpose().array()).sum();
    }
    table.values.push_back(value);
  }
  return table;
}

// --- two-point kernel ---------------------------------------------------------------------

TwoPointKernel::TwoPointKernel(const bloch::BlochFamily& family, double t, int N)
    : t_(t), N_(N), rank_(family.rank()) {
  check_time(t);
  if (N < 1) throw ParameterError(kModule, "N", "must be >= 1");
  const PeriodicComplex& c = family.complex();
  const std::size_t total = ipow(static_cast<std::size_t>(N), rank_);
  if (total * total * c.num_vertices() * c.num_vertices() > (std::size_t{1} << 28))
    throw ResourceError(kModule, "two-point kernel too large for N = " + std::to_string(N));
  const Eigen::Index nv = static_cast<Eigen::Index>(c.num_vertices());
  const Eigen::VectorXd sqrt_mu = c.mu_vector().cwiseSqrt();

  std::vector<Eigen::MatrixXcd> propagators(total);
  std::vector<Eigen::VectorXd> thetas(total);
  parallel_for(total, [&](std::size_t p) {
    Eigen::VectorXd th(rank_);
    std::size_t rem = p;
    for (int j = 0; j < rank_; ++j) {
      th[j] = 2.0 * kPi * static_cast<double>(rem % N) / N;
      rem /= N;
    }
    thetas[p] = th;
    bloch::SpectrumOptions opts;
    opts.vectors = true;
    opts.dense_threshold = std::numeric_limits<std::size_t>::max();
    const bloch::BlochOperator op = family.assemble(bloch::BlochPoint(th));
    const bloch::BandData bands = bloch::spectrum(op, c.num_vertices(), opts);
    // eigenvectors are mu-orthonormal: e^{-t Delta} = X e^{-t Lambda} X^* M
    const Eigen::MatrixXcd& X = *bands.eigenvectors;
    const Eigen::VectorXd decay = (-t * bands.eigenvalues.array()).exp();
    propagators[p] = X * decay.cast<Complex>().asDiagonal() * X.adjoint() *
                     sqrt_mu.cwiseProduct(sqrt_mu).cast<Complex>().asDiagonal();
  });

  blocks_.assign(total, Eigen::MatrixXd::Zero(nv, nv));
  for (std::size_t r = 0; r < total; ++r) {
    const LatticeVector v = residue_vector(r);
    Eigen::MatrixXcd acc = Eigen::MatrixXcd::Zero(nv, nv);
    for (std::size_t p = 0; p < total; ++p) acc += std::polar(1.0, -thetas[p].dot(v.cast<double>())) * propagators[p];
    blocks_[r] = acc.real() / static_cast<double>(total);
  }
}

LatticeVector TwoPointKernel::residue_vector(std::size_t residue) const {
  LatticeVector v(rank_);
  for (int j = 0; j < rank_; ++j) {
    v[j] = static_cast<int>(residue % N_);
    residue /= N_;
  }
  return v;
}

std::size_t TwoPointKernel::index(const LatticeVector& v) const {
  if (v.size() != rank_) throw ParameterError(kModule, "v", "dimension does not match the rank");
  return residue_index(v, N_);
}

const Eigen::MatrixXd& TwoPointKernel::block(const LatticeVector& v) const { return blocks_[index(v)]; }

double TwoPointKernel::mass(const Eigen::VectorXd& mu) const {
  double s = 0.0;
  for (const auto& b : blocks_) s += mu.dot(b.rowwise().sum());
  return s;
}

double TwoPointKernel::trace_sum() const {
  double s = 0.0;
  for (const auto& b : blocks_) s += b.trace();
  return s;
}

std::vector<Eigen::MatrixXd> TwoPointKernel::compose(const TwoPointKernel& other) const {
  if (other.N_ != N_ || other.rank_ != rank_ || other.blocks_.front().rows() != blocks_.front().rows())
    throw ParameterError(kModule, "other", "kernels live on different supercells");
  std::vector<Eigen::MatrixXd> out(blocks_.size(), Eigen::MatrixXd::Zero(blocks_[0].rows(), blocks_[0].cols()));
  for (std::size_t r = 0; r < blocks_.size(); ++r) {
    const LatticeVector v = residue_vector(r);
    for (std::size_t u = 0; u < blocks_.size(); ++u)
      out[r] += blocks_[u] * other.block(LatticeVector(v - residue_vector(u)));
  }
  return out;
}

// --- Gaussian prediction -------------------------------------------------------------------

double gaussian_value(const hodge::EffectiveMetric& metric, double t, const LatticeVector& v) {
  check_time(t);
  const int k = metric.rank();
  if (v.size() != k) throw ParameterError(kModule, "v", "dimension does not match the rank");
  return metric.cell_volume * std::pow(4.0 * kPi * t, -0.5 * k) * std::exp(-metric.norm2(v.cast<double>()) / (4.0 * t));
}

GaussianPrediction gaussian_prediction(const hodge::EffectiveMetric& metric, double t, const Window& window) {
  GaussianPrediction out;
  out.t = t;
  out.window = window;
  out.values.reserve(window.size());
  for (const auto& v : window) out.values.push_back(gaussian_value(metric, t, v));
  return out;
}

// --- asymptotics ------------------------------------------------------------------------------

std::pair<double, double> fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw ParameterError(kModule, "x", "need at least two points");
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return {slope, (sy - slope * sx) / n};
}

AsymptoticReport asymptotic_error_scan(const bloch::BlochFamily& family, const std::vector<double>& t_list,
                                       const AsymptoticOptions& options) {
  if (t_list.size() < 4) throw ParameterError(kModule, "t_list", "needs at least 4 times");
  for (std::size_t i = 0; i < t_list.size(); ++i) {
    check_time(t_list[i]);
    if (i > 0 && !(t_list[i] > t_list[i - 1])) throw ParameterError(kModule, "t_list", "must be strictly ascending");
  }
  if (!(options.C > 0.0)) throw ParameterError(kModule, "C", "must be positive");

  const PeriodicComplex& c = family.complex();
  const hodge::EffectiveMetric metric = hodge::effective_metric(c, family.basis());
  const AliasingModel aliasing(c, family.basis());
  const int k = c.rank();

  AsymptoticReport rep;
  rep.C = options.C;
  rep.rank = k;
  rep.predicted_exponent = -0.5 * (k + 1);
  const LatticeVector origin = LatticeVector::Zero(k);
  for (double t : t_list) {
    const Window window = ellipsoid_window(metric, options.C * t);
    const double target = options.aliasing_fraction * std::pow(t, rep.predicted_exponent);
    const int N = default_quadrature_size(aliasing, metric, t, window, target, options.heat.max_grid_points);
    const HeatKernelTable table = TorusSpectra(family, N, t, options.heat).kernel(t, window);

    AsymptoticPoint pt;
    pt.t = t;
    pt.N = N;
    pt.region_points = window.size();
    pt.aliasing_bound = aliasing.bound(t, N, window);
    pt.spectral_tail = table.spectral_tail;
    pt.argmax = origin;
    for (std::size_t i = 0; i < window.size(); ++i) {
      const double err = std::abs(table.values[i] - gaussian_value(metric, t, window[i]));
      if (err > pt.sup_error) {
        pt.sup_error = err;
        pt.argmax = window[i];
      }
    }
    pt.argmax_radius = std::sqrt(metric.norm2(pt.argmax.cast<double>()) / (options.C * t));
    pt.kernel_at_zero = table.at(origin);
    pt.gaussian_at_zero = gaussian_value(metric, t, origin);
    pt.error_at_zero = std::abs(pt.kernel_at_zero - pt.gaussian_at_zero);
    pt.relative_error_at_zero = pt.error_at_zero / pt.gaussian_at_zero;
    pt.scaled_error = pt.sup_error * std::pow(t, -rep.predicted_exponent);
    rep.points.push_back(pt);
  }

  std::vector<double> lx, ly;
  for (const auto& p : rep.points) {
    lx.push_back(std::log(p.t));
    ly.push_back(std::log(std::max(p.sup_error, std::numeric_limits<double>::min())));
  }
  std::tie(rep.slope, rep.intercept) = fit_line(lx, ly);

  rep.boundary_drift = true;
  for (std::size_t i = 0; i < rep.points.size(); ++i) {
    if (rep.points[i].argmax_radius < 0.95) rep.boundary_drift = false;
    if (i > 0 && rep.points[i].argmax_radius < rep.points[i - 1].argmax_radius) rep.boundary_drift = false;
  }
  return rep;
}

}  // namespace periodic_heat::heat
