#include "periodic_heat/walk.hpp"

#include "periodic_heat/errors.hpp"
#include "periodic_heat/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <queue>
#include <random>

namespace periodic_heat::walk {

namespace {

const char* kModule = "walk";

struct EdgeEnd {
  int to;
  int sign;  // +1 along the stored direction, -1 against it
  std::size_t edge;
};

// Incident edge ends per vertex; a self-loop appears once in each direction.
std::vector<std::vector<EdgeEnd>> incidence(const PeriodicComplex& c) {
  std::vector<std::vector<EdgeEnd>> out(c.num_vertices());
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    out[ed.tail].push_back({ed.head, +1, e});
    out[ed.head].push_back({ed.tail, -1, e});
  }
  return out;
}

double uniform01(std::mt19937_64& gen) { return static_cast<double>(gen() >> 11) * 0x1.0p-53; }

}  // namespace

// --- sampler ------------------------------------------------------------------------

double expected_jumps(const PeriodicComplex& c, double t) {
  double total_w = 0.0;
  for (const Edge& e : c.edges()) total_w += 2.0 * e.w;
  // sum_i (mu_i / vol) (sum_{ends at i} w) / mu_i
  return t * total_w / c.volume();
}

WalkSample sample_displacements(const PeriodicComplex& c, double t, std::size_t count, std::uint64_t seed) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ParameterError(kModule, "t", "must be positive and finite");
  if (count < 1) throw ParameterError(kModule, "count", "must be >= 1");
  const int k = c.rank();
  const auto ends = incidence(c);
  const std::size_t nv = c.num_vertices();

  std::vector<double> rate(nv, 0.0);
  std::vector<std::vector<double>> cumulative(nv);
  for (std::size_t a = 0; a < nv; ++a) {
    double acc = 0.0;
    for (const auto& end : ends[a]) cumulative[a].push_back(acc += c.edge(end.edge).w);
    rate[a] = acc / c.mu()[a];
  }
  std::vector<double> start_cdf(nv);
  double acc = 0.0;
  for (std::size_t a = 0; a < nv; ++a) start_cdf[a] = (acc += c.mu()[a]);

  WalkSample out;
  out.t = t;
  out.seed = seed;
  out.count = count;
  out.displacements = Eigen::MatrixXi::Zero(static_cast<Eigen::Index>(count), k);
  out.jumps.assign(count, 0);

  constexpr std::size_t kChunk = 512;
  const std::size_t chunks = (count + kChunk - 1) / kChunk;
  parallel_for(chunks, [&](std::size_t chunk) {
    Eigen::VectorXi pos(k);
    for (std::size_t i = chunk * kChunk; i < std::min(count, (chunk + 1) * kChunk); ++i) {
      std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                        static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(std::uint64_t{i} >> 32)};
      std::mt19937_64 gen(seq);
      const double u0 = uniform01(gen) * acc;
      std::size_t a = static_cast<std::size_t>(std::upper_bound(start_cdf.begin(), start_cdf.end(), u0) - start_cdf.begin());
      a = std::min(a, nv - 1);
      pos.setZero();
      std::uint32_t jumps = 0;
      double clock = 0.0;
      for (;;) {
        if (rate[a] <= 0.0) break;
        clock += -std::log1p(-uniform01(gen)) / rate[a];
        if (clock > t) break;
        const auto& cdf = cumulative[a];
        const double u = uniform01(gen) * cdf.back();
        std::size_t j = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
        j = std::min(j, cdf.size() - 1);
        const EdgeEnd& end = ends[a][j];
        pos += end.sign * c.edge(end.edge).shift;
        a = static_cast<std::size_t>(end.to);
        ++jumps;
      }
      out.displacements.row(static_cast<Eigen::Index>(i)) = pos.transpose();
      out.jumps[i] = jumps;
    }
  });
  return out;
}

namespace {

struct Moments {
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;
  Eigen::MatrixXd se;
};

Moments moments(const WalkSample& s) {
  const Eigen::MatrixXd X = s.displacements.cast<double>();
  const double n = static_cast<double>(X.rows());
  const int k = static_cast<int>(X.cols());
  Moments m;
  m.mean = X.colwise().mean().transpose();
  const Eigen::MatrixXd Y = X.rowwise() - m.mean.transpose();
  m.cov.resize(k, k);
  m.se.resize(k, k);
  for (int j = 0; j < k; ++j)
    for (int l = 0; l < k; ++l) {
      const Eigen::ArrayXd prod = Y.col(j).array() * Y.col(l).array();
      const double c = prod.mean();
      m.cov(j, l) = c;
      m.se(j, l) = std::sqrt(std::max((prod.square().mean() - c * c) / n, 0.0));
    }
  return m;
}

}  // namespace

CovarianceReport covariance_check(const WalkSample& sample, const hodge::EffectiveMetric& metric) {
  if (sample.count < 10000) throw ParameterError(kModule, "count", "covariance check needs at least 1e4 samples");
  if (metric.rank() != sample.displacements.cols())
    throw ParameterError(kModule, "metric", "rank does not match the sample");
  const Moments m = moments(sample);
  const int k = metric.rank();
  const double n = static_cast<double>(sample.count);
  CovarianceReport rep;
  rep.mean = m.mean;
  rep.covariance = m.cov;
  rep.expected = 2.0 * sample.t * metric.A;
  rep.std_error = m.se;
  rep.z.resize(k, k);
  rep.mean_z.resize(k);
  for (int j = 0; j < k; ++j) {
    rep.mean_z[j] = m.mean[j] / std::sqrt(std::max(m.cov(j, j), 1e-300) / n);
    for (int l = 0; l < k; ++l) {
      const double diff = m.cov(j, l) - rep.expected(j, l);
      rep.z(j, l) = m.se(j, l) > 0.0 ? diff / m.se(j, l) : (diff == 0.0 ? 0.0 : std::copysign(1e300, diff));
    }
  }
  rep.max_abs_z = rep.z.cwiseAbs().maxCoeff();
  rep.pass = rep.max_abs_z <= kZThreshold;
  return rep;
}

Eigen::MatrixXd covariance_difference_z(const WalkSample& a, const WalkSample& b) {
  if (a.displacements.cols() != b.displacements.cols()) throw ParameterError(kModule, "b", "rank mismatch");
  const Moments ma = moments(a), mb = moments(b);
  const Eigen::MatrixXd se = (ma.se.array().square() + mb.se.array().square()).sqrt();
  return (ma.cov - mb.cov).cwiseQuotient(se.cwiseMax(1e-300));
}

// --- distances ---------------------------------------------------------------------------

namespace {

// Dijkstra on the cover restricted to the cells lo..hi. Returns nothing when a
// cell within `layer` of the box boundary is settled before the target: any
// path leaving the box must pass there, so otherwise the distance is exact.
std::optional<double> boxed_distance(const PeriodicComplex& c, const std::vector<std::vector<EdgeEnd>>& ends, int m,
                                     const LatticeVector& target, const LatticeVector& lo, const LatticeVector& hi,
                                     int layer) {
  const int k = c.rank();
  const std::size_t nv = c.num_vertices();
  std::vector<std::size_t> len(k), stride(k);
  std::size_t cells = 1;
  for (int j = 0; j < k; ++j) {
    len[j] = static_cast<std::size_t>(hi[j] - lo[j] + 1);
    stride[j] = cells;
    cells *= len[j];
  }
  auto node = [&](int vertex, const LatticeVector& cell) {
    std::size_t lin = 0;
    for (int j = 0; j < k; ++j) lin += static_cast<std::size_t>(cell[j] - lo[j]) * stride[j];
    return static_cast<std::size_t>(vertex) + nv * lin;
  };
  auto decode_cell = [&](std::size_t id) {
    LatticeVector cell(k);
    std::size_t lin = id / nv;
    for (int j = 0; j < k; ++j) {
      cell[j] = lo[j] + static_cast<int>(lin % len[j]);
      lin /= len[j];
    }
    return cell;
  };
  auto in_layer = [&](const LatticeVector& cell) {
    for (int j = 0; j < k; ++j)
      if (cell[j] < lo[j] + layer || cell[j] > hi[j] - layer) return true;
    return false;
  };

  std::vector<double> dist(nv * cells, std::numeric_limits<double>::infinity());
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> queue;
  const std::size_t source = node(m, LatticeVector::Zero(k));
  const std::size_t goal = node(m, target);
  dist[source] = 0.0;
  queue.emplace(0.0, source);
  while (!queue.empty()) {
    const auto [d, id] = queue.top();
    queue.pop();
    if (d > dist[id]) continue;
    if (id == goal) return d;
    const LatticeVector cell = decode_cell(id);
    if (in_layer(cell)) return std::nullopt;
    const int a = static_cast<int>(id % nv);
    for (const auto& end : ends[a]) {
      const Edge& ed = c.edge(end.edge);
      const LatticeVector next = cell + end.sign * ed.shift;
      const std::size_t nid = node(end.to, next);
      const double nd = d + ed.ell;
      if (nd < dist[nid]) {
        dist[nid] = nd;
        queue.emplace(nd, nid);
      }
    }
  }
  return std::nullopt;
}

}  // namespace

double translation_distance(const PeriodicComplex& c, const LatticeVector& displacement,
                            const StableNormOptions& options) {
  c.require_valid(kModule);
  const int k = c.rank();
  if (displacement.size() != k) throw ParameterError(kModule, "v", "dimension does not match the rank");
  const auto ends = incidence(c);
  int layer = 1;
  for (const Edge& e : c.edges()) layer = std::max(layer, e.shift.cwiseAbs().maxCoeff());

  double best = std::numeric_limits<double>::infinity();
  for (std::size_t m = 0; m < c.num_vertices(); ++m) {
    for (int margin = 2 * layer + 1;; margin *= 2) {
      LatticeVector lo(k), hi(k);
      std::size_t nodes = c.num_vertices();
      for (int j = 0; j < k; ++j) {
        lo[j] = std::min(0, displacement[j]) - margin;
        hi[j] = std::max(0, displacement[j]) + margin;
        nodes *= static_cast<std::size_t>(hi[j] - lo[j] + 1);
      }
      if (nodes > options.max_nodes)
        throw ResourceError(kModule, "shortest-path search box exceeds " + std::to_string(options.max_nodes) +
                                         " vertices without isolating a geodesic");
      if (const auto d = boxed_distance(c, ends, static_cast<int>(m), displacement, lo, hi, layer)) {
        best = std::min(best, *d);
        break;
      }
    }
  }
  return best;
}

StableNormEstimate stable_norm(const PeriodicComplex& c, const LatticeVector& v, int n_max,
                               const StableNormOptions& options) {
  if (v.size() != c.rank()) throw ParameterError(kModule, "v", "dimension does not match the rank");
  if (v.isZero()) throw ParameterError(kModule, "v", "must be nonzero");
  if (n_max < 1 || (n_max & (n_max - 1)) != 0) throw ParameterError(kModule, "n_max", "must be a power of two");

  StableNormEstimate est;
  est.v = v;
  for (int n = 1; n <= n_max; ++n)
    if (n <= options.extra || (n & (n - 1)) == 0) est.n.push_back(n);
  est.d.resize(est.n.size());
  parallel_for(est.n.size(), [&](std::size_t i) {
    est.d[i] = translation_distance(c, LatticeVector(est.n[i] * v), options);
  });
  for (std::size_t i = 0; i < est.n.size(); ++i) est.ratios.push_back(est.d[i] / est.n[i]);
  est.norm = est.d.back() / n_max;
  for (std::size_t i = 0; i < est.n.size(); ++i) est.c_est = std::max(est.c_est, std::abs(est.d[i] - est.n[i] * est.norm));
  est.error_bar = est.c_est / n_max;

  auto lookup = [&](int n) -> std::optional<double> {
    const auto it = std::find(est.n.begin(), est.n.end(), n);
    if (it == est.n.end()) return std::nullopt;
    return est.d[static_cast<std::size_t>(it - est.n.begin())];
  };
  for (std::size_t i = 0; i < est.n.size(); ++i)
    for (std::size_t j = i; j < est.n.size(); ++j)
      if (const auto sum = lookup(est.n[i] + est.n[j])) {
        ++est.pairs_checked;
        const double excess = *sum - est.d[i] - est.d[j];
        est.max_subadditivity_violation = std::max(est.max_subadditivity_violation, excess);
        if (excess > 1e-12) est.subadditive = false;
      }
  return est;
}

}  // namespace periodic_heat::walk
