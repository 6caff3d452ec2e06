#include "periodic_heat/periodic_complex.hpp"

#include "periodic_heat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <numeric>
#include <queue>
#include <utility>

namespace periodic_heat {

namespace {

const char* kModule = "periodic_complex";

}  // namespace

PeriodicComplex::PeriodicComplex(int rank, std::vector<double> mu, std::vector<Edge> edges)
    : rank_(rank), mu_(std::move(mu)), edges_(std::move(edges)) {
  if (rank_ < 1) throw ValidationError(kModule, "rank must be positive");
  if (mu_.empty()) throw ValidationError(kModule, "complex has no vertices");
  const int n = static_cast<int>(mu_.size());
  for (int i = 0; i < n; ++i) {
    if (!(mu_[i] > 0.0) || !std::isfinite(mu_[i]))
      throw ValidationError(kModule, "vertex " + std::to_string(i) + ": mu must be positive");
    volume_ += mu_[i];
  }
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& ed = edges_[e];
    const std::string where = "edge " + std::to_string(e) + ": ";
    if (ed.tail < 0 || ed.tail >= n || ed.head < 0 || ed.head >= n)
      throw ValidationError(kModule, where + "references a missing vertex");
    if (!(ed.w > 0.0) || !std::isfinite(ed.w)) throw ValidationError(kModule, where + "w must be positive");
    if (!(ed.ell > 0.0) || !std::isfinite(ed.ell))
      throw ValidationError(kModule, where + "ell must be positive");
    if (ed.shift.size() != rank_)
      throw ValidationError(kModule, where + "shift has dimension " + std::to_string(ed.shift.size()) +
                                         ", expected " + std::to_string(rank_));
    if (ed.tail == ed.head && ed.shift.isZero())
      throw ValidationError(kModule, where + "self-loop with zero shift");
  }
  report_ = validate(*this);
}

void PeriodicComplex::require_valid(const std::string& module) const {
  if (report_.ok()) return;
  std::string why;
  for (const auto& m : report_.messages) why += (why.empty() ? "" : "; ") + m;
  throw ValidationError(module, "complex refused: " + why);
}

bool PeriodicComplex::operator==(const PeriodicComplex& other) const {
  if (rank_ != other.rank_ || mu_ != other.mu_ || edges_.size() != other.edges_.size()) return false;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    const Edge& a = edges_[e];
    const Edge& b = other.edges_[e];
    if (a.tail != b.tail || a.head != b.head || a.w != b.w || a.ell != b.ell || a.shift != b.shift)
      return false;
  }
  return true;
}

std::vector<LatticeVector> tree_lift(const PeriodicComplex& c) {
  const std::size_t n = c.num_vertices();
  std::vector<std::vector<std::pair<int, int>>> adj(n);  // (edge, +1 outgoing / -1 incoming)
  for (std::size_t e = 0; e < c.num_edges(); ++e) {
    const Edge& ed = c.edge(e);
    adj[ed.tail].emplace_back(static_cast<int>(e), +1);
    if (ed.head != ed.tail) adj[ed.head].emplace_back(static_cast<int>(e), -1);
  }
  std::vector<LatticeVector> lift(n, LatticeVector::Zero(c.rank()));
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
      lift[other] = lift[v] + dir * ed.shift;
      queue.push(other);
    }
  }
  return lift;
}

std::vector<LatticeVector> cycle_shifts(const PeriodicComplex& c) {
  const auto lift = tree_lift(c);
  std::vector<LatticeVector> out;
  out.reserve(c.num_edges());
  for (const Edge& ed : c.edges()) out.push_back(lift[ed.tail] + ed.shift - lift[ed.head]);
  return out;
}

SubgroupIndex lattice_subgroup_index(int k, std::span<const LatticeVector> generators) {
  // Column reduction to echelon form with Euclid's algorithm on each row.
  std::vector<std::vector<long long>> cols;
  for (const auto& g : generators) {
    if (g.isZero()) continue;
    cols.emplace_back(g.data(), g.data() + g.size());
  }
  SubgroupIndex out;
  out.index = 1;
  std::size_t pivot = 0;
  for (int row = 0; row < k && pivot < cols.size(); ++row) {
    for (;;) {
      std::size_t best = cols.size();
      for (std::size_t j = pivot; j < cols.size(); ++j) {
        if (cols[j][row] == 0) continue;
        if (best == cols.size() || std::llabs(cols[j][row]) < std::llabs(cols[best][row])) best = j;
      }
      if (best == cols.size()) break;
      std::swap(cols[pivot], cols[best]);
      bool reduced = true;
      for (std::size_t j = pivot + 1; j < cols.size(); ++j) {
        const long long q = cols[j][row] / cols[pivot][row];
        if (q != 0)
          for (int r = 0; r < k; ++r) cols[j][r] -= q * cols[pivot][r];
        if (cols[j][row] != 0) reduced = false;
      }
      if (reduced) {
        out.index *= std::llabs(cols[pivot][row]);
        ++out.rank;
        ++pivot;
        break;
      }
    }
  }
  if (out.rank < k) out.index = 0;
  return out;
}

ValidationReport validate(const PeriodicComplex& c) {
  ValidationReport rep;
  for (double m : c.mu())
    if (!(m > 0.0)) rep.positive = false;
  for (const Edge& e : c.edges())
    if (!(e.w > 0.0) || !(e.ell > 0.0)) rep.positive = false;
  if (!rep.positive) rep.messages.emplace_back("non-positive weight");

  // Connectivity via union-find on the quotient.
  std::vector<int> parent(c.num_vertices());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int v) {
    while (parent[v] != v) v = parent[v] = parent[parent[v]];
    return v;
  };
  std::size_t components = c.num_vertices();
  for (const Edge& e : c.edges()) {
    const int a = find(e.tail), b = find(e.head);
    if (a != b) {
      parent[a] = b;
      --components;
    }
  }
  rep.connected = components == 1;
  if (!rep.connected)
    rep.messages.push_back("quotient graph has " + std::to_string(components) + " components");

  const auto shifts = cycle_shifts(c);
  const auto sub = lattice_subgroup_index(c.rank(), shifts);
  rep.generated_rank = sub.rank;
  rep.index = rep.connected ? sub.index : 0;
  if (rep.connected && sub.rank < c.rank())
    rep.messages.push_back("cycle shifts span a rank-" + std::to_string(sub.rank) + " subgroup of Z^" +
                           std::to_string(c.rank()));
  else if (rep.connected && sub.index != 1)
    rep.messages.push_back("cycle shifts generate an index-" + std::to_string(sub.index) + " subgroup of Z^" +
                           std::to_string(c.rank()));
  return rep;
}

PeriodicComplex relabel(const PeriodicComplex& c, std::span<const int> perm) {
  if (perm.size() != c.num_vertices()) throw ParameterError(kModule, "perm", "size mismatch");
  std::vector<bool> seen(perm.size(), false);
  for (int p : perm) {
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || seen[p])
      throw ParameterError(kModule, "perm", "not a permutation");
    seen[p] = true;
  }
  std::vector<double> mu(c.num_vertices());
  for (std::size_t i = 0; i < perm.size(); ++i) mu.at(perm[i]) = c.mu()[i];
  std::vector<Edge> edges(c.edges().begin(), c.edges().end());
  for (Edge& e : edges) {
    e.tail = perm[e.tail];
    e.head = perm[e.head];
  }
  return {c.rank(), std::move(mu), std::move(edges)};
}

PeriodicComplex reverse_edge(const PeriodicComplex& c, std::size_t e) {
  std::vector<Edge> edges(c.edges().begin(), c.edges().end());
  Edge& ed = edges.at(e);
  std::swap(ed.tail, ed.head);
  ed.shift = -ed.shift;
  return {c.rank(), std::vector<double>(c.mu().begin(), c.mu().end()), std::move(edges)};
}

PeriodicComplex scale_weights(const PeriodicComplex& c, double mu_factor, double w_factor) {
  std::vector<double> mu(c.mu().begin(), c.mu().end());
  for (double& m : mu) m *= mu_factor;
  std::vector<Edge> edges(c.edges().begin(), c.edges().end());
  for (Edge& e : edges) e.w *= w_factor;
  return {c.rank(), std::move(mu), std::move(edges)};
}

std::size_t Supercell::vertex(int m, std::span<const int> cell) const {
  std::size_t lin = 0;
  for (std::size_t j = cell.size(); j-- > 0;) lin = lin * N + static_cast<std::size_t>(cell[j]);
  return static_cast<std::size_t>(m) + base_vertices * lin;
}

Supercell supercell(const PeriodicComplex& c, int N, std::size_t vertex_cap) {
  if (N < 1) throw ParameterError(kModule, "N", "must be >= 1");
  const int k = c.rank();
  double cells = std::pow(static_cast<double>(N), k);
  if (cells * static_cast<double>(c.num_vertices()) > static_cast<double>(vertex_cap))
    throw ResourceError(kModule, "supercell with N=" + std::to_string(N) + " exceeds vertex cap " +
                                     std::to_string(vertex_cap));
  const std::size_t num_cells = static_cast<std::size_t>(cells);
  const std::size_t nv = c.num_vertices();

  std::vector<double> mu(nv * num_cells);
  std::vector<Edge> edges;
  edges.reserve(c.num_edges() * num_cells);
  std::vector<int> cell(k, 0), target(k, 0);
  for (std::size_t lin = 0; lin < num_cells; ++lin) {
    std::size_t rem = lin;
    for (int j = 0; j < k; ++j) {
      cell[j] = static_cast<int>(rem % N);
      rem /= N;
    }
    for (std::size_t m = 0; m < nv; ++m) mu[m + nv * lin] = c.mu()[m];
    for (const Edge& e : c.edges()) {
      Edge out;
      out.w = e.w;
      out.ell = e.ell;
      out.shift = LatticeVector::Zero(k);
      for (int j = 0; j < k; ++j) {
        const int moved = cell[j] + e.shift[j];
        // floor division and non-negative remainder
        int q = moved / N, r = moved % N;
        if (r < 0) {
          r += N;
          --q;
        }
        target[j] = r;
        out.shift[j] = q;
      }
      out.tail = static_cast<int>(e.tail + nv * lin);
      std::size_t tlin = 0;
      for (int j = k; j-- > 0;) tlin = tlin * N + static_cast<std::size_t>(target[j]);
      out.head = static_cast<int>(e.head + nv * tlin);
      edges.push_back(std::move(out));
    }
  }
  return Supercell{N, nv, PeriodicComplex(k, std::move(mu), std::move(edges))};
}

}  // namespace periodic_heat
