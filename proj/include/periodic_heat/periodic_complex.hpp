#pragma once

// Weighted periodic graphs: a finite quotient X = M / Z^k whose edges carry
// integer lattice shifts recording how they lift to the cover M.

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace periodic_heat {

using LatticeVector = Eigen::VectorXi;

/// Directed edge of the quotient. Traversing head -> tail negates the shift.
struct Edge {
  int tail = 0;
  int head = 0;
  double w = 1.0;    // conductance (diffusion)
  double ell = 1.0;  // length (distances)
  LatticeVector shift;
};

struct ValidationReport {
  bool positive = true;
  bool connected = false;
  /// Rank of the subgroup of Z^k spanned by cycle shifts.
  int generated_rank = 0;
  /// Index of that subgroup in Z^k; 0 when the rank is deficient (infinite index).
  long long index = 0;
  std::vector<std::string> messages;

  bool generates() const { return index == 1; }
  bool ok() const { return positive && connected && generates(); }
};

class PeriodicComplex {
 public:
  /// Throws ValidationError on structural defects (bad ids, non-positive
  /// weights, dimension mismatch, zero-shift self-loops). Connectivity and
  /// Z^k-generation are recorded in report() instead.
  PeriodicComplex(int rank, std::vector<double> mu, std::vector<Edge> edges);

  int rank() const noexcept { return rank_; }
  std::size_t num_vertices() const noexcept { return mu_.size(); }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const double> mu() const noexcept { return mu_; }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(std::size_t e) const { return edges_.at(e); }
  Eigen::Map<const Eigen::VectorXd> mu_vector() const {
    return {mu_.data(), static_cast<Eigen::Index>(mu_.size())};
  }

  /// vol(X), the total vertex weight.
  double volume() const noexcept { return volume_; }

  const ValidationReport& report() const noexcept { return report_; }

  /// Throws ValidationError unless connected and the cycle shifts generate Z^k.
  void require_valid(const std::string& module) const;

  bool operator==(const PeriodicComplex& other) const;

 private:
  int rank_;
  std::vector<double> mu_;
  std::vector<Edge> edges_;
  double volume_ = 0.0;
  ValidationReport report_;
};

ValidationReport validate(const PeriodicComplex& c);

/// Lattice displacement of each vertex along a BFS spanning tree rooted at
/// vertex 0; unreachable vertices get zero.
std::vector<LatticeVector> tree_lift(const PeriodicComplex& c);

/// Total shift of the fundamental cycle closed by each edge (zero for tree edges).
std::vector<LatticeVector> cycle_shifts(const PeriodicComplex& c);

/// Rank and index of the subgroup of Z^k generated by the given vectors.
struct SubgroupIndex {
  int rank = 0;
  long long index = 0;
};
SubgroupIndex lattice_subgroup_index(int k, std::span<const LatticeVector> generators);

/// Vertex relabeling: new id of old vertex i is perm[i].
PeriodicComplex relabel(const PeriodicComplex& c, std::span<const int> perm);

/// Same complex with edge e stored in the opposite direction.
PeriodicComplex reverse_edge(const PeriodicComplex& c, std::size_t e);

PeriodicComplex scale_weights(const PeriodicComplex& c, double mu_factor, double w_factor);

// --- supercells --------------------------------------------------------------

/// Quotient of M by (N Z)^k, itself a periodic complex over the coarse lattice.
/// Vertex (m, u) with u in [0, N)^k has id m + |V| * (u_0 + N u_1 + ...).
struct Supercell {
  int N = 1;
  std::size_t base_vertices = 0;
  PeriodicComplex complex;

  std::size_t vertex(int m, std::span<const int> cell) const;
};

inline constexpr std::size_t kDefaultSupercellCap = std::size_t{1} << 20;

Supercell supercell(const PeriodicComplex& c, int N, std::size_t vertex_cap = kDefaultSupercellCap);

// --- serialization -------------------------------------------------------------

void save(const PeriodicComplex& c, std::ostream& out);
void save(const PeriodicComplex& c, const std::string& path);
PeriodicComplex load(std::istream& in);
PeriodicComplex load_file(const std::string& path);
std::string to_string(const PeriodicComplex& c);

}  // namespace periodic_heat
