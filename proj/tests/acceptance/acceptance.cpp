// Acceptance run: one line per criterion, nonzero exit when any fails.

#include "periodic_heat/bloch.hpp"
#include "periodic_heat/errors.hpp"
#include "periodic_heat/heat.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/presets.hpp"
#include "periodic_heat/walk.hpp"

#include "support/oracles.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace periodic_heat;

namespace {

constexpr std::uint64_t kRandomSeed = 2024;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << " FAILED: " << what << ';';
    }
  }
};

double rel_frobenius(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale > 0.0 ? (a - b).norm() / scale : 0.0;
}

LatticeVector lv(std::initializer_list<int> xs) {
  LatticeVector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (int x : xs) v[i++] = x;
  return v;
}

struct Named {
  std::string name;
  PeriodicComplex c;
};

std::vector<Named> metric_presets() {
  using namespace presets;
  return {{"loop_z", loop_z()},
          {"chain(2, w=(1,3))", chain(2, {1, 3})},
          {"parallel_edges(1,2)", parallel_edges({1, 2})},
          {"grid_flat(8)", grid_flat(8)},
          {"grid_conformal(8, sin_xy 0.3)", grid_conformal(8, named_scalar_field("sin_xy", 0.3))},
          {"random_weights(k=2, n=3)", random_weights(2, 3, kRandomSeed)}};
}

void criterion1(Outcome& o) {
  double worst = 0.0;
  for (const auto& [name, c] : metric_presets()) {
    const bloch::BlochFamily family(c);
    const Eigen::MatrixXd gram = 2.0 * hodge::effective_metric(c, family.basis()).A;
    const Eigen::MatrixXd pert = bloch::band_hessian_perturbative(family);
    const Eigen::MatrixXd fd = bloch::band_hessian_fd(family, 1e-3);
    const double e = std::max({rel_frobenius(gram, pert), rel_frobenius(gram, fd), rel_frobenius(pert, fd)});
    worst = std::max(worst, e);
    o.require(e <= 1e-8, name + " disagreement " + std::to_string(e));
  }
  o.detail << " max pairwise rel. Frobenius error " << worst << " (tol 1e-8)";
}

void criterion2(Outcome& o) {
  double worst = 0.0;
  for (auto [w1, w2] : {std::pair{1.0, 1.0}, {1.0, 3.0}, {0.2, 5.0}, {2.5, 0.7}}) {
    const double A = hodge::effective_metric(presets::chain(2, {w1, w2}, {1, 1})).A(0, 0);
    const double e = std::abs(A - w1 * w2 / (w1 + w2) / 2.0);
    worst = std::max(worst, e);
    o.require(e <= 1e-12, "chain(2) w=(" + std::to_string(w1) + "," + std::to_string(w2) + ")");
  }
  for (auto [a, b] : {std::pair{1.0, 2.0}, {0.5, 4.0}, {3.0, 3.0}}) {
    const double A = hodge::effective_metric(presets::parallel_edges({a, b})).A(0, 0);
    const double e = std::abs(A - (a + b));
    worst = std::max(worst, e);
    o.require(e <= 1e-12, "parallel_edges a=" + std::to_string(a) + " b=" + std::to_string(b));
  }
  o.detail << " max abs error " << worst << " (tol 1e-12)";
}

void criterion3(Outcome& o) {
  struct Case {
    std::string name;
    PeriodicComplex c;
    int N;
    std::vector<double> times;
  };
  const std::vector<Case> cases{{"loop_z", presets::loop_z(), 8, {0.5, 1.0, 5.0}},
                                {"chain(2)", presets::chain(2), 6, {2.0}},
                                {"grid_flat(2)", presets::grid_flat(2), 4, {1.0}}};
  double worst = 0.0;
  for (const auto& k : cases) {
    const auto window = heat::box_window(k.c.rank(), (k.N - 1) / 2);
    for (double t : k.times) {
      const auto quad = heat::heat_kernel_lattice(k.c, t, k.N, window);
      const auto oracle = heat::supercell_oracle(k.c, t, k.N, window);
      double e = 0.0;
      for (std::size_t i = 0; i < window.size(); ++i) e = std::max(e, std::abs(quad.values[i] - oracle.values[i]));
      worst = std::max(worst, e);
      o.require(e <= 1e-10, k.name + " t=" + std::to_string(t));
    }
  }
  o.detail << " max abs difference " << worst << " (tol 1e-10)";
}

void criterion4(Outcome& o) {
  const auto c = presets::loop_z();
  double worst = 0.0;
  for (double t : {1.0, 5.0, 20.0, 50.0}) {
    const int R = static_cast<int>(std::ceil(4.0 * std::sqrt(t)));
    const auto table = heat::heat_kernel_lattice(c, t, 0, heat::box_window(1, R));
    double e = 0.0;
    for (std::size_t i = 0; i < table.window.size(); ++i)
      e = std::max(e, std::abs(table.values[i] - oracles::loop_kernel(t, table.window[i][0])));
    worst = std::max(worst, e);
    o.require(e <= 1e-8, "t=" + std::to_string(t));
    o.detail << " t=" << t << ":N=" << table.N;
  }
  o.detail << "; max abs error " << worst << " (tol 1e-8)";
}

void criterion5(Outcome& o) {
  const std::vector<double> t_list{25, 50, 100, 200, 400};
  const std::vector<Named> cases{{"loop_z", presets::loop_z()},
                                 {"random_weights(k=2, n=3)", presets::random_weights(2, 3, kRandomSeed)}};
  for (const auto& [name, c] : cases) {
    const bloch::BlochFamily family(c);
    heat::AsymptoticOptions opts;
    opts.C = 9.0;
    const auto rep = heat::asymptotic_error_scan(family, t_list, opts);
    const double limit = rep.predicted_exponent + 0.25;
    const double rel0 = rep.points.back().relative_error_at_zero;
    o.require(rep.slope <= limit, name + " slope " + std::to_string(rep.slope));
    o.require(rel0 <= 0.02, name + " relative error at v=0, t=400: " + std::to_string(rel0));
    o.detail << ' ' << name << ": slope " << rep.slope << " (limit " << limit << "), rel. error at 0 " << rel0 << ';';
  }
}

void criterion6(Outcome& o) {
  double worst_A = 0.0, worst_k = 0.0;
  const double t = 1.0;
  for (int n : {2, 4, 8}) {
    const auto c = presets::grid_flat(n);
    const auto A = hodge::effective_metric(c).A;
    const double eA = (A - Eigen::Matrix2d::Identity()).cwiseAbs().maxCoeff();
    worst_A = std::max(worst_A, eA);
    o.require(eA <= 1e-10, "A for n=" + std::to_string(n));
    const int R = static_cast<int>(std::ceil(4.0 * std::sqrt(t)));
    const auto table = heat::heat_kernel_lattice(c, t, 0, heat::box_window(2, R));
    double ek = 0.0;
    for (std::size_t i = 0; i < table.window.size(); ++i) {
      const auto& v = table.window[i];
      ek = std::max(ek, std::abs(table.values[i] - oracles::flat_grid_kernel(n, t, v[0], v[1])));
    }
    worst_k = std::max(worst_k, ek);
    o.require(ek <= 1e-8, "kernel for n=" + std::to_string(n));
  }
  o.detail << " max |A - I| " << worst_A << " (tol 1e-10), max kernel error " << worst_k << " at t=" << t << " (tol 1e-8)";
}

Eigen::MatrixXd unit_volume_anisotropic(int n, const presets::MetricField& g, const presets::ScalarField& phi) {
  const auto c = presets::grid_anisotropic(n, [&](double x, double y) -> Eigen::Matrix2d {
    return std::exp(2.0 * phi(x, y)) * g(x, y);
  });
  return hodge::effective_metric(scale_weights(c, 1.0 / c.volume(), 1.0)).A;
}

void criterion7(Outcome& o) {
  const int n = 16;
  const auto phi1 = presets::named_scalar_field("sin_x", 0.3);
  const auto phi2 = presets::named_scalar_field("sin_xy", 0.5);
  const double level = 0.5 * std::log(presets::conformal_volume(n, phi1) / presets::conformal_volume(n, phi2));
  const auto phi2_matched = [&](double x, double y) { return phi2(x, y) + level; };
  const auto A1 = hodge::effective_metric(presets::grid_conformal(n, phi1)).A;
  const auto A2 = hodge::effective_metric(presets::grid_conformal(n, phi2_matched)).A;
  const double conf = (A1 - A2).cwiseAbs().maxCoeff();
  o.require(conf <= 1e-10, "conformal pair differs by " + std::to_string(conf));

  // e^{2 phi_a} flat versus e^{2 phi_b} times the shear pullback of flat
  const auto flat = presets::named_metric_field("flat", 0.0);
  const auto shear = presets::named_metric_field("shear", 0.1);
  const auto pa = presets::named_scalar_field("sin_xy", 0.2);
  const auto pb = presets::named_scalar_field("bump", 0.2);
  auto diff = [&](int m) { return (unit_volume_anisotropic(m, shear, pb) - unit_volume_anisotropic(m, flat, pa)).norm(); };
  const double d16 = diff(16), d32 = diff(32);
  const double ratio = d16 / d32;
  o.require(ratio >= 1.5, "refinement ratio " + std::to_string(ratio));
  o.detail << " conformal |A1 - A2| " << conf << " (tol 1e-10); anisotropic difference " << d16 << " -> " << d32
           << ", ratio " << ratio << " (need >= 1.5)";
}

void criterion8(Outcome& o) {
  const double t = 400.0;
  const std::size_t count = 200000;
  {
    const auto c = presets::chain(2);
    const auto rep = walk::covariance_check(walk::sample_displacements(c, t, count, 1), hodge::effective_metric(c));
    o.require(rep.pass, "chain(2) max |z| " + std::to_string(rep.max_abs_z));
    o.detail << " chain(2): cov " << rep.covariance(0, 0) << " vs 2tA " << rep.expected(0, 0) << ", max |z| "
             << rep.max_abs_z << ';';
  }
  {
    const auto c = presets::loop_z();
    const auto rep = walk::covariance_check(walk::sample_displacements(c, t, count, 2), hodge::effective_metric(c));
    o.require(std::abs(rep.z(0, 0)) <= 4.0, "loop_z variance z " + std::to_string(rep.z(0, 0)));
    o.detail << " loop_z: var " << rep.covariance(0, 0) << " vs 2t " << 2 * t << ", z " << rep.z(0, 0);
  }
}

void criterion9(Outcome& o) {
  auto bounded = [](const walk::StableNormEstimate& est) {
    for (std::size_t i = 0; i < est.n.size(); ++i)
      if (std::abs(est.d[i] - est.n[i] * est.norm) > est.c_est + 1e-12) return false;
    return true;
  };
  for (int n : {2, 4, 8}) {
    const auto c = presets::grid_flat(n);
    const auto est = walk::stable_norm(c, lv({1, 1}), 16);
    const double eff = std::sqrt(hodge::effective_metric(c).norm2(Eigen::Vector2d(1, 1)));
    o.require(est.norm == 2.0, "grid_flat(" + std::to_string(n) + ") norm " + std::to_string(est.norm));
    o.require(std::abs(eff - std::sqrt(2.0)) <= 1e-10, "effective length " + std::to_string(eff));
    o.require(est.subadditive, "grid_flat subadditivity");
    o.require(bounded(est), "grid_flat bound");
    if (n == 8) o.detail << " grid_flat(8): norm " << est.norm << ", effective length " << eff << ", c_est " << est.c_est << ';';
  }
  std::size_t pairs = 0;
  const std::vector<Named> others{{"chain(3)", presets::chain(3, {1, 2, 3}, {}, {1, 2, 0.5})},
                                  {"random_weights(k=2)", presets::random_weights(2, 3, kRandomSeed)}};
  for (const auto& [name, c] : others) {
    const auto v = c.rank() == 1 ? lv({1}) : lv({2, -1});
    const auto est = walk::stable_norm(c, v, 32);
    pairs += est.pairs_checked;
    o.require(est.subadditive, name + " subadditivity violated by " + std::to_string(est.max_subadditivity_violation));
    o.require(bounded(est), name + " bound");
    o.detail << ' ' << name << ": norm " << est.norm << " +- " << est.error_bar << ';';
  }
  o.detail << " subadditive pairs checked " << pairs;
}

void criterion10(Outcome& o) {
  const std::vector<Named> cases{{"loop_z", presets::loop_z()},
                                 {"chain(3)", presets::chain(3, {1, 2, 3}, {1, 2, 4})},
                                 {"grid_conformal(8)", presets::grid_conformal(8, presets::named_scalar_field("bump", 0.2))},
                                 {"random_weights(k=2)", presets::random_weights(2, 3, kRandomSeed)}};
  std::mt19937_64 rng(10);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  double gauge = 0.0, defect = 0.0, mass = 0.0, trace = 0.0, sym = 0.0, scale = 0.0, min_off = 1e300;
  for (const auto& [name, c] : cases) {
    const bloch::BlochFamily family(c);
    const int k = c.rank();
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd th(k);
      for (auto& x : th) x = u(rng);
      const bloch::BlochPoint p(th);
      const auto a = bloch::spectrum(family.assemble(p, bloch::Gauge::phase), c.num_vertices());
      const auto b = bloch::spectrum(family.assemble(p, bloch::Gauge::harmonic), c.num_vertices());
      gauge = std::max(gauge, (a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff());
      min_off = std::min(min_off, a.eigenvalues[0]);
    }
    for (int j = 0; j < k; ++j)
      defect = std::max(defect, bloch::first_order_defect(family, Eigen::VectorXd::Unit(k, j), bloch::Gauge::harmonic));
    const auto gap = bloch::gap_scan(family, k == 1 ? 64 : 16, 0.5);
    min_off = std::min(min_off, gap.epsilon);

    const int N = k == 1 ? 9 : 5;
    const double t = 1.5;
    const heat::TwoPointKernel P(family, t, N);
    mass = std::max(mass, std::abs(P.mass(c.mu_vector()) - c.volume()));
    const auto table = heat::heat_kernel_lattice(family, t, N, heat::box_window(k, (N - 1) / 2));
    const double trace0 = bloch::heat_trace(family.assemble(bloch::BlochPoint::zero(k)), t).value;
    trace = std::max(trace, std::abs(table.sum() - trace0));
    for (const auto& v : table.window) sym = std::max(sym, std::abs(table.at(v) - table.at(-v)));

    const auto A = hodge::effective_metric(c).A;
    for (double s : {0.25, 4.0}) {
      const auto Amu = hodge::effective_metric(scale_weights(c, s, 1.0)).A;
      const auto Aw = hodge::effective_metric(scale_weights(c, 1.0, s)).A;
      scale = std::max({scale, (Amu - A / s).cwiseAbs().maxCoeff() / (A / s).cwiseAbs().maxCoeff(),
                        (Aw - s * A).cwiseAbs().maxCoeff() / (s * A).cwiseAbs().maxCoeff()});
    }
  }
  o.require(gauge <= 1e-10, "gauge equivalence " + std::to_string(gauge));
  o.require(defect <= 1e-12, "harmonic-gauge first-order term " + std::to_string(defect));
  o.require(mass <= 1e-10, "mass law " + std::to_string(mass));
  o.require(trace <= 1e-10, "trace identity " + std::to_string(trace));
  o.require(sym <= 1e-10, "kernel symmetry " + std::to_string(sym));
  o.require(min_off > 0.0, "lambda_1 positivity off 0");
  o.require(scale <= 1e-12, "scaling laws " + std::to_string(scale));
  o.detail << " gauge " << gauge << ", |Delta'(0)1| " << defect << ", mass " << mass << ", trace " << trace
           << ", symmetry " << sym << ", min lambda_1 off 0 " << min_off << ", scaling " << scale;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"three-way effective-metric agreement", criterion1},
      {"closed-form metrics", criterion2},
      {"quadrature equals supercell oracle", criterion3},
      {"Bessel oracle for loop_z", criterion4},
      {"asymptotic decay rate", criterion5},
      {"flat recovery", criterion6},
      {"conformal invariance", criterion7},
      {"walk covariance", criterion8},
      {"stable norm vs effective metric", criterion9},
      {"structural invariants", criterion10},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      criteria[i].second(o);
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail << " threw: " << e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (!o.pass) ++failed;
    std::printf("[%s] %zu. %s:%s (%.1fs)\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.str().c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
