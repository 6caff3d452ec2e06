#include "periodic_heat/bloch.hpp"
#include "periodic_heat/errors.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/presets.hpp"

#include "support/oracles.hpp"

#include <doctest.h>

#include <random>

using namespace periodic_heat;
using bloch::BlochPoint;
using bloch::Gauge;

namespace {

BlochPoint point(std::initializer_list<double> xs) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (double x : xs) v[i++] = x;
  return BlochPoint(v);
}

double rel(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) { return (a - b).norm() / b.norm(); }

std::vector<PeriodicComplex> sample_complexes() {
  using namespace presets;
  return {loop_z(),
          chain(2),
          chain(2, {1, 3}),
          chain(3, {1, 2, 5}, {1, 3, 0.5}),
          parallel_edges({1, 2}),
          grid_flat(2),
          grid_flat(4),
          grid_conformal(8, named_scalar_field("sin_xy", 0.3)),
          random_weights(1, 5, 7),
          random_weights(2, 3, 17)};
}

}  // namespace

TEST_CASE("BlochPoint wraps into [-pi, pi)") {
  CHECK(point({M_PI}).theta()[0] == doctest::Approx(-M_PI));
  CHECK(point({3.0 * M_PI / 2}).theta()[0] == doctest::Approx(-M_PI / 2));
  CHECK(point({-0.25}).theta()[0] == -0.25);
}

TEST_CASE("loop_z operator is 2 - 2 cos theta") {
  const auto c = presets::loop_z();
  for (double th : {0.0, 0.3, 1.0, 2.5, -1.7}) {
    for (Gauge g : {Gauge::phase, Gauge::harmonic}) {
      const auto D = bloch::assemble(c, point({th}), g).dense();
      REQUIRE(D.rows() == 1);
      CHECK(std::abs(D(0, 0) - (2.0 - 2.0 * std::cos(th))) < 1e-14);
    }
  }
}

TEST_CASE("Delta(0) annihilates constants") {
  for (const auto& c : sample_complexes()) {
    const auto op = bloch::assemble(c, BlochPoint::zero(c.rank()));
    CHECK(op.apply(Eigen::VectorXcd::Ones(c.num_vertices())).norm() < 1e-12);
  }
}

TEST_CASE("chain(2) bands match the characteristic polynomial") {
  const auto c = presets::chain(2);
  for (double th : {0.0, 0.4, 1.3, 3.0}) {
    const auto bands = bloch::spectrum(bloch::assemble(c, point({th})), 2);
    const auto ref = oracles::chain2_bands(th);
    CHECK(std::abs(bands.eigenvalues[0] - ref[0]) < 1e-13);
    CHECK(std::abs(bands.eigenvalues[1] - ref[1]) < 1e-13);
  }
}

TEST_CASE("spectrum examples") {
  CHECK(bloch::spectrum(bloch::assemble(presets::loop_z(), point({M_PI})), 1).eigenvalues[0] == doctest::Approx(4.0).epsilon(1e-15));
  const auto b = bloch::spectrum(bloch::assemble(presets::chain(2), point({0.0})), 2);
  CHECK(std::abs(b.eigenvalues[0]) < 1e-15);
  CHECK(b.eigenvalues[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(bloch::spectrum(bloch::assemble(presets::chain(2), point({0.0})), 3), ParameterError);
}

TEST_CASE("eigenvectors are mu-orthonormal with small residuals") {
  const auto c = presets::random_weights(2, 3, 4);
  bloch::SpectrumOptions opts;
  opts.vectors = true;
  const auto op = bloch::assemble(c, point({0.7, -1.1}));
  const auto b = bloch::spectrum(op, c.num_vertices(), opts);
  REQUIRE(b.eigenvectors);
  const Eigen::MatrixXcd& X = *b.eigenvectors;
  const Eigen::MatrixXcd G = X.adjoint() * op.mu().asDiagonal() * X;
  CHECK((G - Eigen::MatrixXcd::Identity(G.rows(), G.cols())).norm() < 1e-12);
  for (Eigen::Index i = 0; i < X.cols(); ++i) CHECK((op.apply(X.col(i)) - b.eigenvalues[i] * X.col(i)).norm() < 1e-11);
  CHECK(b.max_residual < 1e-11);
  for (Eigen::Index i = 1; i < b.eigenvalues.size(); ++i) CHECK(b.eigenvalues[i] >= b.eigenvalues[i - 1]);
}

TEST_CASE("heat_trace examples") {
  CHECK(bloch::heat_trace(bloch::assemble(presets::loop_z(), point({0.0})), 3.7).value == doctest::Approx(1.0).epsilon(1e-15));
  const auto h = bloch::heat_trace(bloch::assemble(presets::chain(2), point({0.0})), 1.0);
  CHECK(std::abs(h.value - oracles::kChainTrace) < 1e-15);
  CHECK(h.tail_bound == 0.0);
  const auto partial = bloch::heat_trace(bloch::assemble(presets::chain(2), point({0.0})), 1.0, 1);
  CHECK(partial.value == doctest::Approx(1.0));
  CHECK(partial.tail_bound >= h.value - partial.value);
}

TEST_CASE("phase and harmonic gauges are unitarily equivalent") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (const auto& c : sample_complexes()) {
    const bloch::BlochFamily family(c);
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd th(c.rank());
      for (auto& x : th) x = u(rng);
      const BlochPoint p(th);
      const auto a = bloch::spectrum(family.assemble(p, Gauge::phase), c.num_vertices());
      const auto b = bloch::spectrum(family.assemble(p, Gauge::harmonic), c.num_vertices());
      CHECK((a.eigenvalues - b.eigenvalues).cwiseAbs().maxCoeff() < 1e-10);
    }
  }
}

TEST_CASE("Bloch operators are Hermitian for the mu inner product") {
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (const auto& c : sample_complexes()) {
    const bloch::BlochFamily family(c);
    Eigen::VectorXd th(c.rank());
    for (auto& x : th) x = u(rng);
    for (Gauge g : {Gauge::phase, Gauge::harmonic}) {
      const auto op = family.assemble(BlochPoint(th), g);
      CHECK(op.hermiticity_defect() <= 1e-13);
      const auto S = op.symmetric_dense();
      CHECK((S - S.adjoint()).norm() <= 1e-13 * (1.0 + S.norm()));
      CHECK((Eigen::MatrixXcd(op.symmetric_sparse()) - S).norm() <= 1e-13 * (1.0 + S.norm()));
    }
  }
}

TEST_CASE("bands are even, periodic and positive off the origin") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> u(-M_PI, M_PI);
  for (const auto& c : sample_complexes()) {
    const bloch::BlochFamily family(c);
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::VectorXd th(c.rank());
      for (auto& x : th) x = u(rng);
      const auto lam = bloch::spectrum(family.assemble(BlochPoint(th)), c.num_vertices()).eigenvalues;
      const auto neg = bloch::spectrum(family.assemble(BlochPoint(-th)), c.num_vertices()).eigenvalues;
      Eigen::VectorXd shifted = th;
      shifted[0] += 2.0 * M_PI;
      const auto per = bloch::spectrum(family.assemble(BlochPoint(shifted)), c.num_vertices()).eigenvalues;
      CHECK((lam - neg).cwiseAbs().maxCoeff() < 1e-10);
      CHECK((lam - per).cwiseAbs().maxCoeff() < 1e-10);
      CHECK(lam[0] > 1e-8);
    }
  }
}

TEST_CASE("lowest band is smooth near zero") {
  const auto c = presets::random_weights(2, 3, 21);
  const bloch::BlochFamily family(c);
  const Eigen::MatrixXd H = bloch::band_hessian_perturbative(family);
  Eigen::Vector2d dir(0.6, -0.8);
  for (double s : {1e-2, 5e-3, 2.5e-3}) {
    const double lam = bloch::lowest_band(family, BlochPoint(s * dir));
    const double quad = 0.5 * s * s * dir.dot(H * dir);
    CHECK(std::abs(lam - quad) < 50.0 * s * s * s * s + 1e-14);  // no odd or non-analytic terms
  }
}

TEST_CASE("Hessian examples") {
  SUBCASE("loop_z") {
    const bloch::BlochFamily f(presets::loop_z());
    CHECK(bloch::band_hessian_perturbative(f)(0, 0) == doctest::Approx(2.0).epsilon(1e-14));
    CHECK(std::abs(bloch::band_hessian_fd(f, 1e-3)(0, 0) - 2.0) < 1e-6);
  }
  SUBCASE("chain(2)") {
    const auto c = presets::chain(2);
    const bloch::BlochFamily f(c);
    CHECK(bloch::band_hessian_perturbative(f)(0, 0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(std::abs(bloch::band_hessian_fd(f, 1e-3)(0, 0) - 0.5) < 1e-6);
  }
  SUBCASE("grid_flat") {
    for (int n : {2, 4, 8}) {
      const auto c = presets::grid_flat(n);
      const bloch::BlochFamily f(c);
      CHECK((bloch::band_hessian_perturbative(f) - 2.0 * Eigen::Matrix2d::Identity()).norm() < 1e-10);
    }
  }
  SUBCASE("bad step") {
    const bloch::BlochFamily f(presets::loop_z());
    CHECK_THROWS_AS(bloch::band_hessian_fd(f, 0.0), ParameterError);
    CHECK_THROWS_AS(bloch::band_hessian_fd(f, 0.5), ParameterError);
  }
}

TEST_CASE("three Hessian routes agree with 2A") {
  for (const auto& c : sample_complexes()) {
    const bloch::BlochFamily f(c);
    const Eigen::MatrixXd twoA = 2.0 * hodge::effective_metric(c).A;
    const Eigen::MatrixXd pert = bloch::band_hessian_perturbative(f, Gauge::phase);
    const Eigen::MatrixXd harm = bloch::band_hessian_perturbative(f, Gauge::harmonic);
    const Eigen::MatrixXd first = bloch::band_hessian_harmonic_first_term(f);
    const Eigen::MatrixXd fd = bloch::band_hessian_fd(f, 1e-3);
    CHECK(rel(pert, twoA) < 1e-8);
    CHECK(rel(harm, twoA) < 1e-8);
    CHECK(rel(first, twoA) < 1e-8);
    CHECK(rel(fd, twoA) < 1e-8);
  }
}

TEST_CASE("first-order perturbation of constants vanishes only in the harmonic gauge") {
  const auto c = presets::chain(2, {1, 3});
  const bloch::BlochFamily f(c);
  const Eigen::VectorXd e = Eigen::VectorXd::Ones(1);
  CHECK(bloch::first_order_defect(f, e, Gauge::harmonic) <= 1e-12);
  CHECK(bloch::first_order_defect(f, e, Gauge::phase) > 0.1);
  for (const auto& other : sample_complexes()) {
    const bloch::BlochFamily g(other);
    for (int j = 0; j < other.rank(); ++j)
      CHECK(bloch::first_order_defect(g, Eigen::VectorXd::Unit(other.rank(), j), Gauge::harmonic) <= 1e-12);
  }
}

TEST_CASE("energy derivatives match finite differences of the assembled operator") {
  const auto c = presets::random_weights(2, 3, 8);
  const bloch::BlochFamily f(c);
  const Eigen::Vector2d dir(0.3, 0.9);
  const double h = 1e-4;
  for (Gauge g : {Gauge::phase, Gauge::harmonic}) {
    const Eigen::MatrixXcd Lp = Eigen::MatrixXcd(f.assemble(BlochPoint(h * dir), g).energy());
    const Eigen::MatrixXcd Lm = Eigen::MatrixXcd(f.assemble(BlochPoint(-h * dir), g).energy());
    const Eigen::MatrixXcd L0 = Eigen::MatrixXcd(f.assemble(BlochPoint(Eigen::Vector2d::Zero()), g).energy());
    const Eigen::MatrixXcd d1 = Eigen::MatrixXcd(f.energy_derivative(1, dir, g));
    const Eigen::MatrixXcd d2 = Eigen::MatrixXcd(f.energy_derivative(2, dir, g));
    CHECK(((Lp - Lm) / (2 * h) - d1).norm() < 1e-6 * (1.0 + d1.norm()));
    CHECK(((Lp - 2.0 * L0 + Lm) / (h * h) - d2).norm() < 1e-4 * (1.0 + d2.norm()));
  }
  CHECK_THROWS_AS(f.energy_derivative(3, dir), ParameterError);
}

TEST_CASE("gap scan examples") {
  const bloch::BlochFamily loop(presets::loop_z());
  const auto g = bloch::gap_scan(loop, 64, 0.5);
  CHECK(std::abs(g.epsilon - oracles::kGapLoop) < 1e-12);
  CHECK_FALSE(g.min_lambda2_inside.has_value());
  CHECK(g.note.find("m < 2") != std::string::npos);

  const bloch::BlochFamily chain(presets::chain(2));
  const auto gc = bloch::gap_scan(chain, 32, 0.5);
  REQUIRE(gc.min_lambda2_inside.has_value());
  CHECK(*gc.min_lambda2_inside > 3.0);
  CHECK(gc.epsilon > 0.0);

  const auto grid = presets::grid_flat(2);
  const bloch::BlochFamily gf(grid);
  const auto gg = bloch::gap_scan(gf, 16, 0.5);
  CHECK(gg.epsilon > 0.0);
  CHECK(gg.points_outside > 0);
  CHECK(gg.points_inside > 0);

  CHECK_THROWS_AS(bloch::gap_scan(loop, 0, 0.5), ParameterError);
  CHECK_THROWS_AS(bloch::gap_scan(loop, 8, 0.0), ParameterError);
}

TEST_CASE("assembly refuses non-generating complexes") {
  CHECK_THROWS_AS(bloch::BlochFamily(presets::loop_z(1, 1, 1, 2)), ValidationError);
}

TEST_CASE("iterative eigensolver agrees with the dense path") {
  const auto c = presets::random_weights(2, 6, 3);
  const bloch::BlochFamily f(c);
  const auto op = f.assemble(point({0.9, 0.2}));
  bloch::SpectrumOptions iterative;
  iterative.dense_threshold = 0;
  const auto dense = bloch::spectrum(op, 6);
  const auto krylov = bloch::spectrum(op, 6, iterative);
  CHECK(krylov.method != dense.method);
  CHECK((krylov.eigenvalues - dense.eigenvalues).cwiseAbs().maxCoeff() < 1e-9);
}
