#include "periodic_heat/errors.hpp"
#include "periodic_heat/hodge.hpp"
#include "periodic_heat/presets.hpp"
#include "periodic_heat/walk.hpp"

#include <doctest.h>

#include <cmath>
#include <numeric>

using namespace periodic_heat;

namespace {

LatticeVector lv(std::initializer_list<int> xs) {
  LatticeVector v(static_cast<Eigen::Index>(xs.size()));
  int i = 0;
  for (int x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("loop_z walk is a difference of Poisson counts") {
  const auto c = presets::loop_z();
  const double t = 100.0;
  const auto s = walk::sample_displacements(c, t, 100000, 7);
  REQUIRE(s.displacements.rows() == 100000);
  const auto rep = walk::covariance_check(s, hodge::effective_metric(c));
  CHECK(rep.expected(0, 0) == doctest::Approx(200.0));
  CHECK(rep.pass);
  CHECK(std::abs(rep.z(0, 0)) <= 4.0);
  CHECK(std::abs(rep.mean_z[0]) <= 4.0);
  CHECK(std::abs(rep.mean[0]) < 4.0 * std::sqrt(200.0 / 1e5));

  const double mean_jumps = std::accumulate(s.jumps.begin(), s.jumps.end(), 0.0) / s.jumps.size();
  CHECK(walk::expected_jumps(c, t) == doctest::Approx(200.0));
  CHECK(std::abs(mean_jumps - 200.0) < 4.0 * std::sqrt(200.0 / 1e5));
}

TEST_CASE("chain(2) covariance recovers A = 1/4") {
  const auto c = presets::chain(2);
  const double t = 400.0;
  const auto s = walk::sample_displacements(c, t, 200000, 3);
  const auto rep = walk::covariance_check(s, hodge::effective_metric(c));
  CHECK(rep.pass);
  CHECK(rep.covariance(0, 0) / (2 * t) == doctest::Approx(0.25).epsilon(0.05));
}

TEST_CASE("grid_flat covariance is 2t times identity") {
  const auto c = presets::grid_flat(2);
  const double t = 20.0;
  const auto s = walk::sample_displacements(c, t, 20000, 5);
  const auto rep = walk::covariance_check(s, hodge::effective_metric(c));
  CHECK(rep.pass);
  CHECK((rep.expected - 2.0 * t * Eigen::Matrix2d::Identity()).norm() < 1e-8);
}

TEST_CASE("sampling is deterministic per seed") {
  const auto c = presets::random_weights(2, 3, 4);
  const auto a = walk::sample_displacements(c, 5.0, 2000, 42);
  const auto b = walk::sample_displacements(c, 5.0, 2000, 42);
  const auto d = walk::sample_displacements(c, 5.0, 2000, 43);
  CHECK(a.displacements == b.displacements);
  CHECK(a.jumps == b.jumps);
  CHECK_FALSE(a.displacements == d.displacements);
  // a prefix of a longer run is the shorter run
  const auto longer = walk::sample_displacements(c, 5.0, 3000, 42);
  CHECK(longer.displacements.topRows(2000) == a.displacements);
}

TEST_CASE("two seeds agree statistically") {
  const auto c = presets::chain(3, {1, 2, 3});
  const auto a = walk::sample_displacements(c, 50.0, 20000, 1);
  const auto b = walk::sample_displacements(c, 50.0, 20000, 2);
  CHECK(walk::covariance_difference_z(a, b).cwiseAbs().maxCoeff() <= 4.0);
}

TEST_CASE("walk parameter checks") {
  const auto c = presets::loop_z();
  CHECK_THROWS_AS(walk::sample_displacements(c, 0.0, 10, 1), ParameterError);
  CHECK_THROWS_AS(walk::sample_displacements(c, 1.0, 0, 1), ParameterError);
  const auto small = walk::sample_displacements(c, 1.0, 100, 1);
  CHECK_THROWS_AS(walk::covariance_check(small, hodge::effective_metric(c)), ParameterError);
}

TEST_CASE("stable norm examples") {
  SUBCASE("loop_z") {
    const auto est = walk::stable_norm(presets::loop_z(), lv({1}), 16);
    for (std::size_t i = 0; i < est.n.size(); ++i) CHECK(est.d[i] == est.n[i]);
    CHECK(est.norm == 1.0);
    CHECK(est.c_est == 0.0);
  }
  SUBCASE("chain(2)") {
    const auto est = walk::stable_norm(presets::chain(2), lv({1}), 16);
    for (std::size_t i = 0; i < est.n.size(); ++i) CHECK(est.d[i] == 2.0 * est.n[i]);
    CHECK(est.norm == 2.0);
  }
  SUBCASE("grid_flat is l1, not the effective metric") {
    const auto c = presets::grid_flat(4);
    const auto est = walk::stable_norm(c, lv({1, 1}), 16);
    CHECK(est.norm == 2.0);
    CHECK(est.subadditive);
    CHECK(est.pairs_checked > 0);
    const auto m = hodge::effective_metric(c);
    CHECK(std::sqrt(m.norm2(Eigen::Vector2d(1, 1))) == doctest::Approx(std::sqrt(2.0)));
  }
  SUBCASE("|d_n - n norm| stays within the reported constant") {
    const auto c = presets::random_weights(2, 3, 8);
    const auto est = walk::stable_norm(c, lv({2, -1}), 32);
    CHECK(est.subadditive);
    for (std::size_t i = 0; i < est.n.size(); ++i) CHECK(std::abs(est.d[i] - est.n[i] * est.norm) <= est.c_est + 1e-12);
    CHECK(est.error_bar == doctest::Approx(est.c_est / 32));
  }
}

TEST_CASE("stable norm is homogeneous and symmetric") {
  const auto c = presets::random_weights(2, 3, 9);
  const double base = walk::stable_norm(c, lv({1, 2}), 32).norm;
  const double twice = walk::stable_norm(c, lv({2, 4}), 16).norm;
  const double neg = walk::stable_norm(c, lv({-1, -2}), 32).norm;
  CHECK(twice == doctest::Approx(2.0 * base).epsilon(0.05));
  CHECK(neg == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("translation distance and parameter checks") {
  CHECK(walk::translation_distance(presets::grid_flat(4), lv({1, 0})) == doctest::Approx(1.0));
  CHECK(walk::translation_distance(presets::chain(2, {}, {}, {1, 5}), lv({1})) == doctest::Approx(6.0));
  CHECK_THROWS_AS(walk::stable_norm(presets::loop_z(), lv({0}), 4), ParameterError);
  CHECK_THROWS_AS(walk::stable_norm(presets::loop_z(), lv({1}), 6), ParameterError);
  walk::StableNormOptions tiny;
  tiny.max_nodes = 10;
  CHECK_THROWS_AS(walk::translation_distance(presets::grid_flat(8), lv({4, 4}), tiny), ResourceError);
}
