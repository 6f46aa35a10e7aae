#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "rqe/errors.hpp"
#include "rqe/simplex.hpp"

using namespace rqe;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index k = 0;
  for (double x : xs) v(k++) = x;
  return v;
}

void require_on_simplex(const SimplexVec& p) {
  CHECK(p.vec().minCoeff() >= 0.0);
  CHECK(std::abs(p.vec().sum() - 1.0) <= kSimplexSumTol);
}

}  // namespace

TEST_CASE("project_simplex examples") {
  CHECK((project_simplex(vec({0.2, 0.8})).vec() - vec({0.2, 0.8})).norm() < 1e-15);
  CHECK((project_simplex(vec({0.5, 0.5, 0.5})).vec() - Vector::Constant(3, 1.0 / 3.0)).norm() < 1e-15);

  // Grid oracle at 1e-4 resolution.
  for (const Vector& x : {vec({2.0, 0.0}), vec({-0.5, 0.5}), vec({0.3, 1.9}), vec({0.1, 0.2})}) {
    const Vector grid = oracle::grid_project_2(x, 1e-4);
    CHECK((project_simplex(x).vec() - grid).cwiseAbs().maxCoeff() <= 1e-4);
  }
  CHECK(project_simplex(vec({2.0, 0.0})).vec().isApprox(vec({1.0, 0.0})));
  CHECK(project_simplex(vec({-0.5, 0.5})).vec().isApprox(vec({0.0, 1.0})));
}

TEST_CASE("project_simplex rejects bad input") {
  CHECK_THROWS_AS(project_simplex(vec({1.0, NAN})), DomainError);
  CHECK_THROWS_AS(project_simplex(vec({INFINITY, 0.0})), DomainError);
  CHECK_THROWS_AS(project_simplex(Vector()), DomainError);
}

TEST_CASE("project_interior examples") {
  const Vector a = project_interior(vec({1.0, 0.0}), {0.1}).vec();
  CHECK((a - oracle::grid_project_2(vec({1.0, 0.0}), 1e-4, 0.1)).cwiseAbs().maxCoeff() <= 1e-4);
  CHECK(a.isApprox(vec({0.9, 0.1})));
  CHECK(project_interior(vec({0.5, 0.5}), {0.1}).vec().isApprox(vec({0.5, 0.5})));
  CHECK(project_interior(vec({0.7, 0.3}), {0.0}).vec() == project_simplex(vec({0.7, 0.3})).vec());
  CHECK_THROWS_AS(project_interior(vec({0.5, 0.5}), {0.5}), ConfigError);
  CHECK_THROWS_AS(project_interior(vec({0.5, 0.5, 0.0}), {0.4}), ConfigError);
}

TEST_CASE("projection properties on random inputs") {
  CounterRng rng(11);
  for (int trial = 0; trial < 500; ++trial) {
    const Eigen::Index n = 1 + static_cast<Eigen::Index>(rng.next_u64() % 7);
    Vector x(n), y(n);
    for (Eigen::Index k = 0; k < n; ++k) {
      x(k) = rng.uniform(-3.0, 3.0);
      y(k) = rng.uniform(-3.0, 3.0);
    }
    const SimplexVec px = project_simplex(x);
    const SimplexVec py = project_simplex(y);
    require_on_simplex(px);
    // Idempotent.
    CHECK((project_simplex(px.vec()).vec() - px.vec()).cwiseAbs().maxCoeff() <= 1e-12);
    // Nonexpansive.
    CHECK((px.vec() - py.vec()).norm() <= (x - y).norm() + 1e-12);

    const double delta = 0.5 / static_cast<double>(n) * rng.uniform();
    const SimplexVec fx = project_interior(x, {delta});
    require_on_simplex(fx);
    CHECK(fx.min_entry() >= delta - 1e-15);
  }
}

TEST_CASE("random_simplex") {
  CHECK(random_simplex(1, 123).vec() == vec({1.0}));
  CHECK(random_simplex(3, 7).vec() == random_simplex(3, 7).vec());
  CHECK(random_simplex(3, 7).vec() != random_simplex(3, 8).vec());
  CHECK_THROWS_AS(random_simplex(0, 1), DomainError);

  CounterRng rng(1);
  double sum = 0.0, sum_sq = 0.0;
  const int draws = 100000;
  for (int k = 0; k < draws; ++k) {
    const SimplexVec p = random_simplex(2, rng);
    require_on_simplex(p);
    sum += p[0];
    sum_sq += p[0] * p[0];
  }
  const double mean = sum / draws;
  CHECK(std::abs(mean - 0.5) <= 0.51);
  // On the 2-simplex the first coordinate is Uniform(0, 1): mean 1/2, variance 1/12.
  CHECK(std::abs(mean - 0.5) <= 0.005);
  CHECK(std::abs(sum_sq / draws - mean * mean - 1.0 / 12.0) <= 0.005);
}

TEST_CASE("counter rng substreams are independent and reproducible") {
  const CounterRng root(42);
  CounterRng a = root.substream("instances");
  CounterRng b = root.substream("instances");
  CounterRng c = root.substream("restarts");
  const auto x = a.next_u64();
  CHECK(x == b.next_u64());
  CHECK(x != c.next_u64());
  CHECK(root.substream(std::uint64_t{0}).substream(std::uint64_t{1}).next_u64() !=
        root.substream(std::uint64_t{1}).substream(std::uint64_t{0}).next_u64());
}

TEST_CASE("SimplexVec::from_weights renormalizes external data") {
  const SimplexVec p = SimplexVec::from_weights(vec({2.0, 6.0}));
  CHECK(p.vec().isApprox(vec({0.25, 0.75})));
  CHECK_THROWS_AS(SimplexVec::from_weights(vec({1.0, -1.0})), DomainError);
  CHECK_THROWS_AS(SimplexVec::from_weights(vec({0.0, 0.0})), DomainError);
  CHECK(SimplexVec().size() == 1);
}
