#include <doctest.h>

#include <cmath>

#include "rqe/errors.hpp"
#include "rqe/vi_solver.hpp"

using namespace rqe;

namespace {

const RQEConfig kEntropy = RQEConfig::symmetric(NuKind::entropy, 2.0, PenaltyKind::scaled_sq_l2, 1.0);
const RQEConfig kQuad = RQEConfig::symmetric(NuKind::quadratic, 1.0, PenaltyKind::scaled_sq_l2, 1.0);

double max_dev_from_uniform(const JointStrategy& z) {
  return (z.stacked() - JointStrategy::uniform(z.dims()).stacked()).cwiseAbs().maxCoeff();
}

}  // namespace

TEST_CASE("zero game gives the uniform equilibrium quickly") {
  for (const RQEConfig& cfg : {kEntropy, kQuad}) {
    const SolveReport r = solve_rqe(BimatrixGame::zeros(3, 2), cfg, SolverOptions{});
    CHECK(r.converged);
    CHECK(r.iters <= 50);
    CHECK(r.residual <= 1e-8);
    CHECK(max_dev_from_uniform(r.z_star) <= 1e-12);
  }
  // Scaling payoffs to zero erases any dependence on the regularizer kind.
  CounterRng rng(2);
  BimatrixGame g = BimatrixGame::random(3, 3, rng);
  g.r1 *= 0.0;
  g.r2 *= 0.0;
  const RQEConfig barrier = RQEConfig::symmetric(NuKind::log_barrier, 2.0, PenaltyKind::scaled_sq_l2, 1.0);
  CHECK(max_dev_from_uniform(solve_rqe(g, barrier, SolverOptions{}).z_star) <= 1e-9);
}

TEST_CASE("matching pennies equilibrium is uniform") {
  BimatrixGame g;
  g.r1.resize(2, 2);
  g.r1 << 1, -1, -1, 1;
  g.r2 = -g.r1.transpose();
  const SolveReport r = solve_rqe(g, kEntropy, SolverOptions{});
  CHECK(r.converged);
  CHECK((r.z_star.pi1.vec() - Vector::Constant(2, 0.5)).norm() <= 1e-6);
  CHECK((r.z_star.pi2.vec() - Vector::Constant(2, 0.5)).norm() <= 1e-6);
  CHECK(verify_equilibrium(r.z_star, g, kEntropy, 1e-7).verified);
}

TEST_CASE("equilibrium does not depend on the starting point") {
  CounterRng rng(41);
  SolverOptions opts;
  opts.tol = 1e-10;
  for (GameDims d : {GameDims{2, 2}, GameDims{3, 3}, GameDims{4, 2}}) {
    for (int k = 0; k < 5; ++k) {
      const BimatrixGame g = BimatrixGame::random(d.a1, d.a2, rng);
      const SolveReport a = solve_rqe(g, kEntropy, opts);
      const SolveReport b = solve_rqe(g, kEntropy, opts, JointStrategy::random(d, rng, {1e-3}));
      REQUIRE(a.converged);
      REQUIRE(b.converged);
      CHECK((a.z_star.stacked() - b.z_star.stacked()).norm() <= 1e-6);
      CHECK(verify_equilibrium(a.z_star, g, kEntropy, 10 * opts.tol).verified);
    }
  }
}

TEST_CASE("solver is deterministic") {
  CounterRng rng(43);
  const BimatrixGame g = BimatrixGame::random(3, 2, rng);
  const SolveReport a = solve_rqe(g, kEntropy, SolverOptions{});
  const SolveReport b = solve_rqe(g, kEntropy, SolverOptions{});
  CHECK(a.iters == b.iters);
  CHECK(a.z_star.stacked() == b.z_star.stacked());
}

TEST_CASE("verify_equilibrium catches a wrong point") {
  const JointStrategy u = JointStrategy::uniform({2, 2});
  CHECK(verify_equilibrium(u, BimatrixGame::zeros(2, 2), kEntropy, 1e-9).verified);

  BimatrixGame g;
  g.r1.resize(2, 2);
  g.r1 << 3, 0, 1, 0;
  g.r2.resize(2, 2);
  g.r2 << 0, 2, 0, 0;
  const RQEConfig small = RQEConfig::symmetric(NuKind::entropy, 0.2, PenaltyKind::scaled_sq_l2, 1.0);
  const EquilibriumCheck chk = verify_equilibrium(u, g, small, 1e-6);
  CHECK_FALSE(chk.verified);
  CHECK(chk.worst_slack < -1e-6);
}

TEST_CASE("converged solves satisfy the variational inequality") {
  CounterRng rng(47);
  SolverOptions opts;
  for (int k = 0; k < 20; ++k) {
    const BimatrixGame g = BimatrixGame::random(3, 2, rng, -2.0, 2.0);
    const SolveReport r = solve_rqe(g, kEntropy, opts);
    REQUIRE(r.converged);
    CHECK(r.residual <= opts.tol);
    CHECK(std::abs(r.alpha_used - 1.5 + std::sqrt(0.5)) <= 1e-12);
    CHECK(natural_residual(r.z_star, g, kEntropy) == doctest::Approx(r.residual));
    CHECK(verify_equilibrium(r.z_star, g, kEntropy, 10 * opts.tol).verified);
  }
}

TEST_CASE("residual decays linearly") {
  CounterRng rng(53);
  SolverOptions opts;
  opts.tol = 1e-12;
  opts.record_trace = true;
  for (int k = 0; k < 5; ++k) {
    const BimatrixGame g = BimatrixGame::random(3, 3, rng);
    const SolveReport r = solve_rqe(g, kEntropy, opts);
    REQUIRE(r.trace.size() >= 20);
    const std::size_t n = std::min<std::size_t>(50, r.trace.size());
    // Least-squares slope of log residual against iteration.
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t j = r.trace.size() - n; j < r.trace.size(); ++j) {
      const double x = static_cast<double>(r.trace[j].iter), y = std::log(r.trace[j].residual);
      sx += x, sy += y, sxx += x * x, sxy += x * y;
    }
    const double dn = static_cast<double>(n);
    const double slope = (dn * sxy - sx * sy) / (dn * sxx - sx * sx);
    CHECK(std::exp(slope) < 1.0);
  }
}

TEST_CASE("iteration budget exhaustion returns the best iterate") {
  CounterRng rng(59);
  const BimatrixGame g = BimatrixGame::random(3, 3, rng);
  SolverOptions opts;
  opts.max_iters = 2;
  opts.tol = 1e-14;
  const SolveReport r = solve_rqe(g, kEntropy, opts);
  CHECK_FALSE(r.converged);
  CHECK(r.residual == doctest::Approx(natural_residual(r.z_star, g, kEntropy)));
  SolverOptions bad;
  bad.backtrack = 1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("uncertified configuration still runs but is flagged") {
  CounterRng rng(61);
  const BimatrixGame g = BimatrixGame::random(2, 2, rng);
  const RQEConfig weak = RQEConfig::symmetric(NuKind::entropy, 0.1, PenaltyKind::scaled_sq_l2, 1.0);
  SolverOptions opts;
  opts.max_iters = 2000;
  const SolveReport r = solve_rqe(g, weak, opts);
  CHECK_FALSE(r.monotone);
}

TEST_CASE("best response minimizes f against a fixed opponent") {
  CounterRng rng(67);
  for (int k = 0; k < 10; ++k) {
    const BimatrixGame g = BimatrixGame::random(3, 3, rng);
    const SimplexVec opp = random_simplex(3, rng);
    const SimplexVec br = best_response(Player::one, opp, g, kEntropy, SolverOptions{});
    const double top = f_value(Player::one, br, opp, g, kEntropy);
    for (int t = 0; t < 200; ++t) {
      const SimplexVec other = project_interior(random_simplex(3, rng).vec(), {1e-9});
      CHECK(f_value(Player::one, other, opp, g, kEntropy) >= top - 1e-9);
    }
  }
  // At an equilibrium each strategy is a best response to the other.
  const BimatrixGame g = BimatrixGame::random(2, 3, rng);
  const SolveReport r = solve_rqe(g, kEntropy, SolverOptions{});
  const SimplexVec br2 = best_response(Player::two, r.z_star.pi1, g, kEntropy, SolverOptions{});
  CHECK((br2.vec() - r.z_star.pi2.vec()).norm() <= 1e-5);
}

TEST_CASE("Lipschitz probe respects the bound") {
  CounterRng rng(71);
  const BimatrixGame g = BimatrixGame::random(2, 2, rng);
  const LipschitzProbe same = lipschitz_probe(g, g, kEntropy, SolverOptions{});
  CHECK_FALSE(same.ratio.has_value());
  CHECK(same.solution_gap <= 2 * SolverOptions{}.tol);

  BimatrixGame h = g;
  h.r1(0, 1) += 1e-3;
  const LipschitzProbe one = lipschitz_probe(g, h, kEntropy, SolverOptions{});
  CHECK(one.bound == doctest::Approx(2 * (2 * std::sqrt(2.0)) * 1e-3 / (1.5 - std::sqrt(0.5))));
  CHECK(one.solution_gap <= 3.567e-3);
  CHECK(*one.ratio <= 1.0);

  for (int k = 0; k < 20; ++k) {
    const BimatrixGame a = BimatrixGame::random(2, 2, rng);
    BimatrixGame b = a;
    for (Eigen::Index i = 0; i < 2; ++i)
      for (Eigen::Index j = 0; j < 2; ++j) {
        b.r1(i, j) += rng.uniform(-0.1, 0.1);
        b.r2(i, j) += rng.uniform(-0.1, 0.1);
      }
    const LipschitzProbe p = lipschitz_probe(a, b, kEntropy, SolverOptions{});
    CHECK(p.both_converged);
    CHECK(*p.ratio <= 1.0);
  }
  CHECK_THROWS_AS(lipschitz_probe(g, g, RQEConfig::symmetric(NuKind::entropy, 0.1, PenaltyKind::scaled_sq_l2, 1.0),
                                  SolverOptions{}),
                  ContractViolation);
}
