#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "rqe/normal_form.hpp"

namespace rqe {

struct SolverOptions {
  std::size_t max_iters = 100000;
  double tol = 1e-8;        // natural-residual threshold
  double step0 = 1.0;       // initial extragradient step
  double backtrack = 0.5;   // step shrink factor on a failed ratio test
  std::uint64_t seed = 0;
  bool record_trace = false;

  void validate() const;
};

struct IterationRecord {
  std::size_t iter = 0;
  double residual = 0.0;
  double step = 0.0;
  double j1 = 0.0;
  double j2 = 0.0;
};

struct SolveReport {
  JointStrategy z_star;
  double residual = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  double alpha_used = 0.0;
  // False when the monotonicity modulus is not positive: the solver still runs
  // but uniqueness and convergence are not guaranteed.
  bool monotone = true;
  std::size_t restarts = 0;
  std::vector<IterationRecord> trace;
};

// Natural residual ||z - Proj(z - F(z))||_2 over the floored product of
// simplices.
double natural_residual(const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg);

// Extragradient on the floored product of simplices, starting from the
// all-uniform point.
SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts);
SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts,
                      const JointStrategy& init);
// As above, with a known monotonicity modulus (skips certification).
SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts,
                      const JointStrategy& init, double alpha);

struct EquilibriumCheck {
  bool verified = false;
  // min over blocks of (min_a F_a - F'z_block); >= -tol when verified.
  double worst_slack = 0.0;
};

// Checks min over the product of simplices of (z - z*)'F(z*) >= -tol. The
// expression is linear in z, so the minimum is attained blockwise at vertices.
EquilibriumCheck verify_equilibrium(const JointStrategy& z_star, const BimatrixGame& game, const RQEConfig& cfg,
                                    double tol);

// argmin over pi_i of f_i(pi_i, pi_{-i}) with the opponent held fixed.
// Projected gradient descent on the strongly convex objective.
SimplexVec best_response(Player i, const SimplexVec& opponent, const BimatrixGame& game, const RQEConfig& cfg,
                         const SolverOptions& opts);

struct LipschitzProbe {
  double payoff_gap = 0.0;   // ||R - R'||_inf over both matrices
  double solution_gap = 0.0; // ||z* - z'||_2
  double bound = 0.0;        // 2 (sqrt|A1| + sqrt|A2|) ||R - R'||_inf / alpha
  std::optional<double> ratio;  // empty when payoff_gap == 0
  double alpha = 0.0;
  bool both_converged = false;
};

double payoff_sup_distance(const BimatrixGame& a, const BimatrixGame& b);

// Solves both games and compares the equilibria against the Lipschitz bound.
// Throws ContractViolation for identical games whose solutions differ by
// more than 2 tol.
LipschitzProbe lipschitz_probe(const BimatrixGame& game, const BimatrixGame& perturbed, const RQEConfig& cfg,
                               const SolverOptions& opts);

}  // namespace rqe
