#include "rqe/vi_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rqe/errors.hpp"

namespace rqe {

namespace {

constexpr double kRatioTest = 0.9;
constexpr double kStepGrowth = 1.25;
constexpr std::size_t kStallWindow = 200;
constexpr double kStallFactor = 0.999;
constexpr std::size_t kMaxRestarts = 10;

Vector project_blocks(const Vector& z, GameDims dims, InteriorFloor floor) {
  const StackLayout lay(dims);
  const auto n1 = static_cast<Eigen::Index>(dims.a1);
  const auto n2 = static_cast<Eigen::Index>(dims.a2);
  Vector out(z.size());
  out.segment(lay.pi1(), n1) = project_interior(z.segment(lay.pi1(), n1), floor).vec();
  out.segment(lay.pi2(), n2) = project_interior(z.segment(lay.pi2(), n2), floor).vec();
  out.segment(lay.p1(), n2) = project_interior(z.segment(lay.p1(), n2), floor).vec();
  out.segment(lay.p2(), n1) = project_interior(z.segment(lay.p2(), n1), floor).vec();
  return out;
}

JointStrategy to_joint(const Vector& z, GameDims dims) {
  const StackLayout lay(dims);
  const auto n1 = static_cast<Eigen::Index>(dims.a1);
  const auto n2 = static_cast<Eigen::Index>(dims.a2);
  return {make_simplex_unchecked(z.segment(lay.pi1(), n1)), make_simplex_unchecked(z.segment(lay.pi2(), n2)),
          make_simplex_unchecked(z.segment(lay.p1(), n2)), make_simplex_unchecked(z.segment(lay.p2(), n1))};
}

double residual_at(const Vector& z, const Vector& Fz, GameDims dims, InteriorFloor floor) {
  return (z - project_blocks(z - Fz, dims, floor)).norm();
}

}  // namespace

void SolverOptions::validate() const {
  if (!(tol > 0.0)) throw ConfigError("solver tolerance must be positive");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw ConfigError("backtrack ratio must lie in (0, 1)");
  if (!(step0 > 0.0)) throw ConfigError("initial step must be positive");
}

double natural_residual(const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg) {
  const Vector zs = z.stacked();
  return residual_at(zs, operator_F(zs, game, cfg), game.dims(), cfg.floor);
}

SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts) {
  return solve_rqe(game, cfg, opts, JointStrategy::uniform(game.dims()));
}

SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts,
                      const JointStrategy& init) {
  const MonotonicityCertificate cert = certify_alpha(game.dims(), cfg, opts.seed, 8);
  return solve_rqe(game, cfg, opts, init, cert.alpha);
}

SolveReport solve_rqe(const BimatrixGame& game, const RQEConfig& cfg, const SolverOptions& opts,
                      const JointStrategy& init, double alpha) {
  game.validate();
  opts.validate();
  const GameDims dims = game.dims();
  cfg.validate(dims);
  if (init.dims().a1 != dims.a1 || init.dims().a2 != dims.a2 || init.p1.size() != dims.a2 ||
      init.p2.size() != dims.a1)
    throw DomainError("solve_rqe: initial point does not match the game");

  SolveReport report;
  report.z_star = init;
  report.alpha_used = alpha;
  report.monotone = alpha > 0.0;

  Vector z = project_blocks(init.stacked(), dims, cfg.floor);
  Vector Fz = operator_F(z, game, cfg);
  double res = residual_at(z, Fz, dims, cfg.floor);
  double eta = opts.step0;

  Vector best = z;
  double best_res = res;
  double window_res = res;
  std::size_t window_start = 0;

  std::size_t k = 0;
  for (;; ++k) {
    if (opts.record_trace) {
      const JointStrategy zj = to_joint(z, dims);
      report.trace.push_back({k, res, eta, objective_J(Player::one, zj, game, cfg),
                              objective_J(Player::two, zj, game, cfg)});
    }
    if (res < best_res) {
      best = z;
      best_res = res;
    }
    if (res <= opts.tol || k >= opts.max_iters) break;

    Vector y, Fy;
    for (;;) {
      y = project_blocks(z - eta * Fz, dims, cfg.floor);
      Fy = operator_F(y, game, cfg);
      const double dy = (y - z).norm();
      if (dy == 0.0 || eta * (Fy - Fz).norm() <= kRatioTest * dy) break;
      eta *= opts.backtrack;
    }
    z = project_blocks(z - eta * Fy, dims, cfg.floor);
    Fz = operator_F(z, game, cfg);
    res = residual_at(z, Fz, dims, cfg.floor);
    eta *= kStepGrowth;

    if (k + 1 - window_start >= kStallWindow) {
      if (res > kStallFactor * window_res && report.restarts < kMaxRestarts) {
        eta *= 0.5;
        ++report.restarts;
      }
      window_res = res;
      window_start = k + 1;
    }
  }

  report.iters = k;
  report.residual = best_res;
  report.converged = best_res <= opts.tol;
  report.z_star = to_joint(best, dims);
  return report;
}

EquilibriumCheck verify_equilibrium(const JointStrategy& z_star, const BimatrixGame& game, const RQEConfig& cfg,
                                    double tol) {
  const GameDims dims = game.dims();
  const Vector z = z_star.stacked();
  const Vector F = operator_F(z_star, game, cfg);
  const StackLayout lay(dims);
  const auto n1 = static_cast<Eigen::Index>(dims.a1);
  const auto n2 = static_cast<Eigen::Index>(dims.a2);

  double worst = std::numeric_limits<double>::infinity();
  auto check_block = [&](Eigen::Index off, Eigen::Index n) {
    const auto Fb = F.segment(off, n);
    worst = std::min(worst, Fb.minCoeff() - Fb.dot(z.segment(off, n)));
  };
  check_block(lay.pi1(), n1);
  check_block(lay.pi2(), n2);
  check_block(lay.p1(), n2);
  check_block(lay.p2(), n1);
  return {worst >= -tol, worst};
}

SimplexVec best_response(Player i, const SimplexVec& opponent, const BimatrixGame& game, const RQEConfig& cfg,
                         const SolverOptions& opts) {
  opts.validate();
  const GameDims dims = game.dims();
  cfg.validate(dims);
  const std::size_t n = i == Player::one ? dims.a1 : dims.a2;
  if (opponent.size() != (i == Player::one ? dims.a2 : dims.a1))
    throw DomainError("best_response: opponent strategy does not match the game");
  const PlayerConfig& pc = cfg.of(i);
  const Matrix& R = game.payoff(i);

  auto cost = [&](const SimplexVec& pi) {
    return i == Player::one ? f_value(i, pi, opponent, game, cfg) : f_value(i, opponent, pi, game, cfg);
  };
  // Danskin: the inner argmax is unique, so grad f_i = -R p* + eps grad nu.
  auto grad = [&](const SimplexVec& pi) -> Vector {
    const SimplexVec p = i == Player::one ? inner_argmax(i, pi, opponent, game, cfg)
                                          : inner_argmax(i, opponent, pi, game, cfg);
    return -R * p.vec() + pc.reg.epsilon * nu_grad(pc.reg, pi);
  };

  SimplexVec pi = SimplexVec::uniform(n);
  double t = opts.step0;
  for (std::size_t k = 0; k < opts.max_iters; ++k) {
    const Vector g = grad(pi);
    if ((pi.vec() - project_interior(pi.vec() - g, cfg.floor).vec()).norm() <= opts.tol) break;
    const double f0 = cost(pi);
    for (;;) {
      SimplexVec cand = project_interior(pi.vec() - t * g, cfg.floor);
      const Vector d = cand.vec() - pi.vec();
      if (d.squaredNorm() == 0.0) break;
      if (cost(cand) <= f0 + g.dot(d) + d.squaredNorm() / (2.0 * t)) {
        pi = std::move(cand);
        break;
      }
      t *= opts.backtrack;
    }
    t *= 2.0;
  }
  return pi;
}

double payoff_sup_distance(const BimatrixGame& a, const BimatrixGame& b) {
  if (a.r1.rows() != b.r1.rows() || a.r1.cols() != b.r1.cols() || a.r2.rows() != b.r2.rows() ||
      a.r2.cols() != b.r2.cols())
    throw DomainError("payoff_sup_distance: games have different dimensions");
  return std::max((a.r1 - b.r1).cwiseAbs().maxCoeff(), (a.r2 - b.r2).cwiseAbs().maxCoeff());
}

LipschitzProbe lipschitz_probe(const BimatrixGame& game, const BimatrixGame& perturbed, const RQEConfig& cfg,
                               const SolverOptions& opts) {
  const GameDims dims = game.dims();
  const MonotonicityCertificate cert = certify_alpha(dims, cfg, opts.seed);
  if (!cert.certified) throw ContractViolation("lipschitz_probe needs a certified monotonicity modulus");

  LipschitzProbe out;
  out.alpha = cert.alpha;
  out.payoff_gap = payoff_sup_distance(game, perturbed);
  const JointStrategy init = JointStrategy::uniform(dims);
  const SolveReport a = solve_rqe(game, cfg, opts, init, cert.alpha);
  const SolveReport b = solve_rqe(perturbed, cfg, opts, init, cert.alpha);
  out.both_converged = a.converged && b.converged;
  out.solution_gap = (a.z_star.stacked() - b.z_star.stacked()).norm();
  const double scale = 2.0 * (std::sqrt(static_cast<double>(dims.a1)) + std::sqrt(static_cast<double>(dims.a2)));
  out.bound = scale * out.payoff_gap / cert.alpha;
  if (out.payoff_gap == 0.0) {
    if (out.solution_gap > 2.0 * opts.tol)
      throw ContractViolation("identical games produced different equilibria (gap " +
                              std::to_string(out.solution_gap) + ")");
    return out;
  }
  out.ratio = out.solution_gap / out.bound;
  return out;
}

}  // namespace rqe
