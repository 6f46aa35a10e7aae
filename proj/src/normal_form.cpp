#include "rqe/normal_form.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rqe/errors.hpp"
#include "rqe/vi_solver.hpp"

namespace rqe {

namespace {

struct Blocks {
  Vector pi1, pi2, p1, p2;

  const Vector& strategy(Player p) const { return p == Player::one ? pi1 : pi2; }
  const Vector& belief(Player p) const { return p == Player::one ? p1 : p2; }
};

Blocks split(const Vector& z, GameDims dims) {
  const StackLayout lay(dims);
  if (z.size() != lay.size())
    throw DomainError("stacked joint strategy has length " + std::to_string(z.size()) + ", expected " +
                      std::to_string(lay.size()));
  const auto n1 = static_cast<Eigen::Index>(dims.a1);
  const auto n2 = static_cast<Eigen::Index>(dims.a2);
  return {z.segment(lay.pi1(), n1), z.segment(lay.pi2(), n2), z.segment(lay.p1(), n2), z.segment(lay.p2(), n1)};
}

void check_dims(const JointStrategy& z, const BimatrixGame& game) {
  const GameDims g = game.dims();
  if (z.pi1.size() != g.a1 || z.pi2.size() != g.a2 || z.p1.size() != g.a2 || z.p2.size() != g.a1)
    throw DomainError("joint strategy dimensions do not match the game");
}

double lambda_min_2x2(double a, double b, double d) {
  return 0.5 * (a + d) - std::sqrt(0.25 * (a - d) * (a - d) + b * b);
}

}  // namespace

void BimatrixGame::validate() const {
  if (r1.rows() == 0 || r1.cols() == 0) throw DomainError("R1 must have at least one row and column");
  if (r2.rows() != r1.cols() || r2.cols() != r1.rows())
    throw DomainError("R2 must be |A2| x |A1| = " + std::to_string(r1.cols()) + "x" + std::to_string(r1.rows()) +
                      ", got " + std::to_string(r2.rows()) + "x" + std::to_string(r2.cols()));
  if (!r1.allFinite()) throw DomainError("R1 has non-finite entries");
  if (!r2.allFinite()) throw DomainError("R2 has non-finite entries");
}

BimatrixGame BimatrixGame::zeros(std::size_t a1, std::size_t a2) {
  const auto n1 = static_cast<Eigen::Index>(a1);
  const auto n2 = static_cast<Eigen::Index>(a2);
  return {Matrix::Zero(n1, n2), Matrix::Zero(n2, n1)};
}

BimatrixGame BimatrixGame::random(std::size_t a1, std::size_t a2, CounterRng& rng, double lo, double hi) {
  BimatrixGame g = zeros(a1, a2);
  for (Eigen::Index m = 0; m < g.r1.rows(); ++m)
    for (Eigen::Index n = 0; n < g.r1.cols(); ++n) g.r1(m, n) = rng.uniform(lo, hi);
  for (Eigen::Index m = 0; m < g.r2.rows(); ++m)
    for (Eigen::Index n = 0; n < g.r2.cols(); ++n) g.r2(m, n) = rng.uniform(lo, hi);
  return g;
}

void RQEConfig::validate(GameDims dims) const {
  for (const auto& pc : players) {
    rqe::validate(pc.reg);
    rqe::validate(pc.pen);
  }
  floor.check(std::max(dims.a1, dims.a2));
}

RQEConfig RQEConfig::symmetric(NuKind nu, double epsilon, PenaltyKind pen, double c, double delta) {
  RQEConfig cfg;
  for (auto& pc : cfg.players) {
    pc.reg = {nu, epsilon};
    pc.pen = {pen, c};
  }
  cfg.floor = {delta};
  return cfg;
}

Vector JointStrategy::stacked() const {
  const StackLayout lay(dims());
  Vector z(lay.size());
  z << pi1.vec(), pi2.vec(), p1.vec(), p2.vec();
  return z;
}

JointStrategy JointStrategy::from_stacked(GameDims dims, const Vector& z, InteriorFloor floor) {
  const Blocks b = split(z, dims);
  return {project_interior(b.pi1, floor), project_interior(b.pi2, floor), project_interior(b.p1, floor),
          project_interior(b.p2, floor)};
}

JointStrategy JointStrategy::uniform(GameDims dims) {
  return {SimplexVec::uniform(dims.a1), SimplexVec::uniform(dims.a2), SimplexVec::uniform(dims.a2),
          SimplexVec::uniform(dims.a1)};
}

JointStrategy JointStrategy::random(GameDims dims, CounterRng& rng, InteriorFloor floor) {
  auto draw = [&](std::size_t n) { return project_interior(random_simplex(n, rng).vec(), floor); };
  SimplexVec a = draw(dims.a1);
  SimplexVec b = draw(dims.a2);
  SimplexVec c = draw(dims.a2);
  SimplexVec d = draw(dims.a1);
  return {std::move(a), std::move(b), std::move(c), std::move(d)};
}

double objective_J(Player i, const Vector& z, const BimatrixGame& game, const RQEConfig& cfg) {
  const Blocks b = split(z, game.dims());
  const PlayerConfig& pc = cfg.of(i);
  const Vector& pi = b.strategy(i);
  const Vector& p = b.belief(i);
  return -pi.dot(game.payoff(i) * p) - d_value(pc.pen, p, b.strategy(other(i))) +
         pc.reg.epsilon * nu_value(pc.reg, pi);
}

double objective_J(Player i, const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg) {
  check_dims(z, game);
  return objective_J(i, z.stacked(), game, cfg);
}

double objective_Jbar(Player i, const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg) {
  return -objective_J(i, z, game, cfg);
}

Vector operator_F(const Vector& z, const BimatrixGame& game, const RQEConfig& cfg) {
  const GameDims dims = game.dims();
  const Blocks b = split(z, dims);
  const StackLayout lay(dims);
  const auto n1 = static_cast<Eigen::Index>(dims.a1);
  const auto n2 = static_cast<Eigen::Index>(dims.a2);
  const PlayerConfig& c1 = cfg.of(Player::one);
  const PlayerConfig& c2 = cfg.of(Player::two);

  Vector F(lay.size());
  F.segment(lay.pi1(), n1) = -game.r1 * b.p1 + c1.reg.epsilon * nu_grad(c1.reg, b.pi1);
  F.segment(lay.pi2(), n2) = -game.r2 * b.p2 + c2.reg.epsilon * nu_grad(c2.reg, b.pi2);
  F.segment(lay.p1(), n2) = game.r1.transpose() * b.pi1 + d_grad_p(c1.pen, b.p1, b.pi2);
  F.segment(lay.p2(), n1) = game.r2.transpose() * b.pi2 + d_grad_p(c2.pen, b.p2, b.pi1);
  return F;
}

Vector operator_F(const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg) {
  check_dims(z, game);
  return operator_F(z.stacked(), game, cfg);
}

SimplexVec inner_argmax(Player i, const SimplexVec& pi1, const SimplexVec& pi2, const BimatrixGame& game,
                        const RQEConfig& cfg) {
  const SimplexVec& own = i == Player::one ? pi1 : pi2;
  const SimplexVec& opp = i == Player::one ? pi2 : pi1;
  const Matrix& R = game.payoff(i);
  if (R.rows() != static_cast<Eigen::Index>(own.size()) || R.cols() != static_cast<Eigen::Index>(opp.size()))
    throw DomainError("strategy dimensions do not match the game");
  return d_inner_argmax(cfg.of(i).pen, R.transpose() * own.vec(), opp);
}

double f_value(Player i, const SimplexVec& pi1, const SimplexVec& pi2, const BimatrixGame& game,
               const RQEConfig& cfg) {
  const SimplexVec p = inner_argmax(i, pi1, pi2, game, cfg);
  const SimplexVec& own = i == Player::one ? pi1 : pi2;
  const SimplexVec& opp = i == Player::one ? pi2 : pi1;
  const PlayerConfig& pc = cfg.of(i);
  return -own.vec().dot(game.payoff(i) * p.vec()) - d_value(pc.pen, p, opp) + pc.reg.epsilon * nu_value(pc.reg, own);
}

double rqe_value(Player i, const JointStrategy& z_star, const BimatrixGame& game, const RQEConfig& cfg,
                 double verify_tol) {
  const EquilibriumCheck check = verify_equilibrium(z_star, game, cfg, verify_tol);
  if (!check.verified)
    throw ContractViolation("rqe_value: point is not an equilibrium (worst slack " +
                            std::to_string(check.worst_slack) + ")");
  return objective_J(i, z_star, game, cfg);
}

std::string_view to_string(CertificateMethod m) {
  return m == CertificateMethod::analytic ? "analytic" : "sampled";
}

MonotonicityCertificate certify_alpha(GameDims dims, const RQEConfig& cfg, std::uint64_t seed,
                                      std::size_t probe_samples) {
  cfg.validate(dims);
  const bool constant_penalty_hessian = std::all_of(cfg.players.begin(), cfg.players.end(), [](const auto& pc) {
    return pc.pen.kind == PenaltyKind::scaled_sq_l2;
  });
  if (!constant_penalty_hessian) {
    const double probe = numeric_alpha_probe(BimatrixGame::zeros(dims.a1, dims.a2), cfg, probe_samples, seed);
    return {probe, CertificateMethod::sampled, false};
  }

  double alpha = std::numeric_limits<double>::infinity();
  for (Player i : {Player::one, Player::two}) {
    const PlayerConfig& own = cfg.of(i);
    const double c_opp = cfg.of(other(i)).pen.c;
    const double a = own.reg.epsilon * nu_modulus(own.reg, cfg.floor);
    alpha = std::min(alpha, lambda_min_2x2(a, -0.5 * c_opp, c_opp));
  }
  return {alpha, CertificateMethod::analytic, alpha > 0.0};
}

double sufficient_alpha_bound(const RQEConfig& cfg) {
  double bound = std::numeric_limits<double>::infinity();
  for (Player i : {Player::one, Player::two}) {
    const PlayerConfig& own = cfg.of(i);
    const double c_opp = cfg.of(other(i)).pen.c;
    const double m = own.reg.epsilon * nu_modulus(own.reg, cfg.floor);
    bound = std::min({bound, m - 0.5 * c_opp, 0.5 * c_opp});
  }
  return bound;
}

Matrix symmetrized_jacobian(const Vector& z, const BimatrixGame& game, const RQEConfig& cfg) {
  const Eigen::Index n = z.size();
  Matrix J(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    // Relative step keeps z +- h inside the domain of log-type regularizers.
    const double h = 1e-4 * std::max(std::abs(z(j)), 1e-8);
    Vector zp = z, zm = z;
    zp(j) += h;
    zm(j) -= h;
    J.col(j) = (operator_F(zp, game, cfg) - operator_F(zm, game, cfg)) / (2.0 * h);
  }
  return 0.5 * (J + J.transpose());
}

double numeric_alpha_probe(const BimatrixGame& game, const RQEConfig& cfg, std::size_t samples,
                           std::uint64_t seed) {
  const GameDims dims = game.dims();
  cfg.validate(dims);
  CounterRng rng = CounterRng(seed).substream("alpha_probe");
  const Vector center = JointStrategy::uniform(dims).stacked();
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t s = 0; s < std::max<std::size_t>(samples, 1); ++s) {
    // Sample from the simplex shrunk 1% toward its barycenter so that the
    // finite-difference steps stay well conditioned.
    const Vector z = 0.99 * JointStrategy::random(dims, rng, cfg.floor).stacked() + 0.01 * center;
    const Matrix S = symmetrized_jacobian(z, game, cfg);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S, Eigen::EigenvaluesOnly);
    best = std::min(best, eig.eigenvalues().minCoeff());
  }
  return best;
}

}  // namespace rqe
