#pragma once

#include <array>
#include <cstdint>

#include "rqe/regularizers.hpp"
#include "rqe/simplex.hpp"

namespace rqe {

enum class Player : int { one = 0, two = 1 };

inline constexpr int index(Player p) { return static_cast<int>(p); }
inline constexpr Player other(Player p) { return p == Player::one ? Player::two : Player::one; }

struct GameDims {
  std::size_t a1 = 0;
  std::size_t a2 = 0;
};

// Payoffs in owner-row orientation: r1 is |A1| x |A2| with r1(m, n) the
// payoff of player 1 for (a1 = m, a2 = n); r2 is |A2| x |A1| with r2(m, n) the
// payoff of player 2 for (a2 = m, a1 = n).
struct BimatrixGame {
  Matrix r1;
  Matrix r2;

  GameDims dims() const {
    return {static_cast<std::size_t>(r1.rows()), static_cast<std::size_t>(r1.cols())};
  }
  const Matrix& payoff(Player p) const { return p == Player::one ? r1 : r2; }
  // Throws DomainError on inconsistent shapes or non-finite entries.
  void validate() const;

  static BimatrixGame zeros(std::size_t a1, std::size_t a2);
  // Entries i.i.d. uniform on [lo, hi].
  static BimatrixGame random(std::size_t a1, std::size_t a2, CounterRng& rng, double lo = -1.0,
                             double hi = 1.0);
};

struct PlayerConfig {
  QuantalRegularizer reg;
  RiskPenalty pen;
};

struct RQEConfig {
  std::array<PlayerConfig, 2> players;
  InteriorFloor floor{1e-9};

  const PlayerConfig& of(Player p) const { return players[static_cast<std::size_t>(index(p))]; }
  void validate(GameDims dims) const;

  // Same regularizer and penalty for both players.
  static RQEConfig symmetric(NuKind nu, double epsilon, PenaltyKind pen, double c, double delta = 1e-9);
};

// Point of the four-player game: the two strategies and the two adversarial
// beliefs (p1 over A2 is player 1's worst case for player 2, p2 over A1 is the
// reverse).
struct JointStrategy {
  SimplexVec pi1;
  SimplexVec pi2;
  SimplexVec p1;
  SimplexVec p2;

  GameDims dims() const { return {pi1.size(), pi2.size()}; }
  const SimplexVec& strategy(Player p) const { return p == Player::one ? pi1 : pi2; }
  const SimplexVec& belief(Player p) const { return p == Player::one ? p1 : p2; }

  // Stacked as [pi1; pi2; p1; p2], length 2(|A1| + |A2|).
  Vector stacked() const;
  // Projects each block of a stacked vector onto the simplex with the floor.
  static JointStrategy from_stacked(GameDims dims, const Vector& z, InteriorFloor floor);
  static JointStrategy uniform(GameDims dims);
  // Independent uniform-on-simplex blocks, pulled into the floor.
  static JointStrategy random(GameDims dims, CounterRng& rng, InteriorFloor floor);
};

// Offsets of the four blocks inside a stacked vector.
struct StackLayout {
  explicit StackLayout(GameDims d) : dims(d) {}
  GameDims dims;
  Eigen::Index pi1() const { return 0; }
  Eigen::Index pi2() const { return static_cast<Eigen::Index>(dims.a1); }
  Eigen::Index p1() const { return static_cast<Eigen::Index>(dims.a1 + dims.a2); }
  Eigen::Index p2() const { return static_cast<Eigen::Index>(dims.a1 + 2 * dims.a2); }
  Eigen::Index size() const { return static_cast<Eigen::Index>(2 * (dims.a1 + dims.a2)); }
};

// J_i = -pi_i' R_i p_i - D_i(p_i, pi_{-i}) + eps_i nu_i(pi_i); the adversary
// objective is its negation.
double objective_J(Player i, const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg);
double objective_Jbar(Player i, const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg);
// Stacked-vector form (used by finite-difference checks; blocks need not sum
// to one but must lie in the domain of nu and D).
double objective_J(Player i, const Vector& z, const BimatrixGame& game, const RQEConfig& cfg);

// Gradient operator of the four-player game, stacked like JointStrategy:
//   [-R1 p1 + e1 grad nu1(pi1);  -R2 p2 + e2 grad nu2(pi2);
//     R1' pi1 + grad_p D1(p1, pi2);  R2' pi2 + grad_p D2(p2, pi1)]
Vector operator_F(const JointStrategy& z, const BimatrixGame& game, const RQEConfig& cfg);
Vector operator_F(const Vector& z, const BimatrixGame& game, const RQEConfig& cfg);

// Player i's worst-case belief against its own strategy, in closed form.
SimplexVec inner_argmax(Player i, const SimplexVec& pi1, const SimplexVec& pi2, const BimatrixGame& game,
                        const RQEConfig& cfg);

// f_i(pi1, pi2; R): the risk-adjusted regularized cost of player i, with the
// inner supremum over beliefs evaluated in closed form.
double f_value(Player i, const SimplexVec& pi1, const SimplexVec& pi2, const BimatrixGame& game,
               const RQEConfig& cfg);

// RQE_i(R) = J_i(z*) at a verified equilibrium. Throws ContractViolation when
// z* fails verify_equilibrium at verify_tol.
double rqe_value(Player i, const JointStrategy& z_star, const BimatrixGame& game, const RQEConfig& cfg,
                 double verify_tol = 1e-6);

enum class CertificateMethod { analytic, sampled };

struct MonotonicityCertificate {
  double alpha = 0.0;
  CertificateMethod method = CertificateMethod::analytic;
  bool certified = false;
};

std::string_view to_string(CertificateMethod m);

// Strong-monotonicity modulus of F. With constant penalty Hessians
// (scaled_sq_l2) the symmetrized Jacobian splits into two blocks
//   [[e_i H_i, -c_{-i}/2 I], [-c_{-i}/2 I, c_{-i} I]],  H_i >= m_i I,
// whose smallest eigenvalue is bounded below by that of the 2x2 matrix
// [[e_i m_i, -c_{-i}/2], [-c_{-i}/2, c_{-i}]]. Payoffs never enter.
// Any scaled_kl penalty falls back to numeric_alpha_probe on a zero game.
MonotonicityCertificate certify_alpha(GameDims dims, const RQEConfig& cfg, std::uint64_t seed = 0,
                                      std::size_t probe_samples = 64);

// The sufficient condition min_i min(e_i m_i - c_{-i}/2, c_{-i}/2).
double sufficient_alpha_bound(const RQEConfig& cfg);

// Symmetrized Jacobian (J + J')/2 of F at z by central differences.
Matrix symmetrized_jacobian(const Vector& z, const BimatrixGame& game, const RQEConfig& cfg);

// Min over sampled interior points of lambda_min of the symmetrized
// Jacobian. An estimate, never a certificate.
double numeric_alpha_probe(const BimatrixGame& game, const RQEConfig& cfg, std::size_t samples,
                           std::uint64_t seed);

}  // namespace rqe
