#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "rqe/simplex.hpp"

namespace rqe {

// Strongly convex policy regularizers. Values are unweighted; the weight
// epsilon multiplies them exactly once, in the game objective.
enum class NuKind { entropy, log_barrier, quadratic };

struct QuantalRegularizer {
  NuKind kind = NuKind::entropy;
  double epsilon = 1.0;
};

// Penalty on the adversarial belief p drifting from the opponent's strategy.
//   scaled_sq_l2: (c/2) ||p - pi||^2
//   scaled_kl:    (1/c) KL(p || pi)
enum class PenaltyKind { scaled_sq_l2, scaled_kl };

struct RiskPenalty {
  PenaltyKind kind = PenaltyKind::scaled_sq_l2;
  double c = 1.0;
};

// Environment risk used in the transition backup.
enum class EnvKind { none, entropic };

struct EnvPenalty {
  EnvKind kind = EnvKind::none;
  double beta = 1.0;
};

void validate(const QuantalRegularizer& reg);
void validate(const RiskPenalty& pen);
void validate(const EnvPenalty& env);

std::string_view to_string(NuKind k);
std::string_view to_string(PenaltyKind k);
std::string_view to_string(EnvKind k);
// Throw ConfigError on unknown strings.
NuKind parse_nu_kind(std::string_view s);
PenaltyKind parse_penalty_kind(std::string_view s);
EnvKind parse_env_kind(std::string_view s);

double nu_value(const QuantalRegularizer& reg, const SimplexVec& pi);
Vector nu_grad(const QuantalRegularizer& reg, const SimplexVec& pi);
// Diagonal of the Hessian (all three kinds are separable).
Vector nu_hessian_diag(const QuantalRegularizer& reg, const SimplexVec& pi);
// Lower bound on the curvature of nu over the simplex. diag(1/pi) and
// diag(1/pi^2) both dominate I there, so every kind reports 1.
double nu_modulus(const QuantalRegularizer& reg, InteriorFloor floor);

// The raw-vector overloads accept any positive point (finite differences
// step slightly off the simplex).
double nu_value(const QuantalRegularizer& reg, const Vector& pi);
Vector nu_grad(const QuantalRegularizer& reg, const Vector& pi);

double d_value(const RiskPenalty& pen, const Vector& p, const Vector& pi);
Vector d_grad_p(const RiskPenalty& pen, const Vector& p, const Vector& pi);
Vector d_grad_pi(const RiskPenalty& pen, const Vector& p, const Vector& pi);

inline double d_value(const RiskPenalty& pen, const SimplexVec& p, const SimplexVec& pi) {
  return d_value(pen, p.vec(), pi.vec());
}
inline Vector d_grad_p(const RiskPenalty& pen, const SimplexVec& p, const SimplexVec& pi) {
  return d_grad_p(pen, p.vec(), pi.vec());
}
inline Vector d_grad_pi(const RiskPenalty& pen, const SimplexVec& p, const SimplexVec& pi) {
  return d_grad_pi(pen, p.vec(), pi.vec());
}

// Lipschitz constant (in L2) of pi -> D(p, pi) over the simplex, uniformly in
// p. std::nullopt means no finite constant is certified (scaled_kl).
std::optional<double> d_lipschitz_second(const RiskPenalty& pen, std::size_t n);

// argmax over p in the simplex of { -a.p - D(p, pi) }.
SimplexVec d_inner_argmax(const RiskPenalty& pen, const Vector& a, const SimplexVec& pi);

}  // namespace rqe
