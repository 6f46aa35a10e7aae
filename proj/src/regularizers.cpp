#include "rqe/regularizers.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "rqe/errors.hpp"

namespace rqe {

namespace {

constexpr double kKlZero = 1e-300;

void require_positive(const Vector& pi, const char* who) {
  if (!pi.allFinite()) throw DomainError(std::string(who) + ": non-finite point");
  if ((pi.array() <= 0.0).any())
    throw DomainError(std::string(who) + ": zero entry outside the domain of the regularizer");
}

void require_same_length(const Vector& p, const Vector& pi, const char* who) {
  if (p.size() != pi.size())
    throw DomainError(std::string(who) + ": length mismatch (" + std::to_string(p.size()) + " vs " +
                      std::to_string(pi.size()) + ")");
}

}  // namespace

void validate(const QuantalRegularizer& reg) {
  if (!(reg.epsilon > 0.0) || !std::isfinite(reg.epsilon))
    throw ConfigError("regularizer weight epsilon must be positive");
}

void validate(const RiskPenalty& pen) {
  if (!(pen.c > 0.0) || !std::isfinite(pen.c)) throw ConfigError("risk penalty scale c must be positive");
}

void validate(const EnvPenalty& env) {
  if (env.kind == EnvKind::entropic && (!(env.beta > 0.0) || !std::isfinite(env.beta)))
    throw ConfigError("entropic environment penalty needs beta > 0");
}

std::string_view to_string(NuKind k) {
  switch (k) {
    case NuKind::entropy: return "entropy";
    case NuKind::log_barrier: return "log_barrier";
    case NuKind::quadratic: return "quadratic";
  }
  return "?";
}

std::string_view to_string(PenaltyKind k) {
  switch (k) {
    case PenaltyKind::scaled_sq_l2: return "scaled_sq_l2";
    case PenaltyKind::scaled_kl: return "scaled_kl";
  }
  return "?";
}

std::string_view to_string(EnvKind k) {
  switch (k) {
    case EnvKind::none: return "none";
    case EnvKind::entropic: return "entropic";
  }
  return "?";
}

NuKind parse_nu_kind(std::string_view s) {
  if (s == "entropy") return NuKind::entropy;
  if (s == "log_barrier") return NuKind::log_barrier;
  if (s == "quadratic") return NuKind::quadratic;
  throw ConfigError("unknown regularizer kind \"" + std::string(s) + "\"");
}

PenaltyKind parse_penalty_kind(std::string_view s) {
  if (s == "scaled_sq_l2") return PenaltyKind::scaled_sq_l2;
  if (s == "scaled_kl") return PenaltyKind::scaled_kl;
  throw ConfigError("unknown penalty kind \"" + std::string(s) + "\"");
}

EnvKind parse_env_kind(std::string_view s) {
  if (s == "none") return EnvKind::none;
  if (s == "entropic") return EnvKind::entropic;
  throw ConfigError("unknown environment penalty kind \"" + std::string(s) + "\"");
}

double nu_value(const QuantalRegularizer& reg, const Vector& pi) {
  switch (reg.kind) {
    case NuKind::entropy:
      require_positive(pi, "nu_value");
      return (pi.array() * pi.array().log()).sum();
    case NuKind::log_barrier:
      require_positive(pi, "nu_value");
      return -pi.array().log().sum();
    case NuKind::quadratic:
      return 0.5 * pi.squaredNorm();
  }
  return 0.0;
}

Vector nu_grad(const QuantalRegularizer& reg, const Vector& pi) {
  switch (reg.kind) {
    case NuKind::entropy:
      require_positive(pi, "nu_grad");
      return (1.0 + pi.array().log()).matrix();
    case NuKind::log_barrier:
      require_positive(pi, "nu_grad");
      return (-pi.array().inverse()).matrix();
    case NuKind::quadratic:
      return pi;
  }
  return pi;
}

double nu_value(const QuantalRegularizer& reg, const SimplexVec& pi) { return nu_value(reg, pi.vec()); }
Vector nu_grad(const QuantalRegularizer& reg, const SimplexVec& pi) { return nu_grad(reg, pi.vec()); }

Vector nu_hessian_diag(const QuantalRegularizer& reg, const SimplexVec& pi) {
  const Vector& v = pi.vec();
  switch (reg.kind) {
    case NuKind::entropy:
      require_positive(v, "nu_hessian_diag");
      return v.array().inverse().matrix();
    case NuKind::log_barrier:
      require_positive(v, "nu_hessian_diag");
      return v.array().square().inverse().matrix();
    case NuKind::quadratic:
      return Vector::Ones(v.size());
  }
  return v;
}

double nu_modulus(const QuantalRegularizer& reg, InteriorFloor /*floor*/) {
  validate(reg);
  return 1.0;
}

double d_value(const RiskPenalty& pen, const Vector& p, const Vector& pi) {
  require_same_length(p, pi, "d_value");
  switch (pen.kind) {
    case PenaltyKind::scaled_sq_l2:
      return 0.5 * pen.c * (p - pi).squaredNorm();
    case PenaltyKind::scaled_kl: {
      double kl = 0.0;
      for (Eigen::Index a = 0; a < p.size(); ++a) {
        if (p(a) < kKlZero) continue;
        if (pi(a) <= 0.0) return std::numeric_limits<double>::infinity();
        kl += p(a) * std::log(p(a) / pi(a));
      }
      return kl / pen.c;
    }
  }
  return 0.0;
}

Vector d_grad_p(const RiskPenalty& pen, const Vector& p, const Vector& pi) {
  require_same_length(p, pi, "d_grad_p");
  switch (pen.kind) {
    case PenaltyKind::scaled_sq_l2:
      return pen.c * (p - pi);
    case PenaltyKind::scaled_kl:
      require_positive(p, "d_grad_p");
      require_positive(pi, "d_grad_p");
      return ((1.0 + (p.array() / pi.array()).log()) / pen.c).matrix();
  }
  return p;
}

Vector d_grad_pi(const RiskPenalty& pen, const Vector& p, const Vector& pi) {
  require_same_length(p, pi, "d_grad_pi");
  switch (pen.kind) {
    case PenaltyKind::scaled_sq_l2:
      return pen.c * (pi - p);
    case PenaltyKind::scaled_kl:
      require_positive(pi, "d_grad_pi");
      return (-(p.array() / pi.array()) / pen.c).matrix();
  }
  return p;
}

std::optional<double> d_lipschitz_second(const RiskPenalty& pen, std::size_t /*n*/) {
  switch (pen.kind) {
    case PenaltyKind::scaled_sq_l2:
      // ||c (pi - p)||_2 <= c * diam(simplex) = c * sqrt(2).
      return pen.c * std::sqrt(2.0);
    case PenaltyKind::scaled_kl:
      return std::nullopt;
  }
  return std::nullopt;
}

SimplexVec d_inner_argmax(const RiskPenalty& pen, const Vector& a, const SimplexVec& pi) {
  if (a.size() != static_cast<Eigen::Index>(pi.size())) throw DomainError("d_inner_argmax: length mismatch");
  if (!a.allFinite()) throw DomainError("d_inner_argmax: non-finite payoff vector");
  switch (pen.kind) {
    case PenaltyKind::scaled_sq_l2:
      // -a.p - (c/2)||p - pi||^2 = -(c/2)||p - (pi - a/c)||^2 + const.
      return project_simplex(pi.vec() - a / pen.c);
    case PenaltyKind::scaled_kl: {
      // p_a proportional to pi_a exp(-c a_a); shift the exponent for stability.
      Vector logits = -pen.c * a;
      double top = -std::numeric_limits<double>::infinity();
      for (Eigen::Index k = 0; k < a.size(); ++k)
        if (pi[static_cast<std::size_t>(k)] > 0.0) top = std::max(top, logits(k));
      Vector w(a.size());
      for (Eigen::Index k = 0; k < a.size(); ++k)
        w(k) = pi[static_cast<std::size_t>(k)] * std::exp(logits(k) - top);
      return make_simplex_unchecked(w / w.sum());
    }
  }
  return pi;
}

}  // namespace rqe
