#include "rqe/markov_game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "rqe/errors.hpp"

namespace rqe {

namespace {

Vector column_of(const std::vector<double>& v) {
  return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

// Loose a-priori bound on |Q| used only to flag runaway iterations.
double q_magnitude_bound(const MarkovGame& mg) {
  const double floor = std::max(mg.cfg.floor.delta, 1e-300);
  double offset = 0.0;
  for (Player i : {Player::one, Player::two}) {
    const PlayerConfig& pc = mg.cfg.of(i);
    const double n = static_cast<double>(i == Player::one ? mg.a1 : mg.a2);
    double nu_max = 0.5;
    if (pc.reg.kind == NuKind::entropy) nu_max = std::log(n);
    if (pc.reg.kind == NuKind::log_barrier) nu_max = n * std::log(1.0 / floor);
    const double d_max = pc.pen.kind == PenaltyKind::scaled_sq_l2 ? pc.pen.c : std::log(1.0 / floor) / pc.pen.c;
    offset = std::max(offset, pc.reg.epsilon * nu_max + d_max);
  }
  return (1.0 + offset) / (1.0 - mg.gamma);
}

double sup_norm(const QPair& q) {
  double m = 0.0;
  for (const auto* side : {&q.q1, &q.q2})
    for (const Matrix& t : *side) m = std::max(m, t.cwiseAbs().maxCoeff());
  return m;
}

QPair blend(const QPair& q, const QPair& tq, double step) {
  QPair out = q;
  for (std::size_t s = 0; s < q.q1.size(); ++s) {
    out.q1[s] = (1.0 - step) * q.q1[s] + step * tq.q1[s];
    out.q2[s] = (1.0 - step) * q.q2[s] + step * tq.q2[s];
  }
  return out;
}

bool void_regime(const MarkovGame& mg, const std::optional<double>& gmax) {
  return !gmax.has_value() || mg.gamma > *gmax;
}

}  // namespace

void MarkovGame::validate() const {
  if (n_states == 0 || a1 == 0 || a2 == 0) throw DomainError("Markov game needs at least one state and action");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw DomainError("discount gamma must lie in [0, 1)");
  if (r1.size() != n_states || r2.size() != n_states)
    throw DomainError("reward tables must have one entry per state");
  for (std::size_t s = 0; s < n_states; ++s) {
    for (const Matrix* r : {&r1[s], &r2[s]}) {
      if (r->rows() != static_cast<Eigen::Index>(a1) || r->cols() != static_cast<Eigen::Index>(a2))
        throw DomainError("reward table at state " + std::to_string(s) + " is not |A1| x |A2|");
      if (!r->allFinite() || r->minCoeff() < 0.0 || r->maxCoeff() > 1.0)
        throw DomainError("rewards at state " + std::to_string(s) + " must lie in [0, 1]");
    }
  }
  if (transitions.size() != n_states * a1 * a2) throw DomainError("transition table has the wrong number of rows");
  for (const SimplexVec& row : transitions)
    if (row.size() != n_states) throw DomainError("transition row length differs from the number of states");
  rqe::validate(env);
  cfg.validate(dims());
}

MarkovGame MarkovGame::random(std::size_t n_states, std::size_t a1, std::size_t a2, double gamma,
                              const RQEConfig& cfg, CounterRng& rng, EnvPenalty env) {
  MarkovGame mg;
  mg.n_states = n_states;
  mg.a1 = a1;
  mg.a2 = a2;
  mg.gamma = gamma;
  mg.env = env;
  mg.cfg = cfg;
  CounterRng rewards = rng.substream("rewards");
  CounterRng kernel = rng.substream("transitions");
  for (std::size_t s = 0; s < n_states; ++s) {
    Matrix t1(static_cast<Eigen::Index>(a1), static_cast<Eigen::Index>(a2));
    Matrix t2(static_cast<Eigen::Index>(a1), static_cast<Eigen::Index>(a2));
    for (Eigen::Index m = 0; m < t1.rows(); ++m)
      for (Eigen::Index n = 0; n < t1.cols(); ++n) {
        t1(m, n) = rewards.uniform();
        t2(m, n) = rewards.uniform();
      }
    mg.r1.push_back(std::move(t1));
    mg.r2.push_back(std::move(t2));
  }
  for (std::size_t k = 0; k < n_states * a1 * a2; ++k) mg.transitions.push_back(random_simplex(n_states, kernel));
  mg.validate();
  return mg;
}

QPair QPair::zeros(const MarkovGame& mg) {
  const auto n1 = static_cast<Eigen::Index>(mg.a1);
  const auto n2 = static_cast<Eigen::Index>(mg.a2);
  return {std::vector<Matrix>(mg.n_states, Matrix::Zero(n1, n2)), std::vector<Matrix>(mg.n_states, Matrix::Zero(n1, n2))};
}

QPair QPair::random(const MarkovGame& mg, CounterRng& rng, double lo, double hi) {
  QPair q = zeros(mg);
  for (auto* side : {&q.q1, &q.q2})
    for (Matrix& t : *side)
      for (Eigen::Index m = 0; m < t.rows(); ++m)
        for (Eigen::Index n = 0; n < t.cols(); ++n) t(m, n) = rng.uniform(lo, hi);
  return q;
}

double sup_distance(const QPair& a, const QPair& b) {
  if (a.q1.size() != b.q1.size() || a.q2.size() != b.q2.size())
    throw DomainError("sup_distance: Q tables have different state counts");
  double m = 0.0;
  for (std::size_t s = 0; s < a.q1.size(); ++s) {
    m = std::max(m, (a.q1[s] - b.q1[s]).cwiseAbs().maxCoeff());
    m = std::max(m, (a.q2[s] - b.q2[s]).cwiseAbs().maxCoeff());
  }
  return m;
}

MarkovPolicy MarkovPolicy::uniform(const MarkovGame& mg) {
  return {std::vector<SimplexVec>(mg.n_states, SimplexVec::uniform(mg.a1)),
          std::vector<SimplexVec>(mg.n_states, SimplexVec::uniform(mg.a2))};
}

BimatrixGame stage_game(std::size_t s, const QPair& Q) {
  if (s >= Q.q1.size() || s >= Q.q2.size()) throw DomainError("stage_game: state out of range");
  return {Q.q1[s], Q.q2[s].transpose()};
}

double robust_backup(const Vector& values, const SimplexVec& next_state, const EnvPenalty& env) {
  if (values.size() != static_cast<Eigen::Index>(next_state.size()))
    throw DomainError("robust_backup: value and transition lengths differ");
  const Vector& p = next_state.vec();
  switch (env.kind) {
    case EnvKind::none:
      return p.dot(values);
    case EnvKind::entropic: {
      // -(1/b) log sum_s p_s exp(-b V_s), shifted by the smallest reachable V.
      double vmin = std::numeric_limits<double>::infinity();
      for (Eigen::Index s = 0; s < p.size(); ++s)
        if (p(s) > 0.0) vmin = std::min(vmin, values(s));
      double acc = 0.0;
      for (Eigen::Index s = 0; s < p.size(); ++s)
        if (p(s) > 0.0) acc += p(s) * std::exp(-env.beta * (values(s) - vmin));
      return vmin - std::log(acc) / env.beta;
    }
  }
  return 0.0;
}

BellmanOperator::BellmanOperator(const MarkovGame& mg, SolverOptions stage_opts)
    : mg_(mg), opts_(stage_opts), warm_(mg.n_states) {
  mg_.validate();
  alpha_ = certify_alpha(mg.dims(), mg.cfg, opts_.seed, 8).alpha;
}

void BellmanOperator::reset_cache() { std::fill(warm_.begin(), warm_.end(), std::nullopt); }

StageSolution BellmanOperator::solve_stage(std::size_t s, const QPair& Q) {
  const BimatrixGame game = stage_game(s, Q);
  const JointStrategy init = warm_[s] ? *warm_[s] : JointStrategy::uniform(mg_.dims());
  const SolveReport rep = solve_rqe(game, mg_.cfg, opts_, init, alpha_);
  if (!rep.converged)
    throw SolverFailure("stage solve did not converge (residual " + std::to_string(rep.residual) + ")", s);
  warm_[s] = rep.z_star;
  StageSolution out{rep.z_star, rep.residual, rep.iters, {}};
  out.value[0] = -objective_J(Player::one, rep.z_star, game, mg_.cfg);
  out.value[1] = -objective_J(Player::two, rep.z_star, game, mg_.cfg);
  return out;
}

QPair BellmanOperator::apply(const QPair& Q) {
  const std::size_t S = mg_.n_states;
  last_.clear();
  std::vector<double> v1(S), v2(S);
  if (mg_.gamma > 0.0) {
    for (std::size_t s = 0; s < S; ++s) {
      last_.push_back(solve_stage(s, Q));
      v1[s] = last_.back().value[0];
      v2[s] = last_.back().value[1];
    }
  }
  const Vector V1 = column_of(v1);
  const Vector V2 = column_of(v2);

  QPair out = QPair::zeros(mg_);
  for (std::size_t s = 0; s < S; ++s)
    for (std::size_t m = 0; m < mg_.a1; ++m)
      for (std::size_t n = 0; n < mg_.a2; ++n) {
        const auto mi = static_cast<Eigen::Index>(m);
        const auto ni = static_cast<Eigen::Index>(n);
        const SimplexVec& P = mg_.transition(s, m, n);
        double b1 = 0.0, b2 = 0.0;
        if (mg_.gamma > 0.0) {
          b1 = robust_backup(V1, P, mg_.env);
          b2 = robust_backup(V2, P, mg_.env);
        }
        out.q1[s](mi, ni) = mg_.r1[s](mi, ni) + mg_.gamma * b1;
        out.q2[s](mi, ni) = mg_.r2[s](mi, ni) + mg_.gamma * b2;
      }
  return out;
}

QPair bellman_T(const QPair& Q, const MarkovGame& mg, const SolverOptions& opts) {
  BellmanOperator T(mg, opts);
  return T.apply(Q);
}

std::optional<double> contraction_factor(double gamma, GameDims dims, const RQEConfig& cfg) {
  const MonotonicityCertificate cert = certify_alpha(dims, cfg);
  if (!cert.certified) return std::nullopt;
  double L = 0.0;
  for (const auto& pc : cfg.players) {
    const auto l = d_lipschitz_second(pc.pen, std::max(dims.a1, dims.a2));
    if (!l) return std::nullopt;
    L = std::max(L, *l);
  }
  const double spread = std::sqrt(static_cast<double>(dims.a1)) + std::sqrt(static_cast<double>(dims.a2));
  return gamma * (1.0 + 2.0 * L * spread / cert.alpha);
}

double gamma_threshold(double alpha, double L, GameDims dims) {
  if (!(alpha > 0.0) || !(L >= 0.0)) throw DomainError("gamma_threshold needs alpha > 0 and L >= 0");
  const double spread = std::sqrt(static_cast<double>(dims.a1)) + std::sqrt(static_cast<double>(dims.a2));
  return alpha / (alpha + 2.0 * L * spread);
}

std::optional<double> gamma_max(GameDims dims, const RQEConfig& cfg) {
  const auto k = contraction_factor(1.0, dims, cfg);
  if (!k) return std::nullopt;
  // gamma * k <= 1  <=>  gamma <= alpha / (alpha + 2L(...)).
  return 1.0 / *k;
}

SolverOptions stage_options(const SolverOptions& opts, double q_tol, const MarkovGame& mg) {
  SolverOptions out = opts;
  if (mg.gamma > 0.0)
    out.tol = std::min(opts.tol, q_tol / (10.0 * mg.gamma * static_cast<double>(mg.n_states)));
  out.record_trace = false;
  return out;
}

ValueIterationReport value_iterate(const MarkovGame& mg, const SolverOptions& opts, double q_tol,
                                   std::size_t max_sweeps, std::optional<QPair> init, const QObserver& observer) {
  mg.validate();
  if (!(q_tol > 0.0)) throw ConfigError("q_tol must be positive");
  ValueIterationReport rep;
  rep.gamma_max = gamma_max(mg.dims(), mg.cfg);
  rep.guarantees_void = void_regime(mg, rep.gamma_max);

  BellmanOperator T(mg, stage_options(opts, q_tol, mg));
  QPair q = init ? std::move(*init) : QPair::zeros(mg);
  const double alarm = q_magnitude_bound(mg);
  std::optional<double> prev_delta;
  for (std::size_t k = 0; k < max_sweeps; ++k) {
    QPair tq = T.apply(q);
    const double delta = sup_distance(tq, q);
    MarkovTraceRow row{k + 1, delta, std::nullopt};
    if (prev_delta && *prev_delta > 0.0) row.ratio = delta / *prev_delta;
    rep.trace.push_back(row);
    prev_delta = delta;
    q = std::move(tq);
    rep.sweeps = k + 1;
    rep.residual = delta;
    if (observer) observer(k + 1, q);
    if (sup_norm(q) > alarm) rep.divergence_alarm = true;
    // With gamma = 0 the operator ignores its argument: one sweep lands on
    // the fixed point.
    if (delta <= q_tol || mg.gamma == 0.0) {
      rep.converged = true;
      if (mg.gamma == 0.0) rep.residual = 0.0;
      break;
    }
  }
  rep.q = std::move(q);
  return rep;
}

void StepRule::validate() const {
  if (kind == Kind::undamped) return;
  if (!(a > 0.0 && b > 0.0 && std::isfinite(a) && std::isfinite(b)))
    throw ConfigError("step rule a/(b + t) needs a > 0 and b > 0");
  if (a > b) throw ConfigError("step rule a/(b + t) needs a <= b so that every step is at most 1");
}

double StepRule::at(std::size_t t) const {
  return kind == Kind::undamped ? 1.0 : a / (b + static_cast<double>(t));
}

QLearningReport q_learning_iterate(const MarkovGame& mg, const SolverOptions& opts, std::size_t steps,
                                   const StepRule& rule, const std::optional<QPair>& reference,
                                   const QObserver& observer) {
  mg.validate();
  rule.validate();
  QLearningReport rep;
  rep.guarantees_void = void_regime(mg, gamma_max(mg.dims(), mg.cfg));

  BellmanOperator T(mg, opts);
  QPair q = QPair::zeros(mg);
  if (reference) rep.distance_to_reference.push_back(sup_distance(q, *reference));
  for (std::size_t t = 0; t < steps; ++t) {
    const double step = rule.at(t);
    QPair tq = T.apply(q);
    q = step == 1.0 ? std::move(tq) : blend(q, tq, step);
    rep.step_sizes.push_back(step);
    if (reference) rep.distance_to_reference.push_back(sup_distance(q, *reference));
    if (observer) observer(t + 1, q);
  }
  rep.steps = steps;
  rep.q = std::move(q);
  return rep;
}

PolicyExtraction policy_extract(const QPair& Q, const MarkovGame& mg, const SolverOptions& opts) {
  mg.validate();
  PolicyExtraction out;
  const double alpha = certify_alpha(mg.dims(), mg.cfg, opts.seed, 8).alpha;
  for (std::size_t s = 0; s < mg.n_states; ++s) {
    const SolveReport rep = solve_rqe(stage_game(s, Q), mg.cfg, opts, JointStrategy::uniform(mg.dims()), alpha);
    if (!rep.converged) out.flagged_states.push_back(s);
    out.policy.pi1.push_back(rep.z_star.pi1);
    out.policy.pi2.push_back(rep.z_star.pi2);
    out.belief1.push_back(rep.z_star.p1);
    out.belief2.push_back(rep.z_star.p2);
    out.residuals.push_back(rep.residual);
    out.stage_equilibria.push_back(rep.z_star);
  }
  return out;
}

PolicyEvaluation policy_evaluate(const MarkovPolicy& pi, const MarkovGame& mg, double eval_tol, std::size_t max_iters) {
  mg.validate();
  if (pi.pi1.size() != mg.n_states || pi.pi2.size() != mg.n_states)
    throw DomainError("policy_evaluate: policy must have one row per state");
  for (std::size_t s = 0; s < mg.n_states; ++s)
    if (pi.pi1[s].size() != mg.a1 || pi.pi2[s].size() != mg.a2)
      throw DomainError("policy_evaluate: policy row at state " + std::to_string(s) + " has the wrong length");

  const std::size_t S = mg.n_states;
  auto state_values = [&](const QPair& q, Player i) {
    std::vector<double> v(S);
    for (std::size_t s = 0; s < S; ++s) v[s] = -f_value(i, pi.pi1[s], pi.pi2[s], stage_game(s, q), mg.cfg);
    return v;
  };
  auto apply = [&](const QPair& q) {
    const Vector V1 = column_of(state_values(q, Player::one));
    const Vector V2 = column_of(state_values(q, Player::two));
    QPair out = QPair::zeros(mg);
    for (std::size_t s = 0; s < S; ++s)
      for (std::size_t m = 0; m < mg.a1; ++m)
        for (std::size_t n = 0; n < mg.a2; ++n) {
          const auto mi = static_cast<Eigen::Index>(m);
          const auto ni = static_cast<Eigen::Index>(n);
          const SimplexVec& P = mg.transition(s, m, n);
          out.q1[s](mi, ni) = mg.r1[s](mi, ni) + mg.gamma * robust_backup(V1, P, mg.env);
          out.q2[s](mi, ni) = mg.r2[s](mi, ni) + mg.gamma * robust_backup(V2, P, mg.env);
        }
    return out;
  };

  PolicyEvaluation ev;
  // Stop once the a-posteriori error gamma/(1-gamma) * delta is below eval_tol.
  const double stop = mg.gamma > 0.0 ? eval_tol * (1.0 - mg.gamma) / mg.gamma : std::numeric_limits<double>::infinity();
  QPair q = QPair::zeros(mg);
  double prev = 0.0;
  for (std::size_t k = 0; k < max_iters; ++k) {
    QPair next = apply(q);
    const double delta = sup_distance(next, q);
    if (k > 0 && prev > 0.0) ev.ratios.push_back(delta / prev);
    prev = delta;
    q = std::move(next);
    ev.iters = k + 1;
    if (delta <= stop) {
      ev.converged = true;
      break;
    }
  }
  ev.v1 = state_values(q, Player::one);
  ev.v2 = state_values(q, Player::two);
  ev.q = std::move(q);
  return ev;
}

std::vector<double> deviation_gaps(Player i, const std::vector<SimplexVec>& deviation, const MarkovPolicy& pi_star,
                                   const MarkovGame& mg, double eval_tol) {
  MarkovPolicy mixed = pi_star;
  mixed.of(i) = deviation;
  const PolicyEvaluation base = policy_evaluate(pi_star, mg, eval_tol);
  const PolicyEvaluation dev = policy_evaluate(mixed, mg, eval_tol);
  std::vector<double> gaps(mg.n_states);
  for (std::size_t s = 0; s < mg.n_states; ++s) gaps[s] = dev.value(i)[s] - base.value(i)[s];
  return gaps;
}

MarkovRQEReport verify_markov_rqe(const MarkovPolicy& pi_star, const MarkovGame& mg, std::size_t trials,
                                  std::uint64_t seed, double tol, const SolverOptions& opts) {
  if (trials == 0) throw ConfigError("verify_markov_rqe needs at least one trial");
  const double eval_tol = tol * 1e-2;
  const PolicyEvaluation base = policy_evaluate(pi_star, mg, eval_tol);
  CounterRng rng = CounterRng(seed).substream("deviations");

  MarkovRQEReport rep;
  rep.max_gap = -std::numeric_limits<double>::infinity();
  for (Player i : {Player::one, Player::two}) {
    const std::size_t n = i == Player::one ? mg.a1 : mg.a2;
    std::vector<std::vector<SimplexVec>> candidates;
    for (std::size_t t = 0; t < trials; ++t) {
      std::vector<SimplexVec> dev;
      for (std::size_t s = 0; s < mg.n_states; ++s) dev.push_back(random_simplex(n, rng));
      candidates.push_back(std::move(dev));
    }
    // One policy-improvement step: the stage best response against pi*_{-i}
    // under pi*'s own Q tables.
    std::vector<SimplexVec> improve;
    for (std::size_t s = 0; s < mg.n_states; ++s)
      improve.push_back(best_response(i, pi_star.of(other(i))[s], stage_game(s, base.q), mg.cfg, opts));
    candidates.push_back(std::move(improve));

    for (const auto& dev : candidates) {
      MarkovPolicy mixed = pi_star;
      mixed.of(i) = dev;
      const PolicyEvaluation ev = policy_evaluate(mixed, mg, eval_tol);
      ++rep.deviations_checked;
      for (std::size_t s = 0; s < mg.n_states; ++s) {
        const double gap = ev.value(i)[s] - base.value(i)[s];
        rep.max_gap = std::max(rep.max_gap, gap);
        if (gap > tol) rep.violations.push_back({i, s, gap});
      }
    }
  }
  return rep;
}

}  // namespace rqe
