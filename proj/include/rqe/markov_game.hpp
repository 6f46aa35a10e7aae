#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "rqe/normal_form.hpp"
#include "rqe/vi_solver.hpp"

namespace rqe {

// Finite discounted two-player Markov game. Reward and Q tables are stored
// per state as |A1| x |A2| matrices indexed (a1, a2) for both players.
struct MarkovGame {
  std::size_t n_states = 0;
  std::size_t a1 = 0;
  std::size_t a2 = 0;
  std::vector<Matrix> r1;
  std::vector<Matrix> r2;
  // transitions[flat(s, a1, a2)] is the next-state distribution.
  std::vector<SimplexVec> transitions;
  double gamma = 0.0;
  EnvPenalty env;
  RQEConfig cfg;

  GameDims dims() const { return {a1, a2}; }
  std::size_t flat(std::size_t s, std::size_t m, std::size_t n) const { return (s * a1 + m) * a2 + n; }
  const SimplexVec& transition(std::size_t s, std::size_t m, std::size_t n) const {
    return transitions[flat(s, m, n)];
  }
  const Matrix& reward(Player p, std::size_t s) const { return p == Player::one ? r1[s] : r2[s]; }

  // Throws DomainError / ConfigError on malformed tables, rewards outside
  // [0, 1], gamma outside [0, 1) or an invalid configuration.
  void validate() const;

  // Seeded random instance: rewards uniform on [0, 1], transition rows
  // uniform on the simplex.
  static MarkovGame random(std::size_t n_states, std::size_t a1, std::size_t a2, double gamma, const RQEConfig& cfg,
                           CounterRng& rng, EnvPenalty env = {});
};

struct QPair {
  std::vector<Matrix> q1;
  std::vector<Matrix> q2;

  static QPair zeros(const MarkovGame& mg);
  static QPair random(const MarkovGame& mg, CounterRng& rng, double lo, double hi);
  const std::vector<Matrix>& of(Player p) const { return p == Player::one ? q1 : q2; }
  std::vector<Matrix>& of(Player p) { return p == Player::one ? q1 : q2; }
};

// max over players, states and action pairs of |a - b|.
double sup_distance(const QPair& a, const QPair& b);

struct MarkovPolicy {
  std::vector<SimplexVec> pi1;
  std::vector<SimplexVec> pi2;

  const std::vector<SimplexVec>& of(Player p) const { return p == Player::one ? pi1 : pi2; }
  std::vector<SimplexVec>& of(Player p) { return p == Player::one ? pi1 : pi2; }
  static MarkovPolicy uniform(const MarkovGame& mg);
};

// Stage game at s: R1 = Q1(s, ., .), R2 = Q2(s, ., .)' (owner-row).
BimatrixGame stage_game(std::size_t s, const QPair& Q);

// Closed form of the environment-risk infimum over next-state laws:
//   none:     E_P[V]
//   entropic: -(1/beta) log E_P[exp(-beta V)]
double robust_backup(const Vector& values, const SimplexVec& next_state, const EnvPenalty& env);

// Stage-game equilibrium at one state, with the continuation values
// v_i(s) = -RQE_i(Q(s, .)).
struct StageSolution {
  JointStrategy z;
  double residual = 0.0;
  std::size_t iters = 0;
  std::array<double, 2> value{};
};

// The risk-averse quantal-response Bellman operator. Keeps one warm-start
// point per state, taken from the previous application.
class BellmanOperator {
 public:
  BellmanOperator(const MarkovGame& mg, SolverOptions stage_opts);

  QPair apply(const QPair& Q);
  StageSolution solve_stage(std::size_t s, const QPair& Q);
  const std::vector<StageSolution>& last_stages() const { return last_; }
  double alpha() const { return alpha_; }
  void reset_cache();

 private:
  const MarkovGame& mg_;
  SolverOptions opts_;
  double alpha_;
  std::vector<std::optional<JointStrategy>> warm_;
  std::vector<StageSolution> last_;
};

// One cold-started application of the operator.
QPair bellman_T(const QPair& Q, const MarkovGame& mg, const SolverOptions& opts);

// gamma(1 + 2L(sqrt|A1| + sqrt|A2|)/alpha): the sup-norm Lipschitz factor of
// the operator. Empty when alpha or L is not certified.
std::optional<double> contraction_factor(double gamma, GameDims dims, const RQEConfig& cfg);
// alpha / (alpha + 2L(sqrt|A1| + sqrt|A2|)).
double gamma_threshold(double alpha, double L, GameDims dims);
std::optional<double> gamma_max(GameDims dims, const RQEConfig& cfg);

struct MarkovTraceRow {
  std::size_t iter = 0;
  double delta = 0.0;
  std::optional<double> ratio;
};

struct ValueIterationReport {
  QPair q;
  bool converged = false;
  std::size_t sweeps = 0;
  double residual = 0.0;  // ||T Q_last - Q_last||_inf of the final sweep
  std::vector<MarkovTraceRow> trace;
  std::optional<double> gamma_max;
  bool guarantees_void = false;  // gamma above the threshold or uncertified
  bool divergence_alarm = false;
};

using QObserver = std::function<void(std::size_t, const QPair&)>;

// Stage options used inside value iteration: tolerance capped at
// q_tol / (10 gamma |S|).
SolverOptions stage_options(const SolverOptions& opts, double q_tol, const MarkovGame& mg);

ValueIterationReport value_iterate(const MarkovGame& mg, const SolverOptions& opts, double q_tol,
                                   std::size_t max_sweeps = 10000, std::optional<QPair> init = std::nullopt,
                                   const QObserver& observer = {});

// Step sizes for the damped iteration Q <- (1 - a_t) Q + a_t T Q.
struct StepRule {
  enum class Kind { harmonic, undamped };
  Kind kind = Kind::harmonic;
  double a = 1.0;
  double b = 1.0;

  // a / (b + t); needs 0 < a <= b so every step lies in (0, 1].
  static StepRule harmonic(double a = 1.0, double b = 1.0) { return {Kind::harmonic, a, b}; }
  // a_t = 1: plain value iteration.
  static StepRule undamped() { return {Kind::undamped, 1.0, 1.0}; }
  void validate() const;
  double at(std::size_t t) const;
};

struct QLearningReport {
  QPair q;
  std::size_t steps = 0;
  std::vector<double> distance_to_reference;  // per iterate Q_0 .. Q_steps
  std::vector<double> step_sizes;
  bool guarantees_void = false;
};

QLearningReport q_learning_iterate(const MarkovGame& mg, const SolverOptions& opts, std::size_t steps,
                                   const StepRule& rule, const std::optional<QPair>& reference = std::nullopt,
                                   const QObserver& observer = {});

struct PolicyExtraction {
  MarkovPolicy policy;
  std::vector<SimplexVec> belief1;
  std::vector<SimplexVec> belief2;
  std::vector<double> residuals;
  std::vector<std::size_t> flagged_states;  // stage solves that did not converge
  std::vector<JointStrategy> stage_equilibria;
};

PolicyExtraction policy_extract(const QPair& Q, const MarkovGame& mg, const SolverOptions& opts);

struct PolicyEvaluation {
  std::vector<double> v1;
  std::vector<double> v2;
  QPair q;
  bool converged = false;
  std::size_t iters = 0;
  std::vector<double> ratios;  // empirical contraction ratios of the fixed-policy operator

  const std::vector<double>& value(Player p) const { return p == Player::one ? v1 : v2; }
};

PolicyEvaluation policy_evaluate(const MarkovPolicy& pi, const MarkovGame& mg, double eval_tol,
                                 std::size_t max_iters = 100000);

struct RQEViolation {
  Player player = Player::one;
  std::size_t state = 0;
  double gap = 0.0;
};

struct MarkovRQEReport {
  double max_gap = 0.0;
  std::size_t deviations_checked = 0;
  std::vector<RQEViolation> violations;
  bool verified() const { return violations.empty(); }
};

// Per-state value gain V_i^{(dev, pi*_{-i})}(s) - V_i^{pi*}(s) of a deviation.
std::vector<double> deviation_gaps(Player i, const std::vector<SimplexVec>& deviation, const MarkovPolicy& pi_star,
                                   const MarkovGame& mg, double eval_tol);

// Tries `trials` random Markov deviations per player plus one stage-wise
// improvement step against pi*, and reports every state where a deviation
// gains more than tol.
MarkovRQEReport verify_markov_rqe(const MarkovPolicy& pi_star, const MarkovGame& mg, std::size_t trials,
                                  std::uint64_t seed, double tol = 1e-6, const SolverOptions& opts = {});

}  // namespace rqe
