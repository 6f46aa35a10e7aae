#include "rqe/cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <iostream>
#include <sstream>

#include "rqe/errors.hpp"
#include "rqe/io.hpp"
#include "rqe/markov_game.hpp"
#include "rqe/normal_form.hpp"
#include "rqe/vi_solver.hpp"

namespace rqe::cli {

namespace {

using io::json;

void emit(const RunManifest& m, const std::string& text, std::ostream& out) {
  if (m.output.empty())
    out << text;
  else
    io::write_text_file(m.output, text);
}

json parse_override_value(const std::string& key, const std::string& value) {
  if (key == "nu" || key == "penalty") return value;
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(value, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != value.size() || !std::isfinite(v))
    throw io::InputError("override " + key + "=" + value + ": expected a number");
  return v;
}

void apply_overrides(json& doc, const std::map<std::string, std::string>& overrides) {
  for (const auto& [key, raw] : overrides) {
    const json value = parse_override_value(key, raw);
    if (key == "gamma") {
      doc["gamma"] = value;
    } else if (key == "beta") {
      doc["env"]["beta"] = value;
    } else if (key == "delta") {
      doc["config"]["delta"] = value;
    } else if (key == "epsilon" || key == "c" || key == "nu" || key == "penalty") {
      json& cfg = doc["config"];
      if (cfg.contains("players") && cfg["players"].is_array()) {
        for (json& p : cfg["players"]) p[key] = value;
      } else {
        cfg[key] = value;
      }
    } else {
      throw io::InputError("unknown override key \"" + key + "\"");
    }
  }
}

json load(const RunManifest& m) {
  if (m.input.empty()) throw io::InputError("--input is required");
  json doc = io::read_json_file(m.input);
  apply_overrides(doc, m.overrides);
  return doc;
}

SolverOptions solver_options(const RunManifest& m) {
  SolverOptions opts;
  opts.tol = m.tol;
  opts.max_iters = m.max_iters;
  opts.seed = m.seed;
  opts.record_trace = !m.trace.empty();
  opts.validate();
  return opts;
}

// Runs a command body, mapping input problems to exit code 1.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
  try {
    return body();
  } catch (const io::InputError& e) {
    err << "input error: " << e.what() << "\n";
  } catch (const ConfigError& e) {
    err << "configuration error: " << e.what() << "\n";
  } catch (const DomainError& e) {
    err << "input error: " << e.what() << "\n";
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kUnconverged;
  }
  return kInputError;
}

MarkovPolicy solve_policy(const MarkovGame& mg, const SolverOptions& opts, double q_tol) {
  const ValueIterationReport vi = value_iterate(mg, opts, q_tol);
  return policy_extract(vi.q, mg, stage_options(opts, q_tol, mg)).policy;
}

}  // namespace

int cmd_solve_nf(const RunManifest& m, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::NormalFormProblem prob = io::parse_normal_form(load(m));
    const SolverOptions opts = solver_options(m);
    const SolveReport rep = solve_rqe(prob.game, prob.cfg, opts);

    io::NormalFormResult res;
    res.z_star = rep.z_star;
    res.rqe_values = {objective_J(Player::one, rep.z_star, prob.game, prob.cfg),
                      objective_J(Player::two, rep.z_star, prob.game, prob.cfg)};
    res.residual = rep.residual;
    res.iters = rep.iters;
    res.converged = rep.converged;
    res.certificate = certify_alpha(prob.game.dims(), prob.cfg, m.seed);
    emit(m, io::dump(io::to_json(res)), out);
    if (!m.trace.empty()) io::write_text_file(m.trace, io::trace_csv(rep.trace));
    if (!rep.converged) {
      err << "solver did not converge: residual " << rep.residual << " after " << rep.iters << " iterations\n";
      return static_cast<int>(kUnconverged);
    }
    return static_cast<int>(kSuccess);
  });
}

int cmd_certify(const RunManifest& m, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const json doc = load(m);
    const json& cfg_doc = doc.contains("config") ? doc["config"] : doc;
    const RQEConfig cfg = io::parse_config(cfg_doc);
    GameDims dims;
    auto count = [&](const std::optional<std::size_t>& flag, const char* key) -> std::size_t {
      if (flag) return *flag;
      if (!doc.contains(key) || !doc[key].is_number_integer() || doc[key].get<long long>() < 1)
        throw io::InputError(std::string("action count \"") + key + "\" missing (give it in the file or via --" +
                             (key[1] == '1' ? "a1" : "a2") + ")");
      return doc[key].get<std::size_t>();
    };
    dims.a1 = count(m.a1, "A1");
    dims.a2 = count(m.a2, "A2");

    const MonotonicityCertificate cert = certify_alpha(dims, cfg, m.seed);
    const auto gmax = gamma_max(dims, cfg);
    const json report = {{"A1", dims.a1},
                         {"A2", dims.a2},
                         {"alpha", cert.alpha},
                         {"method", std::string(to_string(cert.method))},
                         {"certified", cert.certified},
                         {"sufficient_bound", sufficient_alpha_bound(cfg)},
                         {"gamma_max", gmax ? json(*gmax) : json(nullptr)}};
    emit(m, io::dump(report), out);
    return static_cast<int>(cert.certified && cert.alpha > 0.0 ? kSuccess : kCertificationFailure);
  });
}

int cmd_lipschitz(const RunManifest& m, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const io::NormalFormProblem prob = io::parse_normal_form(load(m));
    SolverOptions opts = solver_options(m);
    opts.record_trace = false;
    if (!(m.perturb > 0.0)) throw io::InputError("--perturb must be positive");
    const MonotonicityCertificate cert = certify_alpha(prob.game.dims(), prob.cfg, m.seed);
    if (!cert.certified) {
      err << "uncertified configuration: the Lipschitz bound has no certified modulus\n";
      return static_cast<int>(kUnconverged);
    }

    const GameDims dims = prob.game.dims();
    const CounterRng instances = CounterRng(m.seed).substream("instances");
    std::string csv = "trial,payoff_gap,solution_gap,bound,ratio\n";
    bool all_within = true, all_converged = true;
    for (std::size_t t = 0; t < m.trials; ++t) {
      CounterRng rng = instances.substream(t);
      const BimatrixGame base = m.random_base ? BimatrixGame::random(dims.a1, dims.a2, rng) : prob.game;
      BimatrixGame pert = base;
      const BimatrixGame noise = BimatrixGame::random(dims.a1, dims.a2, rng, -m.perturb, m.perturb);
      pert.r1 += noise.r1;
      pert.r2 += noise.r2;
      const LipschitzProbe probe = lipschitz_probe(base, pert, prob.cfg, opts);
      all_converged = all_converged && probe.both_converged;
      if (probe.ratio && *probe.ratio > 1.0) all_within = false;
      std::ostringstream row;
      row.precision(17);
      row << t << "," << probe.payoff_gap << "," << probe.solution_gap << "," << probe.bound << ",";
      if (probe.ratio) row << *probe.ratio;
      csv += row.str() + "\n";
    }
    emit(m, csv, out);
    if (!all_within) {
      err << "some trial exceeded the Lipschitz bound\n";
      return static_cast<int>(kCertificationFailure);
    }
    return static_cast<int>(all_converged ? kSuccess : kUnconverged);
  });
}

int cmd_solve_mg(const RunManifest& m, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const MarkovGame mg = io::parse_markov_game(load(m));
    const SolverOptions opts = solver_options(m);
    if (!(m.q_tol > 0.0)) throw io::InputError("--q-tol must be positive");
    const SolverOptions stage = stage_options(opts, m.q_tol, mg);

    io::MarkovResult res;
    res.driver = m.driver;
    res.gamma_max = gamma_max(mg.dims(), mg.cfg);
    std::vector<MarkovTraceRow> trace;
    if (m.driver == "vi") {
      ValueIterationReport vi = value_iterate(mg, opts, m.q_tol);
      res.q = std::move(vi.q);
      res.converged = vi.converged;
      res.sweeps = vi.sweeps;
      res.residual = vi.residual;
      res.guarantees_void = vi.guarantees_void;
      trace = std::move(vi.trace);
    } else if (m.driver == "qlearn") {
      const StepRule rule = StepRule::harmonic(m.step_a, m.step_b);
      try {
        rule.validate();
      } catch (const ConfigError& e) {
        throw io::InputError(std::string("step rule: ") + e.what());
      }
      QPair prev = QPair::zeros(mg);
      std::optional<double> prev_delta;
      QLearningReport ql = q_learning_iterate(mg, stage, m.steps, rule, std::nullopt, [&](std::size_t t, const QPair& q) {
        const double delta = sup_distance(q, prev);
        MarkovTraceRow row{t, delta, std::nullopt};
        if (prev_delta && *prev_delta > 0.0) row.ratio = delta / *prev_delta;
        trace.push_back(row);
        prev_delta = delta;
        prev = q;
      });
      res.q = std::move(ql.q);
      res.sweeps = ql.steps;
      res.residual = sup_distance(bellman_T(res.q, mg, stage), res.q);
      res.converged = res.residual <= m.q_tol;
      res.guarantees_void = ql.guarantees_void;
    } else {
      throw io::InputError("--driver must be vi or qlearn");
    }

    const PolicyExtraction ex = policy_extract(res.q, mg, stage);
    res.policy = ex.policy;
    res.belief1 = ex.belief1;
    res.belief2 = ex.belief2;
    res.stage_residuals = ex.residuals;
    if (!ex.flagged_states.empty()) res.converged = false;

    emit(m, io::dump(io::to_json(res)), out);
    if (!m.trace.empty()) io::write_text_file(m.trace, io::trace_csv(trace));
    if (res.guarantees_void) err << "uncertified regime: gamma exceeds the contraction threshold or the penalty is uncertified\n";
    if (!res.converged) err << "not converged: residual " << res.residual << "\n";
    return static_cast<int>(res.converged && !res.guarantees_void ? kSuccess : kUnconverged);
  });
}

int cmd_verify(const RunManifest& m, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const MarkovGame mg = io::parse_markov_game(load(m));
    const SolverOptions opts = solver_options(m);
    MarkovPolicy policy;
    if (!m.policy.empty()) {
      policy = io::parse_markov_result(io::read_json_file(m.policy)).policy;
      if (policy.pi1.size() != mg.n_states || policy.pi1[0].size() != mg.a1 || policy.pi2[0].size() != mg.a2)
        throw io::InputError("policy file does not match the game dimensions");
    } else {
      policy = solve_policy(mg, opts, m.q_tol);
    }
    const auto gmax = gamma_max(mg.dims(), mg.cfg);
    const bool void_regime = !gmax || mg.gamma > *gmax;
    const MarkovRQEReport rep = verify_markov_rqe(policy, mg, m.trials, m.seed, m.verify_tol, opts);

    json violations = json::array();
    for (const auto& v : rep.violations)
      violations.push_back({{"player", index(v.player) + 1}, {"state", v.state}, {"gap", v.gap}});
    const json report = {{"max_gap", rep.max_gap},
                         {"deviations_checked", rep.deviations_checked},
                         {"tolerance", m.verify_tol},
                         {"verified", rep.verified()},
                         {"violations", violations},
                         {"guarantees_void", void_regime}};
    emit(m, io::dump(report), out);
    if (!rep.verified()) {
      err << rep.violations.size() << " profitable deviation(s) found\n";
      return static_cast<int>(kCertificationFailure);
    }
    if (void_regime) {
      err << "uncertified regime: gamma exceeds the contraction threshold or the penalty is uncertified\n";
      return static_cast<int>(kUnconverged);
    }
    return static_cast<int>(kSuccess);
  });
}

int dispatch(const RunManifest& m, std::ostream& out, std::ostream& err) {
  switch (m.command) {
    case Command::solve_nf: return cmd_solve_nf(m, out, err);
    case Command::certify: return cmd_certify(m, out, err);
    case Command::lipschitz: return cmd_lipschitz(m, out, err);
    case Command::solve_mg: return cmd_solve_mg(m, out, err);
    case Command::verify: return cmd_verify(m, out, err);
  }
  return kInputError;
}

int run(int argc, char** argv) {
  CLI::App app{"Risk-averse quantal-response equilibrium solver"};
  app.require_subcommand(1);
  RunManifest m;
  std::vector<std::string> sets;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--input,-i", m.input, "Input JSON file")->required();
    sub->add_option("--output,-o", m.output, "Output file (default: stdout)");
    sub->add_option("--seed", m.seed, "Master seed");
    sub->add_option("--tol", m.tol, "Stage solver natural-residual tolerance");
    sub->add_option("--max-iters", m.max_iters, "Stage solver iteration cap");
    sub->add_option("--trace", m.trace, "Write a per-iteration CSV trace here");
    sub->add_option("--set", sets, "Config override key=value (epsilon, c, nu, penalty, delta, gamma, beta)");
  };

  auto* solve_nf = app.add_subcommand("solve-nf", "Solve a normal-form game for its RQE");
  common(solve_nf);
  auto* certify = app.add_subcommand("certify", "Report the strong-monotonicity certificate and gamma_max");
  common(certify);
  certify->add_option("--a1", m.a1, "Actions of player 1");
  certify->add_option("--a2", m.a2, "Actions of player 2");
  auto* lipschitz = app.add_subcommand("lipschitz", "Check equilibrium sensitivity against the Lipschitz bound");
  common(lipschitz);
  lipschitz->add_option("--trials", m.trials, "Number of seeded perturbations");
  lipschitz->add_option("--perturb", m.perturb, "Max absolute entrywise perturbation");
  lipschitz->add_flag("--random-base", m.random_base, "Draw a fresh base game per trial");
  auto* solve_mg = app.add_subcommand("solve-mg", "Solve a discounted Markov game");
  common(solve_mg);
  solve_mg->add_option("--driver", m.driver, "vi or qlearn")->check(CLI::IsMember({"vi", "qlearn"}));
  solve_mg->add_option("--steps", m.steps, "Q-learning steps");
  solve_mg->add_option("--q-tol", m.q_tol, "Outer sup-norm tolerance");
  solve_mg->add_option("--step-a", m.step_a, "Step rule a/(b + t): a");
  solve_mg->add_option("--step-b", m.step_b, "Step rule a/(b + t): b");
  auto* verify = app.add_subcommand("verify", "Search for profitable deviations from a Markov RQE");
  common(verify);
  verify->add_option("--policy", m.policy, "solve-mg result JSON (default: solve first)");
  verify->add_option("--trials", m.trials, "Random deviations per player")->default_val(20);
  verify->add_option("--verify-tol", m.verify_tol, "Gap tolerance");
  verify->add_option("--q-tol", m.q_tol, "Outer tolerance when solving first");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? static_cast<int>(kSuccess) : static_cast<int>(kInputError);
  }

  for (const std::string& s : sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos || eq == 0) {
      std::cerr << "input error: --set expects key=value, got \"" << s << "\"\n";
      return kInputError;
    }
    m.overrides[s.substr(0, eq)] = s.substr(eq + 1);
  }

  if (solve_nf->parsed()) m.command = Command::solve_nf;
  if (certify->parsed()) m.command = Command::certify;
  if (lipschitz->parsed()) m.command = Command::lipschitz;
  if (solve_mg->parsed()) m.command = Command::solve_mg;
  if (verify->parsed()) m.command = Command::verify;
  return dispatch(m, std::cout, std::cerr);
}

}  // namespace rqe::cli
