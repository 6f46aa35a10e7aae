#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "rqe/cli.hpp"
#include "rqe/io.hpp"

using namespace rqe;
using rqe::io::json;

namespace {

std::string data(const char* name) { return std::string(RQE_DATA_DIR) + "/" + name; }

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome run(cli::RunManifest m) {
  std::ostringstream out, err;
  const int code = cli::dispatch(m, out, err);
  return {code, out.str(), err.str()};
}

cli::RunManifest manifest(cli::Command c, const char* file) {
  cli::RunManifest m;
  m.command = c;
  m.input = data(file);
  return m;
}

std::filesystem::path scratch(const char* name) {
  return std::filesystem::temp_directory_path() / (std::string("rqe_test_cli_") + name);
}

}  // namespace

TEST_CASE("solve-nf") {
  const Outcome zero = run(manifest(cli::Command::solve_nf, "zero_2x2.json"));
  REQUIRE(zero.code == cli::kSuccess);
  const json z = io::parse_json(zero.out);
  for (double p : z["z_star"]["pi1"]) CHECK(p == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(z["rqe_values"][0].get<double>() == doctest::Approx(-2.0 * std::log(2.0)).epsilon(1e-9));
  CHECK(z["alpha_certificate"]["certified"].get<bool>());

  const Outcome mp = run(manifest(cli::Command::solve_nf, "matching_pennies.json"));
  REQUIRE(mp.code == cli::kSuccess);
  const io::NormalFormResult r = io::parse_normal_form_result(io::parse_json(mp.out));
  CHECK((r.z_star.pi1.vec().array() - 0.5).abs().maxCoeff() <= 1e-6);
  CHECK((r.z_star.pi2.vec().array() - 0.5).abs().maxCoeff() <= 1e-6);

  CHECK(run(manifest(cli::Command::solve_nf, "asymmetric_3x2.json")).code == cli::kSuccess);

  cli::RunManifest capped = manifest(cli::Command::solve_nf, "asymmetric_3x2.json");
  capped.max_iters = 2;
  CHECK(run(capped).code == cli::kUnconverged);
}

TEST_CASE("input errors") {
  const Outcome shape = run(manifest(cli::Command::solve_nf, "bad_shape.json"));
  CHECK(shape.code == cli::kInputError);
  CHECK(shape.err.find("\"R1\"") != std::string::npos);
  const Outcome syntax = run(manifest(cli::Command::solve_nf, "malformed.json"));
  CHECK(syntax.code == cli::kInputError);
  CHECK(syntax.err.find("malformed.json:") != std::string::npos);
  CHECK(run(manifest(cli::Command::solve_nf, "missing.json")).code == cli::kInputError);
  cli::RunManifest kind = manifest(cli::Command::certify, "zero_2x2.json");
  kind.overrides["penalty"] = "wasserstein";
  CHECK(run(kind).code == cli::kInputError);
  cli::RunManifest driver = manifest(cli::Command::solve_mg, "desk_mg.json");
  driver.driver = "sarsa";
  CHECK(run(driver).code == cli::kInputError);
}

TEST_CASE("certify") {
  const Outcome ok = run(manifest(cli::Command::certify, "zero_2x2.json"));
  CHECK(ok.code == cli::kSuccess);
  const json j = io::parse_json(ok.out);
  CHECK(std::abs(j["alpha"].get<double>() - 0.792893) <= 1e-6);
  CHECK(std::abs(j["gamma_max"].get<double>() - 0.090174) <= 1e-6);
  CHECK(j["method"] == "analytic");

  cli::RunManifest weak = manifest(cli::Command::certify, "zero_2x2.json");
  weak.overrides["epsilon"] = "0.1";
  const Outcome w = run(weak);
  CHECK(w.code == cli::kCertificationFailure);
  CHECK(io::parse_json(w.out)["alpha"].get<double>() == doctest::Approx(0.55 - std::sqrt(0.2025 + 0.25)));

  cli::RunManifest kl = manifest(cli::Command::certify, "zero_2x2.json");
  kl.overrides["penalty"] = "scaled_kl";
  const Outcome k = run(kl);
  CHECK(k.code == cli::kCertificationFailure);
  CHECK_FALSE(io::parse_json(k.out)["certified"].get<bool>());

  cli::RunManifest dims = manifest(cli::Command::certify, "zero_2x2.json");
  dims.a1 = 3;
  dims.a2 = 3;
  CHECK(io::parse_json(run(dims).out)["gamma_max"].get<double>() < 0.090174);
}

TEST_CASE("lipschitz") {
  cli::RunManifest m = manifest(cli::Command::lipschitz, "matching_pennies.json");
  m.trials = 25;
  m.random_base = true;
  const Outcome o = run(m);
  CHECK(o.code == cli::kSuccess);
  std::istringstream rows(o.out);
  std::string line;
  std::getline(rows, line);
  CHECK(line == "trial,payoff_gap,solution_gap,bound,ratio");
  int n = 0;
  while (std::getline(rows, line)) {
    const double ratio = std::stod(line.substr(line.rfind(',') + 1));
    CHECK(ratio <= 1.0);
    ++n;
  }
  CHECK(n == 25);
  cli::RunManifest kl = m;
  kl.overrides["penalty"] = "scaled_kl";
  CHECK(run(kl).code == cli::kUnconverged);
}

TEST_CASE("solve-mg and verify") {
  cli::RunManifest m = manifest(cli::Command::solve_mg, "desk_mg.json");
  m.output = scratch("mg.json").string();
  m.trace = scratch("mg.csv").string();
  CHECK(run(m).code == cli::kSuccess);
  const io::MarkovResult res = io::parse_markov_result(io::read_json_file(m.output));
  CHECK(res.converged);
  CHECK(res.residual <= 1e-8);
  CHECK_FALSE(res.guarantees_void);
  CHECK(std::filesystem::file_size(m.trace) > 0);

  cli::RunManifest v = manifest(cli::Command::verify, "desk_mg.json");
  v.policy = m.output;
  v.trials = 10;
  const Outcome ok = run(v);
  CHECK(ok.code == cli::kSuccess);
  CHECK(io::parse_json(ok.out)["verified"].get<bool>());

  cli::RunManifest g0 = manifest(cli::Command::solve_mg, "desk_mg.json");
  g0.overrides["gamma"] = "0";
  const Outcome zero = run(g0);
  CHECK(zero.code == cli::kSuccess);
  const io::MarkovResult rz = io::parse_markov_result(io::parse_json(zero.out));
  CHECK(rz.sweeps == 1);
  const MarkovGame mg = io::parse_markov_game(io::read_json_file(data("desk_mg.json")));
  for (std::size_t s = 0; s < mg.n_states; ++s) CHECK(rz.q.q1[s] == mg.r1[s]);

  cli::RunManifest hot = manifest(cli::Command::solve_mg, "desk_mg.json");
  hot.overrides["gamma"] = "0.5";
  const Outcome h = run(hot);
  CHECK(h.code == cli::kUnconverged);
  CHECK(h.err.find("uncertified regime") != std::string::npos);
  CHECK(io::parse_json(h.out)["regime"] == "uncertified regime");

  cli::RunManifest ql = manifest(cli::Command::solve_mg, "desk_mg.json");
  ql.driver = "qlearn";
  ql.steps = 30;
  ql.step_a = 1.0;
  ql.step_b = 1.0;
  const Outcome q = run(ql);
  const io::MarkovResult rq = io::parse_markov_result(io::parse_json(q.out));
  CHECK(rq.driver == "qlearn");
  CHECK(sup_distance(rq.q, res.q) <= 0.1);
}

TEST_CASE("identical runs produce identical bytes") {
  cli::RunManifest m = manifest(cli::Command::solve_mg, "desk_mg.json");
  m.seed = 9;
  CHECK(run(m).out == run(m).out);
  cli::RunManifest n = manifest(cli::Command::solve_nf, "asymmetric_3x2.json");
  CHECK(run(n).out == run(n).out);
}
