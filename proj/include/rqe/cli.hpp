#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>

namespace rqe::cli {

enum ExitCode : int {
  kSuccess = 0,
  kInputError = 1,
  kUnconverged = 2,  // also: guarantees void (gamma above threshold, uncertified penalty)
  kCertificationFailure = 3,
};

enum class Command { solve_nf, certify, lipschitz, solve_mg, verify };

struct RunManifest {
  Command command = Command::solve_nf;
  std::string input;
  std::string output;  // empty: write to stdout
  std::string trace;   // optional CSV trace path
  std::uint64_t seed = 0;
  double tol = 1e-8;
  std::size_t max_iters = 100000;
  // Applied to the input's "config" (both players) before parsing:
  // epsilon, c, nu, penalty, delta. "gamma" and "beta" patch a Markov game.
  std::map<std::string, std::string> overrides;

  // certify
  std::optional<std::size_t> a1, a2;
  // lipschitz
  std::size_t trials = 100;
  double perturb = 0.1;
  bool random_base = false;
  // solve-mg / verify
  std::string driver = "vi";
  std::size_t steps = 500;
  double q_tol = 1e-8;
  double step_a = 1.0;
  double step_b = 1.0;
  std::string policy;  // verify: result JSON from solve-mg
  double verify_tol = 1e-6;
};

int cmd_solve_nf(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_certify(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_lipschitz(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_solve_mg(const RunManifest& m, std::ostream& out, std::ostream& err);
int cmd_verify(const RunManifest& m, std::ostream& out, std::ostream& err);

int dispatch(const RunManifest& m, std::ostream& out, std::ostream& err);

// Parses argv into a manifest and runs it.
int run(int argc, char** argv);

}  // namespace rqe::cli
