#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rqe {

// Invalid numerical input: non-finite values, points off the domain of a
// regularizer, mismatched lengths.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Invalid configuration: bad floors, nonpositive weights, bad step rules.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A precondition that the caller promised (e.g. "z is an equilibrium") did
// not hold.
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// A stage-game solve inside the Bellman operator did not converge.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, std::size_t state)
      : std::runtime_error(what + " (state " + std::to_string(state) + ")"),
        state_(state) {}
  std::size_t state() const noexcept { return state_; }

 private:
  std::size_t state_;
};

}  // namespace rqe
