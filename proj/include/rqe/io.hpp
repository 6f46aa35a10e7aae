#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "rqe/markov_game.hpp"
#include "rqe/normal_form.hpp"
#include "rqe/vi_solver.hpp"

namespace rqe::io {

using json = nlohmann::json;

// Malformed or inconsistent input. The message names the offending field
// or, for syntax errors, the line and column.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

json parse_json(std::string_view text, std::string_view source = "<input>");
json read_json_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

// Serializes with every number printed to 17 significant digits, keys in
// sorted order and two-space indentation, so identical data always yields
// identical bytes.
std::string dump(const json& j);

// "config": {"players": [{"epsilon", "nu", "penalty", "c"}, {...}], "delta"}
// or the same per-player keys at the top level of "config" for both players.
RQEConfig parse_config(const json& j);
json to_json(const RQEConfig& cfg);

struct NormalFormProblem {
  BimatrixGame game;
  RQEConfig cfg;
};

// {"A1", "A2", "R1": [A1][A2], "R2": [A2][A1], "config"}
NormalFormProblem parse_normal_form(const json& j);
json to_json(const NormalFormProblem& p);

// {"S", "A1", "A2", "gamma", "r1"/"r2": [S][A1][A2], "P": [S][A1][A2][S],
//  "env": {"kind", "beta"}, "config"}
MarkovGame parse_markov_game(const json& j);
json to_json(const MarkovGame& mg);

// Reads a probability vector; exact data within the simplex tolerance is
// kept bit-for-bit, anything else is renormalized.
SimplexVec parse_simplex(const json& j, std::string_view field);

struct NormalFormResult {
  JointStrategy z_star;
  std::array<double, 2> rqe_values{};
  double residual = 0.0;
  std::size_t iters = 0;
  bool converged = false;
  MonotonicityCertificate certificate;
};

json to_json(const NormalFormResult& r);
NormalFormResult parse_normal_form_result(const json& j);

struct MarkovResult {
  std::string driver;
  QPair q;
  MarkovPolicy policy;
  std::vector<SimplexVec> belief1;
  std::vector<SimplexVec> belief2;
  std::vector<double> stage_residuals;
  bool converged = false;
  std::size_t sweeps = 0;
  double residual = 0.0;
  std::optional<double> gamma_max;
  bool guarantees_void = false;
};

json to_json(const MarkovResult& r);
MarkovResult parse_markov_result(const json& j);

std::string trace_csv(const std::vector<IterationRecord>& rows);
std::string trace_csv(const std::vector<MarkovTraceRow>& rows);

}  // namespace rqe::io
