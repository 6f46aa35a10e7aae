#include "rqe/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "rqe/errors.hpp"

namespace rqe::io {

namespace {

std::string join(std::string_view a, std::string_view b) {
  if (a.empty()) return std::string(b);
  return std::string(a) + "." + std::string(b);
}

const json& field(const json& obj, std::string_view key, std::string_view where) {
  if (!obj.is_object()) throw InputError(std::string(where.empty() ? "document" : where) + ": expected an object");
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) throw InputError("missing field \"" + join(where, key) + "\"");
  return *it;
}

double as_number(const json& j, std::string_view name) {
  if (!j.is_number()) throw InputError("field \"" + std::string(name) + "\" must be a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw InputError("field \"" + std::string(name) + "\" must be finite");
  return v;
}

std::size_t as_count(const json& j, std::string_view name) {
  if (!j.is_number_integer() || j.get<long long>() < 1)
    throw InputError("field \"" + std::string(name) + "\" must be a positive integer");
  return static_cast<std::size_t>(j.get<long long>());
}

const json& as_array(const json& j, std::size_t expected, std::string_view name) {
  if (!j.is_array()) throw InputError("field \"" + std::string(name) + "\" must be an array");
  if (j.size() != expected)
    throw InputError("field \"" + std::string(name) + "\" has " + std::to_string(j.size()) + " entries, expected " +
                     std::to_string(expected));
  return j;
}

Vector parse_vector(const json& j, std::size_t n, const std::string& name) {
  as_array(j, n, name);
  Vector v(static_cast<Eigen::Index>(n));
  for (std::size_t k = 0; k < n; ++k) v(static_cast<Eigen::Index>(k)) = as_number(j[k], name + "[" + std::to_string(k) + "]");
  return v;
}

Matrix parse_matrix(const json& j, std::size_t rows, std::size_t cols, const std::string& name) {
  if (!j.is_array()) throw InputError("field \"" + name + "\" must be a nested array");
  if (j.size() != rows)
    throw InputError("field \"" + name + "\" has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    m.row(static_cast<Eigen::Index>(r)) = parse_vector(j[r], cols, name + "[" + std::to_string(r) + "]").transpose();
  return m;
}

json vector_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json matrix_json(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) a.push_back(vector_json(m.row(r).transpose()));
  return a;
}

json simplex_rows(const std::vector<SimplexVec>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(vector_json(r.vec()));
  return a;
}

std::vector<SimplexVec> parse_simplex_rows(const json& j, std::size_t count, std::size_t n, const std::string& name) {
  as_array(j, count, name);
  std::vector<SimplexVec> out;
  for (std::size_t s = 0; s < count; ++s) {
    const std::string item = name + "[" + std::to_string(s) + "]";
    as_array(j[s], n, item);
    out.push_back(parse_simplex(j[s], item));
  }
  return out;
}

std::vector<Matrix> parse_tables(const json& j, std::size_t S, std::size_t a1, std::size_t a2, const std::string& name) {
  as_array(j, S, name);
  std::vector<Matrix> out;
  for (std::size_t s = 0; s < S; ++s) out.push_back(parse_matrix(j[s], a1, a2, name + "[" + std::to_string(s) + "]"));
  return out;
}

json tables_json(const std::vector<Matrix>& t) {
  json a = json::array();
  for (const Matrix& m : t) a.push_back(matrix_json(m));
  return a;
}

PlayerConfig parse_player(const json& j, const std::string& where) {
  PlayerConfig pc;
  try {
    if (j.contains("nu")) pc.reg.kind = parse_nu_kind(field(j, "nu", where).get<std::string>());
    if (j.contains("penalty")) pc.pen.kind = parse_penalty_kind(field(j, "penalty", where).get<std::string>());
  } catch (const json::type_error&) {
    throw InputError(where + ": regularizer and penalty kinds must be strings");
  } catch (const ConfigError& e) {
    throw InputError(where + ": " + e.what());
  }
  pc.reg.epsilon = as_number(field(j, "epsilon", where), join(where, "epsilon"));
  pc.pen.c = as_number(field(j, "c", where), join(where, "c"));
  return pc;
}

void write_number(double v, std::string& out) {
  if (!std::isfinite(v)) {
    out += "null";
    return;
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  out += buf;
}

bool is_flat(const json& j) {
  for (const auto& e : j)
    if (e.is_array() || e.is_object()) return false;
  return true;
}

void write_json(const json& j, std::string& out, int depth) {
  const std::string pad(static_cast<std::size_t>(2 * (depth + 1)), ' ');
  const std::string close_pad(static_cast<std::size_t>(2 * depth), ' ');
  switch (j.type()) {
    case json::value_t::number_float:
      write_number(j.get<double>(), out);
      return;
    case json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      const bool flat = is_flat(j);
      out += flat ? "[" : "[\n";
      bool first = true;
      for (const auto& e : j) {
        if (!first) out += flat ? ", " : ",\n";
        if (!flat) out += pad;
        write_json(e, out, depth + 1);
        first = false;
      }
      out += flat ? "]" : "\n" + close_pad + "]";
      return;
    }
    case json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      bool first = true;
      for (auto it = j.begin(); it != j.end(); ++it) {
        if (!first) out += ",\n";
        out += pad + json(it.key()).dump() + ": ";
        write_json(it.value(), out, depth + 1);
        first = false;
      }
      out += "\n" + close_pad + "}";
      return;
    }
    default:
      out += j.dump();
  }
}

}  // namespace

json parse_json(std::string_view text, std::string_view source) {
  try {
    return json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    // e.byte is the 1-based offset of the offending character.
    std::size_t line = 1, col = 1;
    const std::size_t stop = std::min<std::size_t>(e.byte > 0 ? e.byte - 1 : 0, text.size());
    for (std::size_t k = 0; k < stop; ++k) {
      if (text[k] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw InputError(std::string(source) + ":" + std::to_string(line) + ":" + std::to_string(col) +
                     ": malformed JSON (" + e.what() + ")");
  }
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_json(buf.str(), path.string());
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

std::string dump(const json& j) {
  std::string out;
  write_json(j, out, 0);
  out += "\n";
  return out;
}

SimplexVec parse_simplex(const json& j, std::string_view field_name) {
  const std::string name(field_name);
  if (!j.is_array() || j.empty()) throw InputError("field \"" + name + "\" must be a non-empty array");
  const Vector v = parse_vector(j, j.size(), name);
  if ((v.array() < 0.0).any()) throw InputError("field \"" + name + "\" has negative probabilities");
  if (std::abs(v.sum() - 1.0) <= kSimplexSumTol) return make_simplex_unchecked(v);
  try {
    return SimplexVec::from_weights(v);
  } catch (const DomainError& e) {
    throw InputError("field \"" + name + "\": " + e.what());
  }
}

RQEConfig parse_config(const json& j) {
  if (!j.is_object()) throw InputError("field \"config\" must be an object");
  RQEConfig cfg;
  if (j.contains("players")) {
    const json& players = as_array(j["players"], 2, "config.players");
    cfg.players[0] = parse_player(players[0], "config.players[0]");
    cfg.players[1] = parse_player(players[1], "config.players[1]");
  } else {
    cfg.players[0] = parse_player(j, "config");
    cfg.players[1] = cfg.players[0];
  }
  if (j.contains("delta")) cfg.floor.delta = as_number(j["delta"], "config.delta");
  for (std::size_t k = 0; k < 2; ++k) {
    try {
      validate(cfg.players[k].reg);
      validate(cfg.players[k].pen);
    } catch (const ConfigError& e) {
      throw InputError("config.players[" + std::to_string(k) + "]: " + e.what());
    }
  }
  return cfg;
}

json to_json(const RQEConfig& cfg) {
  json players = json::array();
  for (const auto& pc : cfg.players)
    players.push_back({{"epsilon", pc.reg.epsilon},
                       {"nu", std::string(to_string(pc.reg.kind))},
                       {"penalty", std::string(to_string(pc.pen.kind))},
                       {"c", pc.pen.c}});
  return {{"players", players}, {"delta", cfg.floor.delta}};
}

NormalFormProblem parse_normal_form(const json& j) {
  const std::size_t a1 = as_count(field(j, "A1", ""), "A1");
  const std::size_t a2 = as_count(field(j, "A2", ""), "A2");
  NormalFormProblem p;
  p.game.r1 = parse_matrix(field(j, "R1", ""), a1, a2, "R1");
  p.game.r2 = parse_matrix(field(j, "R2", ""), a2, a1, "R2");
  p.cfg = parse_config(field(j, "config", ""));
  try {
    p.cfg.validate(p.game.dims());
  } catch (const ConfigError& e) {
    throw InputError(std::string("config: ") + e.what());
  }
  return p;
}

json to_json(const NormalFormProblem& p) {
  const GameDims d = p.game.dims();
  return {{"A1", d.a1}, {"A2", d.a2}, {"R1", matrix_json(p.game.r1)}, {"R2", matrix_json(p.game.r2)},
          {"config", to_json(p.cfg)}};
}

MarkovGame parse_markov_game(const json& j) {
  MarkovGame mg;
  mg.n_states = as_count(field(j, "S", ""), "S");
  mg.a1 = as_count(field(j, "A1", ""), "A1");
  mg.a2 = as_count(field(j, "A2", ""), "A2");
  mg.gamma = as_number(field(j, "gamma", ""), "gamma");
  mg.r1 = parse_tables(field(j, "r1", ""), mg.n_states, mg.a1, mg.a2, "r1");
  mg.r2 = parse_tables(field(j, "r2", ""), mg.n_states, mg.a1, mg.a2, "r2");
  const json& P = as_array(field(j, "P", ""), mg.n_states, "P");
  for (std::size_t s = 0; s < mg.n_states; ++s) {
    const std::string ps = "P[" + std::to_string(s) + "]";
    as_array(P[s], mg.a1, ps);
    for (std::size_t m = 0; m < mg.a1; ++m) {
      const std::string pm = ps + "[" + std::to_string(m) + "]";
      as_array(P[s][m], mg.a2, pm);
      for (std::size_t n = 0; n < mg.a2; ++n) {
        const std::string pn = pm + "[" + std::to_string(n) + "]";
        as_array(P[s][m][n], mg.n_states, pn);
        mg.transitions.push_back(parse_simplex(P[s][m][n], pn));
      }
    }
  }
  if (j.contains("env")) {
    const json& env = j["env"];
    try {
      mg.env.kind = parse_env_kind(field(env, "kind", "env").get<std::string>());
    } catch (const ConfigError& e) {
      throw InputError(std::string("env.kind: ") + e.what());
    } catch (const json::type_error&) {
      throw InputError("env.kind must be a string");
    }
    if (mg.env.kind == EnvKind::entropic) mg.env.beta = as_number(field(env, "beta", "env"), "env.beta");
  }
  mg.cfg = parse_config(field(j, "config", ""));
  try {
    mg.validate();
  } catch (const std::exception& e) {
    throw InputError(e.what());
  }
  return mg;
}

json to_json(const MarkovGame& mg) {
  json P = json::array();
  for (std::size_t s = 0; s < mg.n_states; ++s) {
    json ps = json::array();
    for (std::size_t m = 0; m < mg.a1; ++m) {
      json pm = json::array();
      for (std::size_t n = 0; n < mg.a2; ++n) pm.push_back(vector_json(mg.transition(s, m, n).vec()));
      ps.push_back(pm);
    }
    P.push_back(ps);
  }
  json env = {{"kind", std::string(to_string(mg.env.kind))}};
  if (mg.env.kind == EnvKind::entropic) env["beta"] = mg.env.beta;
  return {{"S", mg.n_states}, {"A1", mg.a1},           {"A2", mg.a2}, {"gamma", mg.gamma},
          {"r1", tables_json(mg.r1)}, {"r2", tables_json(mg.r2)}, {"P", P}, {"env", env},
          {"config", to_json(mg.cfg)}};
}

json to_json(const NormalFormResult& r) {
  return {{"z_star",
           {{"pi1", vector_json(r.z_star.pi1.vec())},
            {"pi2", vector_json(r.z_star.pi2.vec())},
            {"p1", vector_json(r.z_star.p1.vec())},
            {"p2", vector_json(r.z_star.p2.vec())}}},
          {"rqe_values", {r.rqe_values[0], r.rqe_values[1]}},
          {"residual", r.residual},
          {"iters", r.iters},
          {"converged", r.converged},
          {"alpha_certificate",
           {{"alpha", r.certificate.alpha},
            {"method", std::string(to_string(r.certificate.method))},
            {"certified", r.certificate.certified}}}};
}

NormalFormResult parse_normal_form_result(const json& j) {
  NormalFormResult r;
  const json& z = field(j, "z_star", "");
  r.z_star = {parse_simplex(field(z, "pi1", "z_star"), "z_star.pi1"), parse_simplex(field(z, "pi2", "z_star"), "z_star.pi2"),
              parse_simplex(field(z, "p1", "z_star"), "z_star.p1"), parse_simplex(field(z, "p2", "z_star"), "z_star.p2")};
  if (r.z_star.p1.size() != r.z_star.pi2.size() || r.z_star.p2.size() != r.z_star.pi1.size())
    throw InputError("z_star: belief blocks do not match the strategy blocks");
  const json& v = as_array(field(j, "rqe_values", ""), 2, "rqe_values");
  r.rqe_values = {as_number(v[0], "rqe_values[0]"), as_number(v[1], "rqe_values[1]")};
  r.residual = as_number(field(j, "residual", ""), "residual");
  const json& iters = field(j, "iters", "");
  if (!iters.is_number_integer() || iters.get<long long>() < 0) throw InputError("field \"iters\" must be a count");
  r.iters = iters.get<std::size_t>();
  if (!field(j, "converged", "").is_boolean()) throw InputError("field \"converged\" must be a boolean");
  r.converged = j["converged"].get<bool>();
  const json& c = field(j, "alpha_certificate", "");
  r.certificate.alpha = as_number(field(c, "alpha", "alpha_certificate"), "alpha_certificate.alpha");
  const std::string method = field(c, "method", "alpha_certificate").get<std::string>();
  if (method != "analytic" && method != "sampled") throw InputError("alpha_certificate.method is not analytic|sampled");
  r.certificate.method = method == "analytic" ? CertificateMethod::analytic : CertificateMethod::sampled;
  r.certificate.certified = field(c, "certified", "alpha_certificate").get<bool>();
  return r;
}

json to_json(const MarkovResult& r) {
  return {{"driver", r.driver},
          {"Q1", tables_json(r.q.q1)},
          {"Q2", tables_json(r.q.q2)},
          {"policy", {{"pi1", simplex_rows(r.policy.pi1)}, {"pi2", simplex_rows(r.policy.pi2)}}},
          {"beliefs", {{"p1", simplex_rows(r.belief1)}, {"p2", simplex_rows(r.belief2)}}},
          {"stage_residuals", r.stage_residuals},
          {"converged", r.converged},
          {"sweeps", r.sweeps},
          {"residual", r.residual},
          {"gamma_max", r.gamma_max ? json(*r.gamma_max) : json(nullptr)},
          {"guarantees_void", r.guarantees_void},
          {"regime", r.guarantees_void ? "uncertified regime" : "certified"}};
}

MarkovResult parse_markov_result(const json& j) {
  MarkovResult r;
  r.driver = field(j, "driver", "").get<std::string>();
  const json& q1 = field(j, "Q1", "");
  if (!q1.is_array() || q1.empty() || !q1[0].is_array() || q1[0].empty() || !q1[0][0].is_array())
    throw InputError("field \"Q1\" must be a [S][A1][A2] array");
  const std::size_t S = q1.size(), a1 = q1[0].size(), a2 = q1[0][0].size();
  r.q.q1 = parse_tables(q1, S, a1, a2, "Q1");
  r.q.q2 = parse_tables(field(j, "Q2", ""), S, a1, a2, "Q2");
  const json& pol = field(j, "policy", "");
  r.policy.pi1 = parse_simplex_rows(field(pol, "pi1", "policy"), S, a1, "policy.pi1");
  r.policy.pi2 = parse_simplex_rows(field(pol, "pi2", "policy"), S, a2, "policy.pi2");
  const json& bel = field(j, "beliefs", "");
  r.belief1 = parse_simplex_rows(field(bel, "p1", "beliefs"), S, a2, "beliefs.p1");
  r.belief2 = parse_simplex_rows(field(bel, "p2", "beliefs"), S, a1, "beliefs.p2");
  const json& res = as_array(field(j, "stage_residuals", ""), S, "stage_residuals");
  for (std::size_t s = 0; s < S; ++s) r.stage_residuals.push_back(as_number(res[s], "stage_residuals"));
  r.converged = field(j, "converged", "").get<bool>();
  r.sweeps = field(j, "sweeps", "").get<std::size_t>();
  r.residual = as_number(field(j, "residual", ""), "residual");
  const json& gm = field(j, "gamma_max", "");
  if (!gm.is_null()) r.gamma_max = as_number(gm, "gamma_max");
  r.guarantees_void = field(j, "guarantees_void", "").get<bool>();
  return r;
}

std::string trace_csv(const std::vector<IterationRecord>& rows) {
  std::string out = "iter,residual,step,J1,J2\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iter);
    for (double v : {r.residual, r.step, r.j1, r.j2}) {
      out += ",";
      write_number(v, out);
    }
    out += "\n";
  }
  return out;
}

std::string trace_csv(const std::vector<MarkovTraceRow>& rows) {
  std::string out = "iter,delta_q,ratio\n";
  for (const auto& r : rows) {
    out += std::to_string(r.iter) + ",";
    write_number(r.delta, out);
    out += ",";
    if (r.ratio) write_number(*r.ratio, out);
    out += "\n";
  }
  return out;
}

}  // namespace rqe::io
