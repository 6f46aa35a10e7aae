#include "rqe/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>

#include "rqe/errors.hpp"

namespace rqe {

namespace {

void require_finite(const Vector& x, const char* who) {
  if (x.size() == 0) throw DomainError(std::string(who) + ": empty input");
  if (!x.allFinite()) throw DomainError(std::string(who) + ": non-finite input");
}

}  // namespace

SimplexVec make_simplex_unchecked(Vector w) { return SimplexVec(std::move(w)); }

SimplexVec SimplexVec::from_weights(std::span<const double> w) {
  return from_weights(Eigen::Map<const Vector>(w.data(), static_cast<Eigen::Index>(w.size())));
}

SimplexVec SimplexVec::from_weights(const Vector& w) {
  require_finite(w, "SimplexVec::from_weights");
  if ((w.array() < 0.0).any()) throw DomainError("SimplexVec::from_weights: negative weight");
  const double total = w.sum();
  if (!(total > 0.0)) throw DomainError("SimplexVec::from_weights: weights sum to zero");
  return SimplexVec(w / total);
}

SimplexVec SimplexVec::uniform(std::size_t n) {
  if (n == 0) throw DomainError("SimplexVec::uniform: n = 0");
  return SimplexVec(Vector::Constant(static_cast<Eigen::Index>(n), 1.0 / static_cast<double>(n)));
}

SimplexVec SimplexVec::vertex(std::size_t n, std::size_t k) {
  if (k >= n) throw DomainError("SimplexVec::vertex: index out of range");
  Vector v = Vector::Zero(static_cast<Eigen::Index>(n));
  v(static_cast<Eigen::Index>(k)) = 1.0;
  return SimplexVec(std::move(v));
}

void InteriorFloor::check(std::size_t n) const {
  if (!(delta >= 0.0) || !std::isfinite(delta))
    throw ConfigError("interior floor must be a finite nonnegative number");
  if (delta * static_cast<double>(n) >= 1.0)
    throw ConfigError("interior floor delta=" + std::to_string(delta) + " is infeasible for " +
                      std::to_string(n) + " actions (need delta*n < 1)");
}

Vector project_scaled_simplex(const Vector& x, double mass) {
  require_finite(x, "project_simplex");
  const Eigen::Index n = x.size();
  std::vector<double> u(x.data(), x.data() + n);
  std::sort(u.begin(), u.end(), std::greater<>());

  double cumsum = 0.0;
  double theta = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    cumsum += u[static_cast<std::size_t>(j)];
    const double t = (cumsum - mass) / static_cast<double>(j + 1);
    if (u[static_cast<std::size_t>(j)] - t > 0.0) theta = t;
  }
  return (x.array() - theta).max(0.0).matrix();
}

SimplexVec project_simplex(const Vector& x) { return make_simplex_unchecked(project_scaled_simplex(x, 1.0)); }

SimplexVec project_interior(const Vector& x, InteriorFloor floor) {
  floor.check(static_cast<std::size_t>(x.size()));
  if (floor.delta == 0.0) return project_simplex(x);
  const double mass = 1.0 - static_cast<double>(x.size()) * floor.delta;
  Vector shifted = x.array() - floor.delta;
  return make_simplex_unchecked(project_scaled_simplex(shifted, mass).array() + floor.delta);
}

std::uint64_t CounterRng::mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double CounterRng::exponential() {
  // 1 - u lies in (0, 1], so the log is finite.
  return -std::log1p(-uniform());
}

CounterRng CounterRng::substream(std::string_view name) const {
  // FNV-1a over the label, folded into the key.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : name) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return CounterRng(mix(key_ ^ h), 0);
}

CounterRng CounterRng::substream(std::uint64_t index) const {
  return CounterRng(mix(key_ ^ mix(index + 0x632be59bd9b4e019ULL)), 0);
}

SimplexVec random_simplex(std::size_t n, CounterRng& rng) {
  if (n == 0) throw DomainError("random_simplex: n = 0");
  Vector e(static_cast<Eigen::Index>(n));
  for (Eigen::Index a = 0; a < e.size(); ++a) e(a) = rng.exponential();
  return make_simplex_unchecked(e / e.sum());
}

SimplexVec random_simplex(std::size_t n, std::uint64_t seed) {
  CounterRng rng(seed);
  return random_simplex(n, rng);
}

}  // namespace rqe
