#pragma once

#include <cstdint>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace rqe {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

inline constexpr double kSimplexSumTol = 1e-12;

// A probability vector over a finite action set. Instances can only be
// obtained through the projections, the samplers or from_weights(), so the
// nonnegativity / unit-sum invariant holds for every live object.
class SimplexVec {
 public:
  // Renormalizes external data by its sum. Throws DomainError on negative,
  // non-finite or all-zero input.
  // The one-point simplex [1].
  SimplexVec() : w_(Vector::Ones(1)) {}

  static SimplexVec from_weights(std::span<const double> w);
  static SimplexVec from_weights(const Vector& w);
  static SimplexVec uniform(std::size_t n);
  static SimplexVec vertex(std::size_t n, std::size_t k);

  std::size_t size() const { return static_cast<std::size_t>(w_.size()); }
  double operator[](std::size_t a) const { return w_(static_cast<Eigen::Index>(a)); }
  const Vector& vec() const { return w_; }
  double min_entry() const { return w_.minCoeff(); }

 private:
  explicit SimplexVec(Vector w) : w_(std::move(w)) {}
  friend SimplexVec make_simplex_unchecked(Vector w);
  Vector w_;
};

// Internal constructor for code that has already established the invariant.
SimplexVec make_simplex_unchecked(Vector w);

struct InteriorFloor {
  double delta = 0.0;

  // Throws ConfigError unless 0 <= delta and delta * n < 1.
  void check(std::size_t n) const;
};

// Euclidean projection onto the probability simplex (sort-and-threshold).
SimplexVec project_simplex(const Vector& x);

// Projection onto the scaled simplex {p >= 0, sum p = mass}.
Vector project_scaled_simplex(const Vector& x, double mass);

// Projection onto {p in simplex : p_a >= delta}.
SimplexVec project_interior(const Vector& x, InteriorFloor floor);

// Counter-based 64-bit generator (SplitMix64 finalizer applied to
// key + counter). Cheap to split into independent named substreams.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : key_(mix(seed)) {}

  std::uint64_t next_u64() { return mix(key_ + kGolden * ++counter_); }
  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Standard exponential.
  double exponential();

  // Independent stream derived from this generator's key and a label.
  CounterRng substream(std::string_view name) const;
  CounterRng substream(std::uint64_t index) const;

  static std::uint64_t mix(std::uint64_t z);

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
  CounterRng(std::uint64_t key, int) : key_(key) {}
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

// Uniform sample on the simplex via normalized i.i.d. exponentials.
SimplexVec random_simplex(std::size_t n, CounterRng& rng);
SimplexVec random_simplex(std::size_t n, std::uint64_t seed);

}  // namespace rqe
