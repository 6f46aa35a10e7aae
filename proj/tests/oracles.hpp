#pragma once

// Brute-force reference computations for the unit and acceptance tests.
// Nothing here calls into the library's projection or closed-form code.

#include <cmath>
#include <functional>
#include <limits>

#include <Eigen/Dense>

namespace rqe::oracle {

using Vec = Eigen::VectorXd;

// Best point of the 2-simplex segment {(t, 1 - t) : lo <= t <= 1 - lo} on a
// uniform grid, maximizing `score`.
inline Vec grid_argmax_2(const std::function<double(const Vec&)>& score, double step, double lo = 0.0) {
  Vec best(2);
  double best_val = -std::numeric_limits<double>::infinity();
  const auto n = static_cast<long>(std::llround((1.0 - 2.0 * lo) / step));
  for (long k = 0; k <= n; ++k) {
    const double t = lo + static_cast<double>(k) * step;
    Vec p(2);
    p << t, 1.0 - t;
    const double v = score(p);
    if (v > best_val) {
      best_val = v;
      best = p;
    }
  }
  return best;
}

inline double grid_max_2(const std::function<double(const Vec&)>& score, double step) {
  return score(grid_argmax_2(score, step));
}

inline Vec grid_project_2(const Vec& x, double step, double lo = 0.0) {
  return grid_argmax_2([&](const Vec& p) { return -(p - x).squaredNorm(); }, step, lo);
}

inline Vec central_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    Vec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    g(j) = (f(xp) - f(xm)) / (2.0 * h);
  }
  return g;
}

inline Eigen::MatrixXd central_hessian(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd H(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      auto at = [&](double di, double dj) {
        Vec y = x;
        y(i) += di;
        y(j) += dj;
        return f(y);
      };
      H(i, j) = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4.0 * h * h);
    }
  return H;
}

// max_j |a_j - b_j| / max(1, |b_j|).
inline double max_rel_error(const Vec& a, const Vec& b) {
  double e = 0.0;
  for (Eigen::Index j = 0; j < a.size(); ++j) e = std::max(e, std::abs(a(j) - b(j)) / std::max(1.0, std::abs(b(j))));
  return e;
}

}  // namespace rqe::oracle
