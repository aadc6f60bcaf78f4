// Independent reference computations used as test oracles. Nothing here calls
// into the library under test except for the term objects being probed.
#pragma once

#include <cmath>
#include <functional>
#include <random>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

using Vec = Eigen::VectorXd;

// Positive root of a x^2 + b x + c = 0 (a > 0, c < 0) by bisection in long double.
inline double positive_root(long double a, long double b, long double c) {
  long double lo = 0.0L, hi = 1.0L;
  while (a * hi * hi + b * hi + c < 0.0L) hi *= 2.0L;
  for (int i = 0; i < 200; ++i) {
    const long double mid = 0.5L * (lo + hi);
    (a * mid * mid + b * mid + c < 0.0L ? lo : hi) = mid;
  }
  return static_cast<double>(0.5L * (lo + hi));
}

// argmin over a uniform grid of step h on [lo, hi] of phi(u) + (u - y)^2/(2 eta).
inline double grid_prox_1d(const std::function<double(double)>& phi, double y, double eta,
                           double lo, double hi, double h) {
  const long n = std::lround((hi - lo) / h);
  double best_u = lo, best = INFINITY;
  for (long i = 0; i <= n; ++i) {
    const double u = lo + static_cast<double>(i) * h;
    const double v = phi(u) + (u - y) * (u - y) / (2.0 * eta);
    if (v < best) best = v, best_u = u;
  }
  return best_u;
}

// Two-level grid search in 2-D: coarse step over the box, then step h in a
// window around the coarse winner.
inline Vec grid_prox_2d(const std::function<double(const Vec&)>& f, const Vec& y, double eta,
                        const Vec& lo, const Vec& hi, double coarse, double h) {
  auto objective = [&](const Vec& u) { return f(u) + (u - y).squaredNorm() / (2.0 * eta); };
  auto search = [&](const Vec& a, const Vec& b, double step) {
    Vec best_u = a, u(2);
    double best = INFINITY;
    const long n0 = std::lround((b(0) - a(0)) / step), n1 = std::lround((b(1) - a(1)) / step);
    for (long i = 0; i <= n0; ++i) {
      for (long j = 0; j <= n1; ++j) {
        u << a(0) + static_cast<double>(i) * step, a(1) + static_cast<double>(j) * step;
        const double v = objective(u);
        if (v < best) best = v, best_u = u;
      }
    }
    return best_u;
  };
  const Vec c = search(lo, hi, coarse);
  const Vec w = Vec::Constant(2, 1.5 * coarse);
  return search((c - w).cwiseMax(lo), (c + w).cwiseMin(hi), h);
}

// Central-difference gradient.
inline Vec fd_gradient(const std::function<double(const Vec&)>& g, const Vec& x, double h = 1e-6) {
  Vec out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    Vec p = x, m = x;
    p(i) += h;
    m(i) -= h;
    out(i) = (g(p) - g(m)) / (2.0 * h);
  }
  return out;
}

// Plain FB iteration written out directly: x <- prox(x - eta grad(x)).
inline Vec fb_fixed_point(const std::function<Vec(const Vec&)>& prox_eta,
                          const std::function<Vec(const Vec&)>& grad, double eta, Vec x,
                          double tol = 1e-15, long max_it = 10'000'000) {
  for (long k = 0; k < max_it; ++k) {
    const Vec next = prox_eta(x - eta * grad(x));
    const double step = (next - x).norm();
    x = next;
    if (step <= tol) break;
  }
  return x;
}

// Piecewise closed form for f = indicator of [0, inf), g = (x + 1)^2 / 2,
// eta = 0.2, x0 = 1: x + 1 = 2 exp(-eta t) until x = eta/(1-eta) = 0.25, then
// exponential decay with rate 1.
inline double halfline_solution(double t) {
  const double eta = 0.2;
  const double x_switch = eta / (1.0 - eta);
  const double t_switch = std::log(2.0 / (1.0 + x_switch)) / eta;
  if (t <= t_switch) return 2.0 * std::exp(-eta * t) - 1.0;
  return x_switch * std::exp(-(t - t_switch));
}

inline Vec random_vec(std::mt19937_64& rng, Eigen::Index n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Vec v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = u(rng);
  return v;
}

inline Eigen::MatrixXd random_symmetric(std::mt19937_64& rng, Eigen::Index n) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd a(n, n);
  for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  return 0.5 * (a + a.transpose());
}

}  // namespace oracle
