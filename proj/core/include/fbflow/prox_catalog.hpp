#pragma once

#include <functional>
#include <limits>
#include <string>
#include <variant>
#include <vector>

#include "fbflow/problem.hpp"

namespace fbflow {

// Closed-form proximal maps.

/// Soft-threshold: sign(y_i) * max(|y_i| - eta*weight, 0). Exactly zero at the kink.
Vector prox_l1(const Vector& y, double eta, double weight);

/// Projection onto [lo, hi]; independent of eta.
Vector prox_indicator_box(const Vector& y, double eta, const Vector& lo, const Vector& hi);

/// Prox of (weight/2)|u|^2, i.e. y / (1 + eta*weight).
Vector prox_l2_squared(const Vector& y, double eta, double weight);

/// One-dimensional convex, proper, lsc function described by its value and
/// one-sided derivatives on its domain [dom_lo, dom_hi] (possibly infinite).
/// value returns +infinity outside the domain. At a finite domain endpoint the
/// outward one-sided derivative is +-infinity and need not be supplied.
struct ScalarConvex {
  std::function<double(double)> value;
  std::function<double(double)> right_derivative;
  std::function<double(double)> left_derivative;
  double dom_lo = -std::numeric_limits<double>::infinity();
  double dom_hi = std::numeric_limits<double>::infinity();
};

ScalarConvex scalar_zero();
ScalarConvex scalar_abs(double weight);
ScalarConvex scalar_interval(double lo, double hi);
/// weight * |u|^p for p >= 1.
ScalarConvex scalar_power(double p, double weight);

/// f(u) = sum_i phi_i(u_i) with each phi_i a ScalarConvex. The prox of such a
/// term splits into independent one-dimensional problems.
class SeparableConvexTerm {
 public:
  SeparableConvexTerm(std::string name, std::vector<ScalarConvex> components);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(components_.size()); }
  const ScalarConvex& component(Eigen::Index i) const { return components_[static_cast<std::size_t>(i)]; }
  double evaluate(const Vector& x) const;

 private:
  std::string name_;
  std::vector<ScalarConvex> components_;
};

inline constexpr double kDefaultProxTol = 1e-10;
/// Per-coordinate cap on bracketing plus bisection steps.
inline constexpr int kProxIterationCap = 100'000;

/// Numerical prox for terms without a closed form.
///
/// Each coordinate minimizes phi(u) + (u - y)^2/(2 eta) by bisection on the
/// monotone map u -> d phi(u) + (u - y)/eta until the bracket is narrower than
/// tol (relative for large |u|). The result is certified with the subgradient
/// inequality f(u) >= f(p) + <(y - p)/eta, u - p> on probe points; failure of
/// either step throws ConvergenceFailure carrying the last residual.
Vector prox_numeric(const SeparableConvexTerm& f, const Vector& y, double eta,
                    double tol = kDefaultProxTol);

// ProxTerm factories.
ProxTerm zero_term(Eigen::Index dim);
ProxTerm l1_term(Eigen::Index dim, double weight);
ProxTerm box_term(Vector lo, Vector hi);
ProxTerm l2_squared_term(Eigen::Index dim, double weight);
/// ProxTerm whose prox is computed by prox_numeric.
ProxTerm numeric_term(SeparableConvexTerm term, double tol = 1e-15);
/// weight * sum |u_i|^p, p >= 1; no closed-form prox for general p.
ProxTerm power_term(Eigen::Index dim, double p, double weight);

// SmoothTerm factories.
SmoothTerm smooth_zero(Eigen::Index dim);
/// g(x) = b^T x; beta = 0.
SmoothTerm smooth_linear(Vector b);
/// g(x) = 1/2 x^T A x + b^T x with beta = |A|_2 from power iteration.
SmoothTerm smooth_quadratic(Matrix a, Vector b);
/// g(x) = 1/2 |M x - c|^2; beta = |M^T M|_2.
SmoothTerm smooth_least_squares(Matrix m, Vector c);
/// g(x) = 1/2 x^T Q x + a sum_i cos(x_i), Q symmetric PSD; beta = |Q|_2 + a.
SmoothTerm smooth_nonconvex_cosine(double a, Matrix q);
/// g(x) = 1/4 sum_i x_i^4; gradient Lipschitz with beta = 3 r^2 only on
/// [-r, r]^n, which is recorded as the term's Lipschitz domain.
SmoothTerm smooth_quartic(Eigen::Index dim, double radius);

/// A catalog term plus the region where brute-force oracles search for it.
struct CatalogEntry {
  std::variant<ProxTerm, SmoothTerm> term;
  Box oracle_domain;
  std::string description;
};

/// Representative instances of every catalog term in dimension dim.
std::vector<CatalogEntry> catalog(Eigen::Index dim);

}  // namespace fbflow
