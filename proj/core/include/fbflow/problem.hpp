#pragma once

#include <cstddef>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <string>

#include <Eigen/Core>

namespace fbflow {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Axis-aligned box, used for sampling domains and oracle search regions.
struct Box {
  Vector lo;
  Vector hi;

  Eigen::Index dim() const { return lo.size(); }
  bool contains(const Vector& x) const;
};

/// Convex, proper, lower semicontinuous term f with an exact prox map.
///
/// evaluate may return +infinity outside dom f. prox(y, eta) returns the
/// unique minimizer of u -> f(u) + |u - y|^2 / (2 eta).
class ProxTerm {
 public:
  using EvaluateFn = std::function<double(const Vector&)>;
  using ProxFn = std::function<Vector(const Vector&, double)>;

  ProxTerm(std::string name, Eigen::Index dim, EvaluateFn evaluate, ProxFn prox);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }

  double evaluate(const Vector& x) const;
  Vector prox(const Vector& y, double eta) const;

 private:
  std::string name_;
  Eigen::Index dim_;
  EvaluateFn evaluate_;
  ProxFn prox_;
};

/// Differentiable term g whose gradient is lipschitz_beta-Lipschitz.
///
/// When the Lipschitz constant is only valid on a bounded region (a quartic,
/// say) the region is recorded in lipschitz_domain; property checks sample
/// there.
class SmoothTerm {
 public:
  using EvaluateFn = std::function<double(const Vector&)>;
  using GradientFn = std::function<Vector(const Vector&)>;

  SmoothTerm(std::string name, Eigen::Index dim, EvaluateFn evaluate,
             GradientFn gradient, double lipschitz_beta,
             std::optional<Box> lipschitz_domain = std::nullopt);

  const std::string& name() const { return name_; }
  Eigen::Index dim() const { return dim_; }
  double lipschitz_beta() const { return beta_; }
  const std::optional<Box>& lipschitz_domain() const { return domain_; }

  double evaluate(const Vector& x) const;
  Vector gradient(const Vector& x) const;

 private:
  std::string name_;
  Eigen::Index dim_;
  EvaluateFn evaluate_;
  GradientFn gradient_;
  double beta_;
  std::optional<Box> domain_;
};

/// The composite problem inf f(x) + g(x) together with the flow parameter
/// eta and initial point x0. Construction enforces the step-size condition
/// eta*beta*(3 + eta*beta) < 1; instances are immutable afterwards.
class CompositeProblem {
 public:
  CompositeProblem(ProxTerm f, SmoothTerm g, double eta, Vector x0,
                   bool coercive = false,
                   std::optional<Vector> known_minimizer = std::nullopt);

  const ProxTerm& f() const { return f_; }
  const SmoothTerm& g() const { return g_; }
  double eta() const { return eta_; }
  double beta() const { return g_.lipschitz_beta(); }
  const Vector& x0() const { return x0_; }
  Eigen::Index dim() const { return x0_.size(); }
  bool coercive() const { return coercive_; }
  const std::optional<Vector>& known_minimizer() const { return known_minimizer_; }

 private:
  ProxTerm f_;
  SmoothTerm g_;
  double eta_;
  Vector x0_;
  bool coercive_;
  std::optional<Vector> known_minimizer_;
};

/// Returned by max_valid_eta when beta == 0: every eta > 0 is admissible.
inline constexpr double kUnboundedEta = std::numeric_limits<double>::infinity();

/// True iff eta*beta*(3 + eta*beta) < 1. Throws InvalidParameter for
/// eta <= 0 or beta < 0.
bool validate_step(double eta, double beta);

/// Positive root of eta*beta*(3 + eta*beta) = 1, or kUnboundedEta if beta == 0.
double max_valid_eta(double beta);

/// (f + g)(x); +infinity propagates from f.
double objective(const CompositeProblem& problem, const Vector& x);

/// Spectral norm of a symmetric matrix by power iteration on A^2.
double spectral_norm_symmetric(const Matrix& a, double tol = 1e-10,
                               int max_iterations = 10'000);

/// Largest observed |grad g(x) - grad g(y)| / |x - y| over random pairs drawn
/// from the term's Lipschitz domain, or from the box [-radius, radius]^n when
/// none is recorded.
double sampled_gradient_lipschitz(const SmoothTerm& g, std::mt19937_64& rng,
                                  std::size_t pairs, double radius = 10.0);

/// Throws InvalidParameter unless x has the expected dimension.
void require_dim(const Vector& x, Eigen::Index dim, const char* what);

}  // namespace fbflow
