#pragma once

#include <cstddef>
#include <random>

#include "fbflow/problem.hpp"

namespace fbflow {

/// Default absolute tolerance on |field(x)| certifying criticality.
inline constexpr double kCriticalityTol = 1e-8;

/// The vector field x -> prox_{eta f}(x - eta grad g(x)) - x. Its value at x is
/// the velocity of the flow at state x, and it is (2 + eta*beta)-Lipschitz.
class FlowField {
 public:
  explicit FlowField(CompositeProblem problem);

  Vector operator()(const Vector& x) const;
  double lipschitz_bound() const { return 2.0 + problem_.eta() * problem_.beta(); }
  const CompositeProblem& problem() const { return problem_; }

 private:
  CompositeProblem problem_;
};

/// Energy H(u, v) = (f+g)(u) + |u - v|^2/(2 eta) evaluated at u = x + xdot,
/// v = x for the state x at time t.
struct EnergySample {
  double t = 0.0;
  Vector u;
  Vector v;
  double energy = 0.0;
  /// (beta + 1/eta) |xdot|, the bound on the subgradient witness norm.
  double subgrad_norm_bound = 0.0;
};

/// z = (grad g(xdot + x) - grad g(x), -xdot/eta), an element of the limiting
/// subdifferential of H at (xdot + x, x).
struct SubgradientWitness {
  Vector z1;
  Vector z2;
  double norm = 0.0;
};

Vector field(const CompositeProblem& problem, const Vector& x);

/// |field(x)|; zero exactly at critical points of f + g.
double criticality_residual(const CompositeProblem& problem, const Vector& x);

double energy(const CompositeProblem& problem, const Vector& u, const Vector& v);

/// Energy sample at state x. velocity must equal field(x); pass it when it is
/// already known to avoid a second prox evaluation.
EnergySample energy_sample(const CompositeProblem& problem, double t, const Vector& x,
                           const Vector& velocity);
EnergySample energy_sample(const CompositeProblem& problem, double t, const Vector& x);

SubgradientWitness subgradient_witness(const CompositeProblem& problem, const Vector& x,
                                       const Vector& velocity);
SubgradientWitness subgradient_witness(const CompositeProblem& problem, const Vector& x);

/// k steps of x <- prox_{eta f}(x - eta grad g(x)), computed as x + field(x)
/// so one step is bitwise identical to a unit-step Euler update.
Vector fb_iterate(const CompositeProblem& problem, const Vector& x, long k);

/// Largest observed |field(x) - field(y)| / |x - y| over random pairs in
/// [-radius, radius]^n (or the smooth term's Lipschitz domain if it has one).
double sampled_field_lipschitz(const CompositeProblem& problem, std::mt19937_64& rng,
                               std::size_t pairs, double radius = 10.0);

}  // namespace fbflow
