#include "fbflow/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "fbflow/errors.hpp"

namespace fbflow {

FlowField::FlowField(CompositeProblem problem) : problem_(std::move(problem)) {}

Vector FlowField::operator()(const Vector& x) const { return field(problem_, x); }

Vector field(const CompositeProblem& problem, const Vector& x) {
  require_dim(x, problem.dim(), "field");
  const double eta = problem.eta();
  const Vector forward = x - eta * problem.g().gradient(x);
  return problem.f().prox(forward, eta) - x;
}

double criticality_residual(const CompositeProblem& problem, const Vector& x) {
  return field(problem, x).norm();
}

double energy(const CompositeProblem& problem, const Vector& u, const Vector& v) {
  require_dim(u, problem.dim(), "energy u");
  require_dim(v, problem.dim(), "energy v");
  return objective(problem, u) + (u - v).squaredNorm() / (2.0 * problem.eta());
}

EnergySample energy_sample(const CompositeProblem& problem, double t, const Vector& x,
                           const Vector& velocity) {
  require_dim(velocity, problem.dim(), "energy_sample velocity");
  EnergySample s;
  s.t = t;
  s.u = x + velocity;
  s.v = x;
  s.energy = energy(problem, s.u, s.v);
  s.subgrad_norm_bound = (problem.beta() + 1.0 / problem.eta()) * velocity.norm();
  return s;
}

EnergySample energy_sample(const CompositeProblem& problem, double t, const Vector& x) {
  return energy_sample(problem, t, x, field(problem, x));
}

SubgradientWitness subgradient_witness(const CompositeProblem& problem, const Vector& x,
                                       const Vector& velocity) {
  require_dim(velocity, problem.dim(), "subgradient_witness velocity");
  SubgradientWitness w;
  w.z1 = problem.g().gradient(x + velocity) - problem.g().gradient(x);
  w.z2 = -velocity / problem.eta();
  w.norm = std::sqrt(w.z1.squaredNorm() + w.z2.squaredNorm());
  return w;
}

SubgradientWitness subgradient_witness(const CompositeProblem& problem, const Vector& x) {
  return subgradient_witness(problem, x, field(problem, x));
}

Vector fb_iterate(const CompositeProblem& problem, const Vector& x, long k) {
  if (k < 1) throw InvalidParameter("fb_iterate: k must be >= 1");
  Vector current = x;
  for (long i = 0; i < k; ++i) current = current + field(problem, current);
  return current;
}

double sampled_field_lipschitz(const CompositeProblem& problem, std::mt19937_64& rng,
                               std::size_t pairs, double radius) {
  const Eigen::Index n = problem.dim();
  Box box{Vector::Constant(n, -radius), Vector::Constant(n, radius)};
  if (problem.g().lipschitz_domain()) box = *problem.g().lipschitz_domain();
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  auto draw = [&] {
    Vector x(n);
    for (Eigen::Index i = 0; i < n; ++i) x(i) = box.lo(i) + unit(rng) * (box.hi(i) - box.lo(i));
    return x;
  };
  double worst = 0.0;
  for (std::size_t k = 0; k < pairs; ++k) {
    const Vector x = draw();
    const Vector y = draw();
    const double dx = (x - y).norm();
    if (dx == 0.0) continue;
    worst = std::max(worst, (field(problem, x) - field(problem, y)).norm() / dx);
  }
  return worst;
}

}  // namespace fbflow
