#include "fbflow/problem.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "fbflow/errors.hpp"

namespace fbflow {

bool Box::contains(const Vector& x) const {
  return x.size() == lo.size() && (x.array() >= lo.array()).all() &&
         (x.array() <= hi.array()).all();
}

void require_dim(const Vector& x, Eigen::Index dim, const char* what) {
  if (x.size() != dim) {
    throw InvalidParameter(std::string(what) + ": dimension " +
                           std::to_string(x.size()) + " does not match " +
                           std::to_string(dim));
  }
}

ProxTerm::ProxTerm(std::string name, Eigen::Index dim, EvaluateFn evaluate,
                   ProxFn prox)
    : name_(std::move(name)),
      dim_(dim),
      evaluate_(std::move(evaluate)),
      prox_(std::move(prox)) {
  if (dim_ <= 0) throw InvalidParameter("ProxTerm '" + name_ + "': dim must be positive");
  if (!evaluate_ || !prox_) {
    throw InvalidParameter("ProxTerm '" + name_ + "': missing evaluate or prox");
  }
}

double ProxTerm::evaluate(const Vector& x) const {
  require_dim(x, dim_, "ProxTerm::evaluate");
  return evaluate_(x);
}

Vector ProxTerm::prox(const Vector& y, double eta) const {
  require_dim(y, dim_, "ProxTerm::prox");
  if (!(eta > 0.0)) throw InvalidParameter("ProxTerm::prox: eta must be positive");
  return prox_(y, eta);
}

SmoothTerm::SmoothTerm(std::string name, Eigen::Index dim, EvaluateFn evaluate,
                       GradientFn gradient, double lipschitz_beta,
                       std::optional<Box> lipschitz_domain)
    : name_(std::move(name)),
      dim_(dim),
      evaluate_(std::move(evaluate)),
      gradient_(std::move(gradient)),
      beta_(lipschitz_beta),
      domain_(std::move(lipschitz_domain)) {
  if (dim_ <= 0) throw InvalidParameter("SmoothTerm '" + name_ + "': dim must be positive");
  if (!evaluate_ || !gradient_) {
    throw InvalidParameter("SmoothTerm '" + name_ + "': missing evaluate or gradient");
  }
  if (!(beta_ >= 0.0) || !std::isfinite(beta_)) {
    throw InvalidParameter("SmoothTerm '" + name_ + "': beta must be finite and >= 0");
  }
  if (domain_ && (domain_->dim() != dim_ || domain_->hi.size() != dim_)) {
    throw InvalidParameter("SmoothTerm '" + name_ + "': Lipschitz domain dimension mismatch");
  }
}

double SmoothTerm::evaluate(const Vector& x) const {
  require_dim(x, dim_, "SmoothTerm::evaluate");
  return evaluate_(x);
}

Vector SmoothTerm::gradient(const Vector& x) const {
  require_dim(x, dim_, "SmoothTerm::gradient");
  return gradient_(x);
}

CompositeProblem::CompositeProblem(ProxTerm f, SmoothTerm g, double eta, Vector x0,
                                   bool coercive,
                                   std::optional<Vector> known_minimizer)
    : f_(std::move(f)),
      g_(std::move(g)),
      eta_(eta),
      x0_(std::move(x0)),
      coercive_(coercive),
      known_minimizer_(std::move(known_minimizer)) {
  if (f_.dim() != g_.dim() || f_.dim() != x0_.size()) {
    throw InvalidParameter("CompositeProblem: dimensions of f (" +
                           std::to_string(f_.dim()) + "), g (" +
                           std::to_string(g_.dim()) + ") and x0 (" +
                           std::to_string(x0_.size()) + ") differ");
  }
  if (!x0_.allFinite()) throw InvalidParameter("CompositeProblem: x0 must be finite");
  if (known_minimizer_) require_dim(*known_minimizer_, x0_.size(), "CompositeProblem known_minimizer");
  if (!validate_step(eta_, g_.lipschitz_beta())) {
    throw InvalidParameter("CompositeProblem: step condition eta*beta*(3+eta*beta) < 1 violated (eta=" +
                           std::to_string(eta_) + ", beta=" +
                           std::to_string(g_.lipschitz_beta()) + ")");
  }
}

bool validate_step(double eta, double beta) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidParameter("validate_step: eta must be positive and finite");
  }
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidParameter("validate_step: beta must be nonnegative and finite");
  }
  const double eb = eta * beta;
  return eb * (3.0 + eb) < 1.0;
}

double max_valid_eta(double beta) {
  if (!(beta >= 0.0) || !std::isfinite(beta)) {
    throw InvalidParameter("max_valid_eta: beta must be nonnegative and finite");
  }
  if (beta == 0.0) return kUnboundedEta;
  // Root of s^2 + 3s - 1 = 0 with s = eta*beta, written without cancellation.
  return 2.0 / (beta * (3.0 + std::sqrt(13.0)));
}

double objective(const CompositeProblem& problem, const Vector& x) {
  require_dim(x, problem.dim(), "objective");
  const double fx = problem.f().evaluate(x);
  if (fx == std::numeric_limits<double>::infinity()) return fx;
  return fx + problem.g().evaluate(x);
}

double spectral_norm_symmetric(const Matrix& a, double tol, int max_iterations) {
  if (a.rows() != a.cols()) throw InvalidParameter("spectral_norm_symmetric: matrix not square");
  if (a.rows() == 0) return 0.0;
  // Fixed pseudo-random start so results are reproducible and unlikely to be
  // orthogonal to the dominant eigenvector.
  std::mt19937_64 rng(0x5eedULL);
  std::uniform_real_distribution<double> unit(0.5, 1.5);
  Vector v(a.rows());
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = unit(rng);
  v.normalize();

  double estimate = 0.0;
  for (int it = 0; it < max_iterations; ++it) {
    Vector w = a * (a * v);
    const double norm = w.norm();
    if (norm == 0.0) return 0.0;
    const double next = std::sqrt(norm);
    v = w / norm;
    if (std::abs(next - estimate) <= tol * next) return next;
    estimate = next;
  }
  return estimate;
}

double sampled_gradient_lipschitz(const SmoothTerm& g, std::mt19937_64& rng,
                                  std::size_t pairs, double radius) {
  const Eigen::Index n = g.dim();
  Box box{Vector::Constant(n, -radius), Vector::Constant(n, radius)};
  if (g.lipschitz_domain()) box = *g.lipschitz_domain();
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
    worst = std::max(worst, (g.gradient(x) - g.gradient(y)).norm() / dx);
  }
  return worst;
}

}  // namespace fbflow
