#include "fbflow/prox_catalog.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <utility>

#include <Eigen/Eigenvalues>

#include "fbflow/errors.hpp"

namespace fbflow {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = std::numeric_limits<double>::epsilon();

void require_positive_eta(double eta, const char* what) {
  if (!(eta > 0.0) || !std::isfinite(eta)) {
    throw InvalidParameter(std::string(what) + ": eta must be positive and finite");
  }
}

void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) throw InvalidParameter(std::string(what) + ": matrix is not square");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidParameter(std::string(what) + ": matrix is not symmetric");
  }
}

// Minimizes phi(u) + (u - y)^2 / (2 eta) over the reals.
double prox_scalar(const ScalarConvex& phi, double y, double eta, double tol) {
  int iterations = 0;
  auto checked = [&](double d, double u) {
    if (std::isnan(d)) {
      throw ConvergenceFailure("prox_numeric: derivative is NaN at u = " + std::to_string(u), kInf);
    }
    return d;
  };
  auto d_plus = [&](double u) {
    if (u >= phi.dom_hi) return kInf;
    return checked(phi.right_derivative(u) + (u - y) / eta, u);
  };
  auto d_minus = [&](double u) {
    if (u <= phi.dom_lo) return -kInf;
    return checked(phi.left_derivative(u) + (u - y) / eta, u);
  };

  const double start = std::clamp(y, phi.dom_lo, phi.dom_hi);
  const double r = d_plus(start);
  const double l = d_minus(start);
  if (l <= 0.0 && r >= 0.0) return start;

  // Bracket [lo, hi] with d_plus(lo) < 0 <= d_plus(hi), searching in the
  // direction of descent.
  const bool upward = r < 0.0;
  double lo = start;
  double hi = start;
  double step = std::max(1.0, std::abs(start));
  while (true) {
    if (++iterations > kProxIterationCap) {
      throw ConvergenceFailure("prox_numeric: bracket expansion did not terminate", kInf);
    }
    if (!std::isfinite(start + step) || !std::isfinite(start - step)) {
      throw ConvergenceFailure("prox_numeric: bracket expansion diverged", kInf);
    }
    if (upward) {
      lo = hi;
      hi = std::min(start + step, phi.dom_hi);
      if (d_plus(hi) >= 0.0) break;
    } else {
      hi = lo;
      lo = std::max(start - step, phi.dom_lo);
      if (d_minus(lo) <= 0.0) break;
    }
    step *= 2.0;
  }
  // Now the minimizer lies in [lo, hi] (strict convexity makes it unique).
  while (hi - lo > tol * std::max(1.0, std::max(std::abs(lo), std::abs(hi)))) {
    if (++iterations > kProxIterationCap) {
      throw ConvergenceFailure("prox_numeric: iteration cap reached", hi - lo);
    }
    const double mid = lo + 0.5 * (hi - lo);
    if (mid <= lo || mid >= hi) break;
    if (d_plus(mid) < 0.0) {
      lo = mid;
    } else if (d_minus(mid) > 0.0) {
      hi = mid;
    } else {
      return mid;
    }
  }
  return lo + 0.5 * (hi - lo);
}

}  // namespace

Vector prox_l1(const Vector& y, double eta, double weight) {
  require_positive_eta(eta, "prox_l1");
  if (!(weight >= 0.0)) throw InvalidParameter("prox_l1: weight must be nonnegative");
  const double t = eta * weight;
  Vector out(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    out(i) = std::abs(y(i)) <= t ? 0.0 : y(i) - std::copysign(t, y(i));
  }
  return out;
}

Vector prox_indicator_box(const Vector& y, double eta, const Vector& lo, const Vector& hi) {
  require_positive_eta(eta, "prox_indicator_box");
  require_dim(lo, y.size(), "prox_indicator_box lower bound");
  require_dim(hi, y.size(), "prox_indicator_box upper bound");
  if ((lo.array() > hi.array()).any()) {
    throw InvalidParameter("prox_indicator_box: lo > hi in some component");
  }
  return y.cwiseMax(lo).cwiseMin(hi);
}

Vector prox_l2_squared(const Vector& y, double eta, double weight) {
  require_positive_eta(eta, "prox_l2_squared");
  if (!(weight >= 0.0)) throw InvalidParameter("prox_l2_squared: weight must be nonnegative");
  return y / (1.0 + eta * weight);
}

ScalarConvex scalar_zero() {
  return {[](double) { return 0.0; }, [](double) { return 0.0; },
          [](double) { return 0.0; }};
}

ScalarConvex scalar_abs(double weight) {
  if (!(weight >= 0.0)) throw InvalidParameter("scalar_abs: weight must be nonnegative");
  return {[weight](double u) { return weight * std::abs(u); },
          [weight](double u) { return u < 0.0 ? -weight : weight; },
          [weight](double u) { return u > 0.0 ? weight : -weight; }};
}

ScalarConvex scalar_interval(double lo, double hi) {
  if (!(lo <= hi)) throw InvalidParameter("scalar_interval: lo > hi");
  return {[lo, hi](double u) { return (u >= lo && u <= hi) ? 0.0 : kInf; },
          [](double) { return 0.0; }, [](double) { return 0.0; }, lo, hi};
}

ScalarConvex scalar_power(double p, double weight) {
  if (!(p >= 1.0)) throw InvalidParameter("scalar_power: exponent must be >= 1");
  if (!(weight >= 0.0)) throw InvalidParameter("scalar_power: weight must be nonnegative");
  auto slope = [p, weight](double u) {
    return weight * p * std::pow(std::abs(u), p - 1.0) * (u < 0.0 ? -1.0 : 1.0);
  };
  const double kink = p == 1.0 ? weight : 0.0;
  return {[p, weight](double u) { return weight * std::pow(std::abs(u), p); },
          [slope, kink](double u) { return u == 0.0 ? kink : slope(u); },
          [slope, kink](double u) { return u == 0.0 ? -kink : slope(u); }};
}

SeparableConvexTerm::SeparableConvexTerm(std::string name,
                                         std::vector<ScalarConvex> components)
    : name_(std::move(name)), components_(std::move(components)) {
  if (components_.empty()) throw InvalidParameter("SeparableConvexTerm: no components");
  for (const auto& c : components_) {
    if (!c.value || !c.right_derivative || !c.left_derivative) {
      throw InvalidParameter("SeparableConvexTerm '" + name_ + "': incomplete component");
    }
  }
}

double SeparableConvexTerm::evaluate(const Vector& x) const {
  require_dim(x, dim(), "SeparableConvexTerm::evaluate");
  double sum = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double v = component(i).value(x(i));
    if (v == kInf) return kInf;
    sum += v;
  }
  return sum;
}

Vector prox_numeric(const SeparableConvexTerm& f, const Vector& y, double eta, double tol) {
  require_positive_eta(eta, "prox_numeric");
  require_dim(y, f.dim(), "prox_numeric");
  if (!(tol > 0.0)) throw InvalidParameter("prox_numeric: tol must be positive");

  Vector p(y.size());
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    p(i) = prox_scalar(f.component(i), y(i), eta, tol);
  }

  // Certificate: (y - p)/eta must be a subgradient of f at p. Checked
  // coordinatewise, which is equivalent for separable f.
  static constexpr std::array<double, 8> kProbe = {1e-6, -1e-6, 1e-3, -1e-3,
                                                   1.0,  -1.0,  10.0, -10.0};
  const double tol_eff = std::max(tol, 4.0 * kEps);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const ScalarConvex& phi = f.component(i);
    const double fp = phi.value(p(i));
    if (!std::isfinite(fp)) {
      throw ConvergenceFailure("prox_numeric: result outside dom f", kInf);
    }
    const double s = (y(i) - p(i)) / eta;
    const double scale = std::max(1.0, std::abs(p(i)));
    for (double offset : kProbe) {
      const double u = p(i) + offset * scale;
      const double fu = phi.value(u);
      if (fu == kInf) continue;
      const double gap = fp + s * (u - p(i)) - fu;
      const double slack = 10.0 * tol_eff * scale * (1.0 / eta + std::abs(s) + 1.0) *
                               (1.0 + std::abs(u - p(i))) +
                           16.0 * kEps * (std::abs(fp) + std::abs(fu));
      worst = std::max(worst, gap - slack);
    }
  }
  if (worst > 0.0) {
    throw ConvergenceFailure("prox_numeric: subgradient certificate failed", worst);
  }
  return p;
}

ProxTerm zero_term(Eigen::Index dim) {
  return ProxTerm("zero", dim, [](const Vector&) { return 0.0; },
                  [](const Vector& y, double) { return y; });
}

ProxTerm l1_term(Eigen::Index dim, double weight) {
  if (!(weight >= 0.0)) throw InvalidParameter("l1_term: weight must be nonnegative");
  return ProxTerm(
      "l1", dim, [weight](const Vector& x) { return weight * x.lpNorm<1>(); },
      [weight](const Vector& y, double eta) { return prox_l1(y, eta, weight); });
}

ProxTerm box_term(Vector lo, Vector hi) {
  if (lo.size() != hi.size()) throw InvalidParameter("box_term: bound dimensions differ");
  if ((lo.array() > hi.array()).any()) throw InvalidParameter("box_term: lo > hi in some component");
  const Eigen::Index dim = lo.size();
  return ProxTerm(
      "box", dim,
      [lo, hi](const Vector& x) {
        return ((x.array() >= lo.array()).all() && (x.array() <= hi.array()).all()) ? 0.0 : kInf;
      },
      [lo, hi](const Vector& y, double eta) { return prox_indicator_box(y, eta, lo, hi); });
}

ProxTerm l2_squared_term(Eigen::Index dim, double weight) {
  if (!(weight >= 0.0)) throw InvalidParameter("l2_squared_term: weight must be nonnegative");
  return ProxTerm(
      "l2_squared", dim, [weight](const Vector& x) { return 0.5 * weight * x.squaredNorm(); },
      [weight](const Vector& y, double eta) { return prox_l2_squared(y, eta, weight); });
}

ProxTerm numeric_term(SeparableConvexTerm term, double tol) {
  const Eigen::Index dim = term.dim();
  std::string name = term.name();
  auto shared = std::make_shared<const SeparableConvexTerm>(std::move(term));
  return ProxTerm(
      std::move(name), dim, [shared](const Vector& x) { return shared->evaluate(x); },
      [shared, tol](const Vector& y, double eta) { return prox_numeric(*shared, y, eta, tol); });
}

ProxTerm power_term(Eigen::Index dim, double p, double weight) {
  if (dim <= 0) throw InvalidParameter("power_term: dim must be positive");
  std::vector<ScalarConvex> parts(static_cast<std::size_t>(dim), scalar_power(p, weight));
  return numeric_term(SeparableConvexTerm("power", std::move(parts)));
}

SmoothTerm smooth_zero(Eigen::Index dim) {
  return SmoothTerm("zero", dim, [](const Vector&) { return 0.0; },
                    [dim](const Vector&) { return Vector::Zero(dim); }, 0.0);
}

SmoothTerm smooth_linear(Vector b) {
  const Eigen::Index dim = b.size();
  return SmoothTerm(
      "linear", dim, [b](const Vector& x) { return b.dot(x); },
      [b](const Vector&) { return b; }, 0.0);
}

SmoothTerm smooth_quadratic(Matrix a, Vector b) {
  require_symmetric(a, "smooth_quadratic");
  require_dim(b, a.rows(), "smooth_quadratic linear term");
  const double beta = spectral_norm_symmetric(a);
  const Eigen::Index dim = b.size();
  return SmoothTerm(
      "quadratic", dim, [a, b](const Vector& x) { return 0.5 * x.dot(a * x) + b.dot(x); },
      [a, b](const Vector& x) -> Vector { return a * x + b; }, beta);
}

SmoothTerm smooth_least_squares(Matrix m, Vector c) {
  require_dim(c, m.rows(), "smooth_least_squares target");
  const double beta = spectral_norm_symmetric(m.transpose() * m);
  const Eigen::Index dim = m.cols();
  return SmoothTerm(
      "least_squares", dim, [m, c](const Vector& x) { return 0.5 * (m * x - c).squaredNorm(); },
      [m, c](const Vector& x) -> Vector { return m.transpose() * (m * x - c); }, beta);
}

SmoothTerm smooth_nonconvex_cosine(double a, Matrix q) {
  if (!(a > 0.0)) throw InvalidParameter("smooth_nonconvex_cosine: a must be positive");
  require_symmetric(q, "smooth_nonconvex_cosine");
  if (q.rows() > 0) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q, Eigen::EigenvaluesOnly);
    const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
    if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
      throw InvalidParameter("smooth_nonconvex_cosine: Q is not positive semidefinite");
    }
  }
  const double beta = spectral_norm_symmetric(q) + a;
  const Eigen::Index dim = q.rows();
  return SmoothTerm(
      "cosine", dim,
      [a, q](const Vector& x) { return 0.5 * x.dot(q * x) + a * x.array().cos().sum(); },
      [a, q](const Vector& x) -> Vector { return q * x - a * x.array().sin().matrix(); }, beta);
}

SmoothTerm smooth_quartic(Eigen::Index dim, double radius) {
  if (!(radius > 0.0)) throw InvalidParameter("smooth_quartic: radius must be positive");
  if (dim <= 0) throw InvalidParameter("smooth_quartic: dim must be positive");
  Box domain{Vector::Constant(dim, -radius), Vector::Constant(dim, radius)};
  return SmoothTerm(
      "quartic", dim, [](const Vector& x) { return 0.25 * x.array().pow(4).sum(); },
      [](const Vector& x) -> Vector { return x.array().cube().matrix(); },
      3.0 * radius * radius, std::move(domain));
}

std::vector<CatalogEntry> catalog(Eigen::Index dim) {
  const Box search{Vector::Constant(dim, -4.0), Vector::Constant(dim, 4.0)};
  Vector lo(dim), hi(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    lo(i) = -1.0 + 0.25 * static_cast<double>(i);
    hi(i) = 1.5 - 0.5 * static_cast<double>(i % 2);
  }
  Matrix a = Matrix::Zero(dim, dim);
  Matrix m(dim + 2, dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    a(i, i) = 2.0 + static_cast<double>(i);
    if (i + 1 < dim) a(i, i + 1) = a(i + 1, i) = -0.5;
  }
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) m(r, c) = std::sin(1.0 + 3.0 * r + 1.7 * c);
  }
  Matrix q = 0.5 * Matrix::Identity(dim, dim);
  const Vector b = Vector::LinSpaced(dim, -1.0, 1.0);
  const Vector c = Vector::LinSpaced(dim + 2, 0.5, -0.5);
  const Box smooth_box{Vector::Constant(dim, -10.0), Vector::Constant(dim, 10.0)};

  std::vector<CatalogEntry> entries;
  entries.push_back({zero_term(dim), search, "f = 0; prox is the identity"});
  entries.push_back({l1_term(dim, 0.7), search, "f = 0.7 |u|_1; soft-threshold"});
  entries.push_back({box_term(lo, hi), search, "indicator of a box; clamp"});
  entries.push_back({l2_squared_term(dim, 1.3), search, "f = 0.65 |u|^2; shrinkage"});
  entries.push_back({power_term(dim, 1.5, 0.8), search, "f = 0.8 sum |u_i|^1.5; numeric prox"});
  entries.push_back({power_term(dim, 3.0, 0.5), search, "f = 0.5 sum |u_i|^3; numeric prox"});
  entries.push_back({smooth_zero(dim), smooth_box, "g = 0"});
  entries.push_back({smooth_linear(b), smooth_box, "g = b^T x"});
  entries.push_back({smooth_quadratic(a, b), smooth_box, "g = 1/2 x^T A x + b^T x"});
  entries.push_back({smooth_least_squares(m, c), smooth_box, "g = 1/2 |Mx - c|^2"});
  entries.push_back({smooth_nonconvex_cosine(1.0, q), smooth_box, "g = 1/4 |x|^2 + sum cos(x_i)"});
  entries.push_back({smooth_quartic(dim, 1.0), Box{Vector::Constant(dim, -1.0), Vector::Constant(dim, 1.0)},
                     "g = 1/4 sum x_i^4 on [-1, 1]^n"});
  return entries;
}

}  // namespace fbflow
